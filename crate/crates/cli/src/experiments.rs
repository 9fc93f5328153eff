//! The experiment kinds. Each produces one or more tables plus a status
//! entry per sweep point.

use std::f64::consts::TAU;

use optolase_core::evolution::{
    commensurate_period, propagate, steady_state_direct_with, steady_state_dynamic, DirectOptions, DynamicConfig,
    PropagationConfig, SteadyStateResult,
};
use optolase_core::fock::{thermal_state, ModeOperators};
use optolase_core::liouvillian::{assemble_liouvillian, Liouvillian};
use optolase_core::model::{
    build_dissipators, build_effective_hamiltonian, build_full_hamiltonian_rotating,
    build_unequal_effective_hamiltonian, DriveTone, HamiltonianModel, SystemParams,
};
use optolase_core::moments::{closed_form_occupations, stability_eigenvalues, steady_occupations, ClosedForm};
use optolase_core::statistics::{
    geometric_reference, max_relative_deviation, number_distribution, poisson_reference, power_spectrum,
    two_time_correlation, wigner, CoherenceReport, CorrelationConfig, SpectrumResult, TwoTimeTrace,
};
use optolase_core::{DensityMatrix, Error, FockCutoffs, Mode, QOperator, Result};

use crate::config::{ExperimentConfig, InitialState, Kind, RunSection};
use crate::output::{complex_cells, complex_columns, Cell, PointStatus, Table};
use crate::pool::map_points;

/// Relative-deviation floors when comparing number distributions with their
/// references.
pub const GEOMETRIC_FLOOR: f64 = 1e-6;
pub const POISSON_FLOOR: f64 = 1e-3;

/// Half-width, in units of ω_m, of the window around the passive peak in
/// which the active spectrum is searched for enhancement.
pub const ENHANCEMENT_WINDOW: f64 = 0.25;

const MODES: [Mode; 2] = [Mode::Photon, Mode::Phonon];

pub struct ExperimentOutput {
    /// `(suffix, table)`; the empty suffix marks the main result table.
    pub tables: Vec<(String, Table)>,
    pub points: Vec<PointStatus>,
}

/// Variant name of a core error, used as the per-point error tag.
pub fn error_tag(e: &Error) -> String {
    let debug = format!("{e:?}");
    debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
}

pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> ExperimentOutput {
    match cfg.kind {
        Kind::SteadystateSweep => steadystate_sweep(cfg, jobs),
        Kind::DetuningMap => detuning_map(cfg, jobs),
        Kind::TimeEvolution => time_evolution(cfg),
        Kind::Distributions => distributions(cfg),
        Kind::Spectrum => spectrum(cfg, jobs),
        Kind::AmplitudeMap => amplitude_map(cfg, jobs),
        Kind::Analytics => analytics(cfg, jobs),
    }
}

#[derive(Debug, Clone)]
struct Point {
    coords: Vec<(&'static str, f64)>,
    params: SystemParams,
}

#[derive(Default)]
struct PointValues {
    cells: Vec<Cell>,
    /// Rows for the auxiliary table, without the coordinate prefix.
    extra: Vec<Vec<Cell>>,
    /// Error tag for points that carry partial values.
    status: Option<(String, String)>,
}

fn status_of(index: usize, p: &Point, outcome: std::result::Result<(), (String, String)>) -> PointStatus {
    let (status, message) = match outcome {
        Ok(()) => ("ok".to_string(), None),
        Err((tag, msg)) => (tag, Some(msg)),
    };
    PointStatus { index, coordinates: p.coords.iter().map(|(k, v)| (k.to_string(), *v)).collect(), status, message }
}

/// Evaluates every point on the worker pool and assembles the main table
/// (coordinates, values, status) and, when `extra_columns` is given, an
/// auxiliary long-format table.
fn sweep<F>(
    points: &[Point],
    jobs: usize,
    value_columns: &[&str],
    extra_columns: Option<&[&str]>,
    f: F,
) -> ExperimentOutput
where
    F: Fn(&Point) -> Result<PointValues> + Sync,
{
    let coord_names: Vec<&str> = points.first().map(|p| p.coords.iter().map(|c| c.0).collect()).unwrap_or_default();
    let results = map_points(points, jobs, |i, p| {
        let r = f(p);
        match &r {
            Ok(_) => log::info!("point {i} {:?} done", p.coords),
            Err(e) => log::warn!("point {i} {:?} failed: {e}", p.coords),
        }
        r
    });
    let mut main = Table::new(coord_names.iter().copied().chain(value_columns.iter().copied()).chain(["status"]));
    let mut extra = extra_columns.map(|cols| Table::new(coord_names.iter().copied().chain(cols.iter().copied())));
    let mut statuses = Vec::with_capacity(points.len());
    for (i, (p, r)) in points.iter().zip(results).enumerate() {
        let mut row: Vec<Cell> = p.coords.iter().map(|c| Cell::Num(c.1)).collect();
        match r {
            Ok(v) => {
                debug_assert_eq!(v.cells.len(), value_columns.len());
                row.extend(v.cells);
                row.push(v.status.as_ref().map_or("ok".to_string(), |s| s.0.clone()).into());
                if let Some(t) = extra.as_mut() {
                    for e in v.extra {
                        let mut xr: Vec<Cell> = p.coords.iter().map(|c| Cell::Num(c.1)).collect();
                        xr.extend(e);
                        t.push(xr);
                    }
                }
                statuses.push(status_of(i, p, v.status.map_or(Ok(()), Err)));
            }
            Err(e) => {
                let tag = error_tag(&e);
                row.extend(value_columns.iter().map(|_| Cell::Empty));
                row.push(tag.clone().into());
                statuses.push(status_of(i, p, Err((tag, e.to_string()))));
            }
        }
        main.push(row);
    }
    let mut tables = vec![(String::new(), main)];
    if let Some(t) = extra {
        tables.push(("distributions".to_string(), t));
    }
    ExperimentOutput { tables, points: statuses }
}

/// Copy of `p` with the two tone amplitudes replaced.
pub fn with_amplitudes(p: &SystemParams, e1: f64, e2: f64) -> SystemParams {
    let mut q = p.clone();
    q.drives = vec![DriveTone::new(p.drives[0].delta, e1), DriveTone::new(p.drives[1].delta, e2)];
    q
}

fn propagation_config(run: &RunSection) -> PropagationConfig {
    PropagationConfig {
        rel_tol: run.rel_tol,
        abs_tol: run.abs_tol,
        max_step: run.max_step,
        overflow_threshold: run.overflow_threshold,
        sample_interval: run.sample_interval,
        t_max: run.t_max.unwrap_or(PropagationConfig::default().t_max),
        ..Default::default()
    }
}

fn dynamic_config(run: &RunSection) -> DynamicConfig {
    DynamicConfig {
        tol: run.tol,
        max_periods: run.max_periods,
        propagation: propagation_config(run),
        samples_per_period: run.samples_per_period,
        ..Default::default()
    }
}

fn initial_state(p: &SystemParams, c: FockCutoffs, initial: InitialState) -> Result<DensityMatrix> {
    let (na, nb) = match initial {
        InitialState::Thermal => (p.n_c, p.n_m),
        InitialState::Vacuum => (0.0, 0.0),
    };
    DensityMatrix::product(&thermal_state(na, c.n_a)?, &thermal_state(nb, c.n_b)?)
}

/// Generator of the full two-tone model in the frame co-rotating with the
/// mechanics.
pub fn full_liouvillian(p: &SystemParams, c: FockCutoffs) -> Result<Liouvillian> {
    assemble_liouvillian(&build_full_hamiltonian_rotating(p, c)?, &build_dissipators(p, c)?)
}

/// Period-averaged steady state of the full model. The period map is used
/// when the drive frequencies share a period of at most twenty mechanical
/// cycles; otherwise `window_periods` mechanical cycles serve as the
/// averaging window.
pub fn full_steady_state(
    p: &SystemParams,
    c: FockCutoffs,
    run: &RunSection,
) -> Result<(Liouvillian, SteadyStateResult)> {
    let l = full_liouvillian(p, c)?;
    let period = commensurate_period(&l, p.omega_m).unwrap_or(run.window_periods as f64 * TAU / p.omega_m);
    let ss = steady_state_dynamic(&l, &initial_state(p, c, run.initial)?, period, &dynamic_config(run))?;
    Ok((l, ss))
}

/// Steady state of a static effective Hamiltonian by the direct solver,
/// rejected when the top Fock levels carry more than `overflow_threshold`.
pub fn effective_steady_state(
    h: QOperator,
    p: &SystemParams,
    c: FockCutoffs,
    run: &RunSection,
) -> Result<SteadyStateResult> {
    let l = assemble_liouvillian(&HamiltonianModel::static_only(h)?, &build_dissipators(p, c)?)?;
    let ss = steady_state_direct_with(&l, &DirectOptions { tol: run.residual_tol, ..Default::default() })?;
    for mode in MODES {
        let mass = *ss.rho_ss.populations(mode)?.last().expect("non-empty");
        if mass > run.overflow_threshold {
            return Err(Error::TruncationOverflow { mode, mass, time: f64::INFINITY });
        }
    }
    Ok(ss)
}

const STATE_COLUMNS: [&str; 13] = [
    "n_a",
    "n_b",
    "g2_a",
    "g2_b",
    "g3_a",
    "g3_b",
    "edge_a",
    "edge_b",
    "method",
    "residual",
    "periods_used",
    "cutoff_a",
    "cutoff_b",
];

fn mean(p: &[f64]) -> f64 {
    p.iter().enumerate().map(|(n, v)| n as f64 * v).sum()
}

/// Occupations, coherences, top-level populations and solver metadata.
fn state_cells(ss: &SteadyStateResult) -> Result<Vec<Cell>> {
    let rho = &ss.rho_ss;
    let pa = rho.populations(Mode::Photon)?;
    let pb = rho.populations(Mode::Phonon)?;
    let coh = CoherenceReport::from_state(rho)?;
    let cut = rho.dims().cutoffs().expect("two-mode state");
    Ok(vec![
        mean(&pa).into(),
        mean(&pb).into(),
        coh.g2_a.into(),
        coh.g2_b.into(),
        coh.g3_a.into(),
        coh.g3_b.into(),
        pa[pa.len() - 1].into(),
        pb[pb.len() - 1].into(),
        format!("{:?}", ss.method).to_lowercase().into(),
        ss.residual.into(),
        ss.periods_used.into(),
        cut.n_a.into(),
        cut.n_b.into(),
    ])
}

fn distribution_rows(rho: &DensityMatrix) -> Result<Vec<Vec<Cell>>> {
    let pa = rho.populations(Mode::Photon)?;
    let pb = rho.populations(Mode::Phonon)?;
    Ok((0..pa.len().max(pb.len()))
        .map(|n| vec![n.into(), pa.get(n).copied().into(), pb.get(n).copied().into()])
        .collect())
}

fn steadystate_sweep(cfg: &ExperimentConfig, jobs: usize) -> ExperimentOutput {
    let base = cfg.params();
    let points: Vec<Point> = match (&cfg.run.e_grid, &cfg.run.g_grid) {
        (Some(grid), _) => grid
            .values()
            .iter()
            .map(|&e| Point { coords: vec![("E", e), ("g", base.g)], params: with_amplitudes(&base, e, e) })
            .collect(),
        (None, Some(grid)) => grid
            .values()
            .iter()
            .map(|&g| {
                let mut params = base.clone();
                params.g = g;
                Point {
                    coords: vec![("E_1", base.drives[0].amplitude), ("E_2", base.drives[1].amplitude), ("g", g)],
                    params,
                }
            })
            .collect(),
        (None, None) => unreachable!("validated config"),
    };
    let columns: Vec<&str> = STATE_COLUMNS.iter().copied().chain(["analytic_n_a", "analytic_n_b"]).collect();
    let extra = cfg.run.distributions.then_some(&["n", "p_a", "p_b"][..]);
    let cutoffs = cfg.cutoffs();
    sweep(&points, jobs, &columns, extra, |pt| {
        let (_, ss) = full_steady_state(&pt.params, cutoffs, &cfg.run)?;
        let mut cells = state_cells(&ss)?;
        let analytic = closed_form_occupations(&pt.params, ClosedForm::FullCorrected).ok();
        cells.push(analytic.map(|a| a.0).into());
        cells.push(analytic.map(|a| a.1).into());
        let extra = if cfg.run.distributions { distribution_rows(&ss.rho_ss)? } else { Vec::new() };
        Ok(PointValues { cells, extra, status: None })
    })
}

fn detuning_map(cfg: &ExperimentConfig, jobs: usize) -> ExperimentOutput {
    let base = cfg.params();
    let d1 = cfg.run.delta_1_grid.as_ref().expect("validated config");
    let d2 = cfg.run.delta_2_grid.as_ref().expect("validated config");
    let mut points = Vec::new();
    for &a in d1.values() {
        for &b in d2.values() {
            let mut params = base.clone();
            params.drives[0].delta = a;
            params.drives[1].delta = b;
            points.push(Point { coords: vec![("delta_1", a), ("delta_2", b)], params });
        }
    }
    let columns: Vec<&str> = STATE_COLUMNS.iter().copied().chain(["window"]).collect();
    let cutoffs = cfg.cutoffs();
    sweep(&points, jobs, &columns, None, |pt| {
        let (_, ss) = full_steady_state(&pt.params, cutoffs, &cfg.run)?;
        let mut cells = state_cells(&ss)?;
        cells.push(Cell::from(if ss.period.is_some() { "period" } else { "fixed" }));
        Ok(PointValues { cells, ..Default::default() })
    })
}

fn single_point(cfg: &ExperimentConfig) -> Point {
    let p = cfg.params();
    Point {
        coords: vec![
            ("E_1", p.drives[0].amplitude),
            ("E_2", p.drives[1].amplitude),
            ("delta_1", p.drives[0].delta),
            ("delta_2", p.drives[1].delta),
            ("g", p.g),
        ],
        params: p,
    }
}

fn time_evolution(cfg: &ExperimentConfig) -> ExperimentOutput {
    let pt = single_point(cfg);
    let c = cfg.cutoffs();
    let mut table = Table::new(["t", "n_a", "n_b", "g2_a", "g2_b"]);
    let outcome = (|| -> Result<()> {
        let l = full_liouvillian(&pt.params, c)?;
        let ops = ModeOperators::new(c);
        let observables = vec![
            ("n_a".to_string(), ops.n_a.clone()),
            ("n_b".to_string(), ops.n_b.clone()),
            ("aa".to_string(), &(&ops.a_dag * &ops.a_dag) * &(&ops.a * &ops.a)),
            ("bb".to_string(), &(&ops.b_dag * &ops.b_dag) * &(&ops.b * &ops.b)),
        ];
        let rho0 = initial_state(&pt.params, c, cfg.run.initial)?;
        let (trace, _) = propagate(&l, &rho0, &propagation_config(&cfg.run), &observables)?;
        let series = |k: &str| trace.get(k).expect("tracked observable");
        let (na, nb, aa, bb) = (series("n_a"), series("n_b"), series("aa"), series("bb"));
        let g2 = |m2: f64, m1: f64| if m1 > 1e-12 { Cell::Num(m2 / (m1 * m1)) } else { Cell::Empty };
        for (k, &t) in trace.times.iter().enumerate() {
            table.push(vec![
                t.into(),
                na[k].re.into(),
                nb[k].re.into(),
                g2(aa[k].re, na[k].re),
                g2(bb[k].re, nb[k].re),
            ]);
        }
        Ok(())
    })();
    let status = status_of(0, &pt, outcome.map_err(|e| (error_tag(&e), e.to_string())));
    ExperimentOutput { tables: vec![(String::new(), table)], points: vec![status] }
}

fn distributions(cfg: &ExperimentConfig) -> ExperimentOutput {
    let pt = single_point(cfg);
    let mut dist = Table::new(["n", "p_a", "geometric_a", "poisson_a", "p_b", "geometric_b", "poisson_b"]);
    let mut summary = Table::new(["mode", "mean", "g2", "g3", "max_dev_geometric", "max_dev_poisson"]);
    let mut wig = Table::new(["mode", "x", "p", "W"]);
    let outcome = (|| -> Result<()> {
        let (_, ss) = full_steady_state(&pt.params, cfg.cutoffs(), &cfg.run)?;
        let mut cols = Vec::new();
        for mode in MODES {
            let d = number_distribution(&ss.rho_ss, mode)?;
            let m = d.mean();
            let geo = geometric_reference(m, d.probabilities.len());
            let poi = poisson_reference(m, d.probabilities.len());
            summary.push(vec![
                mode.name().into(),
                m.into(),
                d.gk(2)?.into(),
                d.gk(3)?.into(),
                max_relative_deviation(&d.probabilities, &geo, GEOMETRIC_FLOOR).into(),
                max_relative_deviation(&d.probabilities, &poi, POISSON_FLOOR).into(),
            ]);
            cols.push((d.probabilities, geo, poi));
            let x = cfg.run.x_grid.values();
            let p = cfg.run.p_grid.as_ref().map_or(x, |g| g.values());
            let w = wigner(&ss.rho_ss.partial_trace(mode)?, x, p)?;
            for (i, xv) in x.iter().enumerate() {
                for (j, pv) in p.iter().enumerate() {
                    wig.push(vec![mode.name().into(), (*xv).into(), (*pv).into(), w.w[(i, j)].into()]);
                }
            }
        }
        let len = cols.iter().map(|c| c.0.len()).max().unwrap_or(0);
        for n in 0..len {
            let mut row = vec![Cell::from(n)];
            for (p, g, q) in &cols {
                row.extend([p.get(n).copied().into(), g.get(n).copied().into(), q.get(n).copied().into()]);
            }
            dist.push(row);
        }
        Ok(())
    })();
    let status = status_of(0, &pt, outcome.map_err(|e| (error_tag(&e), e.to_string())));
    ExperimentOutput {
        tables: vec![(String::new(), dist), ("summary".into(), summary), ("wigner".into(), wig)],
        points: vec![status],
    }
}

/// Correlation traces and spectra of the photon and phonon fields, in that
/// order.
pub struct SpectrumPoint {
    pub traces: [TwoTimeTrace; 2],
    pub spectra: [SpectrumResult; 2],
}

/// Steady state, ⟨a†(τ)a⟩ and ⟨b†(τ)b⟩ on `[0, tau_max]`, and their spectra.
pub fn spectrum_point(p: &SystemParams, c: FockCutoffs, run: &RunSection) -> Result<SpectrumPoint> {
    let (l, ss) = full_steady_state(p, c, run)?;
    let tau_max = run
        .tau_max
        .ok_or_else(|| Error::InvalidParameter { name: "tau_max", reason: "required for spectra".into() })?;
    let n = (tau_max / run.dtau).round() as usize + 1;
    let taus: Vec<f64> = (0..n).map(|k| k as f64 * run.dtau).collect();
    let corr = CorrelationConfig { propagation: propagation_config(run), origins: run.origins };
    let ops = ModeOperators::new(c);
    let mut traces = Vec::new();
    let mut spectra = Vec::new();
    for mode in MODES {
        let tr = two_time_correlation(&l, &ss, ops.lowering(mode), &taus, &corr)?;
        spectra.push(power_spectrum(&tr, run.window.into(), run.zero_pad)?);
        traces.push(tr);
    }
    let [ta, tb]: [TwoTimeTrace; 2] = traces.try_into().ok().expect("two modes");
    let [sa, sb]: [SpectrumResult; 2] = spectra.try_into().ok().expect("two modes");
    Ok(SpectrumPoint { traces: [ta, tb], spectra: [sa, sb] })
}

/// Peak height of the active spectrum within ±`ENHANCEMENT_WINDOW`·ω_m of the
/// passive peak, divided by the passive peak height.
pub fn enhancement(active: &SpectrumResult, passive: &SpectrumResult, omega_m: f64) -> f64 {
    let (ip, hp) = passive.peak();
    let w0 = passive.omegas[ip];
    let half = ENHANCEMENT_WINDOW * omega_m;
    active.max_in(w0 - half, w0 + half).map_or(f64::NAN, |(_, h)| h / hp)
}

fn spectrum(cfg: &ExperimentConfig, jobs: usize) -> ExperimentOutput {
    let base = cfg.params();
    let settings =
        [("active", base.clone()), ("passive", with_amplitudes(&base, cfg.run.e_passive, cfg.run.e_passive))];
    let results = map_points(&settings, jobs, |_, (_, p)| spectrum_point(p, cfg.cutoffs(), &cfg.run));
    let (lo, hi) = (cfg.run.omega_min, cfg.run.omega_max);

    let mut spec_cols = vec!["omega".to_string()];
    let mut corr_cols = vec!["tau".to_string()];
    for (name, _) in &settings {
        for m in ["a", "b"] {
            spec_cols.push(format!("S_{m}_{name}"));
            corr_cols.extend(complex_columns(&format!("C_{m}_{name}")));
        }
    }
    let reference = results.iter().flatten().next();
    let mut spec = Table::new(spec_cols);
    let mut corr = Table::new(corr_cols);
    if let Some(r) = reference {
        let omegas = &r.spectra[0].omegas;
        for (k, &w) in omegas.iter().enumerate().filter(|(_, w)| **w >= lo && **w <= hi) {
            let mut row = vec![Cell::Num(w)];
            for res in &results {
                for m in 0..2 {
                    row.push(res.as_ref().ok().map(|s| s.spectra[m].s[k]).into());
                }
            }
            spec.push(row);
        }
        for (k, &tau) in r.traces[0].taus.iter().enumerate() {
            let mut row = vec![Cell::Num(tau)];
            for res in &results {
                for m in 0..2 {
                    match res {
                        Ok(s) => row.extend(complex_cells(s.traces[m].values[k])),
                        Err(_) => row.extend([Cell::Empty, Cell::Empty]),
                    }
                }
            }
            corr.push(row);
        }
    }

    let mut peaks = Table::new(["mode", "setting", "peak_omega", "peak_height", "fwhm", "local_maxima", "enhancement"]);
    for (m, mode) in ["a", "b"].into_iter().enumerate() {
        for (s, (name, _)) in settings.iter().enumerate() {
            let Ok(res) = &results[s] else { continue };
            let sp = &res.spectra[m];
            let (ip, h) = sp.peak();
            let maxima: Vec<String> = sp
                .local_maxima(cfg.run.peak_threshold)
                .into_iter()
                .map(|i| sp.omegas[i])
                .filter(|w| *w >= lo && *w <= hi)
                .map(|w| format!("{w}"))
                .collect();
            let enh = match (s, &results[1]) {
                (0, Ok(passive)) => Cell::Num(enhancement(sp, &passive.spectra[m], base.omega_m)),
                _ => Cell::Empty,
            };
            peaks.push(vec![
                mode.into(),
                (*name).into(),
                sp.omegas[ip].into(),
                h.into(),
                sp.half_max_width(ip).into(),
                maxima.join(";").into(),
                enh,
            ]);
        }
    }

    let points = settings
        .iter()
        .zip(&results)
        .enumerate()
        .map(|(i, ((_, p), r))| {
            let coords = vec![("setting", i as f64), ("E_1", p.drives[0].amplitude), ("E_2", p.drives[1].amplitude)];
            let pt = Point { coords, params: p.clone() };
            status_of(i, &pt, r.as_ref().map(|_| ()).map_err(|e| (error_tag(e), e.to_string())))
        })
        .collect();
    ExperimentOutput {
        tables: vec![(String::new(), spec), ("peaks".into(), peaks), ("correlations".into(), corr)],
        points,
    }
}

fn amplitude_map(cfg: &ExperimentConfig, jobs: usize) -> ExperimentOutput {
    let base = cfg.params();
    let c = cfg.cutoffs();
    let run = &cfg.run;
    if let (Some(g1), Some(g2)) = (&run.e_1_grid, &run.e_2_grid) {
        let mut points = Vec::new();
        for &e1 in g1.values() {
            for &e2 in g2.values() {
                points.push(Point { coords: vec![("E_1", e1), ("E_2", e2)], params: with_amplitudes(&base, e1, e2) });
            }
        }
        return sweep(&points, jobs, &STATE_COLUMNS, None, |pt| {
            let (e1, e2) = (pt.coords[0].1, pt.coords[1].1);
            let h = build_unequal_effective_hamiltonian(e1, e2, &pt.params, c)?;
            let ss = effective_steady_state(h, &pt.params, c, run)?;
            Ok(PointValues { cells: state_cells(&ss)?, ..Default::default() })
        });
    }
    let (eg, gg) = (run.e_grid.as_ref().expect("validated config"), run.g_grid.as_ref().expect("validated config"));
    let mut points = Vec::new();
    for &e in eg.values() {
        for &g in gg.values() {
            let mut params = with_amplitudes(&base, e, e);
            params.g = g;
            points.push(Point { coords: vec![("E", e), ("g", g)], params });
        }
    }
    let columns: Vec<&str> = ["gE"].into_iter().chain(STATE_COLUMNS).collect();
    sweep(&points, jobs, &columns, None, |pt| {
        let h = build_effective_hamiltonian(&pt.params, c)?;
        let ss = effective_steady_state(h, &pt.params, c, run)?;
        let mut cells = vec![Cell::Num(pt.params.g * pt.coords[0].1)];
        cells.extend(state_cells(&ss)?);
        Ok(PointValues { cells, ..Default::default() })
    })
}

fn analytics(cfg: &ExperimentConfig, jobs: usize) -> ExperimentOutput {
    let base = cfg.params();
    let es = cfg.run.e_grid.as_ref().map_or(vec![base.drives[0].amplitude], |g| g.values().to_vec());
    let gs = cfg.run.g_grid.as_ref().map_or(vec![base.g], |g| g.values().to_vec());
    let mut points = Vec::new();
    for &e in &es {
        for &g in &gs {
            let mut params = with_amplitudes(&base, e, e);
            params.g = g;
            points.push(Point { coords: vec![("E", e), ("g", g)], params });
        }
    }
    let mut columns: Vec<String> = [
        "E_max",
        "stable",
        "oracle_n_a",
        "oracle_n_b",
        "printed_n_a",
        "printed_n_b",
        "corrected_n_a",
        "corrected_n_b",
        "zero_temperature_n_a",
        "zero_temperature_n_b",
        "printed_dev_a",
        "printed_dev_b",
        "eigen_mismatch",
    ]
    .map(String::from)
    .to_vec();
    for k in 1..=8 {
        columns.extend(complex_columns(&format!("lambda_{k}")));
    }
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    sweep(&points, jobs, &column_refs, None, |pt| {
        let p = &pt.params;
        let rep = stability_eigenvalues(p)?;
        let mut cells = vec![Cell::Num(rep.e_max), rep.stable.into()];
        let mut status = None;
        if rep.stable {
            let oracle = steady_occupations(p)?;
            let printed = closed_form_occupations(p, ClosedForm::Full)?;
            let corrected = closed_form_occupations(p, ClosedForm::FullCorrected)?;
            let zero = (p.n_c == 0.0 && p.n_m == 0.0)
                .then(|| closed_form_occupations(p, ClosedForm::ZeroTemperature))
                .transpose()?;
            cells.extend([
                oracle.0.into(),
                oracle.1.into(),
                printed.0.into(),
                printed.1.into(),
                corrected.0.into(),
                corrected.1.into(),
                zero.map(|z| z.0).into(),
                zero.map(|z| z.1).into(),
                ((printed.0 - oracle.0) / oracle.0).into(),
                ((printed.1 - oracle.1) / oracle.1).into(),
            ]);
        } else {
            cells.extend((0..10).map(|_| Cell::Empty));
            status = Some((
                "StabilityViolated".to_string(),
                format!("E = {} exceeds the stability bound {}", pt.coords[0].1, rep.e_max),
            ));
        }
        cells.push(rep.max_mismatch.into());
        for z in rep.eigenvalues_closed_form {
            cells.extend(complex_cells(z));
        }
        Ok(PointValues { cells, extra: Vec::new(), status })
    })
}
