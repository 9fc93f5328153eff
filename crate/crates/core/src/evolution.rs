//! Time propagation and steady states of Lindblad generators.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::fock::{hermitize_normalize, DensityMatrix, Dims, Mode, QOperator, C64, ONE, ZERO};
use crate::liouvillian::{from_split, to_split, Liouvillian, Workspace};
use crate::ode::{Dopri5, StepControl};

/// Largest Hilbert dimension handled by the dense bordered solve.
pub const DENSE_DIM_LIMIT: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationConfig {
    pub t_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub renorm_every: usize,
    /// Allowed population of the top two Fock levels of either mode.
    pub overflow_threshold: f64,
    /// Spacing of the uniform observable sampling grid.
    pub sample_interval: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            t_max: 100.0,
            rel_tol: 1e-7,
            abs_tol: 1e-10,
            max_step: 1.0,
            renorm_every: 20,
            overflow_threshold: 1e-3,
            sample_interval: 0.5,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(invalid("t_max", format!("must be > 0, got {}", self.t_max)));
        }
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(name, format!("must lie in (0, 1), got {v}")));
            }
        }
        if !(self.max_step > 0.0) {
            return Err(invalid("max_step", format!("must be > 0, got {}", self.max_step)));
        }
        if self.renorm_every == 0 {
            return Err(invalid("renorm_every", "must be >= 1"));
        }
        if !(self.overflow_threshold > 0.0) {
            return Err(invalid("overflow_threshold", "must be > 0"));
        }
        if !(self.sample_interval > 0.0) {
            return Err(invalid("sample_interval", "must be > 0"));
        }
        Ok(())
    }

    fn step_control(&self) -> StepControl {
        StepControl { rel_tol: self.rel_tol, abs_tol: self.abs_tol, max_step: self.max_step }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropagationStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest |Tr ρ − 1| seen just before a renormalization.
    pub max_trace_drift: f64,
    /// Largest top-two-level population seen on either mode.
    pub max_edge_population: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ObservableTrace {
    pub times: Vec<f64>,
    pub values: BTreeMap<String, Vec<C64>>,
    pub stats: PropagationStats,
}

impl ObservableTrace {
    pub fn get(&self, name: &str) -> Option<&[C64]> {
        self.values.get(name).map(|v| v.as_slice())
    }
}

/// Tr[O X] for a row-major D×D matrix X.
pub(crate) fn trace_product(op: &QOperator, x: &[C64]) -> C64 {
    let n = op.dim();
    op.iter().map(|(i, k, v)| v * x[k * n + i]).sum()
}

struct EdgeMonitor {
    photon: Vec<usize>,
    phonon: Vec<usize>,
    threshold: f64,
}

impl EdgeMonitor {
    fn new(dims: Dims, threshold: f64) -> Self {
        let (photon, phonon) = match dims {
            Dims::Joint(c) => {
                let mut p = Vec::new();
                let mut q = Vec::new();
                for i in 0..c.dim() {
                    let (na, nb) = c.split(i);
                    if na + 2 >= c.n_a {
                        p.push(i);
                    }
                    if nb + 2 >= c.n_b {
                        q.push(i);
                    }
                }
                (p, q)
            }
            Dims::Single(n) => ((n.saturating_sub(2)..n).collect(), Vec::new()),
        };
        Self { photon, phonon, threshold }
    }

    /// `x` in split layout; only the real diagonal is read.
    fn check(&self, n: usize, x: &[f64], t: f64, stats: &mut PropagationStats) -> Result<()> {
        let tr: f64 = (0..n).map(|i| x[i * n + i]).sum();
        for (mode, idx) in [(Mode::Photon, &self.photon), (Mode::Phonon, &self.phonon)] {
            if idx.is_empty() {
                continue;
            }
            let mass = idx.iter().map(|&i| x[i * n + i]).sum::<f64>() / tr;
            stats.max_edge_population = stats.max_edge_population.max(mass);
            if mass > self.threshold || !mass.is_finite() {
                return Err(Error::TruncationOverflow { mode, mass, time: t });
            }
        }
        Ok(())
    }
}

/// Hermitian part with unit trace, in split layout.
pub(crate) fn hermitize_normalize_split(x: &mut [f64], n: usize) {
    let nn = n * n;
    let (re, im) = x.split_at_mut(nn);
    for i in 0..n {
        im[i * n + i] = 0.0;
        for j in i + 1..n {
            let (a, b) = (i * n + j, j * n + i);
            let r = 0.5 * (re[a] + re[b]);
            let m = 0.5 * (im[a] - im[b]);
            re[a] = r;
            re[b] = r;
            im[a] = m;
            im[b] = -m;
        }
    }
    let tr: f64 = (0..n).map(|i| re[i * n + i]).sum();
    if tr != 0.0 && tr.is_finite() {
        let inv = 1.0 / tr;
        re.iter_mut().chain(im.iter_mut()).for_each(|v| *v *= inv);
    }
}

fn split_trace(n: usize, x: &[f64]) -> C64 {
    let nn = n * n;
    (0..n).map(|i| C64::new(x[i * n + i], x[nn + i * n + i])).sum()
}

/// Adaptive propagation of a vectorized operator under L(t).
///
/// The stored vector lives in the Liouvillian's frame, in split layout;
/// samples are handed out in the lab frame as interleaved complex data.
pub(crate) struct Propagator<'a> {
    l: &'a Liouvillian,
    cfg: PropagationConfig,
    stepper: Dopri5,
    ws: Workspace,
    /// Density-matrix mode: renormalization and edge checks.
    physical: bool,
    monitor: EdgeMonitor,
    since_renorm: usize,
    pub t: f64,
    x: Vec<f64>,
    pub stats: PropagationStats,
    scratch: Vec<f64>,
    sample: Vec<C64>,
}

impl<'a> Propagator<'a> {
    pub fn new(l: &'a Liouvillian, cfg: &PropagationConfig, t0: f64, lab: &[C64], physical: bool) -> Self {
        let n = l.dim();
        let mut p = Self {
            l,
            cfg: cfg.clone(),
            stepper: Dopri5::new(2 * n * n, cfg.step_control()),
            ws: Workspace::default(),
            physical,
            monitor: EdgeMonitor::new(l.dims(), cfg.overflow_threshold),
            since_renorm: 0,
            t: t0,
            x: Vec::with_capacity(2 * n * n),
            stats: PropagationStats::default(),
            scratch: vec![0.0; 2 * n * n],
            sample: vec![ZERO; n * n],
        };
        p.load(lab);
        p
    }

    fn load(&mut self, lab: &[C64]) {
        self.sample.copy_from_slice(lab);
        if let Some(fr) = self.l.frame() {
            fr.enter(self.t, &mut self.sample);
        }
        to_split(&self.sample, &mut self.x);
    }

    /// Replace the state (lab frame) at the current time.
    pub fn reset_state(&mut self, lab: &[C64]) {
        self.load(lab);
        self.stepper.invalidate();
    }

    /// Current state in the lab frame.
    pub fn lab_state(&self) -> Vec<C64> {
        let mut out = vec![ZERO; self.sample.len()];
        from_split(&self.x, &mut out);
        if let Some(fr) = self.l.frame() {
            fr.leave(self.t, &mut out);
        }
        out
    }

    /// Advance to `t_end`, calling `on_sample(t, lab_state)` at every time of
    /// `samples` (ascending) as it is passed.
    pub fn advance<F>(&mut self, t_end: f64, samples: &[f64], mut on_sample: F) -> Result<()>
    where
        F: FnMut(f64, &[C64]) -> Result<()>,
    {
        let n = self.l.dim();
        let l = self.l;
        let mut next = 0;
        while next < samples.len() && samples[next] <= self.t {
            let lab = self.lab_state();
            on_sample(samples[next], &lab)?;
            next += 1;
        }
        while self.t < t_end {
            let ws = &mut self.ws;
            let mut f = |t: f64, x: &[f64], out: &mut [f64]| l.apply_split(t, x, out, ws);
            self.stepper.step(&mut f, &mut self.t, &mut self.x, t_end)?;
            self.stats.accepted_steps = self.stepper.accepted;
            self.stats.rejected_steps = self.stepper.rejected;
            while next < samples.len() && samples[next] <= self.t + 1e-12 {
                let s = samples[next];
                self.stepper.dense(self.t, &self.x, s, &mut self.scratch);
                from_split(&self.scratch, &mut self.sample);
                if let Some(fr) = l.frame() {
                    fr.leave(s, &mut self.sample);
                }
                on_sample(s, &self.sample)?;
                next += 1;
            }
            if self.physical {
                self.monitor.check(n, &self.x, self.t, &mut self.stats)?;
                self.since_renorm += 1;
                if self.since_renorm >= self.cfg.renorm_every {
                    self.renormalize();
                }
            }
        }
        Ok(())
    }

    fn renormalize(&mut self) {
        let n = self.l.dim();
        let drift = (split_trace(n, &self.x) - ONE).norm();
        self.stats.max_trace_drift = self.stats.max_trace_drift.max(drift);
        hermitize_normalize_split(&mut self.x, n);
        self.stepper.invalidate();
        self.since_renorm = 0;
    }
}

fn uniform_grid(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let count = ((t1 - t0) / dt + 1e-9).floor() as usize;
    (0..=count).map(|k| t0 + k as f64 * dt).collect()
}

/// Integrate ρ̇ = L(t)ρ from t = 0 to `cfg.t_max`, sampling `observables` on a
/// uniform grid of spacing `cfg.sample_interval`.
pub fn propagate(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    cfg: &PropagationConfig,
    observables: &[(String, QOperator)],
) -> Result<(ObservableTrace, DensityMatrix)> {
    cfg.validate()?;
    if rho0.dims() != l.dims() {
        return Err(Error::DimensionMismatch { expected: l.dim(), found: rho0.dim() });
    }
    for (_, op) in observables {
        if op.dims() != l.dims() {
            return Err(Error::DimensionMismatch { expected: l.dim(), found: op.dim() });
        }
    }
    let grid = uniform_grid(0.0, cfg.t_max, cfg.sample_interval);
    let mut trace = ObservableTrace::default();
    for (name, _) in observables {
        trace.values.insert(name.clone(), Vec::with_capacity(grid.len()));
    }
    let mut prop = Propagator::new(l, cfg, 0.0, rho0.data(), true);
    prop.advance(cfg.t_max, &grid, |t, x| {
        trace.times.push(t);
        for (name, op) in observables {
            trace.values.get_mut(name).expect("inserted above").push(trace_product(op, x));
        }
        Ok(())
    })?;
    let mut last = prop.lab_state();
    let n = l.dim();
    hermitize_normalize(&mut last, n);
    trace.stats = prop.stats.clone();
    Ok((trace, DensityMatrix::from_raw(l.dims(), last)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    Dynamic,
}

#[derive(Debug, Clone)]
pub struct SteadyStateResult {
    /// Stationary state; for periodic drive the average over one period.
    pub rho_ss: DensityMatrix,
    /// State at a period boundary (periodic drive only).
    pub stroboscopic: Option<DensityMatrix>,
    pub method: SolveMethod,
    /// ‖Lρ‖_max for the direct solve; last relative change of the
    /// period-averaged observables for the dynamic solve.
    pub residual: f64,
    pub periods_used: Option<usize>,
    /// Time of the stroboscopic state (a period boundary).
    pub anchor_time: f64,
    /// Drive period of the generator, when it is periodic.
    pub period: Option<f64>,
}

impl SteadyStateResult {
    /// State anchoring two-time correlations: the stroboscopic state when
    /// available, otherwise the stationary state.
    pub fn anchor_state(&self) -> &DensityMatrix {
        self.stroboscopic.as_ref().unwrap_or(&self.rho_ss)
    }
}

#[derive(Debug, Clone)]
pub struct DirectOptions {
    /// Target ‖Lρ‖_max for the iterative route.
    pub tol: f64,
    pub max_iterations: usize,
    /// Starting guess for the iterative route.
    pub initial: Option<DensityMatrix>,
    /// Anderson history length.
    pub depth: usize,
    /// Propagation time of one fixed-point map.
    pub map_time: f64,
}

impl Default for DirectOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: 2000, initial: None, depth: 10, map_time: std::f64::consts::TAU }
    }
}

/// Stationary state of a time-independent generator: null vector of L
/// normalized to unit trace.
pub fn steady_state_direct(l: &Liouvillian) -> Result<SteadyStateResult> {
    steady_state_direct_with(l, &DirectOptions::default())
}

pub fn steady_state_direct_with(l: &Liouvillian, opts: &DirectOptions) -> Result<SteadyStateResult> {
    if !l.is_static() || l.frame().is_some() {
        return Err(invalid("liouvillian", "direct solve needs a time-independent generator"));
    }
    let rho = if l.dim() <= DENSE_DIM_LIMIT && opts.initial.is_none() {
        dense_null_vector(l)?
    } else {
        krylov_null_vector(l, opts)?
    };
    let n = l.dim();
    let mut lx = vec![ZERO; n * n];
    l.apply(0.0, &rho, &mut lx, &mut Workspace::default());
    let residual = lx.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(SteadyStateResult {
        rho_ss: DensityMatrix::from_raw(l.dims(), rho),
        stroboscopic: None,
        method: SolveMethod::Direct,
        residual,
        periods_used: None,
        anchor_time: 0.0,
        period: None,
    })
}

/// Bordered system: the first equation of L x = 0 is replaced by Tr x = 1.
fn dense_null_vector(l: &Liouvillian) -> Result<Vec<C64>> {
    let n = l.dim();
    let nn = n * n;
    let mut m = l.static_superop().to_nalgebra();
    for c in 0..nn {
        m[(0, c)] = ZERO;
    }
    for i in 0..n {
        m[(0, i * n + i)] = ONE;
    }
    let lu = m.full_piv_lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..nn).map(|i| u[(i, i)].norm()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 1e-12 * max) {
        return Err(Error::SingularSystem(format!("pivot ratio {:.3e}", min / max)));
    }
    let mut rhs = DVector::from_element(nn, ZERO);
    rhs[0] = ONE;
    let x = lu.solve(&rhs).ok_or_else(|| Error::SingularSystem("LU solve failed".into()))?;
    let mut x: Vec<C64> = x.iter().cloned().collect();
    hermitize_normalize(&mut x, n);
    if nn <= 400 {
        let eig = l.static_superop().to_nalgebra().schur().unpack().1;
        let worst = (0..nn).map(|i| eig[(i, i)].re).fold(f64::NEG_INFINITY, f64::max);
        if worst > 1e-9 {
            return Err(Error::Unstable(worst));
        }
    }
    Ok(x)
}

/// Anderson-accelerated fixed-point iteration of the propagator e^{LT}.
///
/// Every fixed point of the map is a null vector of L, and propagating over
/// a finite time removes the fast modes so the history only has to resolve
/// the slow ones.
fn krylov_null_vector(l: &Liouvillian, opts: &DirectOptions) -> Result<Vec<C64>> {
    let n = l.dim();
    let nn = n * n;
    let start = match &opts.initial {
        Some(r) if r.dims() == l.dims() => r.data().to_vec(),
        Some(r) => return Err(Error::DimensionMismatch { expected: n, found: r.dim() }),
        None => {
            let mut v = vec![ZERO; nn];
            v[0] = ONE;
            v
        }
    };
    if !(opts.map_time > 0.0) {
        return Err(invalid("map_time", format!("must be > 0, got {}", opts.map_time)));
    }
    // extrapolated iterates may carry transient edge weight
    let cfg =
        PropagationConfig { rel_tol: 1e-9, abs_tol: 1e-12, overflow_threshold: f64::INFINITY, ..Default::default() };
    let mut prop = Propagator::new(l, &cfg, 0.0, &start, true);
    let mut ws = Workspace::default();
    let mut acc = Anderson::new(opts.depth);
    let mut x = Vec::new();
    to_split(&start, &mut x);
    let mut lx = vec![0.0; 2 * nn];
    let mut last = f64::INFINITY;
    for iter in 0..opts.max_iterations {
        l.apply_split(0.0, &x, &mut lx, &mut ws);
        let res = max_complex_abs(&lx);
        log::debug!("steady-state iteration {iter}: residual {res:.3e}");
        if res < opts.tol {
            let mut out = vec![ZERO; nn];
            from_split(&x, &mut out);
            let mut stats = PropagationStats::default();
            if EdgeMonitor::new(l.dims(), 1e-3).check(n, &x, 0.0, &mut stats).is_err() {
                log::warn!("stationary state has top-two-level mass {:.3e}", stats.max_edge_population);
            }
            return Ok(out);
        }
        if res > 1e3 * last {
            acc.clear();
        }
        last = last.min(res);
        let mut cur = vec![ZERO; nn];
        from_split(&x, &mut cur);
        prop.t = 0.0;
        prop.reset_state(&cur);
        prop.advance(opts.map_time, &[], |_, _| Ok(()))?;
        let mut gx = Vec::new();
        to_split(&prop.lab_state(), &mut gx);
        hermitize_normalize_split(&mut gx, n);
        x = acc.next(&x, &gx);
        hermitize_normalize_split(&mut x, n);
    }
    Err(Error::NoConvergence { periods: opts.max_iterations, last_change: last })
}

/// max_k |x_k| for a split-layout complex vector.
fn max_complex_abs(x: &[f64]) -> f64 {
    let m = x.len() / 2;
    (0..m).map(|k| x[k].hypot(x[m + k])).fold(0.0, f64::max)
}

/// Type-II Anderson mixing over real vectors.
struct Anderson {
    depth: usize,
    dx: Vec<Vec<f64>>,
    df: Vec<Vec<f64>>,
    prev: Option<(Vec<f64>, Vec<f64>)>,
}

impl Anderson {
    fn new(depth: usize) -> Self {
        Self { depth, dx: Vec::new(), df: Vec::new(), prev: None }
    }

    fn next(&mut self, x: &[f64], gx: &[f64]) -> Vec<f64> {
        let f: Vec<f64> = gx.iter().zip(x).map(|(g, x)| g - x).collect();
        if let Some((px, pf)) = self.prev.take() {
            self.dx.push(x.iter().zip(&px).map(|(a, b)| a - b).collect());
            self.df.push(f.iter().zip(&pf).map(|(a, b)| a - b).collect());
            if self.dx.len() > self.depth {
                self.dx.remove(0);
                self.df.remove(0);
            }
        }
        self.prev = Some((x.to_vec(), f.clone()));
        let m = self.df.len();
        if m == 0 || self.depth == 0 {
            return gx.to_vec();
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
        let mut gram = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DVector::<f64>::zeros(m);
        for i in 0..m {
            for j in 0..=i {
                let v = dot(&self.df[i], &self.df[j]);
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
            rhs[i] = dot(&self.df[i], &f);
        }
        let scale = (0..m).map(|i| gram[(i, i)]).fold(0.0, f64::max);
        if scale == 0.0 {
            return gx.to_vec();
        }
        let gamma = match gram.svd(true, true).solve(&rhs, 1e-12 * scale) {
            Ok(g) => g,
            Err(_) => return gx.to_vec(),
        };
        let mut out = gx.to_vec();
        for i in 0..m {
            let c = gamma[i];
            for ((o, dx), df) in out.iter_mut().zip(&self.dx[i]).zip(&self.df[i]) {
                *o -= (dx + df) * c;
            }
        }
        out
    }

    fn clear(&mut self) {
        self.dx.clear();
        self.df.clear();
        self.prev = None;
    }
}

#[derive(Debug, Clone)]
pub struct DynamicConfig {
    /// Relative change of the period-averaged observables that counts as
    /// converged.
    pub tol: f64,
    pub max_periods: usize,
    pub propagation: PropagationConfig,
    pub samples_per_period: usize,
    /// Anderson history length (0 disables acceleration).
    pub depth: usize,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_periods: 3000,
            propagation: PropagationConfig { rel_tol: 1e-8, abs_tol: 1e-11, ..Default::default() },
            samples_per_period: 64,
            depth: 10,
        }
    }
}

/// Whether every drive and frame frequency completes an integer number of
/// cycles in `period`.
pub fn is_commensurate(l: &Liouvillian, period: f64) -> bool {
    l.period_frequencies().iter().all(|f| {
        let cycles = f * period / std::f64::consts::TAU;
        (cycles - cycles.round()).abs() <= 1e-9 * cycles.abs().max(1.0)
    })
}

/// Shortest period 2πm/ω (m ≤ 20) over which all frequencies of `l` are
/// commensurate.
pub fn commensurate_period(l: &Liouvillian, omega: f64) -> Option<f64> {
    (1..=20).map(|m| std::f64::consts::TAU * m as f64 / omega).find(|&t| is_commensurate(l, t))
}

/// (⟨n_a⟩, ⟨n_b⟩, g2_a, g2_b) from the diagonal of a joint state; single-mode
/// states report their own mode twice.
pub(crate) fn tracked_observables(dims: Dims, x: &[C64]) -> [f64; 4] {
    let n = dims.size();
    let (mut m1a, mut m2a, mut m1b, mut m2b) = (0.0, 0.0, 0.0, 0.0);
    let split = |i: usize| match dims {
        Dims::Joint(c) => c.split(i),
        Dims::Single(_) => (i, i),
    };
    let mut tr = 0.0;
    for i in 0..n {
        let p = x[i * n + i].re;
        let (na, nb) = split(i);
        let (na, nb) = (na as f64, nb as f64);
        tr += p;
        m1a += na * p;
        m2a += na * (na - 1.0) * p;
        m1b += nb * p;
        m2b += nb * (nb - 1.0) * p;
    }
    let g2 = |m1: f64, m2: f64| if m1 > 1e-8 { m2 * tr / (m1 * m1) } else { 0.0 };
    [m1a / tr, m1b / tr, g2(m1a, m2a), g2(m1b, m2b)]
}

fn relative_change(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-12)).fold(0.0, f64::max)
}

/// Steady state of a time-periodic generator by period-to-period
/// propagation.
///
/// When every frequency of `l` is commensurate with `period`, the period map
/// is iterated with Anderson acceleration and the result is the average over
/// the final period together with the state at its start. Otherwise `period`
/// is used as a plain averaging window and the state is propagated window
/// by window until the window averages settle.
pub fn steady_state_dynamic(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    period: f64,
    cfg: &DynamicConfig,
) -> Result<SteadyStateResult> {
    cfg.propagation.validate()?;
    if rho0.dims() != l.dims() {
        return Err(Error::DimensionMismatch { expected: l.dim(), found: rho0.dim() });
    }
    if !(period > 0.0) {
        return Err(invalid("period", format!("must be > 0, got {period}")));
    }
    if cfg.samples_per_period < 2 {
        return Err(invalid("samples_per_period", "need at least 2 samples"));
    }
    let n = l.dim();
    let accelerate = cfg.depth > 0 && is_commensurate(l, period);
    let mut prop = Propagator::new(l, &cfg.propagation, 0.0, rho0.data(), true);
    let mut acc = Anderson::new(cfg.depth);
    let mut prev_obs: Option<[f64; 4]> = None;
    let mut best = f64::INFINITY;
    let mut change = f64::INFINITY;
    let dt = period / cfg.samples_per_period as f64;
    for k in 0..cfg.max_periods {
        let t0 = prop.t;
        let start = prop.lab_state();
        let samples: Vec<f64> = (1..=cfg.samples_per_period).map(|j| t0 + j as f64 * dt).collect();
        let mut avg = vec![ZERO; n * n];
        let w = 1.0 / cfg.samples_per_period as f64;
        prop.advance(t0 + period, &samples, |_, x| {
            for (a, v) in avg.iter_mut().zip(x) {
                *a += v * w;
            }
            Ok(())
        })?;
        hermitize_normalize(&mut avg, n);
        let obs = tracked_observables(l.dims(), &avg);
        if let Some(p) = prev_obs {
            change = relative_change(&obs, &p);
        }
        prev_obs = Some(obs);
        log::debug!(
            "period {k}: n_a {:.6} n_b {:.6} g2 {:.4} {:.4} change {change:.3e}",
            obs[0],
            obs[1],
            obs[2],
            obs[3]
        );
        let mut end = prop.lab_state();
        hermitize_normalize(&mut end, n);
        let fixed_point_gap = end.iter().zip(&start).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if change < cfg.tol && (!accelerate || fixed_point_gap < cfg.tol) {
            return Ok(SteadyStateResult {
                rho_ss: DensityMatrix::from_raw(l.dims(), avg),
                stroboscopic: accelerate.then(|| DensityMatrix::from_raw(l.dims(), start)),
                method: SolveMethod::Dynamic,
                residual: change,
                periods_used: Some(k + 1),
                anchor_time: t0,
                period: accelerate.then_some(period),
            });
        }
        if accelerate {
            if fixed_point_gap > 1e3 * best {
                acc.clear();
            }
            best = best.min(fixed_point_gap);
            let (mut xs, mut gs) = (Vec::new(), Vec::new());
            to_split(&start, &mut xs);
            to_split(&end, &mut gs);
            let mut next_split = acc.next(&xs, &gs);
            hermitize_normalize_split(&mut next_split, n);
            let mut next = vec![ZERO; n * n];
            from_split(&next_split, &mut next);
            prop.reset_state(&next);
        } else {
            prop.reset_state(&end);
        }
    }
    Err(Error::NoConvergence { periods: cfg.max_periods, last_change: change })
}
