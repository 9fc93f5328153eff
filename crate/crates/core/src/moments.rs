//! First and second moments of the effective two-mode-squeezing model.
//!
//! The vector x = (⟨a†a⟩, ⟨b†b⟩, ⟨ab⟩, ⟨a†b†⟩, ⟨a⟩, ⟨a†⟩, ⟨b⟩, ⟨b†⟩) obeys the
//! closed linear system dx/dt = M x + c, which gives the classical oracle for
//! the Fock-space solver together with its stability bound.

use nalgebra::{SMatrix, SVector};

use crate::error::{invalid, Error, Result};
use crate::fock::{C64, I, ZERO};
use crate::model::SystemParams;
use crate::ode::{Dopri5, StepControl};

pub type Matrix8 = SMatrix<C64, 8, 8>;
pub type Vector8 = SVector<C64, 8>;

/// Norm above which moment integration is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentVector(pub [C64; 8]);

impl MomentVector {
    pub fn zero() -> Self {
        Self([ZERO; 8])
    }

    pub fn photons(&self) -> f64 {
        self.0[0].re
    }

    pub fn phonons(&self) -> f64 {
        self.0[1].re
    }

    pub fn ab(&self) -> C64 {
        self.0[2]
    }

    pub fn a(&self) -> C64 {
        self.0[4]
    }

    pub fn b(&self) -> C64 {
        self.0[6]
    }

    /// Largest violation of the conjugate pairing (3,4), (5,6), (7,8) and of
    /// the reality of the occupations.
    pub fn pairing_error(&self) -> f64 {
        let x = &self.0;
        [
            (x[2] - x[3].conj()).norm(),
            (x[4] - x[5].conj()).norm(),
            (x[6] - x[7].conj()).norm(),
            x[0].im.abs(),
            x[1].im.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    fn to_vector(self) -> Vector8 {
        Vector8::from_column_slice(&self.0)
    }

    fn from_vector(v: &Vector8) -> Self {
        let mut x = [ZERO; 8];
        x.copy_from_slice(v.as_slice());
        Self(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSystem {
    pub m: Matrix8,
    pub c: Vector8,
}

/// Effective-model parameters extracted from a resonant configuration.
#[derive(Debug, Clone, Copy)]
struct Effective {
    omega: f64,
    g: f64,
    kappa: f64,
    gamma: f64,
    n_c: f64,
    n_m: f64,
    e: f64,
}

impl Effective {
    fn from_params(p: &SystemParams) -> Result<Self> {
        p.validate()?;
        let e = p.common_amplitude()?;
        if p.drives.len() == 2 {
            let mut d: Vec<f64> = p.drives.iter().map(|t| t.delta).collect();
            d.sort_by(f64::total_cmp);
            let tol = 1e-12 * p.omega_m;
            if d[0].abs() > tol || (d[1] - p.omega_m).abs() > tol {
                return Err(invalid("drives", "moment closure needs the resonant tones Δ = 0 and Δ = ω_m"));
            }
        }
        Ok(Self { omega: p.omega_m, g: p.g, kappa: p.kappa, gamma: p.gamma_m, n_c: p.n_c, n_m: p.n_m, e })
    }

    fn coupling(&self) -> f64 {
        self.e * self.g / self.omega
    }
}

pub fn build_moment_system(params: &SystemParams) -> Result<MomentSystem> {
    let p = Effective::from_params(params)?;
    let eg = p.coupling();
    let (k, gm, e) = (p.kappa, p.gamma, C64::from(p.e));
    let ieg = I * eg;
    let mut m = Matrix8::zeros();
    let rows: [&[(usize, C64)]; 8] = [
        &[(0, C64::from(-k)), (2, -ieg), (3, ieg), (4, e), (5, e)],
        &[(1, C64::from(-gm)), (2, -ieg), (3, ieg)],
        &[(0, ieg), (1, ieg), (2, (-(k + gm) / 2.0).into()), (6, e)],
        &[(0, -ieg), (1, -ieg), (3, (-(k + gm) / 2.0).into()), (7, e)],
        &[(4, (-k / 2.0).into()), (7, ieg)],
        &[(5, (-k / 2.0).into()), (6, -ieg)],
        &[(5, ieg), (6, (-gm / 2.0).into())],
        &[(4, -ieg), (7, (-gm / 2.0).into())],
    ];
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row.iter() {
            m[(i, j)] = v;
        }
    }
    let c = Vector8::from_column_slice(&[(k * p.n_c).into(), (gm * p.n_m).into(), ieg, -ieg, e, e, ZERO, ZERO]);
    Ok(MomentSystem { m, c })
}

impl MomentSystem {
    pub fn rhs(&self, x: &MomentVector) -> MomentVector {
        MomentVector::from_vector(&(self.m * x.to_vector() + self.c))
    }
}

/// Integrate dx/dt = Mx + c and return x at every time in `t_grid`
/// (ascending, starting at or after 0).
pub fn integrate_moments(
    system: &MomentSystem,
    x0: &MomentVector,
    t_grid: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Vec<MomentVector>> {
    if t_grid.windows(2).any(|w| w[1] < w[0]) || t_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(invalid("t_grid", "must be ascending and non-negative"));
    }
    let ctl = StepControl { rel_tol, abs_tol, max_step: f64::INFINITY };
    let mut stepper = Dopri5::new(16, ctl);
    let mut y = vec![0.0; 16];
    pack(x0, &mut y);
    let mut f = |_t: f64, y: &[f64], out: &mut [f64]| {
        let x = unpack(y);
        pack(&system.rhs(&x), out);
    };
    let mut t = 0.0;
    let mut out = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        while t < target {
            stepper.step(&mut f, &mut t, &mut y, target)?;
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm <= DIVERGENCE_NORM) {
                return Err(Error::Divergence(t));
            }
        }
        out.push(unpack(&y));
    }
    Ok(out)
}

fn pack(x: &MomentVector, y: &mut [f64]) {
    for (k, v) in x.0.iter().enumerate() {
        y[k] = v.re;
        y[8 + k] = v.im;
    }
}

fn unpack(y: &[f64]) -> MomentVector {
    let mut x = [ZERO; 8];
    for (k, v) in x.iter_mut().enumerate() {
        *v = C64::new(y[k], y[8 + k]);
    }
    MomentVector(x)
}

/// x_ss = −M⁻¹c.
///
/// Singularity is judged by |det M| relative to the product of the diagonal
/// magnitudes, which is the determinant at zero drive.
pub fn steady_moments_linear_solve(system: &MomentSystem) -> Result<MomentVector> {
    let det = system.m.determinant().norm();
    let scale: f64 = system.m.diagonal().iter().map(|v| v.norm()).product();
    if !(det >= 1e-12 * scale) {
        return Err(Error::SingularAtThreshold(det));
    }
    let lu = system.m.full_piv_lu();
    let x = lu.solve(&(-system.c)).ok_or(Error::SingularAtThreshold(det))?;
    Ok(MomentVector::from_vector(&x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedForm {
    /// Finite-temperature expressions exactly as commonly printed.
    Full,
    /// Finite-temperature expressions with the bath occupations in the
    /// photon/phonon numerators exchanged; agrees with the moment equations.
    FullCorrected,
    /// n̄_c = n̄_m = 0 simplification.
    ZeroTemperature,
}

pub fn closed_form_occupations(params: &SystemParams, variant: ClosedForm) -> Result<(f64, f64)> {
    let p = Effective::from_params(params)?;
    let (w, g, k, gm, e) = (p.omega, p.g, p.kappa, p.gamma, p.e);
    let gap = gm * k * w * w - 4.0 * e * e * g * g;
    if !(gap > 0.0) {
        return Err(Error::StabilityViolated { amplitude: e, bound: stability_bound(params).unwrap_or(f64::INFINITY) });
    }
    let den = (gm + k) * gap * gap;
    let (e2, g2, w2) = (e * e, g * g, w * w);
    let (e4g4, w4) = (e2 * e2 * g2 * g2, w2 * w2);
    let (na, nb) = match variant {
        ClosedForm::Full => (p.n_c, p.n_m),
        ClosedForm::FullCorrected => (p.n_m, p.n_c),
        ClosedForm::ZeroTemperature => {
            let photons = 4.0 * e2 * gm * gm * w2 * (g2 * k + w2 * (gm + k)) - 16.0 * e4g4 * gm;
            let phonons = 4.0 * e2 * g2 * w2 * (gm * k * k + 4.0 * e2 * (gm + k)) - 16.0 * e4g4 * k;
            return Ok((photons / den, phonons / den));
        }
    };
    let photons = 4.0 * e2 * g2 * gm * k * (gm * (1.0 + na - nb) - 2.0 * k * nb) * w2
        + gm * gm * (gm + k) * (4.0 * e2 + k * k * nb) * w4
        - 16.0 * e4g4 * (gm + gm * na - k * nb);
    let phonons = 4.0 * e2 * g2 * (4.0 * e2 * (gm + k) + gm * k * (k * (1.0 - na + nb) - 2.0 * gm * na)) * w2
        + gm * gm * k * k * (gm + k) * na * w4
        - 16.0 * e4g4 * (k - gm * na + k * nb);
    Ok((photons / den, phonons / den))
}

/// E_max = ω_m √(κγ_m) / (2g).
pub fn stability_bound(params: &SystemParams) -> Result<f64> {
    if !(params.g > 0.0) {
        return Err(Error::Unbounded);
    }
    Ok(params.omega_m * (params.kappa * params.gamma_m).sqrt() / (2.0 * params.g))
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub eigenvalues_closed_form: [C64; 8],
    pub eigenvalues_numeric: [C64; 8],
    pub stable: bool,
    pub e_max: f64,
    /// Largest distance between matched closed-form and numeric eigenvalues.
    pub max_mismatch: f64,
}

/// λ₁,₂ = −(κ+γ)/2, λ₃,₄ = (−ω(κ+γ) − R)/(4ω), λ₅ = (−ω(κ+γ) − R)/(2ω),
/// λ₆,₇ = (−ω(κ+γ) + R)/(4ω), λ₈ = (−ω(κ+γ) + R)/(2ω) with
/// R = √(16E²g² + ω²(γ−κ)²).
pub fn closed_form_eigenvalues(params: &SystemParams) -> Result<[C64; 8]> {
    let p = Effective::from_params(params)?;
    let (w, s) = (p.omega, p.kappa + p.gamma);
    let r = (16.0 * p.e * p.e * p.g * p.g + w * w * (p.gamma - p.kappa).powi(2)).sqrt();
    let l12 = -0.5 * s;
    let l34 = (-w * s - r) / (4.0 * w);
    let l5 = (-w * s - r) / (2.0 * w);
    let l67 = (-w * s + r) / (4.0 * w);
    let l8 = (-w * s + r) / (2.0 * w);
    Ok([l12, l12, l34, l34, l5, l67, l67, l8].map(C64::from))
}

pub fn stability_eigenvalues(params: &SystemParams) -> Result<StabilityReport> {
    let closed = closed_form_eigenvalues(params)?;
    let system = build_moment_system(params)?;
    let (_, t) = system.m.schur().unpack();
    let mut numeric = [ZERO; 8];
    for (k, v) in numeric.iter_mut().enumerate() {
        *v = t[(k, k)];
    }
    let max_mismatch = multiset_distance(&closed, &numeric);
    let stable = numeric.iter().all(|l| l.re < 0.0);
    let e_max = stability_bound(params).unwrap_or(f64::INFINITY);
    Ok(StabilityReport { eigenvalues_closed_form: closed, eigenvalues_numeric: numeric, stable, e_max, max_mismatch })
}

/// Greedy nearest-neighbour matching distance between two multisets.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[i].re.total_cmp(&a[j].re).then(a[i].im.total_cmp(&a[j].im)));
    for i in order {
        let (j, d) = (0..b.len())
            .filter(|&j| !used[j])
            .map(|j| (j, (a[i] - b[j]).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("equal lengths");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Random stable resonant parameter set: ω_m = 1, κ, γ_m, g log-uniform in
/// [1e-3, 1], E log-uniform in [1e-3, 0.9 E_max] (clamped to stay below it),
/// bath occupations log-uniform in [1e-3, 1] unless `zero_temperature`.
/// `uniform` yields samples in [0, 1).
pub fn draw_stable_params(mut uniform: impl FnMut() -> f64, zero_temperature: bool) -> SystemParams {
    let mut log_uniform = |lo: f64, hi: f64| (lo.ln() + uniform() * (hi.ln() - lo.ln())).exp();
    let kappa = log_uniform(1e-3, 1.0);
    let gamma = log_uniform(1e-3, 1.0);
    let g = log_uniform(1e-3, 1.0);
    let (n_c, n_m) = if zero_temperature { (0.0, 0.0) } else { (log_uniform(1e-3, 1.0), log_uniform(1e-3, 1.0)) };
    let e_max = (kappa * gamma).sqrt() / (2.0 * g);
    let hi = 0.9 * e_max;
    let e = if hi > 1e-3 { log_uniform(1e-3, hi) } else { hi * uniform().max(1e-3) };
    let mut p = SystemParams::resonant(g, e, 0.0);
    p.kappa = kappa;
    p.gamma_m = gamma;
    p.n_c = n_c;
    p.n_m = n_m;
    p
}

/// Occupations from the linear solve, the convenience wrapper used by
/// sweeps and reports.
pub fn steady_occupations(params: &SystemParams) -> Result<(f64, f64)> {
    let x = steady_moments_linear_solve(&build_moment_system(params)?)?;
    Ok((x.photons(), x.phonons()))
}
