//! Photon/phonon statistics of a (steady) state: number distributions,
//! zero-delay coherences, two-time correlations, emission spectra and
//! Wigner functions.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::evolution::{PropagationConfig, Propagator, SteadyStateResult};
use crate::fock::{DensityMatrix, Dims, Mode, QOperator, C64, ZERO};
use crate::liouvillian::Liouvillian;

/// Smallest ⟨O†O⟩ for which normalized correlations are evaluated.
pub const POPULATION_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct NumberDistribution {
    pub mode: Mode,
    pub probabilities: Vec<f64>,
}

impl NumberDistribution {
    pub fn mean(&self) -> f64 {
        self.factorial_moment(1)
    }

    /// ⟨n(n−1)…(n−k+1)⟩ = ⟨O†ᵏOᵏ⟩.
    pub fn factorial_moment(&self, k: u32) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(n, p)| (0..k).map(|j| n as f64 - j as f64).product::<f64>() * p)
            .sum()
    }

    /// ⟨O†ᵏOᵏ⟩ / ⟨O†O⟩ᵏ.
    pub fn gk(&self, k: u32) -> Result<f64> {
        let mean = self.mean();
        if !(mean > POPULATION_EPS) {
            return Err(Error::VanishingPopulation(mean));
        }
        Ok(self.factorial_moment(k) / mean.powi(k as i32))
    }

    /// p(n) ≥ −1e-10 and Σp = 1 within 1e-9.
    pub fn is_valid(&self) -> bool {
        let sum: f64 = self.probabilities.iter().sum();
        self.probabilities.iter().all(|&p| p >= -1e-10) && (sum - 1.0).abs() <= 1e-9
    }
}

pub fn number_distribution(rho: &DensityMatrix, mode: Mode) -> Result<NumberDistribution> {
    let mut probabilities = rho.populations(mode)?;
    let total: f64 = probabilities.iter().sum();
    if total > 0.0 {
        probabilities.iter_mut().for_each(|p| *p /= total);
    }
    Ok(NumberDistribution { mode, probabilities })
}

/// Bose–Einstein p(n) = n̄ⁿ/(1+n̄)ⁿ⁺¹ for n < len.
pub fn geometric_reference(mean: f64, len: usize) -> Vec<f64> {
    let r = mean / (1.0 + mean);
    (0..len).map(|n| r.powi(n as i32) / (1.0 + mean)).collect()
}

/// Poisson p(n) = e^{−n̄} n̄ⁿ / n! for n < len.
pub fn poisson_reference(mean: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut p = (-mean).exp();
    for n in 0..len {
        if n > 0 {
            p *= mean / n as f64;
        }
        out.push(p);
    }
    out
}

/// max |p(n) − q(n)| / q(n) over n with p(n) > floor.
pub fn max_relative_deviation(p: &[f64], q: &[f64], floor: f64) -> f64 {
    p.iter().zip(q).filter(|(p, _)| **p > floor).map(|(p, q)| (p - q).abs() / q.abs()).fold(0.0, f64::max)
}

pub fn equal_time_gk(rho: &DensityMatrix, mode: Mode, k: u32) -> Result<f64> {
    if !(2..=3).contains(&k) {
        return Err(invalid("k", format!("only k = 2, 3 are supported, got {k}")));
    }
    number_distribution(rho, mode)?.gk(k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceReport {
    pub g2_a: f64,
    pub g2_b: f64,
    pub g3_a: f64,
    pub g3_b: f64,
}

impl CoherenceReport {
    pub fn from_state(rho: &DensityMatrix) -> Result<Self> {
        if !matches!(rho.dims(), Dims::Joint(_)) {
            return Err(Error::InvalidModeTag);
        }
        let a = number_distribution(rho, Mode::Photon)?;
        let b = number_distribution(rho, Mode::Phonon)?;
        Ok(Self { g2_a: a.gk(2)?, g2_b: b.gk(2)?, g3_a: a.gk(3)?, g3_b: b.gk(3)? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoTimeTrace {
    pub taus: Vec<f64>,
    /// ⟨O†(τ)O(0)⟩.
    pub values: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct CorrelationConfig {
    pub propagation: PropagationConfig,
    /// Number of equally spaced τ-origins within one drive period that are
    /// averaged for periodic generators (1 = period boundary only).
    pub origins: usize,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        Self { propagation: PropagationConfig { rel_tol: 1e-7, abs_tol: 1e-10, ..Default::default() }, origins: 1 }
    }
}

/// O·ρ for row-major data.
fn left_multiply(op: &QOperator, rho: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![ZERO; n * n];
    for (i, k, v) in op.iter() {
        let (src, dst) = (&rho[k * n..(k + 1) * n], i * n);
        for (j, s) in src.iter().enumerate() {
            out[dst + j] += v * s;
        }
    }
    out
}

/// Tr[O† σ].
fn adjoint_trace(op: &QOperator, sigma: &[C64], n: usize) -> C64 {
    op.iter().map(|(k, i, v)| v.conj() * sigma[k * n + i]).sum()
}

/// ⟨O†(τ)O(0)⟩ by the quantum regression theorem: σ(0) = O ρ, evolved under
/// the same generator, recorded as Tr[O† σ(τ)].
///
/// For periodic generators the origin is the stroboscopic state at its period
/// boundary; with `cfg.origins > 1` the traces from equally spaced origins
/// across one period are averaged.
pub fn two_time_correlation(
    l: &Liouvillian,
    ss: &SteadyStateResult,
    op: &QOperator,
    tau_grid: &[f64],
    cfg: &CorrelationConfig,
) -> Result<TwoTimeTrace> {
    cfg.propagation.validate()?;
    if op.dims() != l.dims() {
        return Err(Error::DimensionMismatch { expected: l.dim(), found: op.dim() });
    }
    if tau_grid.first() != Some(&0.0) || tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("tau_grid", "must start at 0 and increase strictly"));
    }
    if cfg.origins == 0 {
        return Err(invalid("origins", "need at least one origin"));
    }
    let n = l.dim();
    let anchor = ss.anchor_state();
    let t_anchor = ss.anchor_time;
    let origins = if ss.period.is_some() { cfg.origins } else { 1 };
    let period = ss.period.unwrap_or(0.0);
    let tau_max = *tau_grid.last().expect("non-empty");
    let mut values = vec![ZERO; tau_grid.len()];
    let mut rho_prop = Propagator::new(l, &cfg.propagation, t_anchor, anchor.data(), true);
    for k in 0..origins {
        let t0 = t_anchor + period * k as f64 / origins as f64;
        rho_prop.advance(t0, &[], |_, _| Ok(()))?;
        let rho = rho_prop.lab_state();
        let sigma = left_multiply(op, &rho, n);
        let mut prop = Propagator::new(l, &cfg.propagation, t0, &sigma, false);
        let samples: Vec<f64> = tau_grid.iter().map(|tau| t0 + tau).collect();
        let mut idx = 0;
        prop.advance(t0 + tau_max, &samples, |_, x| {
            values[idx] += adjoint_trace(op, x, n);
            idx += 1;
            Ok(())
        })?;
    }
    let w = 1.0 / origins as f64;
    values.iter_mut().for_each(|v| *v *= w);
    Ok(TwoTimeTrace { taus: tau_grid.to_vec(), values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hann,
    Rect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Ascending angular frequencies in the units of 1/τ.
    pub omegas: Vec<f64>,
    pub s: Vec<f64>,
}

impl SpectrumResult {
    /// Index and value of the global maximum.
    pub fn peak(&self) -> (usize, f64) {
        self.s.iter().copied().enumerate().fold((0, f64::MIN), |b, (i, v)| if v > b.1 { (i, v) } else { b })
    }

    pub fn max_in(&self, lo: f64, hi: f64) -> Option<(usize, f64)> {
        self.omegas
            .iter()
            .zip(&self.s)
            .enumerate()
            .filter(|(_, (w, _))| **w >= lo && **w <= hi)
            .map(|(i, (_, s))| (i, *s))
            .fold(None, |b, (i, v)| match b {
                Some((_, bv)) if bv >= v => b,
                _ => Some((i, v)),
            })
    }

    /// Full width at half maximum around the local peak at `idx`, linearly
    /// interpolated between grid points.
    pub fn half_max_width(&self, idx: usize) -> f64 {
        let half = 0.5 * self.s[idx];
        let cross = |range: &mut dyn Iterator<Item = usize>, step: isize| -> f64 {
            for j in range {
                if self.s[j] <= half {
                    let k = (j as isize - step) as usize;
                    let (w0, w1, s0, s1) = (self.omegas[j], self.omegas[k], self.s[j], self.s[k]);
                    return w0 + (half - s0) * (w1 - w0) / (s1 - s0);
                }
            }
            f64::NAN
        };
        let right = cross(&mut (idx + 1..self.s.len()), 1);
        let left = cross(&mut (0..idx).rev(), -1);
        right - left
    }

    /// Local maxima above `threshold`·max, ascending in frequency.
    pub fn local_maxima(&self, threshold: f64) -> Vec<usize> {
        let floor = threshold * self.peak().1;
        (1..self.s.len().saturating_sub(1))
            .filter(|&i| self.s[i] > floor && self.s[i] >= self.s[i - 1] && self.s[i] > self.s[i + 1])
            .collect()
    }
}

/// S(ω) = 2 Re ∫₀^τmax w(τ) e^{−iωτ} C(τ) dτ by a trapezoid-weighted,
/// zero-padded FFT. The Hann window is one-sided: 1 at τ = 0, 0 at τ_max.
pub fn power_spectrum(trace: &TwoTimeTrace, window: Window, zero_pad: usize) -> Result<SpectrumResult> {
    let n = trace.taus.len();
    if n < 2 || trace.values.len() != n {
        return Err(invalid("trace", "need at least two samples with matching values"));
    }
    if zero_pad == 0 {
        return Err(invalid("zero_pad", "must be >= 1"));
    }
    let dt = trace.taus[1] - trace.taus[0];
    let uniform = dt > 0.0
        && trace.taus[0].abs() <= 1e-12 * dt
        && trace.taus.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt);
    if !uniform {
        return Err(Error::NonUniformGrid);
    }
    let m = n * zero_pad;
    let mut buf = vec![ZERO; m];
    for (k, v) in trace.values.iter().enumerate() {
        let w = match window {
            Window::Hann => 0.5 * (1.0 + (PI * k as f64 / (n - 1) as f64).cos()),
            Window::Rect => 1.0,
        };
        let trap = if k == 0 { 0.5 } else { 1.0 };
        buf[k] = v * (w * trap * dt);
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let dw = 2.0 * PI / (m as f64 * dt);
    let split = m.div_ceil(2);
    let mut omegas = Vec::with_capacity(m);
    let mut s = Vec::with_capacity(m);
    for j in (split..m).chain(0..split) {
        let idx = if j < split { j as f64 } else { j as f64 - m as f64 };
        omegas.push(idx * dw);
        s.push(2.0 * buf[j].re);
    }
    Ok(SpectrumResult { omegas, s })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub x_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    /// W[(ix, ip)] at α = (x + ip)/√2.
    pub w: DMatrix<f64>,
}

impl WignerGrid {
    /// ∫W d²α = ½∫W dx dp by the trapezoid rule.
    pub fn normalization(&self) -> f64 {
        let wx = trapezoid_weights(&self.x_grid);
        let wp = trapezoid_weights(&self.p_grid);
        let mut sum = 0.0;
        for (i, a) in wx.iter().enumerate() {
            for (j, b) in wp.iter().enumerate() {
                sum += a * b * self.w[(i, j)];
            }
        }
        0.5 * sum
    }

    /// Position marginal P(x) = ½∫W dp, normalized so that ∫P dx = 1.
    pub fn position_marginal(&self) -> Vec<f64> {
        let wp = trapezoid_weights(&self.p_grid);
        (0..self.x_grid.len())
            .map(|i| 0.5 * wp.iter().enumerate().map(|(j, b)| b * self.w[(i, j)]).sum::<f64>())
            .collect()
    }
}

fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let h = 0.5 * (grid[k + 1] - grid[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    w
}

/// W(α) = (2/π) Tr[D†(α) ρ D(α) Π] for a single-mode state, on the grid
/// α = (x + ip)/√2. Fails with `GridTooSmall` when the grid integral of W
/// deviates from 1 by more than 2%.
pub fn wigner(rho: &DensityMatrix, x_grid: &[f64], p_grid: &[f64]) -> Result<WignerGrid> {
    if !matches!(rho.dims(), Dims::Single(_)) {
        return Err(Error::InvalidModeTag);
    }
    for (name, g) in [("x_grid", x_grid), ("p_grid", p_grid)] {
        if g.len() < 2 || g.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid(name, "need at least two strictly increasing points"));
        }
    }
    let mut w = DMatrix::zeros(x_grid.len(), p_grid.len());
    let kernel = WignerKernel::new(rho.dim());
    for (i, &x) in x_grid.iter().enumerate() {
        for (j, &p) in p_grid.iter().enumerate() {
            w[(i, j)] = kernel.eval(rho, C64::new(x, p) / 2f64.sqrt());
        }
    }
    let grid = WignerGrid { x_grid: x_grid.to_vec(), p_grid: p_grid.to_vec(), w };
    let norm = grid.normalization();
    if (norm - 1.0).abs() > 0.02 {
        return Err(Error::GridTooSmall(norm));
    }
    Ok(grid)
}

/// W at a single phase-space point α.
pub fn wigner_at(rho: &DensityMatrix, alpha: C64) -> Result<f64> {
    if !matches!(rho.dims(), Dims::Single(_)) {
        return Err(Error::InvalidModeTag);
    }
    Ok(WignerKernel::new(rho.dim()).eval(rho, alpha))
}

/// Expansion W = (2/π) e^{−x/2} Σ_{m≤n} (−1)^m ρ_mn √(m!/n!) βⁿ⁻ᵐ L_m^{(n−m)}(x)
/// (off-diagonal terms doubled, real part), β = 2α, x = |β|².
struct WignerKernel {
    n: usize,
    log_fact: Vec<f64>,
}

impl WignerKernel {
    fn new(n: usize) -> Self {
        let mut log_fact = vec![0.0; n + 1];
        for k in 1..=n {
            log_fact[k] = log_fact[k - 1] + (k as f64).ln();
        }
        Self { n, log_fact }
    }

    fn eval(&self, rho: &DensityMatrix, alpha: C64) -> f64 {
        let n = self.n;
        let beta = 2.0 * alpha;
        let x = beta.norm_sqr();
        let (r, theta) = beta.to_polar();
        let mut total = 0.0;
        let mut lag = vec![0.0; n];
        for d in 0..n {
            laguerre_column(d, x, &mut lag[..n - d]);
            let phase = C64::from_polar(1.0, d as f64 * theta);
            for m in 0..n - d {
                let k = m + d;
                let mag = if d == 0 {
                    1.0
                } else if r == 0.0 {
                    0.0
                } else {
                    (d as f64 * r.ln() + 0.5 * (self.log_fact[m] - self.log_fact[k])).exp()
                };
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let term = (rho.get(m, k) * phase).re * mag * lag[m] * sign;
                total += if d == 0 { term } else { 2.0 * term };
            }
        }
        2.0 / PI * (-0.5 * x).exp() * total
    }
}

/// L_m^{(d)}(x) for m = 0..out.len().
fn laguerre_column(d: usize, x: f64, out: &mut [f64]) {
    let a = d as f64;
    for m in 0..out.len() {
        out[m] = match m {
            0 => 1.0,
            1 => 1.0 + a - x,
            _ => {
                let k = (m - 1) as f64;
                ((2.0 * k + 1.0 + a - x) * out[m - 1] - (k + a) * out[m - 2]) / (k + 1.0)
            }
        };
    }
}
