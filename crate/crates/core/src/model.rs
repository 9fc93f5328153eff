//! Hamiltonians and dissipation channels of the two-tone driven
//! optomechanical cavity, written in the frame rotating at the cavity
//! frequency.

use crate::error::{invalid, Error, Result};
use crate::fock::{Dims, FockCutoffs, ModeOperators, QOperator, C64, HERMITIAN_TOL, I, ONE};

/// Frequencies closer to zero than this are treated as static.
pub const ZERO_FREQUENCY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveTone {
    /// Detuning Δ = ω_c − ω_drive, in units of ω_m.
    pub delta: f64,
    pub amplitude: f64,
}

impl DriveTone {
    pub fn new(delta: f64, amplitude: f64) -> Self {
        Self { delta, amplitude }
    }
}

/// Physical rates of the optomechanical system, all in units of ω_m.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub omega_m: f64,
    pub g: f64,
    pub kappa: f64,
    pub gamma_m: f64,
    pub n_c: f64,
    pub n_m: f64,
    pub drives: Vec<DriveTone>,
}

impl SystemParams {
    /// Operating point used for the threshold studies: κ = 0.1, γ_m = 6e-3,
    /// resonant tones Δ₁ = ω_m, Δ₂ = 0 with a common amplitude.
    pub fn resonant(g: f64, amplitude: f64, n_bath: f64) -> Self {
        Self {
            omega_m: 1.0,
            g,
            kappa: 0.1,
            gamma_m: 6e-3,
            n_c: n_bath,
            n_m: n_bath,
            drives: vec![DriveTone::new(1.0, amplitude), DriveTone::new(0.0, amplitude)],
        }
    }

    pub fn with_drives(mut self, drives: Vec<DriveTone>) -> Self {
        self.drives = drives;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("omega_m", self.omega_m), ("kappa", self.kappa), ("gamma_m", self.gamma_m)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        let non_negative = [("g", self.g), ("n_c", self.n_c), ("n_m", self.n_m)];
        for (name, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        if self.drives.is_empty() || self.drives.len() > 2 {
            return Err(invalid("drives", format!("need one or two tones, got {}", self.drives.len())));
        }
        for d in &self.drives {
            if !(d.amplitude >= 0.0) || !d.amplitude.is_finite() {
                return Err(invalid("amplitude", format!("must be >= 0, got {}", d.amplitude)));
            }
            if !d.delta.is_finite() {
                return Err(invalid("delta", "must be finite"));
            }
        }
        Ok(())
    }

    /// The shared amplitude E when both tones carry the same amplitude.
    pub fn common_amplitude(&self) -> Result<f64> {
        let first = self.drives.first().ok_or_else(|| invalid("drives", "no drive tones"))?.amplitude;
        if self.drives.iter().any(|d| (d.amplitude - first).abs() > 1e-15 * first.max(1.0)) {
            return Err(invalid("drives", "tones carry different amplitudes"));
        }
        Ok(first)
    }
}

/// H(t) = H₀ + Σ_k [O_k e^{iν_k t} + h.c.].
#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    static_part: QOperator,
    harmonic_terms: Vec<(QOperator, f64)>,
    frame: Option<RotatingFrame>,
}

/// Interaction picture generated by a diagonal H₀ with energies
/// `omega * levels[i]`: the stored state is ρ_I = e^{iH₀t} ρ e^{−iH₀t}.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatingFrame {
    pub omega: f64,
    pub levels: Vec<i64>,
}

impl RotatingFrame {
    /// Frame co-rotating with the free mechanical oscillator.
    pub fn mechanical(omega_m: f64, cutoffs: FockCutoffs) -> Self {
        let levels = (0..cutoffs.dim()).map(|i| cutoffs.split(i).1 as i64).collect();
        Self { omega: omega_m, levels }
    }

    fn phases(&self, t: f64, sign: f64) -> Vec<C64> {
        let max = self.levels.iter().map(|l| l.unsigned_abs()).max().unwrap_or(0) as usize;
        let mut pow = vec![ONE; max + 1];
        for k in 1..=max {
            pow[k] = C64::from_polar(1.0, sign * self.omega * t * k as f64);
        }
        self.levels.iter().map(|&l| if l >= 0 { pow[l as usize] } else { pow[(-l) as usize].conj() }).collect()
    }

    /// ρ[i,j] → e^{iω(l_i − l_j)t} ρ[i,j] (lab to frame).
    pub fn enter(&self, t: f64, x: &mut [C64]) {
        self.rotate(t, 1.0, x)
    }

    /// Inverse of [`enter`](Self::enter).
    pub fn leave(&self, t: f64, x: &mut [C64]) {
        self.rotate(t, -1.0, x)
    }

    fn rotate(&self, t: f64, sign: f64, x: &mut [C64]) {
        let n = self.levels.len();
        debug_assert_eq!(x.len(), n * n);
        let p = self.phases(t, sign);
        for i in 0..n {
            let row = &mut x[i * n..(i + 1) * n];
            let pi = p[i];
            for (v, pj) in row.iter_mut().zip(&p) {
                *v *= pi * pj.conj();
            }
        }
    }
}

impl HamiltonianModel {
    /// Zero-frequency terms fold into the static part; negative frequencies
    /// are flipped onto their conjugate partner and equal frequencies merge.
    pub fn new(static_part: QOperator, harmonic_terms: Vec<(QOperator, f64)>) -> Result<Self> {
        let dims = static_part.dims();
        let mut static_part = static_part;
        let mut merged: Vec<(QOperator, f64)> = Vec::new();
        for (op, freq) in harmonic_terms {
            if op.dims() != dims {
                return Err(Error::DimensionMismatch { expected: dims.size(), found: op.dim() });
            }
            if freq.abs() <= ZERO_FREQUENCY_TOL {
                static_part = &static_part + &(&op + &op.adjoint());
                continue;
            }
            let (op, freq) = if freq < 0.0 { (op.adjoint(), -freq) } else { (op, freq) };
            match merged.iter_mut().find(|(_, f)| (f - freq).abs() <= ZERO_FREQUENCY_TOL) {
                Some(slot) => slot.0 = &slot.0 + &op,
                None => merged.push((op, freq)),
            }
        }
        merged.retain(|(op, _)| !op.is_zero());
        if !static_part.is_hermitian(HERMITIAN_TOL) {
            return Err(invalid("static_part", "static Hamiltonian is not Hermitian"));
        }
        Ok(Self { static_part, harmonic_terms: merged, frame: None })
    }

    pub fn with_frame(mut self, frame: RotatingFrame) -> Result<Self> {
        if frame.levels.len() != self.dims().size() {
            return Err(Error::DimensionMismatch { expected: self.dims().size(), found: frame.levels.len() });
        }
        self.frame = Some(frame);
        Ok(self)
    }

    pub fn frame(&self) -> Option<&RotatingFrame> {
        self.frame.as_ref()
    }

    pub fn static_only(h: QOperator) -> Result<Self> {
        Self::new(h, Vec::new())
    }

    pub fn static_part(&self) -> &QOperator {
        &self.static_part
    }

    pub fn harmonic_terms(&self) -> &[(QOperator, f64)] {
        &self.harmonic_terms
    }

    pub fn dims(&self) -> Dims {
        self.static_part.dims()
    }

    pub fn is_static(&self) -> bool {
        self.harmonic_terms.is_empty()
    }

    pub fn at(&self, t: f64) -> QOperator {
        let mut h = self.static_part.clone();
        for (op, freq) in &self.harmonic_terms {
            let phase = C64::from_polar(1.0, freq * t);
            h = &h + &(&op.scale(phase) + &op.adjoint().scale(phase.conj()));
        }
        h
    }
}

/// Dissipator γ[JρJ† − ½{J†J, ρ}] in standard form.
#[derive(Debug, Clone)]
pub struct LindbladChannel {
    pub jump: QOperator,
    pub rate: f64,
}

/// ω_m b†b − i g a†a(b† − b) + i Σ_j E_j (a† e^{iΔ_j t} − a e^{−iΔ_j t}).
pub fn build_full_hamiltonian(params: &SystemParams, cutoffs: FockCutoffs) -> Result<HamiltonianModel> {
    params.validate()?;
    let ops = ModeOperators::new(cutoffs);
    let mech = ops.n_b.scale(C64::from(params.omega_m));
    let radiation = (&ops.n_a * &(&ops.b_dag - &ops.b)).scale(-I * params.g);
    let harmonic = params
        .drives
        .iter()
        .filter(|d| d.amplitude > 0.0)
        .map(|d| (ops.a_dag.scale(I * d.amplitude), d.delta))
        .collect();
    HamiltonianModel::new(&mech + &radiation, harmonic)
}

/// The same model in the interaction picture of ω_m b†b:
/// −i g a†a b† e^{iω_m t} + h.c. plus the drive tones.
///
/// Removing the free mechanical rotation lets the integrator take steps set
/// by the coupling rather than by ω_m·n_b.
pub fn build_full_hamiltonian_rotating(params: &SystemParams, cutoffs: FockCutoffs) -> Result<HamiltonianModel> {
    params.validate()?;
    let ops = ModeOperators::new(cutoffs);
    let mut harmonic: Vec<(QOperator, f64)> = params
        .drives
        .iter()
        .filter(|d| d.amplitude > 0.0)
        .map(|d| (ops.a_dag.scale(I * d.amplitude), d.delta))
        .collect();
    if params.g > 0.0 {
        harmonic.push(((&ops.n_a * &ops.b_dag).scale(-I * params.g), params.omega_m));
    }
    HamiltonianModel::new(QOperator::zeros(Dims::Joint(cutoffs)), harmonic)?
        .with_frame(RotatingFrame::mechanical(params.omega_m, cutoffs))
}

/// Resonant two-mode-squeezing Hamiltonian iE(a† − a) − (Eg/ω_m)(a†b† + ab).
pub fn build_effective_hamiltonian(params: &SystemParams, cutoffs: FockCutoffs) -> Result<QOperator> {
    params.validate()?;
    let e = params.common_amplitude()?;
    Ok(effective_terms(e, e, params, cutoffs))
}

/// Unequal-amplitude generalization:
/// iE₂(a† − a) − (g/ω_m)(E₁ − E₂)(ab† + a†b) − (gE₂/ω_m)(a†b† + ab).
pub fn build_unequal_effective_hamiltonian(
    e1: f64,
    e2: f64,
    params: &SystemParams,
    cutoffs: FockCutoffs,
) -> Result<QOperator> {
    params.validate()?;
    for (name, v) in [("E_1", e1), ("E_2", e2)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(invalid(name, format!("must be >= 0, got {v}")));
        }
    }
    Ok(effective_terms(e1, e2, params, cutoffs))
}

fn effective_terms(e1: f64, e2: f64, params: &SystemParams, cutoffs: FockCutoffs) -> QOperator {
    let ops = ModeOperators::new(cutoffs);
    let drive = (&ops.a_dag - &ops.a).scale(I * e2);
    let splitter = &(&ops.a * &ops.b_dag) + &(&ops.a_dag * &ops.b);
    let squeezer = &(&ops.a_dag * &ops.b_dag) + &(&ops.a * &ops.b);
    let ratio = params.g / params.omega_m;
    &(&drive - &splitter.scale(C64::from(ratio * (e1 - e2)))) - &squeezer.scale(C64::from(ratio * e2))
}

/// Cavity and mechanical damping/heating channels; zero-rate channels are
/// omitted.
///
/// The master equation is usually quoted with a prefactor (κ/2)(1 + n̄_c)
/// multiplying a dissipator that carries an explicit factor 2; the standard
/// rate stored here is κ(1 + n̄_c).
pub fn build_dissipators(params: &SystemParams, cutoffs: FockCutoffs) -> Result<Vec<LindbladChannel>> {
    params.validate()?;
    let ops = ModeOperators::new(cutoffs);
    let candidates = [
        (ops.a.clone(), params.kappa * (1.0 + params.n_c)),
        (ops.a_dag.clone(), params.kappa * params.n_c),
        (ops.b.clone(), params.gamma_m * (1.0 + params.n_m)),
        (ops.b_dag.clone(), params.gamma_m * params.n_m),
    ];
    Ok(candidates
        .into_iter()
        .filter(|(_, rate)| *rate > 0.0)
        .map(|(jump, rate)| LindbladChannel { jump, rate })
        .collect())
}

/// E = sqrt(2 κ_d P / ω_drive).
pub fn drive_amplitude_from_power(kappa_d: f64, power: f64, omega_drive: f64) -> Result<f64> {
    if !(kappa_d > 0.0) {
        return Err(invalid("kappa_d", format!("must be > 0, got {kappa_d}")));
    }
    if !(omega_drive > 0.0) {
        return Err(invalid("omega_j", format!("must be > 0, got {omega_drive}")));
    }
    if !(power >= 0.0) {
        return Err(invalid("power", format!("must be >= 0, got {power}")));
    }
    Ok((2.0 * kappa_d * power / omega_drive).sqrt())
}

/// Drive term in the interaction picture that removes ω_m b†b and the
/// radiation-pressure coupling, at time `t`.
///
/// Returns `(exact, first_order)`: the drive conjugated by the full
/// displacement-like factor e^{-iF}, F = (g/ω_m)(b†η + bη*), η = e^{iω_m t} − 1
/// (exponential summed to machine precision on the truncated space), and the
/// same term with e^{-iF} replaced by 1 − iF. Their difference is
/// O((g/ω_m)²).
pub fn interaction_picture_drive(
    params: &SystemParams,
    cutoffs: FockCutoffs,
    t: f64,
) -> Result<(QOperator, QOperator)> {
    params.validate()?;
    let dims = Dims::Joint(cutoffs);
    let ops = ModeOperators::new(cutoffs);
    let eta = C64::from_polar(1.0, params.omega_m * t) - ONE;
    let ratio = params.g / params.omega_m;
    let f = &ops.b_dag.scale(eta * ratio) + &ops.b.scale(eta.conj() * ratio);
    let id = QOperator::identity(dims);

    let minus_if = f.scale(-I);
    let mut exp_minus_if = id.clone();
    let mut term = id.clone();
    for k in 1..200 {
        term = (&term * &minus_if).scale(C64::from(1.0 / k as f64));
        if term.max_abs() < 1e-18 {
            break;
        }
        exp_minus_if = &exp_minus_if + &term;
    }
    let first = &id - &f.scale(I);

    let mut exact = QOperator::zeros(dims);
    let mut linear = QOperator::zeros(dims);
    for d in &params.drives {
        let phase = C64::from_polar(1.0, d.delta * t);
        let up_exact = (&ops.a_dag * &exp_minus_if).scale(I * d.amplitude * phase);
        let up_linear = (&ops.a_dag * &first).scale(I * d.amplitude * phase);
        exact = &exact + &(&up_exact + &up_exact.adjoint());
        linear = &linear + &(&up_linear + &up_linear.adjoint());
    }
    Ok((exact, linear))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cut(n: usize) -> FockCutoffs {
        FockCutoffs::square(n).unwrap()
    }

    fn fig2(e: f64) -> SystemParams {
        SystemParams::resonant(0.03, e, 0.0)
    }

    #[test]
    fn free_oscillator_limit() {
        let p = SystemParams::resonant(0.0, 0.0, 0.0);
        let h = build_full_hamiltonian(&p, cut(4)).unwrap();
        assert!(h.is_static());
        let ops = ModeOperators::new(cut(4));
        assert!(h.at(1.3).max_abs_diff(&ops.n_b).unwrap() < 1e-15);
    }

    #[test]
    fn radiation_pressure_matrix_element() {
        let p = SystemParams::resonant(0.03, 0.0, 0.0);
        let c = cut(3);
        let h = build_full_hamiltonian(&p, c).unwrap();
        // <1,1| -i g a†a (b† - b) |1,0> = -i g
        let el = h.static_part().get(c.index(1, 1), c.index(1, 0));
        assert_abs_diff_eq!(el.re, 0.0);
        assert_abs_diff_eq!(el.im, -0.03, epsilon = 1e-15);
    }

    #[test]
    fn resonant_drive_is_periodic_and_folded() {
        let p = fig2(0.1);
        let h = build_full_hamiltonian(&p, cut(4)).unwrap();
        assert_eq!(h.harmonic_terms().len(), 1);
        let period = std::f64::consts::TAU / p.omega_m;
        for &t in &[0.0, 0.37, 2.9, 11.0] {
            assert!(h.at(t).max_abs_diff(&h.at(t + period)).unwrap() < 1e-12);
            assert!(h.at(t).is_hermitian(1e-10));
        }
    }

    #[test]
    fn equal_tones_merge() {
        let p = fig2(0.1).with_drives(vec![DriveTone::new(0.5, 0.1), DriveTone::new(0.5, 0.1)]);
        let h = build_full_hamiltonian(&p, cut(3)).unwrap();
        assert_eq!(h.harmonic_terms().len(), 1);
        assert_abs_diff_eq!(h.harmonic_terms()[0].0.max_abs(), 0.2 * 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn effective_hamiltonian_squeezing_element() {
        let c = cut(3);
        let h = build_effective_hamiltonian(&fig2(0.1), c).unwrap();
        assert_abs_diff_eq!(h.get(c.index(1, 1), c.index(0, 0)).re, -3e-3, epsilon = 1e-15);
        assert!(h.is_hermitian(1e-14));

        let decoupled = build_effective_hamiltonian(&SystemParams::resonant(0.0, 0.1, 0.0), c).unwrap();
        let ops = ModeOperators::new(c);
        let drive = (&ops.a_dag - &ops.a).scale(I * 0.1);
        assert!(decoupled.max_abs_diff(&drive).unwrap() < 1e-15);
        assert!(build_effective_hamiltonian(&fig2(0.0), c).unwrap().is_zero());
    }

    #[test]
    fn effective_hamiltonian_needs_common_amplitude() {
        let p = fig2(0.1).with_drives(vec![DriveTone::new(1.0, 0.1), DriveTone::new(0.0, 0.2)]);
        assert!(build_effective_hamiltonian(&p, cut(3)).is_err());
    }

    #[test]
    fn unequal_effective_limits() {
        let c = cut(4);
        let p = fig2(0.1);
        let equal = build_unequal_effective_hamiltonian(0.1, 0.1, &p, c).unwrap();
        assert!(equal.max_abs_diff(&build_effective_hamiltonian(&p, c).unwrap()).unwrap() < 1e-12);

        let ops = ModeOperators::new(c);
        let splitter = &(&ops.a * &ops.b_dag) + &(&ops.a_dag * &ops.b);
        let squeezer = &(&ops.a_dag * &ops.b_dag) + &(&ops.a * &ops.b);
        let only_e1 = build_unequal_effective_hamiltonian(0.2, 0.0, &p, c).unwrap();
        assert!(only_e1.max_abs_diff(&splitter.scale(C64::from(-0.03 * 0.2))).unwrap() < 1e-15);

        let only_e2 = build_unequal_effective_hamiltonian(0.0, 0.2, &p, c).unwrap();
        let expected = &(&(&ops.a_dag - &ops.a).scale(I * 0.2) + &splitter.scale(C64::from(0.03 * 0.2)))
            - &squeezer.scale(C64::from(0.03 * 0.2));
        assert!(only_e2.max_abs_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn dissipator_rates() {
        let zero_t = build_dissipators(&fig2(0.1), cut(3)).unwrap();
        assert_eq!(zero_t.len(), 2);
        assert_abs_diff_eq!(zero_t[0].rate, 0.1);
        assert_abs_diff_eq!(zero_t[1].rate, 6e-3);

        let warm = build_dissipators(&SystemParams::resonant(0.03, 0.1, 0.1), cut(3)).unwrap();
        assert_eq!(warm.len(), 4);
        assert_abs_diff_eq!(warm[0].rate, 0.11, epsilon = 1e-15);
        assert_abs_diff_eq!(warm[1].rate, 0.01, epsilon = 1e-15);
    }

    #[test]
    fn drive_amplitude_formula() {
        assert_abs_diff_eq!(drive_amplitude_from_power(0.05, 1.0, 100.0).unwrap(), 0.0316228, epsilon = 1e-7);
        assert_eq!(drive_amplitude_from_power(0.05, 0.0, 100.0).unwrap(), 0.0);
        let e1 = drive_amplitude_from_power(0.05, 1.0, 7.0).unwrap();
        let e4 = drive_amplitude_from_power(0.05, 4.0, 7.0).unwrap();
        assert_abs_diff_eq!(e4, 2.0 * e1, epsilon = 1e-15);
        assert!(drive_amplitude_from_power(0.0, 1.0, 1.0).is_err());
        assert!(drive_amplitude_from_power(0.1, 1.0, -1.0).is_err());
    }

    #[test]
    fn parameter_validation_names_the_key() {
        let mut p = fig2(0.1);
        p.kappa = -0.1;
        match p.validate() {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "kappa"),
            other => panic!("unexpected {other:?}"),
        }
        let mut p = fig2(0.1);
        p.drives.clear();
        assert!(p.validate().is_err());
    }

    #[test]
    fn interaction_picture_first_order_is_accurate_to_second_order() {
        let p = fig2(0.1);
        let c = cut(5);
        for &t in &[0.0, 0.4, 1.7, 3.1, 5.1] {
            let (exact, linear) = interaction_picture_drive(&p, c, t).unwrap();
            let eta = (C64::from_polar(1.0, t) - ONE).norm();
            // ||F|| <= (g/w)|eta| (||b|| + ||b†||), remainder of e^x - 1 - x
            let f_norm = p.g * eta * 2.0 * ((c.n_b - 1) as f64).sqrt();
            let e_sum: f64 = p.drives.iter().map(|d| d.amplitude).sum();
            let bound = e_sum * (c.n_a as f64 - 1.0).sqrt() * f_norm * f_norm * f_norm.exp();
            let diff = exact.max_abs_diff(&linear).unwrap();
            assert!(diff <= bound, "t={t}: {diff} > {bound}");
            assert!(exact.is_hermitian(1e-12) && linear.is_hermitian(1e-12));
            if t == 0.0 {
                assert!(diff < 1e-15);
            }
        }
    }
}
