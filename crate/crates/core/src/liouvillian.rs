//! Lindblad generators acting on row-major vectorized density matrices.
//!
//! A generator is stored in operator-sandwich form,
//!
//!   L(t)ρ = A(t)ρ + ρB(t) + Σ_s c_s e^{iν_s t} J_s ρ K_s†,
//!
//! with every operator kept as a set of constant-offset diagonals. Ladder
//! operators on a product Fock basis only populate a handful of diagonals,
//! and in this layout each term updates row i of the output from a few
//! contiguous, shifted rows of the input. Memory stays at O(D²) for a
//! D-dimensional Hilbert space; the explicit D²×D² superoperator is
//! available for small spaces.

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, Dims, QOperator, C64, I, ONE, ZERO};
use crate::model::{HamiltonianModel, LindbladChannel, RotatingFrame, ZERO_FREQUENCY_TOL};

/// Operator stored by diagonals: `diags[d][i] = A[i, i + offsets[d]]`.
#[derive(Debug, Clone)]
struct Dia {
    offsets: Vec<isize>,
    diags: Vec<Vec<C64>>,
}

impl Dia {
    fn from_op(op: &QOperator) -> Self {
        let n = op.dim();
        let mut offsets: Vec<isize> = op.iter().map(|(r, c, _)| c as isize - r as isize).collect();
        offsets.sort_unstable();
        offsets.dedup();
        let mut diags = vec![vec![ZERO; n]; offsets.len()];
        for (r, c, v) in op.iter() {
            let d = offsets.binary_search(&(c as isize - r as isize)).expect("offset collected above");
            diags[d][r] += v;
        }
        Self { offsets, diags }
    }

    fn to_op(&self, dims: Dims) -> QOperator {
        to_op(dims, &self.offsets, &self.diags)
    }

    fn conj(&self) -> Vec<Vec<C64>> {
        self.diags.iter().map(|d| d.iter().map(|v| v.conj()).collect()).collect()
    }
}

fn to_op(dims: Dims, offsets: &[isize], diags: &[Vec<C64>]) -> QOperator {
    let mut t = Vec::new();
    for (s, d) in offsets.iter().zip(diags) {
        for (i, &v) in d.iter().enumerate() {
            if v != ZERO {
                t.push((i, (i as isize + s) as usize, v));
            }
        }
    }
    QOperator::from_triplets(dims, t).expect("diagonal entries are in range")
}

/// Time-dependent operator `base + Σ_k e^{i f_k t} comp_k` on a shared set
/// of diagonals.
#[derive(Debug, Clone)]
struct PhasedDia {
    offsets: Vec<isize>,
    base: Vec<Vec<C64>>,
    comps: Vec<(f64, Vec<Vec<C64>>)>,
}

impl PhasedDia {
    fn new(n: usize, parts: &[(QOperator, f64)]) -> Self {
        let mut offsets: Vec<isize> =
            parts.iter().flat_map(|(op, _)| op.iter().map(|(r, c, _)| c as isize - r as isize)).collect();
        offsets.sort_unstable();
        offsets.dedup();
        let zero = || vec![vec![ZERO; n]; offsets.len()];
        let mut base = zero();
        let mut comps: Vec<(f64, Vec<Vec<C64>>)> = Vec::new();
        for (op, f) in parts {
            let target = if f.abs() <= ZERO_FREQUENCY_TOL {
                &mut base
            } else {
                let k = match comps.iter().position(|(g, _)| (g - f).abs() <= ZERO_FREQUENCY_TOL) {
                    Some(k) => k,
                    None => {
                        comps.push((*f, zero()));
                        comps.len() - 1
                    }
                };
                &mut comps[k].1
            };
            for (r, c, v) in op.iter() {
                let d = offsets.binary_search(&(c as isize - r as isize)).expect("offset collected above");
                target[d][r] += v;
            }
        }
        Self { offsets, base, comps }
    }

    fn values_at(&self, t: f64, out: &mut Vec<Vec<C64>>) {
        out.resize(self.base.len(), Vec::new());
        for (o, b) in out.iter_mut().zip(&self.base) {
            o.clear();
            o.extend_from_slice(b);
        }
        for (f, comp) in &self.comps {
            let ph = C64::from_polar(1.0, f * t);
            for (o, c) in out.iter_mut().zip(comp) {
                for (ov, cv) in o.iter_mut().zip(c) {
                    *ov += ph * cv;
                }
            }
        }
    }

    fn operator_at(&self, dims: Dims, t: f64) -> QOperator {
        let mut vals = Vec::new();
        self.values_at(t, &mut vals);
        to_op(dims, &self.offsets, &vals)
    }

    fn component(&self, dims: Dims, freq: Option<f64>) -> QOperator {
        match freq {
            None => to_op(dims, &self.offsets, &self.base),
            Some(f) => match self.comps.iter().find(|(g, _)| (g - f).abs() <= ZERO_FREQUENCY_TOL) {
                Some((_, v)) => to_op(dims, &self.offsets, v),
                None => QOperator::zeros(dims),
            },
        }
    }

    fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.comps.iter().map(|(f, _)| *f)
    }

    /// Bound on the operator 2-norm uniform in t, from |base| + Σ|comp_k|.
    fn norm_bound(&self, n: usize) -> f64 {
        let mut mags = vec![vec![0.0f64; n]; self.offsets.len()];
        for (d, m) in mags.iter_mut().enumerate() {
            for (i, v) in m.iter_mut().enumerate() {
                *v = self.base[d][i].norm() + self.comps.iter().map(|(_, c)| c[d][i].norm()).sum::<f64>();
            }
        }
        dia_norm_bound(n, &self.offsets, &mags)
    }
}

/// sqrt(‖A‖₁‖A‖_∞) from entry magnitudes stored by diagonal.
fn dia_norm_bound(n: usize, offsets: &[isize], mags: &[Vec<f64>]) -> f64 {
    let mut row = vec![0.0f64; n];
    let mut col = vec![0.0f64; n];
    for (s, m) in offsets.iter().zip(mags) {
        for (i, &v) in m.iter().enumerate() {
            if v != 0.0 {
                row[i] += v;
                col[(i as isize + s) as usize] += v;
            }
        }
    }
    let r = row.iter().cloned().fold(0.0, f64::max);
    let c = col.iter().cloned().fold(0.0, f64::max);
    (r * c).sqrt()
}

/// `coef · e^{i freq t} · J ρ K†`
#[derive(Debug, Clone)]
struct Sandwich {
    coef: C64,
    freq: f64,
    left: Dia,
    right: Dia,
    right_conj: Vec<Split>,
}

/// Scratch buffers reused across applications.
#[derive(Debug, Default)]
pub struct Workspace {
    left_vals: Vec<Vec<C64>>,
    right_vals: Vec<Vec<C64>>,
    left_split: Vec<Split>,
    right_split: Vec<Split>,
    x: Vec<f64>,
    out: Vec<f64>,
}

/// Complex vector stored as separate real and imaginary parts.
#[derive(Debug, Clone, Default)]
struct Split {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Split {
    fn from(v: &[C64]) -> Self {
        let mut s = Split::default();
        s.assign(v);
        s
    }

    fn assign(&mut self, v: &[C64]) {
        self.re.clear();
        self.im.clear();
        self.re.extend(v.iter().map(|c| c.re));
        self.im.extend(v.iter().map(|c| c.im));
    }
}

/// Interleaved complex → split layout `[re..., im...]`.
pub fn to_split(x: &[C64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(x.iter().map(|c| c.re));
    out.extend(x.iter().map(|c| c.im));
}

/// Split layout `[re..., im...]` → interleaved complex.
pub fn from_split(x: &[f64], out: &mut [C64]) {
    let m = x.len() / 2;
    for (k, o) in out.iter_mut().enumerate().take(m) {
        *o = C64::new(x[k], x[m + k]);
    }
}

#[derive(Debug, Clone)]
pub struct Liouvillian {
    dims: Dims,
    left: PhasedDia,
    right: PhasedDia,
    sandwiches: Vec<Sandwich>,
    frame: Option<RotatingFrame>,
}

impl Liouvillian {
    /// General constructor from left, right and sandwich pieces, each tagged
    /// with an oscillation frequency (0 for static pieces). A sandwich
    /// `(c, ν, J, K)` contributes c e^{iνt} JρK†.
    pub fn from_parts(
        dims: Dims,
        left: Vec<(QOperator, f64)>,
        right: Vec<(QOperator, f64)>,
        sandwiches: Vec<(C64, f64, QOperator, QOperator)>,
    ) -> Result<Self> {
        let n = dims.size();
        let check = |op: &QOperator| {
            if op.dims() != dims {
                Err(Error::DimensionMismatch { expected: n, found: op.dim() })
            } else {
                Ok(())
            }
        };
        for (op, _) in left.iter().chain(&right) {
            check(op)?;
        }
        for (_, _, j, k) in &sandwiches {
            check(j)?;
            check(k)?;
        }
        let sandwiches = sandwiches
            .into_iter()
            .map(|(coef, freq, j, k)| {
                let right = Dia::from_op(&k);
                let right_conj = right.conj().iter().map(|v| Split::from(v)).collect();
                Sandwich { coef, freq, left: Dia::from_op(&j), right_conj, right }
            })
            .collect();
        Ok(Self { dims, left: PhasedDia::new(n, &left), right: PhasedDia::new(n, &right), sandwiches, frame: None })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Hilbert-space dimension D; vectors have length D².
    pub fn dim(&self) -> usize {
        self.dims.size()
    }

    /// No oscillating terms and no rotating frame.
    pub fn is_static(&self) -> bool {
        self.harmonic_frequencies().is_empty() && self.frame.is_none()
    }

    /// Interaction picture in which vectors handed to [`apply`](Self::apply)
    /// live; `None` means the states are stored as they are.
    pub fn frame(&self) -> Option<&RotatingFrame> {
        self.frame.as_ref()
    }

    /// Frequencies whose common period makes the dynamics periodic,
    /// including the rotation of the frame.
    pub fn period_frequencies(&self) -> Vec<f64> {
        let mut f: Vec<f64> = self.harmonic_frequencies().into_iter().map(f64::abs).collect();
        if let Some(fr) = &self.frame {
            f.push(fr.omega.abs());
        }
        f.sort_by(|a, b| a.partial_cmp(b).unwrap());
        f.dedup_by(|a, b| (*a - *b).abs() <= ZERO_FREQUENCY_TOL);
        f
    }

    /// Upper bound on the spectral radius of L(t), uniform in t.
    pub fn norm_bound(&self) -> f64 {
        let n = self.dim();
        let op_bound = |d: &Dia| {
            let mags: Vec<Vec<f64>> = d.diags.iter().map(|v| v.iter().map(|c| c.norm()).collect()).collect();
            dia_norm_bound(n, &d.offsets, &mags)
        };
        self.left.norm_bound(n)
            + self.right.norm_bound(n)
            + self.sandwiches.iter().map(|s| s.coef.norm() * op_bound(&s.left) * op_bound(&s.right)).sum::<f64>()
    }

    /// Distinct non-zero oscillation frequencies, ascending.
    pub fn harmonic_frequencies(&self) -> Vec<f64> {
        let mut f: Vec<f64> = self
            .left
            .frequencies()
            .chain(self.right.frequencies())
            .chain(self.sandwiches.iter().map(|s| s.freq).filter(|f| f.abs() > ZERO_FREQUENCY_TOL))
            .collect();
        f.sort_by(|a, b| a.partial_cmp(b).unwrap());
        f.dedup_by(|a, b| (*a - *b).abs() <= ZERO_FREQUENCY_TOL);
        f
    }

    /// `out = L(t) x` on interleaved complex storage.
    pub fn apply(&self, t: f64, x: &[C64], out: &mut [C64], ws: &mut Workspace) {
        let mut xs = std::mem::take(&mut ws.x);
        let mut os = std::mem::take(&mut ws.out);
        to_split(x, &mut xs);
        os.resize(xs.len(), 0.0);
        self.apply_split(t, &xs, &mut os, ws);
        from_split(&os, out);
        ws.x = xs;
        ws.out = os;
    }

    /// `out = L(t) x` with both vectors in split layout: the D² real parts
    /// followed by the D² imaginary parts of the row-major matrix.
    pub fn apply_split(&self, t: f64, x: &[f64], out: &mut [f64], ws: &mut Workspace) {
        let n = self.dim();
        let nn = n * n;
        assert_eq!(x.len(), 2 * nn);
        assert_eq!(out.len(), 2 * nn);
        self.left.values_at(t, &mut ws.left_vals);
        self.right.values_at(t, &mut ws.right_vals);
        ws.left_split.resize(ws.left_vals.len(), Split::default());
        for (sp, v) in ws.left_split.iter_mut().zip(&ws.left_vals) {
            sp.assign(v);
        }
        ws.right_split.resize(ws.right_vals.len(), Split::default());
        for (sp, v) in ws.right_split.iter_mut().zip(&ws.right_vals) {
            sp.assign(v);
        }
        let coefs: Vec<C64> = self
            .sandwiches
            .iter()
            .map(|s| if s.freq == 0.0 { s.coef } else { s.coef * C64::from_polar(1.0, s.freq * t) })
            .collect();
        let (xr, xi) = x.split_at(nn);
        let (or_all, oi_all) = out.split_at_mut(nn);
        let rows = |k: usize| (&xr[k * n..(k + 1) * n], &xi[k * n..(k + 1) * n]);
        for (i, (yr, yi)) in or_all.chunks_exact_mut(n).zip(oi_all.chunks_exact_mut(n)).enumerate() {
            yr.fill(0.0);
            yi.fill(0.0);
            for (s, d) in self.left.offsets.iter().zip(&ws.left_split) {
                let a = C64::new(d.re[i], d.im[i]);
                if a != ZERO {
                    let (sr, si) = rows((i as isize + s) as usize);
                    axpy(a, sr, si, yr, yi);
                }
            }
            let (rr, ri) = rows(i);
            for (&s, e) in self.right.offsets.iter().zip(&ws.right_split) {
                // (ρB)[i, k + s] += ρ[i, k] B[k, k + s]
                let (k0, k1) = valid_range(n, s);
                let (j0, j1) = ((k0 as isize + s) as usize, (k1 as isize + s) as usize);
                mul_acc(
                    ONE,
                    (&rr[k0..k1], &ri[k0..k1]),
                    (&e.re[k0..k1], &e.im[k0..k1]),
                    (&mut yr[j0..j1], &mut yi[j0..j1]),
                );
            }
            for (sw, &c) in self.sandwiches.iter().zip(&coefs) {
                for (p, u) in sw.left.offsets.iter().zip(&sw.left.diags) {
                    let cu = c * u[i];
                    if cu == ZERO {
                        continue;
                    }
                    let (sr, si) = rows((i as isize + p) as usize);
                    for (&q, w) in sw.right.offsets.iter().zip(&sw.right_conj) {
                        // (JρK†)[i, j] += J[i, i+p] ρ[i+p, j+q] conj(K[j, j+q])
                        let (j0, j1) = valid_range(n, q);
                        let (k0, k1) = ((j0 as isize + q) as usize, (j1 as isize + q) as usize);
                        mul_acc(
                            cu,
                            (&sr[k0..k1], &si[k0..k1]),
                            (&w.re[j0..j1], &w.im[j0..j1]),
                            (&mut yr[j0..j1], &mut yi[j0..j1]),
                        );
                    }
                }
            }
        }
    }

    pub fn apply_to_state(&self, t: f64, rho: &DensityMatrix) -> Result<Vec<C64>> {
        if rho.dims() != self.dims {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: rho.dim() });
        }
        let mut out = vec![ZERO; self.dim() * self.dim()];
        self.apply(t, rho.data(), &mut out, &mut Workspace::default());
        Ok(out)
    }

    /// Explicit D²×D² superoperator evaluated at time t.
    pub fn to_superop(&self, t: f64) -> QOperator {
        self.superop_from(&self.left.operator_at(self.dims, t), &self.right.operator_at(self.dims, t), |s| {
            s.coef * C64::from_polar(1.0, s.freq * t)
        })
    }

    /// Time-independent part of the superoperator.
    pub fn static_superop(&self) -> QOperator {
        self.superop_from(&self.left.component(self.dims, None), &self.right.component(self.dims, None), |s| {
            if s.freq.abs() <= ZERO_FREQUENCY_TOL {
                s.coef
            } else {
                ZERO
            }
        })
    }

    /// Superoperators S_k with L(t) = L_static + Σ_k S_k e^{iν_k t}.
    pub fn harmonic_superops(&self) -> Vec<(QOperator, f64)> {
        self.harmonic_frequencies()
            .into_iter()
            .map(|f| {
                let op = self.superop_from(
                    &self.left.component(self.dims, Some(f)),
                    &self.right.component(self.dims, Some(f)),
                    |s| if (s.freq - f).abs() <= ZERO_FREQUENCY_TOL { s.coef } else { ZERO },
                );
                (op, f)
            })
            .collect()
    }

    fn superop_from(&self, a: &QOperator, b: &QOperator, coef: impl Fn(&Sandwich) -> C64) -> QOperator {
        let n = self.dim();
        let mut t = Vec::new();
        for (i, k, v) in a.iter() {
            for j in 0..n {
                t.push((i * n + j, k * n + j, v));
            }
        }
        for (k, j, v) in b.iter() {
            for i in 0..n {
                t.push((i * n + j, i * n + k, v));
            }
        }
        for s in &self.sandwiches {
            let c = coef(s);
            if c == ZERO {
                continue;
            }
            let left = s.left.to_op(self.dims);
            let right = s.right.to_op(self.dims);
            for (i, p, lv) in left.iter() {
                for (j, q, rv) in right.iter() {
                    t.push((i * n + j, p * n + q, c * lv * rv.conj()));
                }
            }
        }
        QOperator::from_triplets(Dims::Single(n * n), t).expect("superoperator indices are in range")
    }
}

/// Lindblad generator −i[H(t), ρ] + Σ γ(JρJ† − ½{J†J, ρ}).
///
/// Each harmonic Hamiltonian term O e^{iνt} + h.c. produces a pair of
/// harmonic superoperators at ±ν. A rotating frame attached to the
/// Hamiltonian carries over to the generator.
pub fn assemble_liouvillian(h: &HamiltonianModel, channels: &[LindbladChannel]) -> Result<Liouvillian> {
    let dims = h.dims();
    let mut decay = QOperator::zeros(dims);
    for ch in channels {
        if ch.jump.dims() != dims {
            return Err(Error::DimensionMismatch { expected: dims.size(), found: ch.jump.dim() });
        }
        if !(ch.rate > 0.0) {
            return Err(crate::error::invalid("rate", format!("channel rate must be > 0, got {}", ch.rate)));
        }
        decay = &decay + &(&ch.jump.adjoint() * &ch.jump).scale(C64::from(0.5 * ch.rate));
    }
    let h0 = h.static_part();
    let mut left = vec![(&h0.scale(-I) - &decay, 0.0)];
    let mut right = vec![(&h0.scale(I) - &decay, 0.0)];
    for (op, freq) in h.harmonic_terms() {
        let adj = op.adjoint();
        left.push((op.scale(-I), *freq));
        left.push((adj.scale(-I), -*freq));
        right.push((op.scale(I), *freq));
        right.push((adj.scale(I), -*freq));
    }
    let sandwiches = channels.iter().map(|ch| (C64::from(ch.rate), 0.0, ch.jump.clone(), ch.jump.clone())).collect();
    let mut l = Liouvillian::from_parts(dims, left, right, sandwiches)?;
    l.frame = h.frame().cloned();
    Ok(l)
}

/// Indices k with both k and k + s inside [0, n).
#[inline]
fn valid_range(n: usize, s: isize) -> (usize, usize) {
    if s >= 0 {
        (0, n.saturating_sub(s as usize))
    } else {
        ((-s) as usize, n)
    }
}

#[inline]
fn axpy(a: C64, xr: &[f64], xi: &[f64], yr: &mut [f64], yi: &mut [f64]) {
    let n = yr.len();
    let (xr, xi, yi) = (&xr[..n], &xi[..n], &mut yi[..n]);
    for k in 0..n {
        yr[k] += a.re * xr[k] - a.im * xi[k];
        yi[k] += a.re * xi[k] + a.im * xr[k];
    }
}

/// y += a · x ⊙ w
#[inline]
fn mul_acc(a: C64, x: (&[f64], &[f64]), w: (&[f64], &[f64]), y: (&mut [f64], &mut [f64])) {
    let (yr, yi) = y;
    let n = yr.len();
    let (xr, xi, wr, wi, yi) = (&x.0[..n], &x.1[..n], &w.0[..n], &w.1[..n], &mut yi[..n]);
    if a == ONE {
        for k in 0..n {
            yr[k] += xr[k] * wr[k] - xi[k] * wi[k];
            yi[k] += xr[k] * wi[k] + xi[k] * wr[k];
        }
    } else {
        for k in 0..n {
            let pr = a.re * wr[k] - a.im * wi[k];
            let pi = a.re * wi[k] + a.im * wr[k];
            yr[k] += xr[k] * pr - xi[k] * pi;
            yi[k] += xr[k] * pi + xi[k] * pr;
        }
    }
}

/// Tr of a vectorized D×D matrix.
pub fn vec_trace(n: usize, x: &[C64]) -> C64 {
    (0..n).map(|i| x[i * n + i]).sum()
}
