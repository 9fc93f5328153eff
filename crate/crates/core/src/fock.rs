//! Truncated two-mode Fock space: sparse operators, density matrices and
//! the canonical states used throughout the crate.
//!
//! Joint-space indices follow the photon ⊗ phonon ordering, photon index
//! varying slowest: `idx = n_photon * n_b + n_phonon`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Absolute tolerance for "Hermitian" and "unit trace" checks.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Photon,
    Phonon,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Photon => "photon",
            Mode::Phonon => "phonon",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockCutoffs {
    pub n_a: usize,
    pub n_b: usize,
}

impl FockCutoffs {
    pub fn new(n_a: usize, n_b: usize) -> Result<Self> {
        if n_a < 2 || n_b < 2 {
            return Err(Error::InvalidCutoffs { n_a, n_b });
        }
        Ok(Self { n_a, n_b })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    /// Joint Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.n_a * self.n_b
    }

    pub fn of(&self, mode: Mode) -> usize {
        match mode {
            Mode::Photon => self.n_a,
            Mode::Phonon => self.n_b,
        }
    }

    #[inline]
    pub fn index(&self, n_photon: usize, n_phonon: usize) -> usize {
        n_photon * self.n_b + n_phonon
    }

    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.n_b, idx % self.n_b)
    }
}

/// Shape of the space an operator or state lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dims {
    Single(usize),
    Joint(FockCutoffs),
}

impl Dims {
    pub fn size(&self) -> usize {
        match self {
            Dims::Single(n) => *n,
            Dims::Joint(c) => c.dim(),
        }
    }

    pub fn cutoffs(&self) -> Option<FockCutoffs> {
        match self {
            Dims::Joint(c) => Some(*c),
            Dims::Single(_) => None,
        }
    }

    fn check_same(&self, other: &Dims) -> Result<()> {
        if self != other {
            return Err(Error::DimensionMismatch { expected: self.size(), found: other.size() });
        }
        Ok(())
    }
}

/// Sparse complex operator in compressed-row form.
///
/// Entries are kept sorted row-major with no stored zeros, so two operators
/// with the same matrix have identical storage.
#[derive(Debug, Clone, PartialEq)]
pub struct QOperator {
    dims: Dims,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl QOperator {
    pub fn from_triplets(dims: Dims, mut triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        let n = dims.size();
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= n || *c >= n) {
            return Err(Error::DimensionMismatch { expected: n, found: r.max(c) + 1 });
        }
        triplets.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != ZERO {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { dims, row_ptr, cols: keep_cols, vals: keep_vals })
    }

    pub fn zeros(dims: Dims) -> Self {
        Self { dims, row_ptr: vec![0; dims.size() + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn identity(dims: Dims) -> Self {
        Self::diagonal(dims, &vec![ONE; dims.size()])
    }

    pub fn diagonal(dims: Dims, diag: &[C64]) -> Self {
        assert_eq!(diag.len(), dims.size(), "diagonal length must match the dimension");
        let triplets = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(dims, triplets).expect("diagonal indices are in range")
    }

    /// Single-mode annihilation operator with `<n-1|a|n> = sqrt(n)`.
    pub fn annihilation(n: usize) -> Self {
        let triplets = (1..n).map(|k| (k - 1, k, C64::from((k as f64).sqrt()))).collect();
        Self::from_triplets(Dims::Single(n), triplets).expect("ladder indices are in range")
    }

    pub fn creation(n: usize) -> Self {
        Self::annihilation(n).adjoint()
    }

    pub fn number(n: usize) -> Self {
        let diag: Vec<C64> = (0..n).map(|k| C64::from(k as f64)).collect();
        Self::diagonal(Dims::Single(n), &diag)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.size()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[s..e], &self.vals[s..e])
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => ZERO,
        }
    }

    /// Row-major iteration over stored entries.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&c, &v)| (i, c, v))
        })
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        self.iter().collect()
    }

    pub fn adjoint(&self) -> Self {
        let t = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.dims, t).expect("transposed indices stay in range")
    }

    pub fn scale(&self, s: C64) -> Self {
        let t = self.iter().map(|(r, c, v)| (r, c, v * s)).collect();
        Self::from_triplets(self.dims, t).expect("same pattern")
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.dims.check_same(&other.dims)?;
        let mut t = self.triplets();
        t.extend(other.iter());
        Self::from_triplets(self.dims, t)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.dims.check_same(&other.dims)?;
        let n = self.dim();
        let mut acc = vec![ZERO; n];
        let mut touched = vec![false; n];
        let mut live: Vec<usize> = Vec::new();
        let mut triplets = Vec::new();
        for i in 0..n {
            let (ac, av) = self.row(i);
            for (&k, &a) in ac.iter().zip(av) {
                let (bc, bv) = other.row(k);
                for (&j, &b) in bc.iter().zip(bv) {
                    if !touched[j] {
                        touched[j] = true;
                        live.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            live.sort_unstable();
            for &j in &live {
                triplets.push((i, j, acc[j]));
                acc[j] = ZERO;
                touched[j] = false;
            }
            live.clear();
        }
        Self::from_triplets(self.dims, triplets)
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        Ok(&self.checked_mul(other)? - &other.checked_mul(self)?)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn to_dense(&self) -> Vec<C64> {
        let n = self.dim();
        let mut m = vec![ZERO; n * n];
        for (r, c, v) in self.iter() {
            m[r * n + c] = v;
        }
        m
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        let d = self.checked_add(&other.scale(-ONE))?;
        Ok(d.vals.iter().map(|v| v.norm()).fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()).map(|d| d <= tol).unwrap_or(false)
    }

    pub fn is_zero(&self) -> bool {
        self.vals.is_empty()
    }

    /// `y = self · x` for a state vector.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim());
        (0..self.dim())
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }
}

impl Add for &QOperator {
    type Output = QOperator;
    fn add(self, rhs: &QOperator) -> QOperator {
        self.checked_add(rhs).expect("operator dimensions must agree")
    }
}

impl Sub for &QOperator {
    type Output = QOperator;
    fn sub(self, rhs: &QOperator) -> QOperator {
        self.checked_add(&rhs.scale(-ONE)).expect("operator dimensions must agree")
    }
}

impl Mul for &QOperator {
    type Output = QOperator;
    fn mul(self, rhs: &QOperator) -> QOperator {
        self.checked_mul(rhs).expect("operator dimensions must agree")
    }
}

impl Mul<C64> for &QOperator {
    type Output = QOperator;
    fn mul(self, rhs: C64) -> QOperator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &QOperator {
    type Output = QOperator;
    fn mul(self, rhs: f64) -> QOperator {
        self.scale(C64::from(rhs))
    }
}

impl Neg for &QOperator {
    type Output = QOperator;
    fn neg(self) -> QOperator {
        self.scale(-ONE)
    }
}

/// Kronecker product of a photon-mode and a phonon-mode operator.
pub fn tensor(op_photon: &QOperator, op_phonon: &QOperator) -> Result<QOperator> {
    let (Dims::Single(n_a), Dims::Single(n_b)) = (op_photon.dims(), op_phonon.dims()) else {
        return Err(Error::InvalidModeTag);
    };
    let cutoffs = FockCutoffs::new(n_a, n_b)?;
    let mut t = Vec::with_capacity(op_photon.nnz() * op_phonon.nnz());
    for (r1, c1, v1) in op_photon.iter() {
        for (r2, c2, v2) in op_phonon.iter() {
            t.push((r1 * n_b + r2, c1 * n_b + c2, v1 * v2));
        }
    }
    QOperator::from_triplets(Dims::Joint(cutoffs), t)
}

/// Embed a single-mode operator into the joint space.
pub fn embed(op: &QOperator, mode: Mode, cutoffs: FockCutoffs) -> Result<QOperator> {
    let expected = cutoffs.of(mode);
    if op.dims() != Dims::Single(expected) {
        return Err(Error::DimensionMismatch { expected, found: op.dim() });
    }
    match mode {
        Mode::Photon => tensor(op, &QOperator::identity(Dims::Single(cutoffs.n_b))),
        Mode::Phonon => tensor(&QOperator::identity(Dims::Single(cutoffs.n_a)), op),
    }
}

/// Ladder and number operators of both modes on the joint space.
#[derive(Debug, Clone)]
pub struct ModeOperators {
    pub cutoffs: FockCutoffs,
    pub a: QOperator,
    pub a_dag: QOperator,
    pub b: QOperator,
    pub b_dag: QOperator,
    pub n_a: QOperator,
    pub n_b: QOperator,
}

impl ModeOperators {
    pub fn new(cutoffs: FockCutoffs) -> Self {
        let emb = |op: QOperator, mode| embed(&op, mode, cutoffs).expect("cutoffs match");
        let a = emb(QOperator::annihilation(cutoffs.n_a), Mode::Photon);
        let b = emb(QOperator::annihilation(cutoffs.n_b), Mode::Phonon);
        let n_a = emb(QOperator::number(cutoffs.n_a), Mode::Photon);
        let n_b = emb(QOperator::number(cutoffs.n_b), Mode::Phonon);
        Self { cutoffs, a_dag: a.adjoint(), b_dag: b.adjoint(), a, b, n_a, n_b }
    }

    pub fn lowering(&self, mode: Mode) -> &QOperator {
        match mode {
            Mode::Photon => &self.a,
            Mode::Phonon => &self.b,
        }
    }

    pub fn raising(&self, mode: Mode) -> &QOperator {
        match mode {
            Mode::Photon => &self.a_dag,
            Mode::Phonon => &self.b_dag,
        }
    }

    pub fn number(&self, mode: Mode) -> &QOperator {
        match mode {
            Mode::Photon => &self.n_a,
            Mode::Phonon => &self.n_b,
        }
    }
}

pub fn make_mode_operators(cutoffs: FockCutoffs) -> ModeOperators {
    ModeOperators::new(cutoffs)
}

/// Result of `Tr(op · rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectation {
    /// Purely real when the operator is Hermitian.
    pub value: C64,
    /// Imaginary part dropped for Hermitian operators.
    pub imag_residual: f64,
}

impl Expectation {
    pub fn re(&self) -> f64 {
        self.value.re
    }
}

/// Dense density matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Dims,
    data: Vec<C64>,
}

impl DensityMatrix {
    /// Validating constructor: the matrix must be Hermitian with unit trace.
    pub fn new(dims: Dims, data: Vec<C64>) -> Result<Self> {
        let n = dims.size();
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: data.len() });
        }
        let rho = Self { dims, data };
        let herm = rho.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(invalid("rho", format!("not Hermitian (max deviation {herm:.3e})")));
        }
        let tr = rho.trace();
        if (tr - ONE).norm() > HERMITIAN_TOL {
            return Err(invalid("rho", format!("trace {tr} differs from 1")));
        }
        Ok(rho)
    }

    /// Skip validation; used for intermediate states inside solvers.
    pub(crate) fn from_raw(dims: Dims, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), dims.size() * dims.size());
        Self { dims, data }
    }

    /// Symmetrize to the Hermitian part, renormalize the trace and wrap.
    pub fn from_matrix_normalized(dims: Dims, data: Vec<C64>) -> Result<Self> {
        let n = dims.size();
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: data.len() });
        }
        let mut rho = Self { dims, data };
        rho.enforce_physical();
        Ok(rho)
    }

    pub fn pure(dims: Dims, psi: &[C64]) -> Result<Self> {
        let n = dims.size();
        if psi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: psi.len() });
        }
        let norm2: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        if norm2 == 0.0 {
            return Err(invalid("psi", "zero vector"));
        }
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = psi[i] * psi[j].conj() / norm2;
            }
        }
        Ok(Self { dims, data })
    }

    pub fn fock(n: usize, cutoff: usize) -> Result<Self> {
        if n >= cutoff {
            return Err(invalid("n", format!("Fock level {n} outside cutoff {cutoff}")));
        }
        let mut psi = vec![ZERO; cutoff];
        psi[n] = ONE;
        Self::pure(Dims::Single(cutoff), &psi)
    }

    pub fn vacuum(dims: Dims) -> Self {
        let n = dims.size();
        let mut data = vec![ZERO; n * n];
        data[0] = ONE;
        Self { dims, data }
    }

    pub fn from_diagonal(dims: Dims, probs: &[f64]) -> Result<Self> {
        let n = dims.size();
        if probs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: probs.len() });
        }
        let total: f64 = probs.iter().sum();
        let mut data = vec![ZERO; n * n];
        for (i, p) in probs.iter().enumerate() {
            data[i * n + i] = C64::from(p / total);
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.size()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim() + j]
    }

    pub fn trace(&self) -> C64 {
        let n = self.dim();
        (0..n).map(|i| self.data[i * n + i]).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| self.data[i * n + i].re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        worst
    }

    /// Replace by the Hermitian part and rescale to unit trace.
    pub fn enforce_physical(&mut self) {
        let n = self.dim();
        hermitize_normalize(&mut self.data, n);
    }

    /// Smallest eigenvalue of the Hermitian part (dense eigensolve).
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.dim();
        let m = DMatrix::from_fn(n, n, |i, j| (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5);
        m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn expectation(&self, op: &QOperator) -> Result<Expectation> {
        self.dims.check_same(&op.dims())?;
        let n = self.dim();
        let mut value = ZERO;
        for (i, k, v) in op.iter() {
            value += v * self.data[k * n + i];
        }
        if op.is_hermitian(HERMITIAN_TOL) {
            Ok(Expectation { value: C64::from(value.re), imag_residual: value.im })
        } else {
            Ok(Expectation { value, imag_residual: 0.0 })
        }
    }

    /// Reduced state of `keep`; needs a joint-space state.
    pub fn partial_trace(&self, keep: Mode) -> Result<DensityMatrix> {
        let Dims::Joint(c) = self.dims else {
            return Err(Error::InvalidModeTag);
        };
        let n = self.dim();
        let m = c.of(keep);
        let mut out = vec![ZERO; m * m];
        match keep {
            Mode::Photon => {
                for i in 0..c.n_a {
                    for j in 0..c.n_a {
                        let mut s = ZERO;
                        for k in 0..c.n_b {
                            s += self.data[c.index(i, k) * n + c.index(j, k)];
                        }
                        out[i * m + j] = s;
                    }
                }
            }
            Mode::Phonon => {
                for i in 0..c.n_b {
                    for j in 0..c.n_b {
                        let mut s = ZERO;
                        for k in 0..c.n_a {
                            s += self.data[c.index(k, i) * n + c.index(k, j)];
                        }
                        out[i * m + j] = s;
                    }
                }
            }
        }
        Ok(DensityMatrix { dims: Dims::Single(m), data: out })
    }

    /// Photon-mode state ⊗ phonon-mode state.
    pub fn product(photon: &DensityMatrix, phonon: &DensityMatrix) -> Result<DensityMatrix> {
        let (Dims::Single(n_a), Dims::Single(n_b)) = (photon.dims, phonon.dims) else {
            return Err(Error::InvalidModeTag);
        };
        let c = FockCutoffs::new(n_a, n_b)?;
        let n = c.dim();
        let mut data = vec![ZERO; n * n];
        for i1 in 0..n_a {
            for j1 in 0..n_a {
                let pa = photon.data[i1 * n_a + j1];
                if pa == ZERO {
                    continue;
                }
                for i2 in 0..n_b {
                    for j2 in 0..n_b {
                        data[c.index(i1, i2) * n + c.index(j1, j2)] = pa * phonon.data[i2 * n_b + j2];
                    }
                }
            }
        }
        Ok(DensityMatrix { dims: Dims::Joint(c), data })
    }

    /// Marginal number distribution of one mode (diagonal of the reduced state).
    pub fn populations(&self, mode: Mode) -> Result<Vec<f64>> {
        let Dims::Joint(c) = self.dims else {
            return match self.dims {
                Dims::Single(_) => Ok(self.diagonal()),
                Dims::Joint(_) => unreachable!(),
            };
        };
        let diag = self.diagonal();
        let mut p = vec![0.0; c.of(mode)];
        for (idx, d) in diag.iter().enumerate() {
            let (ia, ib) = c.split(idx);
            match mode {
                Mode::Photon => p[ia] += d,
                Mode::Phonon => p[ib] += d,
            }
        }
        Ok(p)
    }

    /// Embed into larger cutoffs by zero padding.
    pub fn pad_to(&self, target: FockCutoffs) -> Result<DensityMatrix> {
        let Dims::Joint(c) = self.dims else {
            return Err(Error::InvalidModeTag);
        };
        if target.n_a < c.n_a || target.n_b < c.n_b {
            return Err(invalid("cutoffs", "padding target is smaller than the source"));
        }
        let n = c.dim();
        let m = target.dim();
        let mut data = vec![ZERO; m * m];
        for i in 0..n {
            let (ia, ib) = c.split(i);
            let ti = target.index(ia, ib);
            for j in 0..n {
                let (ja, jb) = c.split(j);
                data[ti * m + target.index(ja, jb)] = self.data[i * n + j];
            }
        }
        Ok(DensityMatrix { dims: Dims::Joint(target), data })
    }
}

pub(crate) fn hermitize_normalize(data: &mut [C64], n: usize) {
    for i in 0..n {
        data[i * n + i].im = 0.0;
        for j in (i + 1)..n {
            let h = (data[i * n + j] + data[j * n + i].conj()) * 0.5;
            data[i * n + j] = h;
            data[j * n + i] = h.conj();
        }
    }
    let tr: f64 = (0..n).map(|i| data[i * n + i].re).sum();
    if tr != 0.0 {
        let s = 1.0 / tr;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

pub fn expectation(op: &QOperator, rho: &DensityMatrix) -> Result<Expectation> {
    rho.expectation(op)
}

pub fn partial_trace(rho: &DensityMatrix, keep: Mode) -> Result<DensityMatrix> {
    rho.partial_trace(keep)
}

/// Bose–Einstein state with mean occupancy `n_mean`, renormalized on the
/// truncated space.
pub fn thermal_state(n_mean: f64, cutoff: usize) -> Result<DensityMatrix> {
    if !(n_mean >= 0.0) || !n_mean.is_finite() {
        return Err(invalid("n_mean", format!("must be finite and >= 0, got {n_mean}")));
    }
    if cutoff < 1 {
        return Err(invalid("cutoff", "must be positive"));
    }
    let ratio = n_mean / (1.0 + n_mean);
    let mut probs = Vec::with_capacity(cutoff);
    let mut p = 1.0 / (1.0 + n_mean);
    for _ in 0..cutoff {
        probs.push(p);
        p *= ratio;
    }
    DensityMatrix::from_diagonal(Dims::Single(cutoff), &probs)
}

/// Coherent state |α⟩⟨α|, renormalized after truncation.
pub fn coherent_state(alpha: C64, cutoff: usize) -> Result<DensityMatrix> {
    if cutoff < 1 {
        return Err(invalid("cutoff", "must be positive"));
    }
    if alpha.norm_sqr() > cutoff as f64 / 4.0 {
        warn!("coherent state |alpha|^2 = {:.3} is large for cutoff {cutoff}", alpha.norm_sqr());
    }
    let mut psi = Vec::with_capacity(cutoff);
    let mut c = C64::from((-alpha.norm_sqr() / 2.0).exp());
    for n in 0..cutoff {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        psi.push(c);
    }
    DensityMatrix::pure(Dims::Single(cutoff), &psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(n_a: usize, n_b: usize) -> FockCutoffs {
        FockCutoffs::new(n_a, n_b).unwrap()
    }

    #[test]
    fn cutoffs_reject_single_level() {
        assert!(matches!(FockCutoffs::new(1, 4), Err(Error::InvalidCutoffs { .. })));
        assert!(FockCutoffs::new(2, 2).is_ok());
    }

    #[test]
    fn ladder_matrix_element() {
        let a = QOperator::annihilation(3);
        assert_abs_diff_eq!(a.get(1, 2).re, 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(a.get(2, 1), ZERO);
    }

    #[test]
    fn number_operator_is_diagonal() {
        let n = &QOperator::creation(3) * &QOperator::annihilation(3);
        assert!(n.max_abs_diff(&QOperator::number(3)).unwrap() < 1e-14);
        for k in 0..3 {
            assert_abs_diff_eq!(n.get(k, k).re, k as f64, epsilon = 1e-14);
        }
    }

    #[test]
    fn truncated_commutator() {
        for n in [2, 5, 9] {
            let a = QOperator::annihilation(n);
            let comm = a.commutator(&a.adjoint()).unwrap();
            for k in 0..n - 1 {
                assert_abs_diff_eq!(comm.get(k, k).re, 1.0, epsilon = 1e-12);
            }
            assert_abs_diff_eq!(comm.get(n - 1, n - 1).re, -((n - 1) as f64), epsilon = 1e-12);
            assert_eq!(comm.nnz(), n);
        }
    }

    #[test]
    fn tensor_identities() {
        let id6 = tensor(&QOperator::identity(Dims::Single(2)), &QOperator::identity(Dims::Single(3))).unwrap();
        assert_eq!(id6, QOperator::identity(Dims::Joint(c(2, 3))));

        let a = QOperator::annihilation(2);
        let op = tensor(&a, &QOperator::identity(Dims::Single(2))).unwrap();
        let cut = c(2, 2);
        let mut psi = vec![ZERO; 4];
        psi[cut.index(1, 0)] = ONE;
        let out = op.apply(&psi);
        assert_abs_diff_eq!(out[cut.index(0, 0)].re, 1.0);
        assert_abs_diff_eq!(out.iter().map(|v| v.norm()).sum::<f64>(), 1.0);

        let da = QOperator::diagonal(Dims::Single(2), &[ZERO, ONE]);
        let db = QOperator::diagonal(Dims::Single(2), &[C64::from(2.0), C64::from(3.0)]);
        assert_abs_diff_eq!(tensor(&da, &db).unwrap().trace().re, 5.0);
    }

    #[test]
    fn tensor_rejects_joint_operands() {
        let joint = QOperator::identity(Dims::Joint(c(2, 2)));
        assert!(tensor(&joint, &QOperator::identity(Dims::Single(2))).is_err());
    }

    #[test]
    fn mode_operators_ordering() {
        let ops = make_mode_operators(c(3, 4));
        let cut = ops.cutoffs;
        // a acts on the slow index
        assert_abs_diff_eq!(ops.a.get(cut.index(0, 2), cut.index(1, 2)).re, 1.0);
        assert_abs_diff_eq!(ops.b.get(cut.index(2, 0), cut.index(2, 1)).re, 1.0);
        assert!(ops.n_a.is_hermitian(1e-14));
    }

    #[test]
    fn vacuum_and_identity_expectations() {
        let ops = make_mode_operators(c(4, 4));
        let vac = DensityMatrix::vacuum(Dims::Joint(ops.cutoffs));
        assert_eq!(vac.expectation(&ops.n_a).unwrap().re(), 0.0);
        let th = DensityMatrix::product(&thermal_state(0.3, 4).unwrap(), &thermal_state(1.2, 4).unwrap()).unwrap();
        let id = QOperator::identity(Dims::Joint(ops.cutoffs));
        assert_abs_diff_eq!(th.expectation(&id).unwrap().re(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn thermal_mean_matches_geometric_sum() {
        let n = QOperator::number(15);
        let rho = thermal_state(0.1, 15).unwrap();
        // truncated geometric series, independent of the constructor
        let q: f64 = 0.1 / 1.1;
        let z: f64 = (0..15).map(|k| q.powi(k)).sum();
        let mean: f64 = (0..15).map(|k| k as f64 * q.powi(k)).sum::<f64>() / z;
        assert_abs_diff_eq!(rho.expectation(&n).unwrap().re(), mean, epsilon = 1e-14);
        assert_abs_diff_eq!(mean, 0.1, epsilon = 1e-6);
        assert_abs_diff_eq!(rho.get(0, 0).re, 1.0 / 1.1, epsilon = 1e-14);
        assert_abs_diff_eq!(rho.get(1, 1).re, 0.1 / 1.21, epsilon = 1e-14);
    }

    #[test]
    fn thermal_rejects_negative_mean() {
        assert!(thermal_state(-0.1, 5).is_err());
        assert_eq!(thermal_state(0.0, 5).unwrap(), DensityMatrix::vacuum(Dims::Single(5)));
    }

    #[test]
    fn coherent_state_mean() {
        assert_eq!(coherent_state(ZERO, 6).unwrap().get(0, 0), ONE);
        let rho = coherent_state(ONE, 20).unwrap();
        assert_abs_diff_eq!(rho.expectation(&QOperator::number(20)).unwrap().re(), 1.0, epsilon = 1e-6);
        assert!(rho.hermiticity_error() < HERMITIAN_TOL);
        assert!((rho.trace() - ONE).norm() < HERMITIAN_TOL);
        assert!(rho.min_eigenvalue() > -1e-8);
    }

    #[test]
    fn partial_trace_of_products_and_correlated_states() {
        let ra = coherent_state(C64::new(0.3, -0.2), 3).unwrap();
        let rb = thermal_state(0.4, 4).unwrap();
        let joint = DensityMatrix::product(&ra, &rb).unwrap();
        let back = joint.partial_trace(Mode::Photon).unwrap();
        for (x, y) in back.data().iter().zip(ra.data()) {
            assert!((x - y).norm() < 1e-12);
        }
        let back_b = joint.partial_trace(Mode::Phonon).unwrap();
        for (x, y) in back_b.data().iter().zip(rb.data()) {
            assert!((x - y).norm() < 1e-12);
        }

        let cut = c(2, 2);
        let mut psi = vec![ZERO; 4];
        let mut data = vec![ZERO; 16];
        data[cut.index(0, 0) * 4 + cut.index(0, 0)] = C64::from(0.5);
        data[cut.index(1, 1) * 4 + cut.index(1, 1)] = C64::from(0.5);
        psi[0] = ONE;
        let mixed = DensityMatrix::new(Dims::Joint(cut), data).unwrap();
        let red = mixed.partial_trace(Mode::Photon).unwrap();
        assert_abs_diff_eq!(red.get(0, 0).re, 0.5);
        assert_abs_diff_eq!(red.get(1, 1).re, 0.5);
        assert_eq!(red.get(0, 1), ZERO);
        assert!(DensityMatrix::pure(Dims::Single(4), &psi).unwrap().partial_trace(Mode::Photon).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let bad = vec![ONE, ONE, ZERO, ZERO];
        assert!(DensityMatrix::new(Dims::Single(2), bad).is_err());
        let unnormalized = vec![C64::from(2.0), ZERO, ZERO, ZERO];
        assert!(DensityMatrix::new(Dims::Single(2), unnormalized.clone()).is_err());
        let fixed = DensityMatrix::from_matrix_normalized(Dims::Single(2), unnormalized).unwrap();
        assert_eq!(fixed.get(0, 0), ONE);
    }

    #[test]
    fn padding_preserves_entries() {
        let rho =
            DensityMatrix::product(&coherent_state(C64::new(0.5, 0.1), 3).unwrap(), &thermal_state(0.2, 3).unwrap())
                .unwrap();
        let big = rho.pad_to(c(5, 4)).unwrap();
        let ops = make_mode_operators(c(5, 4));
        let small_ops = make_mode_operators(c(3, 3));
        assert_abs_diff_eq!(
            big.expectation(&ops.n_a).unwrap().re(),
            rho.expectation(&small_ops.n_a).unwrap().re(),
            epsilon = 1e-14
        );
    }
}
