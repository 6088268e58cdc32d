//! Dense complex operator algebra for the qubit ⊗ resonator space.
//!
//! Basis ordering is fixed for the whole crate: the qubit index is major and
//! the Fock index minor, so `|q, n⟩` sits at row `q·(N+1) + n`. The qubit
//! basis is `(|0⟩, |1⟩)` with `|0⟩` the ground state and
//! `σ_z = |1⟩⟨1| − |0⟩⟨0|`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Which Hilbert space an operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Space {
    Qubit,
    /// Resonator truncated to Fock states `0..=N`.
    Resonator(usize),
    /// Qubit ⊗ resonator with Fock cutoff `N`; dimension `2(N+1)`.
    Joint(usize),
}

impl Space {
    pub fn dim(self) -> usize {
        match self {
            Space::Qubit => 2,
            Space::Resonator(n) => n + 1,
            Space::Joint(n) => 2 * (n + 1),
        }
    }
}

/// Dense complex matrix with an optional space tag.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
    space: Option<Space>,
}

/// `C = A·B` through the blocked complex GEMM kernel.
///
/// nalgebra's generic product is several times slower for complex entries.
pub(crate) fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut c = DMatrix::<C64>::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: Complex64 is repr(C) {re, im}, layout-identical to [f64; 2].
    // nalgebra storage is column-major and contiguous, so element (i, j)
    // lives at i + j·rows.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

/// `y = A·x`.
pub(crate) fn matvec(a: &DMatrix<C64>, x: &DVector<C64>) -> DVector<C64> {
    assert_eq!(a.ncols(), x.len(), "inner dimensions differ");
    let (m, k) = (a.nrows(), a.ncols());
    let mut y = DVector::<C64>::zeros(m);
    if m == 0 || k == 0 {
        return y;
    }
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            1,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            x.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            y.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    y
}

impl Operator {
    pub fn from_matrix(mat: DMatrix<C64>) -> Self {
        Operator { mat, space: None }
    }

    /// Build from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if rows * cols != entries.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Operator::from_matrix(DMatrix::from_row_slice(rows, cols, entries)))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Operator::from_matrix(DMatrix::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Operator::from_matrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(dim: usize) -> Self {
        Operator::from_matrix(DMatrix::identity(dim, dim))
    }

    /// Outer product `|ψ⟩⟨φ|`.
    pub fn outer(psi: &DVector<C64>, phi: &DVector<C64>) -> Self {
        Operator::from_matrix(psi * phi.adjoint())
    }

    /// Attach a space tag; the dimensions must agree with it.
    pub fn with_space(mut self, space: Space) -> Result<Self> {
        let d = space.dim();
        if self.mat.nrows() != d || self.mat.ncols() != d {
            return Err(Error::Dimension(format!(
                "{space:?} needs {d}x{d}, operator is {}x{}",
                self.mat.nrows(),
                self.mat.ncols()
            )));
        }
        self.space = Some(space);
        Ok(self)
    }

    pub fn space(&self) -> Option<Space> {
        self.space
    }

    pub fn rows(&self) -> usize {
        self.mat.nrows()
    }

    pub fn cols(&self) -> usize {
        self.mat.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.mat.nrows() == self.mat.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> Vec<C64> {
        self.mat.transpose().as_slice().to_vec()
    }

    pub fn dagger(&self) -> Self {
        Operator { mat: self.mat.adjoint(), space: self.space }
    }

    pub fn transpose(&self) -> Self {
        Operator { mat: self.mat.transpose(), space: self.space }
    }

    pub fn conj(&self) -> Self {
        Operator { mat: self.mat.map(|z| z.conj()), space: self.space }
    }

    pub fn scale(&self, s: C64) -> Self {
        Operator { mat: &self.mat * s, space: self.space }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.mat.diagonal().iter().sum()
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        &(self * other) - &(other * self)
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.mat.shape(), other.mat.shape(), "shape mismatch");
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |A − A†|` entrywise.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.mat.nrows();
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in 0..self.mat.ncols() {
                dev = dev.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        norm_one(&self.mat)
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn merged_space(&self, other: &Operator) -> Option<Space> {
        if self.space == other.space {
            self.space
        } else {
            None
        }
    }
}

fn norm_one(m: &DMatrix<C64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows() {
            let row: Vec<String> = (0..self.cols())
                .map(|j| {
                    let z = self.mat[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator { mat: matmul(&self.mat, &rhs.mat), space: self.merged_space(rhs) }
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator { mat: &self.mat + &rhs.mat, space: self.merged_space(rhs) }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator { mat: &self.mat - &rhs.mat, space: self.merged_space(rhs) }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { mat: -&self.mat, space: self.space }
    }
}

/// Single-qubit Pauli and ladder operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            "+" | "plus" => Ok(Axis::Plus),
            "-" | "−" | "minus" => Ok(Axis::Minus),
            other => Err(Error::UnknownAxis(other.to_string())),
        }
    }
}

/// Pauli operator in the `(|0⟩, |1⟩)` basis.
///
/// `σ_+ = |1⟩⟨0|`, `σ_− = |0⟩⟨1|`, `σ_x = σ_+ + σ_−`, `σ_y = −i(σ_+ − σ_−)`,
/// `σ_z = |1⟩⟨1| − |0⟩⟨0|`.
pub fn pauli(axis: Axis) -> Operator {
    let (a, b, c, d) = match axis {
        Axis::X => (ZERO, ONE, ONE, ZERO),
        Axis::Y => (ZERO, I, -I, ZERO),
        Axis::Z => (-ONE, ZERO, ZERO, ONE),
        Axis::Plus => (ZERO, ZERO, ONE, ZERO),
        Axis::Minus => (ZERO, ONE, ZERO, ZERO),
    };
    Operator { mat: DMatrix::from_row_slice(2, 2, &[a, b, c, d]), space: Some(Space::Qubit) }
}

/// Truncated resonator annihilation operator on Fock states `0..=N`.
pub fn annihilation(cutoff: usize) -> Result<Operator> {
    if cutoff == 0 {
        return Err(Error::InvalidArgument("Fock cutoff must be at least 1".into()));
    }
    let d = cutoff + 1;
    let mut mat = DMatrix::zeros(d, d);
    for n in 1..d {
        mat[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(Operator { mat, space: Some(Space::Resonator(cutoff)) })
}

/// Tensor product `A ⊗ B` with `A` the major (qubit) factor.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let mat = a.mat.kronecker(&b.mat);
    let space = match (a.space, b.space) {
        (Some(Space::Qubit), Some(Space::Resonator(n))) => Some(Space::Joint(n)),
        _ => None,
    };
    Operator { mat, space }
}

/// Lift a qubit operator to the joint space.
pub fn lift_qubit(op: &Operator, cutoff: usize) -> Operator {
    let mut out = kron(op, &Operator::identity(cutoff + 1));
    out.space = Some(Space::Joint(cutoff));
    out
}

/// Lift a resonator operator to the joint space.
pub fn lift_resonator(op: &Operator) -> Result<Operator> {
    let cutoff = match op.space {
        Some(Space::Resonator(n)) => n,
        _ => {
            if op.rows() < 2 || !op.is_square() {
                return Err(Error::Dimension("resonator operator must be square".into()));
            }
            op.rows() - 1
        }
    };
    let mut out = kron(&Operator::identity(2), op);
    out.space = Some(Space::Joint(cutoff));
    Ok(out)
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
// Backward-error bounds for the [m/m] approximants in double precision.
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with diagonal Padé approximants.
pub fn expm(m: &Operator) -> Result<Operator> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    Ok(Operator { mat: expm_matrix(&m.mat), space: m.space })
}

pub(crate) fn expm_matrix(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let norm = norm_one(a);
    let ident = DMatrix::<C64>::identity(n, n);
    if !norm.is_finite() {
        return DMatrix::from_element(n, n, C64::new(f64::NAN, f64::NAN));
    }
    for &(order, theta) in THETA.iter() {
        if norm <= theta {
            let coeffs: &[f64] = match order {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            return pade_low(a, coeffs, &ident);
        }
    }
    let s = ((norm / THETA13).log2().ceil()).max(0.0) as i32;
    let scaled = a * C64::new(2f64.powi(-s), 0.0);
    let mut x = pade13(&scaled, &ident);
    for _ in 0..s {
        x = matmul(&x, &x);
    }
    x
}

fn combine(terms: &[(f64, &DMatrix<C64>)], n: usize) -> DMatrix<C64> {
    let mut out = DMatrix::<C64>::zeros(n, n);
    for &(c, m) in terms {
        out.zip_apply(m, |o, v| *o += v * c);
    }
    out
}

fn pade_solve(u: DMatrix<C64>, v: DMatrix<C64>) -> DMatrix<C64> {
    let p = &v + &u;
    let q = &v - &u;
    let lu = q.lu();
    lu.solve(&p).unwrap_or_else(|| {
        let n = p.nrows();
        DMatrix::from_element(n, n, C64::new(f64::NAN, f64::NAN))
    })
}

fn pade_low(a: &DMatrix<C64>, b: &[f64], ident: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let a2 = matmul(a, a);
    // Even powers A^0, A^2, A^4, ...
    let mut powers = vec![ident.clone(), a2.clone()];
    while 2 * powers.len() < b.len() {
        let next = matmul(powers.last().unwrap(), &a2);
        powers.push(next);
    }
    let mut u_inner = DMatrix::<C64>::zeros(n, n);
    let mut v = DMatrix::<C64>::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        if 2 * k + 1 < b.len() {
            u_inner.zip_apply(p, |o, x| *o += x * b[2 * k + 1]);
        }
        if 2 * k < b.len() {
            v.zip_apply(p, |o, x| *o += x * b[2 * k]);
        }
    }
    let u = matmul(a, &u_inner);
    pade_solve(u, v)
}

fn pade13(a: &DMatrix<C64>, ident: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let b = &PADE13;
    let a2 = matmul(a, a);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a4, &a2);
    let u_hi = combine(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n);
    let u_lo = combine(&[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], ident)], n);
    let u = matmul(a, &(matmul(&a6, &u_hi) + u_lo));
    let v_hi = combine(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n);
    let v_lo = combine(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], ident)], n);
    let v = matmul(&a6, &v_hi) + v_lo;
    pade_solve(u, v)
}

/// Trace out the resonator from an operator tagged `Joint(N)`.
pub fn partial_trace_resonator_op(op: &Operator) -> Result<Operator> {
    let cutoff = match op.space {
        Some(Space::Joint(n)) => n,
        _ => return Err(Error::NotJoint),
    };
    let d = cutoff + 1;
    let mut out = DMatrix::<C64>::zeros(2, 2);
    for q in 0..2 {
        for p in 0..2 {
            out[(q, p)] = (0..d).map(|n| op.mat[(q * d + n, p * d + n)]).sum();
        }
    }
    Ok(Operator { mat: out, space: Some(Space::Qubit) })
}

/// Reduced qubit state `tr_c ρ`.
pub fn partial_trace_resonator(rho: &DensityMatrix) -> Result<DensityMatrix> {
    partial_trace_resonator_op(rho.op()).map(DensityMatrix::from_trusted)
}

/// `tr(ρ O)`.
pub fn expect(rho: &DensityMatrix, obs: &Operator) -> Result<C64> {
    expect_op(rho.op(), obs)
}

pub(crate) fn expect_op(rho: &Operator, obs: &Operator) -> Result<C64> {
    if rho.rows() != obs.cols() || rho.cols() != obs.rows() {
        return Err(Error::Dimension(format!(
            "state is {}x{}, observable is {}x{}",
            rho.rows(),
            rho.cols(),
            obs.rows(),
            obs.cols()
        )));
    }
    let mut acc = ZERO;
    for i in 0..rho.rows() {
        for j in 0..rho.cols() {
            acc += rho.mat[(i, j)] * obs.mat[(j, i)];
        }
    }
    Ok(acc)
}

/// Validation thresholds for [`DensityMatrix`].
pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-9;
pub const MIN_EIGENVALUE_TOL: f64 = -1e-8;

/// Deviation metrics of a candidate density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hygiene {
    pub trace_deviation: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

/// A validated density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    /// Validate Hermiticity, unit trace and positivity.
    pub fn new(op: Operator) -> Result<Self> {
        if !op.is_square() {
            return Err(Error::NotSquare { rows: op.rows(), cols: op.cols() });
        }
        let h = hygiene(&op);
        if h.hermiticity > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {:e})", h.hermiticity)));
        }
        if h.trace_deviation > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace off by {:e}", h.trace_deviation)));
        }
        if h.min_eigenvalue < MIN_EIGENVALUE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {:e}", h.min_eigenvalue)));
        }
        Ok(DensityMatrix { op })
    }

    /// Wrap without validation; callers track hygiene themselves.
    pub(crate) fn from_trusted(op: Operator) -> Self {
        DensityMatrix { op }
    }

    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let psi = psi / C64::new(norm, 0.0);
        DensityMatrix::new(Operator::outer(&psi, &psi))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix { op: Operator::identity(dim).scale_re(1.0 / dim as f64) }
    }

    /// `ρ_q ⊗ |0⟩⟨0|` on the joint space.
    pub fn with_vacuum(qubit: &DensityMatrix, cutoff: usize) -> Result<Self> {
        if qubit.dim() != 2 {
            return Err(Error::Dimension("qubit state must be 2x2".into()));
        }
        let mut vac = DMatrix::<C64>::zeros(cutoff + 1, cutoff + 1);
        vac[(0, 0)] = ONE;
        let mut op = kron(&qubit.op, &Operator::from_matrix(vac));
        op.space = Some(Space::Joint(cutoff));
        Ok(DensityMatrix { op })
    }

    pub fn tagged(mut self, space: Space) -> Result<Self> {
        self.op = self.op.with_space(space)?;
        Ok(self)
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn into_op(self) -> Operator {
        self.op
    }

    pub fn dim(&self) -> usize {
        self.op.rows()
    }

    pub fn space(&self) -> Option<Space> {
        self.op.space
    }

    pub fn hygiene(&self) -> Hygiene {
        hygiene(&self.op)
    }

    /// Population `⟨ψ|ρ|ψ⟩` for a normalised ket.
    pub fn population(&self, psi: &DVector<C64>) -> f64 {
        let v = matvec(&self.op.mat, psi);
        psi.dotc(&v).re
    }
}

pub(crate) fn hygiene(op: &Operator) -> Hygiene {
    Hygiene {
        trace_deviation: (op.trace() - ONE).norm(),
        hermiticity: op.hermiticity_deviation(),
        min_eigenvalue: min_eigenvalue(op),
    }
}

/// Smallest eigenvalue of the Hermitian part of a square operator.
pub fn min_eigenvalue(op: &Operator) -> f64 {
    let herm = (&op.mat + op.mat.adjoint()) * C64::new(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand::rngs::StdRng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_op(rng: &mut StdRng, n: usize, scale: f64) -> Operator {
        Operator::from_matrix(DMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0) * scale, rng.gen_range(-1.0..1.0) * scale)
        }))
    }

    fn random_density(rng: &mut StdRng, n: usize) -> Operator {
        let a = random_op(rng, n, 1.0);
        let p = &a * &a.dagger();
        let tr = p.trace();
        p.scale(ONE / tr)
    }

    #[test]
    fn sigma_z_ordering() {
        let z = pauli(Axis::Z);
        assert_eq!(z.get(0, 0), c(-1.0, 0.0));
        assert_eq!(z.get(1, 1), c(1.0, 0.0));
        assert_eq!(z.get(0, 1), ZERO);
    }

    #[test]
    fn sigma_x_is_involution() {
        let x = pauli(Axis::X);
        assert_eq!(&x * &x, Operator::identity(2).with_space(Space::Qubit).unwrap());
    }

    #[test]
    fn ladder_composition_projects_on_excited() {
        let p = &pauli(Axis::Plus) * &pauli(Axis::Minus);
        let expected = Operator::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(p.max_abs_diff(&expected), 0.0);
        let minus = pauli(Axis::Minus);
        // σ_−|1⟩ = |0⟩
        assert_eq!(minus.get(0, 1), ONE);
    }

    #[test]
    fn pauli_algebra_is_consistent() {
        let (x, y, z) = (pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z));
        // [σ_x, σ_y] = 2iσ_z
        let comm = x.commutator(&y);
        assert!(comm.max_abs_diff(&z.scale(c(0.0, 2.0))) < 1e-15);
        let xy = &pauli(Axis::Plus) + &pauli(Axis::Minus);
        assert_eq!(xy.max_abs_diff(&x), 0.0);
        let yy = (&pauli(Axis::Plus) - &pauli(Axis::Minus)).scale(-I);
        assert_eq!(yy.max_abs_diff(&y), 0.0);
    }

    #[test]
    fn unknown_axis_rejected() {
        assert!(matches!("w".parse::<Axis>(), Err(Error::UnknownAxis(_))));
        assert_eq!("minus".parse::<Axis>().unwrap(), Axis::Minus);
    }

    #[test]
    fn annihilation_small_cases() {
        let a = annihilation(1).unwrap();
        assert_eq!(a.max_abs_diff(&Operator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]])), 0.0);
        let a3 = annihilation(3).unwrap();
        let n = &a3.dagger() * &a3;
        for k in 0..4 {
            assert!((n.get(k, k) - c(k as f64, 0.0)).norm() < 1e-15);
        }
        assert!(matches!(annihilation(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn truncated_commutator_exact_up_to_32() {
        for cutoff in 1..=32 {
            let a = annihilation(cutoff).unwrap();
            let comm = a.commutator(&a.dagger());
            for i in 0..=cutoff {
                for j in 0..=cutoff {
                    let expected = if i != j {
                        0.0
                    } else if i == cutoff {
                        -(cutoff as f64)
                    } else {
                        1.0
                    };
                    assert!(
                        (comm.get(i, j) - c(expected, 0.0)).norm() < 1e-12,
                        "N={cutoff} ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn kron_cases() {
        let i6 = kron(&Operator::identity(2), &Operator::identity(3));
        assert_eq!(i6.max_abs_diff(&Operator::identity(6)), 0.0);
        let zi = kron(&pauli(Axis::Z), &Operator::identity(2));
        assert_eq!(zi.get(0, 0), c(-1.0, 0.0));
        let big = kron(&pauli(Axis::X), &annihilation(3).unwrap());
        assert_eq!((big.rows(), big.cols()), (8, 8));
        assert_eq!(big.space(), Some(Space::Joint(3)));
    }

    #[test]
    fn kron_mixed_product() {
        let mut rng = StdRng::seed_from_u64(3);
        let (a, c_) = (random_op(&mut rng, 2, 1.0), random_op(&mut rng, 2, 1.0));
        let (b, d) = (random_op(&mut rng, 3, 1.0), random_op(&mut rng, 3, 1.0));
        let lhs = &kron(&a, &b) * &kron(&c_, &d);
        let rhs = kron(&(&a * &c_), &(&b * &d));
        assert!(lhs.max_abs_diff(&rhs) < 1e-13);
    }

    #[test]
    fn expm_basic() {
        let z = Operator::zeros(4, 4);
        assert!(expm(&z).unwrap().max_abs_diff(&Operator::identity(4)) < 1e-15);
        let arg = pauli(Axis::X).scale(c(0.0, std::f64::consts::FRAC_PI_2));
        let e = expm(&arg).unwrap();
        assert!(e.max_abs_diff(&pauli(Axis::X).scale(I)) < 1e-14);
        assert!(matches!(expm(&Operator::zeros(2, 3)), Err(Error::NotSquare { .. })));
    }

    fn taylor(m: &Operator, terms: usize) -> Operator {
        let n = m.rows();
        let mut sum = Operator::identity(n);
        let mut term = Operator::identity(n);
        for k in 1..terms {
            term = (&term * m).scale_re(1.0 / k as f64);
            sum = &sum + &term;
        }
        sum
    }

    #[test]
    fn expm_matches_taylor_series() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let mut m = random_op(&mut rng, 6, 1.0);
            let norm = m.norm_one();
            m = m.scale_re(0.95 / norm);
            let dev = expm(&m).unwrap().max_abs_diff(&taylor(&m, 40));
            assert!(dev < 1e-10, "deviation {dev}");
        }
    }

    #[test]
    fn expm_inverse_pair() {
        let mut rng = StdRng::seed_from_u64(5);
        for scale in [0.01, 0.3, 1.0, 4.0, 10.0] {
            let mut m = random_op(&mut rng, 8, 1.0);
            m = m.scale_re(scale / m.norm_one());
            let prod = &expm(&m).unwrap() * &expm(&(-&m)).unwrap();
            assert!(prod.max_abs_diff(&Operator::identity(8)) < 1e-10, "scale {scale}");
        }
    }

    #[test]
    fn expm_commuting_sum() {
        // exp(diag) is exact; exercises the scaling branch.
        let d = Operator::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![
            c(-30.0, 2.0),
            c(0.5, -7.0),
            c(12.0, 40.0),
        ])));
        let e = expm(&d).unwrap();
        for k in 0..3 {
            let exact = d.get(k, k).exp();
            assert!(((e.get(k, k) - exact) / exact).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_cases() {
        let cutoff = 3;
        let rho_q = DensityMatrix::new(Operator::from_matrix(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.7, 0.0), c(0.1, -0.2), c(0.1, 0.2), c(0.3, 0.0)],
        )))
        .unwrap();
        let joint = DensityMatrix::with_vacuum(&rho_q, cutoff).unwrap();
        let red = partial_trace_resonator(&joint).unwrap();
        assert!(red.op().max_abs_diff(rho_q.op()) < 1e-15);

        let d = cutoff + 1;
        let mut psi = DVector::<C64>::zeros(2 * d);
        psi[0] = c(1.0, 0.0);
        psi[d + 1] = c(1.0, 0.0);
        let bell = DensityMatrix::pure(&psi).unwrap().tagged(Space::Joint(cutoff)).unwrap();
        let red = partial_trace_resonator(&bell).unwrap();
        assert!(red.op().max_abs_diff(&Operator::identity(2).scale_re(0.5)) < 1e-15);

        let bare = DensityMatrix::maximally_mixed(4);
        assert!(matches!(partial_trace_resonator(&bare), Err(Error::NotJoint)));
    }

    #[test]
    fn partial_trace_random_states() {
        let mut rng = StdRng::seed_from_u64(17);
        for cutoff in [1, 4, 7] {
            let rho = random_density(&mut rng, 2 * (cutoff + 1)).with_space(Space::Joint(cutoff)).unwrap();
            let rho = DensityMatrix::new(rho).unwrap();
            let red = partial_trace_resonator(&rho).unwrap();
            assert!((red.op().trace() - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_is_linear() {
        let mut rng = StdRng::seed_from_u64(23);
        let cutoff = 2;
        let a = random_op(&mut rng, 6, 1.0).with_space(Space::Joint(cutoff)).unwrap();
        let b = random_op(&mut rng, 6, 1.0).with_space(Space::Joint(cutoff)).unwrap();
        let s = c(0.3, -1.1);
        let lhs = partial_trace_resonator_op(&(&a + &b.scale(s))).unwrap();
        let rhs = &partial_trace_resonator_op(&a).unwrap() + &partial_trace_resonator_op(&b).unwrap().scale(s);
        assert!(lhs.max_abs_diff(&rhs) < 1e-14);
        assert!((partial_trace_resonator_op(&a).unwrap().trace() - a.trace()).norm() < 1e-14);
    }

    #[test]
    fn expectation_values() {
        let excited = DensityMatrix::pure(&DVector::from_vec(vec![ZERO, ONE])).unwrap();
        assert!((expect(&excited, &pauli(Axis::Z)).unwrap() - ONE).norm() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(2);
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            assert!(expect(&mixed, &pauli(axis)).unwrap().norm() < 1e-15);
        }
        assert!(matches!(expect(&mixed, &Operator::identity(3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn thermal_photon_number() {
        // Geometric populations p_n ∝ (n̄/(1+n̄))^n, truncated and renormalised.
        let (nbar, cutoff) = (0.5f64, 10usize);
        let ratio = nbar / (1.0 + nbar);
        let weights: Vec<f64> = (0..=cutoff).map(|n| ratio.powi(n as i32)).collect();
        let z: f64 = weights.iter().sum();
        let rho = Operator::from_matrix(DMatrix::from_diagonal(&DVector::from_iterator(
            cutoff + 1,
            weights.iter().map(|w| c(w / z, 0.0)),
        )));
        let rho = DensityMatrix::new(rho).unwrap();
        let a = annihilation(cutoff).unwrap();
        let n = expect(&rho, &(&a.dagger() * &a)).unwrap();
        assert!((n.re - 0.5).abs() < 1e-3);
        assert!(n.im.abs() < 1e-10);
    }

    #[test]
    fn density_validation() {
        let bad_trace = Operator::identity(2);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let non_herm = Operator::from_matrix(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)],
        ));
        assert!(DensityMatrix::new(non_herm).is_err());
        let negative = Operator::from_real_rows(&[&[1.2, 0.0], &[0.0, -0.2]]);
        assert!(DensityMatrix::new(negative).is_err());
    }

    #[test]
    fn matmul_agrees_with_nalgebra() {
        let mut rng = StdRng::seed_from_u64(29);
        let a = random_op(&mut rng, 7, 1.0);
        let b = Operator::from_matrix(DMatrix::from_fn(7, 3, |_, _| c(rng.gen(), rng.gen())));
        let fast = matmul(a.matrix(), b.matrix());
        let slow = a.matrix() * b.matrix();
        assert!((fast - slow).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-13);
    }
}
