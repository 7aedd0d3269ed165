//! Small dense complex linear algebra for one- and two-qubit operators.
//!
//! Everything here works on dimensions 2 and 4 (the general [`CMat`] also
//! carries the rectangular and 3x3 blocks used inside the solvers). Basis
//! order for two qubits is `|00>, |01>, |10>, |11>`, second factor fastest.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Default tolerance for PSD and zero tests.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Entrywise tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

const JACOBI_THRESHOLD: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported dimension {0} (only 2 and 4 are supported)")]
    UnsupportedDimension(usize),
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("zero vector has no product decomposition")]
    ZeroVector,
    #[error("matrix is singular")]
    Singular,
}

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// A complex column vector (a ket).
#[derive(Clone, Debug, PartialEq)]
pub struct CVec(Vec<C64>);

impl CVec {
    pub fn new(entries: Vec<C64>) -> Self {
        CVec(entries)
    }

    pub fn from_real(entries: &[f64]) -> Self {
        CVec(entries.iter().map(|&x| cr(x)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        CVec(vec![C64::default(); dim])
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[index] = cr(1.0);
        v
    }

    pub fn ket0() -> Self {
        Self::from_real(&[1.0, 0.0])
    }

    pub fn ket1() -> Self {
        Self::from_real(&[0.0, 1.0])
    }

    pub fn ket_plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_real(&[h, h])
    }

    pub fn ket_minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_real(&[h, -h])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-12
    }

    pub fn normalized(&self) -> Result<Self, LinalgError> {
        let n = self.norm();
        if n == 0.0 {
            return Err(LinalgError::ZeroVector);
        }
        Ok(self.scale(cr(1.0 / n)))
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &CVec) -> C64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        CVec(self.0.iter().map(|z| z * factor).collect())
    }

    pub fn kron(&self, other: &CVec) -> CVec {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.0 {
            for b in &other.0 {
                out.push(a * b);
            }
        }
        CVec(out)
    }

    /// `|self><self|`.
    pub fn outer(&self) -> CMat {
        let n = self.dim();
        CMat::from_fn(n, n, |i, j| self.0[i] * self.0[j].conj())
    }

    /// Multiplies by a global phase so the first non-negligible entry is real and positive.
    pub fn with_canonical_phase(&self) -> Self {
        match self.0.iter().find(|z| z.norm() > 1e-12) {
            Some(z) => self.scale(z.conj() / z.norm()),
            None => self.clone(),
        }
    }

    /// Component orthogonal to a unit 2-dimensional vector, unit norm.
    pub fn orthogonal_qubit(&self) -> Self {
        debug_assert_eq!(self.dim(), 2);
        CVec(vec![-self.0[1].conj(), self.0[0].conj()])
    }
}

impl Index<usize> for CVec {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl Add for &CVec {
    type Output = CVec;
    fn add(self, rhs: &CVec) -> CVec {
        CVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &CVec {
    type Output = CVec;
    fn sub(self, rhs: &CVec) -> CVec {
        CVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

/// General dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![C64::default(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { cr(1.0) } else { C64::default() })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Self {
        let r = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == cols), "ragged rows");
        CMat {
            rows: r,
            cols,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[CVec]) -> Self {
        let rows = columns.first().map_or(0, CVec::dim);
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { cr(values[i]) } else { C64::default() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn column(&self, j: usize) -> CVec {
        CVec((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn adjoint(&self) -> CMat {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMat {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, factor: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> CMat {
        self.scale(cr(factor))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, v: &CVec) -> CVec {
        assert_eq!(self.cols, v.dim());
        CVec(
            (0..self.rows)
                .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
                .collect(),
        )
    }

    /// `A B A†`.
    pub fn sandwich(&self, inner: &CMat) -> CMat {
        &(self * inner) * &self.adjoint()
    }

    /// `Tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &CMat) -> C64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = C64::default();
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    pub fn kron(&self, other: &CMat) -> CMat {
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        CMat::from_fn(r, c, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }

    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> CMat {
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<CMat, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = CMat::identity(n);
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[(x, col)].norm().total_cmp(&a[(y, col)].norm()))
                .unwrap();
            if a[(pivot, col)].norm() <= 1e-13 * scale {
                return Err(LinalgError::Singular);
            }
            a.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            let p = a[(col, col)].inv();
            for j in 0..n {
                a[(col, j)] *= p;
                inv[(col, j)] *= p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[(i, col)];
                if f == C64::default() {
                    continue;
                }
                for j in 0..n {
                    let (aj, ij) = (a[(col, j)], inv[(col, j)]);
                    a[(i, j)] -= f * aj;
                    inv[(i, j)] -= f * ij;
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Lower-triangular Cholesky factor of a Hermitian matrix, `None` unless
    /// the matrix is positive definite.
    pub fn cholesky(&self) -> Option<CMat> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut l = CMat::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = cr(d);
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / d;
            }
        }
        Some(l)
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::default() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Display for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct EigDecomposition {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal, `vectors[k]` belongs to `values[k]`.
    pub vectors: Vec<CVec>,
}

impl EigDecomposition {
    pub fn reconstruct(&self) -> CMat {
        let n = self.values.len();
        let mut out = CMat::zeros(n, n);
        for (lambda, v) in self.values.iter().zip(&self.vectors) {
            out = &out + &v.outer().scale_real(*lambda);
        }
        out
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Rebuilds the matrix with each eigenvalue mapped through `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let mapped = EigDecomposition {
            values: self.values.iter().map(|&x| f(x)).collect(),
            vectors: self.vectors.clone(),
        };
        mapped.reconstruct()
    }
}

/// Cyclic complex Jacobi eigensolver for Hermitian matrices of any small size.
///
/// The input is trusted to be Hermitian; only its upper triangle and real
/// diagonal effectively matter after the first rotation.
pub(crate) fn jacobi_eig(m: &CMat) -> EigDecomposition {
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = CMat::identity(n);
    let scale = a.frobenius_norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    off += a[(p, q)].norm_sqr();
                }
            }
        }
        if off.sqrt() <= JACOBI_THRESHOLD * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                // phase that makes a_pq real
                let e = (apq / mag).conj();

                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * cs - akq * e * sn;
                    a[(k, q)] = akp * sn + akq * e * cs;
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * cs - vkq * e * sn;
                    v[(k, q)] = vkp * sn + vkq * e * cs;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = apk * cs - aqk * e.conj() * sn;
                    a[(q, k)] = apk * sn + aqk * e.conj() * cs;
                }
                a[(p, q)] = C64::default();
                a[(q, p)] = C64::default();
                a[(p, p)] = cr(a[(p, p)].re);
                a[(q, q)] = cr(a[(q, q)].re);
            }
        }
    }

    let mut pairs: Vec<(f64, CVec)> = (0..n)
        .map(|k| (a[(k, k)].re, v.column(k).with_canonical_phase()))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (values, vectors) = pairs.into_iter().unzip();
    EigDecomposition { values, vectors }
}

/// Hermitian operator on one qubit (dim 2) or two qubits (dim 4).
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOp(CMat);

impl HermitianOp {
    /// Accepts `m` if it is square of dimension 2 or 4 and Hermitian within
    /// [`HERMITIAN_TOL`]; the stored matrix is exactly Hermitian.
    pub fn new(m: CMat) -> Result<Self, LinalgError> {
        Self::with_tolerance(m, HERMITIAN_TOL)
    }

    pub fn with_tolerance(m: CMat, tol: f64) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::DimensionMismatch {
                expected: m.rows(),
                found: m.cols(),
            });
        }
        if m.rows() != 2 && m.rows() != 4 {
            return Err(LinalgError::UnsupportedDimension(m.rows()));
        }
        let deviation = m.hermitian_deviation();
        if deviation > tol {
            return Err(LinalgError::NotHermitian { deviation });
        }
        Ok(HermitianOp(m.hermitian_part()))
    }

    /// Hermitian part of `m`, without dimension or deviation checks.
    pub(crate) fn from_hermitian_part(m: &CMat) -> Self {
        HermitianOp(m.hermitian_part())
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianOp(CMat::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOp(CMat::identity(dim))
    }

    pub fn diag(values: &[f64]) -> Result<Self, LinalgError> {
        Self::new(CMat::diag(values))
    }

    /// `|v><v|`.
    pub fn projector(v: &CVec) -> Self {
        HermitianOp(v.outer())
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `Tr(self * other)`, real for Hermitian arguments.
    pub fn trace_product(&self, other: &HermitianOp) -> f64 {
        self.0.trace_product(&other.0).re
    }

    /// `<v|self|v>`.
    pub fn expectation(&self, v: &CVec) -> f64 {
        v.inner(&self.0.mul_vec(v)).re
    }

    pub fn scale(&self, factor: f64) -> Self {
        HermitianOp(self.0.scale_real(factor))
    }

    pub fn eig(&self) -> EigDecomposition {
        jacobi_eig(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig().min()
    }

    /// True iff the smallest eigenvalue is at least `-tol`.
    pub fn is_psd(&self, tol: f64) -> bool {
        psd_check(self, tol)
    }

    pub fn kron(&self, other: &HermitianOp) -> Result<HermitianOp, LinalgError> {
        kron(self, other)
    }

    pub fn partial_transpose(&self) -> Result<HermitianOp, LinalgError> {
        partial_transpose(self)
    }

    /// Entrywise distance `max |a_ij - b_ij|`.
    pub fn distance(&self, other: &HermitianOp) -> f64 {
        (&self.0 - &other.0).max_abs()
    }

    pub fn trace_norm(&self) -> f64 {
        self.eig().values.iter().map(|x| x.abs()).sum()
    }
}

impl Add for &HermitianOp {
    type Output = HermitianOp;
    fn add(self, rhs: &HermitianOp) -> HermitianOp {
        HermitianOp(&self.0 + &rhs.0)
    }
}

impl Sub for &HermitianOp {
    type Output = HermitianOp;
    fn sub(self, rhs: &HermitianOp) -> HermitianOp {
        HermitianOp(&self.0 - &rhs.0)
    }
}

/// Sum of operators of equal dimension.
pub fn sum_ops<'a>(dim: usize, ops: impl IntoIterator<Item = &'a HermitianOp>) -> HermitianOp {
    ops.into_iter()
        .fold(HermitianOp::zeros(dim), |acc, op| &acc + op)
}

/// Tensor product of two single-qubit operators.
pub fn kron(a: &HermitianOp, b: &HermitianOp) -> Result<HermitianOp, LinalgError> {
    for op in [a, b] {
        if op.dim() != 2 {
            return Err(LinalgError::DimensionMismatch {
                expected: 2,
                found: op.dim(),
            });
        }
    }
    Ok(HermitianOp(a.0.kron(&b.0)))
}

pub fn hermitian_eig(a: &HermitianOp) -> EigDecomposition {
    a.eig()
}

pub fn psd_check(a: &HermitianOp, tol: f64) -> bool {
    a.min_eigenvalue() >= -tol
}

/// Frobenius-nearest PSD operator (negative eigenvalues clipped to zero).
pub fn project_psd(a: &HermitianOp) -> HermitianOp {
    HermitianOp(project_psd_mat(&a.0))
}

pub(crate) fn project_psd_mat(m: &CMat) -> CMat {
    let eig = jacobi_eig(m);
    if eig.min() >= 0.0 {
        return m.hermitian_part();
    }
    eig.map(|x| x.max(0.0)).hermitian_part()
}

/// Transpose on the second tensor factor of a two-qubit operator.
pub fn partial_transpose(a: &HermitianOp) -> Result<HermitianOp, LinalgError> {
    if a.dim() != 4 {
        return Err(LinalgError::DimensionMismatch {
            expected: 4,
            found: a.dim(),
        });
    }
    let m = &a.0;
    let out = CMat::from_fn(4, 4, |i, j| {
        let (i1, i2) = (i / 2, i % 2);
        let (j1, j2) = (j / 2, j % 2);
        m[(2 * i1 + j2, 2 * j1 + i2)]
    });
    Ok(HermitianOp(out))
}

/// Splits a two-qubit vector as `a ⊗ b` when its Schmidt rank is one.
///
/// `a` is unit norm with canonical phase and `b` carries the norm. Returns
/// `None` when the second Schmidt coefficient exceeds `tol`.
pub fn schmidt_rank_one(v: &CVec, tol: f64) -> Result<Option<(CVec, CVec)>, LinalgError> {
    if v.dim() != 4 {
        return Err(LinalgError::DimensionMismatch {
            expected: 4,
            found: v.dim(),
        });
    }
    if v.norm() == 0.0 {
        return Err(LinalgError::ZeroVector);
    }
    let m = CMat::from_fn(2, 2, |i, j| v[2 * i + j]);
    // singular values from |det| and the Frobenius norm keep full precision
    // for the small one
    let fro2 = m.frobenius_norm().powi(2);
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm();
    let first = ((fro2 + (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt();
    let second = det / first;
    if second > tol {
        return Ok(None);
    }
    let eig = jacobi_eig(&(&m * &m.adjoint()));
    let a = eig.vectors[1].with_canonical_phase();
    // b_j = sum_i conj(a_i) m_ij
    let b = CVec::new(
        (0..2)
            .map(|j| (0..2).map(|i| a[i].conj() * m[(i, j)]).sum())
            .collect(),
    );
    let residual = (v - &a.kron(&b)).norm();
    if residual > tol {
        return Ok(None);
    }
    Ok(Some((a, b)))
}
