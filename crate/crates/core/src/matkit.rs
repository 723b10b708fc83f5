//! Dense real linear algebra for the small matrices used throughout the crate.
//!
//! [`RealMatrix`] is a row-major owned matrix with checked constructors.
//! Arithmetic operators on references panic on shape mismatch; the public
//! solver functions validate shapes and report [`MatError`] instead.
//! Eigenvalue queries are delegated to `nalgebra`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Below this norm, relative tolerances switch to [`ABS_TOL_FLOOR`].
pub const TINY_NORM: f64 = 1e-300;
pub const ABS_TOL_FLOOR: f64 = 1e-12;

/// Reciprocal condition threshold for the full-row-rank pseudo-inverse.
pub const RANK_RCOND: f64 = 1e-12;

/// Relative symmetry tolerance for [`SpdMatrix`].
pub const SYMMETRY_TOL: f64 = 1e-10;

const LYAPUNOV_STEP_TOL: f64 = 1e-14;
const LYAPUNOV_MAX_DOUBLINGS: usize = 96;
const STABILITY_MARGIN: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("entry count {got} does not match {rows}x{cols}")]
    BadShape {
        rows: usize,
        cols: usize,
        got: usize,
    },
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("spectral radius {0} is not below one")]
    UnstableMatrix(f64),
    #[error("iteration did not converge after {0} steps")]
    NonConvergence(usize),
    #[error("matrix is rank deficient (reciprocal condition {0:e})")]
    RankDeficient(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is singular")]
    Singular,
}

pub type Result<T> = std::result::Result<T, MatError>;

/// Returns true when `err` is within `rel` of `scale`, falling back to an
/// absolute floor for vanishing scales.
pub fn within_tol(err: f64, scale: f64, rel: f64) -> bool {
    if scale < TINY_NORM {
        err <= ABS_TOL_FLOOR
    } else {
        err <= rel * scale
    }
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for RealMatrix {
    type Error = MatError;
    fn try_from(raw: RawMatrix) -> Result<Self> {
        RealMatrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl From<RealMatrix> for RawMatrix {
    fn from(m: RealMatrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl RealMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(MatError::BadShape {
                rows,
                cols,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(MatError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(MatError::DimensionMismatch("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Column vector from a slice.
    pub fn column_vector(v: &[f64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let rows = columns.first().map(|c| c.as_ref().len()).unwrap_or(0);
        if columns.iter().any(|c| c.as_ref().len() != rows) {
            return Err(MatError::DimensionMismatch("ragged columns".into()));
        }
        let ncols = columns.len();
        let mut data = vec![0.0; rows * ncols];
        for (j, c) in columns.iter().enumerate() {
            for (i, v) in c.as_ref().iter().enumerate() {
                data[i * ncols + j] = *v;
            }
        }
        Self::new(rows, ncols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// (M + Mᵀ)/2 for square matrices.
    pub fn symmetrized(&self) -> Self {
        let t = self.transpose();
        (self + &t).scale(0.5)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "shape mismatch in mul_vec");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Copies `block` into `self` with its top-left corner at (r0, c0).
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &RealMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn check_same_shape(&self, other: &Self) {
        assert_eq!(
            self.shape(),
            other.shape(),
            "shape mismatch: {:?} vs {:?}",
            self.shape(),
            other.shape()
        );
    }
}

impl fmt::Debug for RealMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RealMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &RealMatrix {
    type Output = RealMatrix;
    fn add(self, rhs: &RealMatrix) -> RealMatrix {
        self.check_same_shape(rhs);
        RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &RealMatrix {
    type Output = RealMatrix;
    fn sub(self, rhs: &RealMatrix) -> RealMatrix {
        self.check_same_shape(rhs);
        RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &RealMatrix {
    type Output = RealMatrix;
    fn neg(self) -> RealMatrix {
        self.scale(-1.0)
    }
}

impl Mul for &RealMatrix {
    type Output = RealMatrix;
    fn mul(self, rhs: &RealMatrix) -> RealMatrix {
        assert_eq!(
            self.cols,
            rhs.rows,
            "shape mismatch in product: {:?} * {:?}",
            self.shape(),
            rhs.shape()
        );
        let mut out = RealMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let rrow = rhs.row(k);
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

/// A symmetric positive definite matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpdMatrix(RealMatrix);

impl SpdMatrix {
    /// Validates symmetry (relative 1e-10) and positive definiteness
    /// (Cholesky succeeds). The stored matrix is exactly symmetrized.
    pub fn new(m: RealMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(MatError::NotSquare {
                rows: m.rows,
                cols: m.cols,
            });
        }
        let asym = frobenius_norm(&(&m - &m.transpose()));
        let scale = frobenius_norm(&m);
        if !within_tol(asym, scale, SYMMETRY_TOL) {
            return Err(MatError::NotSymmetric(asym / scale.max(TINY_NORM)));
        }
        let m = m.symmetrized();
        cholesky(&m)?;
        Ok(Self(m))
    }

    pub fn as_matrix(&self) -> &RealMatrix {
        &self.0
    }

    pub fn into_inner(self) -> RealMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// log det via the Cholesky factor.
    pub fn log_det(&self) -> f64 {
        let l = cholesky(&self.0).expect("validated at construction");
        (0..l.rows).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
    }
}

impl AsRef<RealMatrix> for SpdMatrix {
    fn as_ref(&self) -> &RealMatrix {
        &self.0
    }
}

pub fn frobenius_norm(m: &RealMatrix) -> f64 {
    m.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest eigenvalue modulus. Panics on non-square input.
pub fn spectral_radius(a: &RealMatrix) -> f64 {
    assert!(a.is_square(), "spectral radius of a non-square matrix");
    a.to_nalgebra()
        .complex_eigenvalues()
        .iter()
        .fold(0.0, |m, z| m.max(z.norm()))
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(m: &RealMatrix) -> Vec<f64> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    let mut ev: Vec<f64> = m
        .symmetrized()
        .to_nalgebra()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_symmetric_eigenvalue(m: &RealMatrix) -> f64 {
    symmetric_eigenvalues(m)[0]
}

/// Numerical rank from singular values, relative tolerance `rtol`.
pub fn rank(m: &RealMatrix, rtol: f64) -> usize {
    let sv = m.to_nalgebra().singular_values();
    let smax = sv.iter().fold(0.0_f64, |a, b| a.max(*b));
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rtol * smax).count()
}

/// Lower-triangular Cholesky factor L with M = L Lᵀ. Reads the lower
/// triangle only.
pub fn cholesky(m: &RealMatrix) -> Result<RealMatrix> {
    if !m.is_square() {
        return Err(MatError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    let mut l = RealMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(MatError::NotPositiveDefinite);
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

fn cholesky_solve_in_place(l: &RealMatrix, b: &mut RealMatrix) {
    let n = l.rows;
    for c in 0..b.cols {
        for i in 0..n {
            let mut s = b[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * b[(k, c)];
            }
            b[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)] * b[(k, c)];
            }
            b[(i, c)] = s / l[(i, i)];
        }
    }
}

/// Solves A X = B for symmetric positive definite A.
pub fn solve_spd(a: &SpdMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    solve_spd_raw(a.as_matrix(), b)
}

/// Like [`solve_spd`] for a matrix not yet wrapped as [`SpdMatrix`].
/// Fails with `NotPositiveDefinite` on a nonpositive pivot.
pub fn solve_spd_raw(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    if a.rows != b.rows {
        return Err(MatError::DimensionMismatch(format!(
            "solve_spd: A is {:?}, B is {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let l = cholesky(a)?;
    let mut x = b.clone();
    cholesky_solve_in_place(&l, &mut x);
    Ok(x)
}

/// Solves A X = B by LU with partial pivoting.
pub fn solve(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    if !a.is_square() {
        return Err(MatError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    if a.rows != b.rows {
        return Err(MatError::DimensionMismatch(format!(
            "solve: A is {:?}, B is {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let n = a.rows;
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs();
    for k in 0..n {
        let (p, pv) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if pv <= f64::EPSILON * scale * n as f64 || pv == 0.0 {
            return Err(MatError::Singular);
        }
        if p != k {
            for j in 0..n {
                lu.data.swap(k * n + j, p * n + j);
            }
            for j in 0..x.cols {
                x.data.swap(k * x.cols + j, p * x.cols + j);
            }
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / lu[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= f * v;
            }
            for j in 0..x.cols {
                let v = x[(k, j)];
                x[(i, j)] -= f * v;
            }
        }
    }
    for c in 0..x.cols {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= lu[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

/// Solves A Ψ Aᵀ − Ψ + I = 0 for stable A by the squaring iteration
/// Ψ ← Ψ + Aₖ Ψ Aₖᵀ, Aₖ₊₁ = Aₖ².
pub fn solve_discrete_lyapunov(a: &RealMatrix) -> Result<SpdMatrix> {
    if !a.is_square() {
        return Err(MatError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let rho = spectral_radius(a);
    if rho >= 1.0 - STABILITY_MARGIN {
        return Err(MatError::UnstableMatrix(rho));
    }
    let n = a.rows;
    let mut psi = RealMatrix::identity(n);
    let mut ak = a.clone();
    for _ in 0..LYAPUNOV_MAX_DOUBLINGS {
        let update = &(&ak * &psi) * &ak.transpose();
        psi = &psi + &update;
        if frobenius_norm(&update) < LYAPUNOV_STEP_TOL * frobenius_norm(&psi) {
            return SpdMatrix::new(psi.symmetrized());
        }
        ak = &ak * &ak;
        if !ak.data.iter().all(|v| v.is_finite()) {
            return Err(MatError::NonConvergence(LYAPUNOV_MAX_DOUBLINGS));
        }
    }
    Err(MatError::NonConvergence(LYAPUNOV_MAX_DOUBLINGS))
}

/// X⁺ = Xᵀ (X Xᵀ)⁻¹ for X with full row rank.
pub fn pseudo_inverse_full_row_rank(x: &RealMatrix) -> Result<RealMatrix> {
    let gram = &(x * &x.transpose());
    let ev = symmetric_eigenvalues(gram);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    let rcond = if hi > 0.0 { lo / hi } else { 0.0 };
    if rcond.is_nan() || rcond <= RANK_RCOND {
        return Err(MatError::RankDeficient(rcond.max(0.0)));
    }
    let y = solve_spd_raw(gram, x).map_err(|_| MatError::RankDeficient(rcond))?;
    Ok(y.transpose())
}
