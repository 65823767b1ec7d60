//! Small dense real linear algebra.
//!
//! Everything here targets matrices of dimension at most ~8: storage is dense
//! and row-major, and the decompositions (cyclic Jacobi for symmetric
//! eigenproblems, one-sided Jacobi for the SVD) are simple and deterministic.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance on eigenvalues for every `A ⪰ B` test in the crate.
pub const PSD_TOL: f64 = 1e-9;

/// Off-diagonal threshold for the cyclic Jacobi eigen solver.
pub const JACOBI_TOL: f64 = 1e-13;

/// Sweep cap for the Jacobi iterations.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Relative singular-value cutoff used by [`lsq_solve`] to decide the rank.
pub const RANK_TOL: f64 = 1e-10;

/// Smallest eigenvalue accepted as positive definite by [`logdet`].
pub const PD_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("Jacobi iteration did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("matrix is not positive definite (min eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("singular linear system")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense row-major real matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "Mat::new: data length mismatch");
        Mat { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from equal-length rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.as_ref().len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.as_ref().len(), c, "Mat::from_rows: ragged rows");
            data.extend_from_slice(row.as_ref());
        }
        Mat::new(r, c, data)
    }

    pub fn column(v: &[f64]) -> Self {
        Mat::new(v.len(), 1, v.to_vec())
    }

    pub fn row(v: &[f64]) -> Self {
        Mat::new(1, v.len(), v.to_vec())
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.cols.max(1))
            .take(self.rows)
            .map(|c| c.to_vec())
            .collect()
    }

    pub fn col_vec(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row_vec(&self, i: usize) -> Vec<f64> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul: inner dimensions differ");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec: dimension mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!(self.shape(), other.shape(), "add: shape mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Mat::new(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!(self.shape(), other.shape(), "sub: shape mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Mat::new(self.rows, self.cols, data)
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat::new(
            self.rows,
            self.cols,
            self.data.iter().map(|a| a * s).collect(),
        )
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        svd(self)
            .map(|s| s.values.first().copied().unwrap_or(0.0))
            .unwrap_or(f64::NAN)
    }

    /// `M Mᵀ` as a symmetric matrix.
    pub fn gram_rows(&self) -> SymMatrix {
        SymMatrix::from_mat(&self.matmul(&self.transpose()))
    }

    /// `Mᵀ M` as a symmetric matrix.
    pub fn gram_cols(&self) -> SymMatrix {
        SymMatrix::from_mat(&self.transpose().matmul(self))
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols, "vstack: column mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Mat::new(self.rows + other.rows, self.cols, data)
    }

    /// Places `self` left of `other`.
    pub fn hstack(&self, other: &Mat) -> Mat {
        self.transpose().vstack(&other.transpose()).transpose()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat{:?}", self.to_rows())
    }
}

impl TryFrom<Vec<Vec<f64>>> for Mat {
    type Error = String;
    fn try_from(rows: Vec<Vec<f64>>) -> std::result::Result<Self, String> {
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != c) {
            return Err("matrix rows have unequal lengths".into());
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err("matrix entries must be finite".into());
        }
        Ok(Mat::from_rows(&rows))
    }
}

impl From<Mat> for Vec<Vec<f64>> {
    fn from(m: Mat) -> Self {
        m.to_rows()
    }
}

/// Dense symmetric matrix. Construction always symmetrizes, so
/// `m[(i, j)] == m[(j, i)]` holds exactly.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn from_mat(m: &Mat) -> Self {
        assert_eq!(m.rows(), m.cols(), "SymMatrix requires a square matrix");
        let n = m.rows();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = m[(i, i)];
            for j in i + 1..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        SymMatrix { dim: n, data }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        SymMatrix::from_mat(&Mat::from_rows(rows))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            dim: n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        SymMatrix::diag(&vec![s; n])
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = SymMatrix::zeros(n);
        for (i, &v) in d.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// `v vᵀ`
    pub fn outer(v: &[f64]) -> Self {
        let n = v.len();
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = v[i] * v[j];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn to_mat(&self) -> Mat {
        Mat::new(self.dim, self.dim, self.data.clone())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.to_mat().to_rows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim, "add: dimension mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        SymMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn add_identity(&self, s: f64) -> SymMatrix {
        self.add(&SymMatrix::scaled_identity(self.dim, s))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    /// `M S Mᵀ`
    pub fn congruence(&self, m: &Mat) -> SymMatrix {
        SymMatrix::from_mat(&m.matmul(&self.to_mat()).matmul(&m.transpose()))
    }

    /// `vᵀ S v`
    pub fn quad(&self, v: &[f64]) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += v[i] * self.data[i * n + j] * v[j];
            }
        }
        acc
    }

    /// `tr(S T)` for symmetric `S`, `T`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn eigen(&self) -> Result<Eigen> {
        sym_eigen(self)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigen()?.values.last().copied().unwrap_or(0.0))
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigen()?.values.first().copied().unwrap_or(0.0))
    }

    /// Applies `f` to every eigenvalue: `V f(Λ) Vᵀ`.
    pub fn map_eigen(&self, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
        let e = self.eigen()?;
        Ok(e.recompose(&e.values.iter().map(|&l| f(l)).collect::<Vec<_>>()))
    }

    /// Inverse of a positive-definite matrix.
    pub fn inverse_pd(&self) -> Result<SymMatrix> {
        let e = self.eigen()?;
        let min = e.values.last().copied().unwrap_or(1.0);
        if min <= PD_TOL {
            return Err(LinalgError::NotPositiveDefinite(min));
        }
        Ok(e.recompose(&e.values.iter().map(|l| 1.0 / l).collect::<Vec<_>>()))
    }

    /// Drops eigenvalues below `tol` (clipping to a PSD, possibly lower-rank matrix).
    pub fn truncate(&self, tol: f64) -> Result<SymMatrix> {
        self.map_eigen(|l| if l > tol { l } else { 0.0 })
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sym{:?}", self.to_rows())
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = String;
    fn try_from(rows: Vec<Vec<f64>>) -> std::result::Result<Self, String> {
        let m = Mat::try_from(rows)?;
        if m.rows() != m.cols() {
            return Err("symmetric matrix must be square".into());
        }
        Ok(SymMatrix::from_mat(&m))
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.to_rows()
    }
}

/// Eigen-decomposition with eigenvalues in descending order and matching
/// orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.col_vec(k)
    }

    /// `V diag(d) Vᵀ`
    pub fn recompose(&self, d: &[f64]) -> SymMatrix {
        let n = self.vectors.rows();
        let mut out = Mat::zeros(n, n);
        for (k, &dk) in d.iter().enumerate() {
            if dk == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * dk;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)];
                }
            }
        }
        SymMatrix::from_mat(&out)
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
pub fn sym_eigen(m: &SymMatrix) -> Result<Eigen> {
    let n = m.dim();
    let mut a = m.to_mat();
    let mut v = Mat::identity(n);
    let scale = 1.0 + a.frobenius();
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= JACOBI_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate_cols(&mut a, p, q, c, s);
                rotate_rows(&mut a, p, q, c, s);
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                rotate_cols(&mut v, p, q, c, s);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > JACOBI_TOL * scale {
        return Err(LinalgError::NoConvergence(JACOBI_MAX_SWEEPS));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, k)] = v[(r, i)];
        }
    }
    Ok(Eigen { values, vectors })
}

fn off_diagonal_norm(a: &Mat) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn rotate_cols(a: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..a.rows() {
        let x = a[(k, p)];
        let y = a[(k, q)];
        a[(k, p)] = c * x - s * y;
        a[(k, q)] = s * x + c * y;
    }
}

fn rotate_rows(a: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..a.cols() {
        let x = a[(p, k)];
        let y = a[(q, k)];
        a[(p, k)] = c * x - s * y;
        a[(q, k)] = s * x + c * y;
    }
}

/// True iff the smallest eigenvalue is at least `-tol`.
pub fn is_psd(m: &SymMatrix, tol: f64) -> bool {
    match m.min_eigenvalue() {
        Ok(l) => l >= -tol,
        Err(_) => false,
    }
}

/// Natural-log determinant of a positive-definite matrix.
pub fn logdet(m: &SymMatrix) -> Result<f64> {
    let e = m.eigen()?;
    let min = e.values.last().copied().unwrap_or(1.0);
    if min <= PD_TOL {
        return Err(LinalgError::NotPositiveDefinite(min));
    }
    Ok(e.values.iter().map(|l| l.ln()).sum())
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = Mat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Column-stacking vectorization.
pub fn vec(a: &Mat) -> Mat {
    let mut v = Vec::with_capacity(a.rows() * a.cols());
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            v.push(a[(i, j)]);
        }
    }
    Mat::column(&v)
}

/// Inverse of [`vec`]: refills a `rows × cols` matrix column by column.
pub fn unvec(v: &[f64], rows: usize, cols: usize) -> Mat {
    assert_eq!(v.len(), rows * cols, "unvec: length mismatch");
    let mut m = Mat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = v[j * rows + i];
        }
    }
    m
}

/// Thin singular value decomposition `A = U diag(σ) Vᵀ`.
///
/// `values` has `cols` entries in descending order; `v` is `cols × cols`
/// orthogonal; `u` is `rows × cols` with unit columns where `σ > 0`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub values: Vec<f64>,
    pub v: Mat,
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(a: &Mat) -> Result<Svd> {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = Mat::identity(n);
    let negligible = (1e-15 * a.frobenius()).powi(2);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for k in 0..m {
                    alpha += w[(k, p)] * w[(k, p)];
                    beta += w[(k, q)] * w[(k, q)];
                    gamma += w[(k, p)] * w[(k, q)];
                }
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || alpha.min(beta) <= negligible {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_cols(&mut w, p, q, c, s);
                rotate_cols(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence(JACOBI_MAX_SWEEPS));
    }
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|k| w[(k, j)] * w[(k, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = Mat::zeros(m, n);
    let mut vs = Mat::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        values.push(s);
        for r in 0..m {
            u[(r, k)] = if s > 0.0 { w[(r, j)] / s } else { 0.0 };
        }
        for r in 0..n {
            vs[(r, k)] = v[(r, j)];
        }
    }
    Ok(Svd { u, values, v: vs })
}

/// Result of a minimum-norm least-squares solve.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: Mat,
    pub residual_norm: f64,
    /// Orthonormal basis of ker(a), one column per direction (may have zero columns).
    pub nullspace: Mat,
    pub rank: usize,
}

/// Minimum-Frobenius-norm solution of `a·x = b`.
pub fn lsq_solve(a: &Mat, b: &Mat) -> Result<LeastSquares> {
    if a.rows() != b.rows() {
        return Err(LinalgError::Shape(format!(
            "lsq_solve: a is {}x{}, b is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let n = a.cols();
    let d = svd(a)?;
    let smax = d.values.first().copied().unwrap_or(0.0);
    let cutoff = RANK_TOL * smax;
    let rank = d.values.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    let mut x = Mat::zeros(n, b.cols());
    for k in 0..rank {
        let s = d.values[k];
        for c in 0..b.cols() {
            let coef: f64 = (0..a.rows()).map(|r| d.u[(r, k)] * b[(r, c)]).sum::<f64>() / s;
            for r in 0..n {
                x[(r, c)] += coef * d.v[(r, k)];
            }
        }
    }
    let mut nullspace = Mat::zeros(n, n - rank);
    for k in rank..n {
        for r in 0..n {
            nullspace[(r, k - rank)] = d.v[(r, k)];
        }
    }
    let residual_norm = a.matmul(&x).sub(b).frobenius();
    Ok(LeastSquares {
        solution: x,
        residual_norm,
        nullspace,
        rank,
    })
}

/// Solves a square system by Gaussian elimination with partial pivoting.
pub fn solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(LinalgError::Shape("solve: expected a square system".into()));
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[(i, k)].abs().total_cmp(&m[(j, k)].abs()))
            .unwrap_or(k);
        if m[(p, k)] == 0.0 || !m[(p, k)].is_finite() {
            return Err(LinalgError::Singular);
        }
        if p != k {
            for j in 0..n {
                let t = m[(k, j)];
                m[(k, j)] = m[(p, j)];
                m[(p, j)] = t;
            }
            x.swap(k, p);
        }
        for i in k + 1..n {
            let f = m[(i, k)] / m[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[(i, j)] -= f * m[(k, j)];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[(k, j)] * x[j]).sum();
        x[k] = (x[k] - s) / m[(k, k)];
    }
    Ok(x)
}

/// Nonnegative least squares `min ‖a x − b‖₂, x ≥ 0` (Lawson–Hanson).
pub fn nnls(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(LinalgError::Shape("nnls: rhs length mismatch".into()));
    }
    let tol = 1e-12 * (1.0 + a.max_abs()) * (1.0 + b.iter().fold(0.0f64, |s, v| s.max(v.abs())));
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let gradient = |x: &[f64]| -> Vec<f64> {
        let r: Vec<f64> = a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
        (0..n)
            .map(|j| (0..m).map(|i| a[(i, j)] * r[i]).sum())
            .collect()
    };
    let passive_solve = |passive: &[bool]| -> Result<Vec<f64>> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let mut sub = Mat::zeros(m, idx.len());
        for (c, &j) in idx.iter().enumerate() {
            for i in 0..m {
                sub[(i, c)] = a[(i, j)];
            }
        }
        let ls = lsq_solve(&sub, &Mat::column(b))?;
        let mut z = vec![0.0; n];
        for (c, &j) in idx.iter().enumerate() {
            z[j] = ls.solution[(c, 0)];
        }
        Ok(z)
    };
    for _ in 0..3 * n + 10 {
        let w = gradient(&x);
        let cand = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = cand else { break };
        if w[j] <= tol {
            break;
        }
        passive[j] = true;
        for _ in 0..3 * n + 10 {
            let z = passive_solve(&passive)?;
            if (0..n).filter(|&k| passive[k]).all(|k| z[k] > 0.0) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for k in 0..n {
                if passive[k] && z[k] <= 0.0 {
                    alpha = alpha.min(x[k] / (x[k] - z[k]));
                }
            }
            for k in 0..n {
                x[k] += alpha * (z[k] - x[k]);
                if passive[k] && x[k] <= tol {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
        }
    }
    Ok(x)
}
