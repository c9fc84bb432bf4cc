//! Dense complex matrix kernel.
//!
//! Everything in the crate is represented as a dense [`ComplexMatrix`]: elements of
//! matrix algebras, operators on truncated Fock spaces, gradients and Dirac operators.
//! Real data is embedded with zero imaginary part. Spectral work goes through the
//! Hermitian eigendecomposition and the SVD of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<Complex64>;

/// Default tolerance for relative Frobenius residuals of identity checks.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Relative eigenvalue / singular value cutoff used for null spaces and ranges.
pub const EIGEN_CUTOFF: f64 = 1e-10;

/// Backward error above which [`HermitianEigen`] retries in a rotated basis.
const EIGEN_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("Schatten exponent must be positive, got {0}")]
    BadExponent(f64),
    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("malformed matrix JSON: {0}")]
    Json(String),
    #[error("eigensolver did not converge")]
    NoConvergence,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

#[inline]
pub fn c64(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn from_real(m: &DMatrix<f64>) -> ComplexMatrix {
    m.map(c64)
}

pub fn ensure_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite)
    }
}

pub fn ensure_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() == m.ncols() {
        Ok(m.nrows())
    } else {
        Err(LinalgError::NotSquare { rows: m.nrows(), cols: m.ncols() })
    }
}

/// Singular values in decreasing order.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Schatten `p`-norm; `p = f64::INFINITY` gives the operator norm.
pub fn schatten_norm(m: &ComplexMatrix, p: f64) -> Result<f64> {
    ensure_finite(m)?;
    if !(p > 0.0) {
        return Err(LinalgError::BadExponent(p));
    }
    let s = singular_values(m);
    if p.is_infinite() {
        return Ok(s.first().copied().unwrap_or(0.0));
    }
    if p == 2.0 {
        return Ok(m.norm());
    }
    Ok(s.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p))
}

pub fn op_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// `‖a − b‖_F / max(1, ‖b‖_F)`: relative for large references, absolute near zero.
pub fn residual(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "residual of matrices with different shapes");
    (a - b).norm() / b.norm().max(1.0)
}

pub fn hermitian_residual(m: &ComplexMatrix) -> f64 {
    (m - m.adjoint()).norm() / m.norm().max(1.0)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Matrix unit `e_ij` of size `n`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    m[(i, j)] = c64(1.0);
    m
}

/// Block-diagonal matrix with the given square blocks.
pub fn block_diag(blocks: &[ComplexMatrix]) -> ComplexMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let m: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = ComplexMatrix::zeros(n, m);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

// The implicit QR sweep can leave eigenvectors of a large degenerate cluster
// visibly non-orthogonal. Any basis of the cluster is valid, so a QR of its
// columns restores orthonormality without moving the eigenspace.
fn reorthonormalize_clusters(values: &[f64], vectors: &mut ComplexMatrix) {
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let gap = 1e-8 * scale;
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] - values[end - 1] <= gap {
            end += 1;
        }
        if end - start > 1 {
            let block = vectors.columns(start, end - start).into_owned();
            let q = block.qr().q();
            vectors.columns_mut(start, end - start).copy_from(&q);
        }
        start = end;
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues in increasing order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn new(m: &ComplexMatrix) -> Result<Self> {
        let n = ensure_square(m)?;
        ensure_finite(m)?;
        if n == 0 {
            return Ok(Self { values: Vec::new(), vectors: ComplexMatrix::zeros(0, 0) });
        }
        let h = (m + m.adjoint()).scale(0.5);
        let out = Self::direct(&h);
        if out.residual(&h) <= EIGEN_RESIDUAL_TOL {
            return Ok(out);
        }
        // The implicit QR sweep can break down (NaN) on very sparse inputs; a random
        // unitary change of basis removes the offending structure.
        for seed in 0..3 {
            let u = random::unitary(n, &mut random::rng(seed));
            let rotated = Self::direct(&(u.adjoint() * &h * &u));
            let out = Self { vectors: &u * rotated.vectors, values: rotated.values };
            if out.residual(&h) <= EIGEN_RESIDUAL_TOL {
                return Ok(out);
            }
        }
        Err(LinalgError::NoConvergence)
    }

    fn direct(h: &ComplexMatrix) -> Self {
        let n = h.nrows();
        let eig = h.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        if values.iter().all(|v| v.is_finite()) {
            reorthonormalize_clusters(&values, &mut vectors);
        }
        Self { values, vectors }
    }

    /// `‖HV − VΛ‖_F / max(1, ‖H‖_F)`, infinite when anything is non-finite.
    fn residual(&self, h: &ComplexMatrix) -> f64 {
        let scaled = ComplexMatrix::from_fn(h.nrows(), h.ncols(), |r, c| self.vectors[(r, c)] * self.values[c]);
        let r = (h * &self.vectors - scaled).norm() / h.norm().max(1.0);
        if r.is_finite() { r } else { f64::INFINITY }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `V f(Λ) V*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let d = DVector::from_iterator(self.values.len(), self.values.iter().map(|&v| c64(f(v))));
        let scaled = ComplexMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |r, c| {
            self.vectors[(r, c)] * d[c]
        });
        &scaled * self.vectors.adjoint()
    }

    /// Orthonormal basis of the eigenspace `{|λ| ≤ rel_tol · max|λ|}`.
    pub fn null_space(&self, rel_tol: f64) -> ComplexMatrix {
        let cut = rel_tol * self.max_abs().max(f64::MIN_POSITIVE);
        self.select(|v| v.abs() <= cut)
    }

    pub fn select(&self, keep: impl Fn(f64) -> bool) -> ComplexMatrix {
        let cols: Vec<usize> = (0..self.values.len()).filter(|&k| keep(self.values[k])).collect();
        ComplexMatrix::from_fn(self.vectors.nrows(), cols.len(), |r, c| self.vectors[(r, cols[c])])
    }
}

/// Applies a real function to a Hermitian matrix through its spectral decomposition.
pub fn hermitian_function(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    Ok(HermitianEigen::new(m)?.apply(f))
}

/// True iff `x` is Hermitian within `tol` and its smallest eigenvalue is at least `−tol·‖x‖_∞`.
pub fn is_psd(x: &ComplexMatrix, tol: f64) -> Result<bool> {
    ensure_square(x)?;
    ensure_finite(x)?;
    let scale = op_norm(x);
    if (x - x.adjoint()).camax() > tol * scale.max(1.0) {
        return Ok(false);
    }
    let eig = HermitianEigen::new(x)?;
    Ok(eig.values.first().is_none_or(|&m| m >= -tol * scale))
}

/// Positive square root of a positive semidefinite matrix.
pub fn mat_sqrt_psd(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = HermitianEigen::new(x)?;
    let cut = EIGEN_CUTOFF * eig.max_abs();
    if let Some(&min) = eig.values.first() {
        if min < -cut.max(1e-14) {
            return Err(LinalgError::NotPsd(min));
        }
    }
    Ok(eig.apply(|v| v.max(0.0).sqrt()))
}

/// `|x| = (x* x)^{1/2}`.
pub fn abs(x: &ComplexMatrix) -> ComplexMatrix {
    hermitian_function(&(x.adjoint() * x), |v| v.max(0.0).sqrt())
        .expect("x* x is square and finite")
}

/// Orthonormal basis (as columns) of the column space of `m`, dropping singular
/// values below `rel_tol` times the largest.
pub fn column_space(m: &ComplexMatrix, rel_tol: f64) -> ComplexMatrix {
    if m.is_empty() {
        return ComplexMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &b| a.max(b));
    if smax == 0.0 {
        return ComplexMatrix::zeros(m.nrows(), 0);
    }
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > rel_tol * smax)
        .collect();
    ComplexMatrix::from_fn(m.nrows(), cols.len(), |r, c| u[(r, cols[c])])
}

/// Orthogonal projection onto the span of orthonormal columns.
pub fn projector(basis: &ComplexMatrix) -> ComplexMatrix {
    basis * basis.adjoint()
}

/// A finite-dimensional space with a (possibly degenerate) Hermitian inner product.
#[derive(Debug, Clone)]
pub struct WeightedSpace {
    pub gram: ComplexMatrix,
}

impl WeightedSpace {
    pub fn new(gram: ComplexMatrix) -> Result<Self> {
        ensure_square(&gram)?;
        ensure_finite(&gram)?;
        Ok(Self { gram })
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    /// Returns `C` (columns = coordinates of an orthonormal basis of the quotient by the
    /// null space) together with the effective dimension. `C* G C = Id`.
    pub fn orthonormalize(&self, tol: f64) -> Result<(ComplexMatrix, usize)> {
        let n = self.dim();
        if n == 0 {
            return Ok((ComplexMatrix::zeros(0, 0), 0));
        }
        if hermitian_residual(&self.gram) > tol.max(DEFAULT_TOL) {
            return Err(LinalgError::Shape("gram matrix is not Hermitian".into()));
        }
        let eig = HermitianEigen::new(&self.gram)?;
        let top = eig.values.last().copied().unwrap_or(0.0);
        if let Some(&min) = eig.values.first() {
            if min < -tol.max(1e-12) * top.abs().max(1.0) {
                return Err(LinalgError::NotPsd(min));
            }
        }
        if top <= 0.0 {
            return Ok((ComplexMatrix::zeros(n, 0), 0));
        }
        let kept: Vec<usize> = (0..n).filter(|&k| eig.values[k] > tol * top).collect();
        let basis = ComplexMatrix::from_fn(n, kept.len(), |r, c| {
            eig.vectors[(r, kept[c])] / eig.values[kept[c]].sqrt()
        });
        Ok((basis, kept.len()))
    }

    /// Adjoint of `t: (src, G_src) → (self, G_tgt)` with respect to both Gram matrices,
    /// `t♯ = G_src⁺ t* G_tgt` with the Moore–Penrose inverse on the source side.
    pub fn weighted_adjoint(&self, t: &ComplexMatrix, source: &WeightedSpace) -> Result<ComplexMatrix> {
        if t.nrows() != self.dim() || t.ncols() != source.dim() {
            return Err(LinalgError::Shape(format!(
                "map is {}x{}, spaces have dims {} and {}",
                t.nrows(),
                t.ncols(),
                self.dim(),
                source.dim()
            )));
        }
        let eig = HermitianEigen::new(&source.gram)?;
        let cut = EIGEN_CUTOFF * eig.max_abs();
        let pinv = eig.apply(|v| if v.abs() > cut { 1.0 / v } else { 0.0 });
        Ok(pinv * t.adjoint() * &self.gram)
    }
}

/// Row-major JSON form `{"rows":n,"cols":m,"re":[...],"im":[...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                re.push(m[(r, c)].re);
                im.push(m[(r, c)].im);
            }
        }
        Self { rows, cols, re, im }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = LinalgError;

    fn try_from(j: MatrixJson) -> Result<Self> {
        let n = j.rows * j.cols;
        if j.re.len() != n || j.im.len() != n {
            return Err(LinalgError::Json(format!(
                "expected {} entries, got re={} im={}",
                n,
                j.re.len(),
                j.im.len()
            )));
        }
        let m = ComplexMatrix::from_fn(j.rows, j.cols, |r, c| {
            C64::new(j.re[r * j.cols + c], j.im[r * j.cols + c])
        });
        ensure_finite(&m)?;
        Ok(m)
    }
}

pub fn matrix_to_json(m: &ComplexMatrix) -> serde_json::Value {
    serde_json::to_value(MatrixJson::from(m)).expect("matrix JSON is always serializable")
}

pub fn matrix_from_json(v: &serde_json::Value) -> Result<ComplexMatrix> {
    let j: MatrixJson =
        serde_json::from_value(v.clone()).map_err(|e| LinalgError::Json(e.to_string()))?;
    j.try_into()
}

/// Seeded generators and random test matrices.
pub mod random {
    use super::*;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        rng.sample(StandardNormal)
    }

    pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(normal(rng), normal(rng)))
    }

    pub fn real_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| normal(rng))
    }

    pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
        let g = gaussian(n, n, rng);
        (&g + g.adjoint()).scale(0.5)
    }

    pub fn psd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
        let g = gaussian(n, n, rng);
        &g * g.adjoint()
    }

    pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
        gaussian(n, n, rng).qr().q()
    }

    pub fn orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
        real_gaussian(n, n, rng).qr().q()
    }

    pub fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}
