//! Covariance estimation, symmetric-definite generalized eigendecomposition
//! and Gaussian KL divergence.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{mismatch, Error, Result};
use crate::math;
use crate::matrix::{dot, Matrix};

/// Regularization applied to the right-hand matrix of a CSP pencil.
pub const PENCIL_EPS: f64 = 1e-9;
/// Regularization applied to both covariances before a KL evaluation.
pub const KL_EPS: f64 = 1e-6;

/// A symmetric positive semidefinite `channels × channels` matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct CovMatrix(Matrix);

impl CovMatrix {
    /// Wraps a matrix after checking it is square, finite and symmetric to
    /// within `1e-12` relative. The stored matrix is exactly symmetrized.
    pub fn new(mut m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(mismatch("square matrix", format_args!("{}x{}", m.rows(), m.cols())));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("covariance".into()));
        }
        let scale = m.as_slice().iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if m.asymmetry() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidParameter(format!(
                "covariance is not symmetric (asymmetry {:e})",
                m.asymmetry()
            )));
        }
        m.symmetrize();
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn channels(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn mean_diag(&self) -> f64 {
        self.0.trace() / self.channels() as f64
    }

    /// Element-wise `Σ wᵢ·Cᵢ`; the caller is responsible for the weights
    /// being nonnegative when a PSD result is required.
    pub fn weighted_sum<'a>(
        items: impl IntoIterator<Item = (f64, &'a CovMatrix)>,
        channels: usize,
    ) -> Result<CovMatrix> {
        let mut acc = Matrix::zeros(channels, channels);
        for (w, c) in items {
            if c.channels() != channels {
                return Err(mismatch(channels, c.channels()));
            }
            acc = acc.add_scaled(&c.0, w)?;
        }
        acc.symmetrize();
        Ok(CovMatrix(acc))
    }
}

/// Eigenpairs of a symmetric-definite pencil `C1·w = λ·C2·w`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenEigResult {
    /// Sorted in descending order.
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the C2-normalized eigenvector of `eigenvalues[i]`.
    pub eigenvectors: Matrix,
}

/// A multivariate normal distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mean: Vec<f64>,
    pub covariance: CovMatrix,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, covariance: CovMatrix) -> Result<Self> {
        if mean.len() != covariance.channels() {
            return Err(mismatch(covariance.channels(), mean.len()));
        }
        Ok(Self { mean, covariance })
    }

    pub fn zero_mean(covariance: CovMatrix) -> Self {
        Self {
            mean: alloc::vec![0.0; covariance.channels()],
            covariance,
        }
    }
}

/// Trace-normalized spatial covariance `X·Xᵀ / tr(X·Xᵀ)` of one
/// `channels × samples` trial. No mean is removed.
pub fn trial_covariance(trial: &Matrix) -> Result<CovMatrix> {
    let (ch, n) = trial.shape();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "trial needs at least 2 samples, has {n}"
        )));
    }
    if !trial.is_finite() {
        return Err(Error::NonFinite("trial".into()));
    }
    let mut c = Matrix::zeros(ch, ch);
    for i in 0..ch {
        let ri = trial.row(i);
        for j in i..ch {
            let v = dot(ri, trial.row(j));
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    let tr = c.trace();
    if tr <= 0.0 {
        return Err(Error::Degenerate("trial has zero power on every channel".into()));
    }
    Ok(CovMatrix(c.scaled(1.0 / tr)))
}

/// Mean of the trace-normalized covariances of a set of trials.
pub fn class_covariance(trials: &[&Matrix]) -> Result<CovMatrix> {
    let first = trials.first().ok_or(Error::Empty("trial list"))?;
    let ch = first.rows();
    let mut acc = Matrix::zeros(ch, ch);
    for t in trials {
        if t.rows() != ch {
            return Err(mismatch(format_args!("{ch} channels"), t.rows()));
        }
        acc = acc.add_scaled(trial_covariance(t)?.matrix(), 1.0)?;
    }
    Ok(CovMatrix(acc.scaled(1.0 / trials.len() as f64)))
}

/// Returns `c + eps·mean(diag(c))·I`.
pub fn regularize_spd(c: &CovMatrix, eps: f64) -> CovMatrix {
    if eps == 0.0 {
        return c.clone();
    }
    let shift = eps * c.mean_diag();
    let mut m = c.0.clone();
    for i in 0..m.rows() {
        m[(i, i)] += shift;
    }
    CovMatrix(m)
}

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = a`.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(mismatch("square matrix", format_args!("{}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = math::sqrt(d);
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L·x = b` in place for lower-triangular `L`.
pub fn forward_substitute(l: &Matrix, b: &mut [f64]) {
    let n = l.rows();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Solves `Lᵀ·x = b` in place for lower-triangular `L`.
pub fn back_substitute_t(l: &Matrix, b: &mut [f64]) {
    let n = l.rows();
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Solves `A·x = b` for symmetric positive definite `A`.
pub fn spd_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let l = cholesky(a)?;
    if b.len() != a.rows() {
        return Err(mismatch(a.rows(), b.len()));
    }
    let mut x = b.to_vec();
    forward_substitute(&l, &mut x);
    back_substitute_t(&l, &mut x);
    Ok(x)
}

/// Inverse of a symmetric positive definite matrix.
pub fn spd_inverse(a: &Matrix) -> Result<Matrix> {
    let l = cholesky(a)?;
    let n = a.rows();
    let mut inv = Matrix::zeros(n, n);
    let mut e = alloc::vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[j] = 1.0;
        forward_substitute(&l, &mut e);
        back_substitute_t(&l, &mut e);
        inv.set_column(j, &e);
    }
    inv.symmetrize();
    Ok(inv)
}

/// `ln det A` from the Cholesky factor, for SPD `A`.
pub fn log_det_spd(a: &Matrix) -> Result<f64> {
    let l = cholesky(a)?;
    Ok(2.0 * l.diag().iter().map(|&d| math::ln(d)).sum::<f64>())
}

/// Full eigendecomposition of a real symmetric matrix by cyclic Jacobi
/// rotations. Eigenvalues are returned in the diagonal order produced by the
/// sweep (unsorted); column `i` of the returned matrix pairs with value `i`.
pub fn sym_eig(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if !a.is_square() {
        return Err(mismatch("square matrix", format_args!("{}x{}", a.rows(), a.cols())));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("symmetric eigenproblem input".into()));
    }
    let n = a.rows();
    let mut m = a.clone();
    m.symmetrize();
    let mut v = Matrix::identity(n);
    let total: f64 = m.frobenius_norm();
    if total == 0.0 {
        return Ok((alloc::vec![0.0; n], v));
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if math::sqrt(off) <= 1e-16 * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + math::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Ok((m.diag(), v))
}

/// Flips a vector so that its entry of largest magnitude is positive.
pub(crate) fn canonical_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Solves `C1·w = λ·C2·w` for symmetric `C1` and symmetric positive definite
/// `C2` by Cholesky reduction to `L⁻¹·C1·L⁻ᵀ`.
///
/// Eigenvalues come back sorted descending (ties keep their original
/// order), eigenvectors satisfy `Wᵀ·C2·W = I` and are sign-normalized so
/// their largest-magnitude entry is positive.
pub fn gen_eig_sym(c1: &CovMatrix, c2: &CovMatrix) -> Result<GenEigResult> {
    let n = c1.channels();
    if c2.channels() != n {
        return Err(mismatch(format_args!("{n}x{n} pencil"), c2.channels()));
    }
    let l = cholesky(c2.matrix())?;

    // reduced = L⁻¹ C1 L⁻ᵀ, built column by column
    let mut tmp = Matrix::zeros(n, n);
    let mut col = alloc::vec![0.0; n];
    for j in 0..n {
        col.copy_from_slice(&c1.matrix().column(j));
        forward_substitute(&l, &mut col);
        tmp.set_column(j, &col);
    }
    // tmp = L⁻¹ C1; reduced = (L⁻¹ (L⁻¹ C1)ᵀ)
    let tmp_t = tmp.transpose();
    let mut reduced = Matrix::zeros(n, n);
    for j in 0..n {
        col.copy_from_slice(&tmp_t.column(j));
        forward_substitute(&l, &mut col);
        reduced.set_column(j, &col);
    }
    reduced.symmetrize();

    let (values, vectors) = sym_eig(&reduced)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(core::cmp::Ordering::Equal));

    let mut eigenvectors = Matrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (k, &idx) in order.iter().enumerate() {
        eigenvalues.push(values[idx]);
        let mut w = vectors.column(idx);
        back_substitute_t(&l, &mut w);
        canonical_sign(&mut w);
        eigenvectors.set_column(k, &w);
    }
    Ok(GenEigResult {
        eigenvalues,
        eigenvectors,
    })
}

/// `D_KL(n0 ‖ n1)` between multivariate normals, using Cholesky
/// log-determinants.
pub fn kl_gaussian(n0: &Gaussian, n1: &Gaussian) -> Result<f64> {
    let k = n0.mean.len();
    if n1.mean.len() != k || n0.covariance.channels() != k || n1.covariance.channels() != k {
        return Err(mismatch(
            format_args!("dimension {k}"),
            format_args!("{} / {}", n1.mean.len(), n1.covariance.channels()),
        ));
    }
    let s0 = n0.covariance.matrix();
    let s1 = n1.covariance.matrix();
    let l1 = cholesky(s1)?;
    let logdet0 = log_det_spd(s0)?;
    let logdet1 = 2.0 * l1.diag().iter().map(|&d| math::ln(d)).sum::<f64>();

    // tr(Σ1⁻¹Σ0) = ‖L1⁻¹ M0‖_F² where Σ0 = M0 M0ᵀ
    let l0 = cholesky(s0)?;
    let mut trace = 0.0;
    let mut col = alloc::vec![0.0; k];
    for j in 0..k {
        col.copy_from_slice(&l0.column(j));
        forward_substitute(&l1, &mut col);
        trace += dot(&col, &col);
    }

    let mut diff: Vec<f64> = n1.mean.iter().zip(&n0.mean).map(|(a, b)| a - b).collect();
    forward_substitute(&l1, &mut diff);
    let quad = dot(&diff, &diff);

    Ok(0.5 * (trace + quad - (logdet0 - logdet1) - k as f64))
}
