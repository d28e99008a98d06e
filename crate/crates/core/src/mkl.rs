//! lp-norm multiple kernel learning.
//!
//! The combined kernel `Σ βⱼ Kⱼ` is learned jointly with the SVM by
//! alternating two exact block steps: an SVM solve for fixed `β`, then the
//! closed-form `β` that minimizes `½ Σ ‖wⱼ‖²/βⱼ` over `‖β‖_p ≤ 1` for the
//! fixed per-view weight norms `‖wⱼ‖² = βⱼ² αᵀ(Y Kⱼ Y)α`. Each step can only
//! lower the primal objective, so the value at successive iterates is
//! non-increasing.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{mismatch, Error, Result};
use crate::kernels::{cross_kernel, linear_kernel, normalize_avg_diag, KernelMatrix, KernelStack};
use crate::math;
use crate::matrix::{dot, Matrix};
use crate::signal::Label;
use crate::svm::{dual_objective, svm_dual_solve_with, SvmOptions, SvmSolution};

/// Stand-in for `p = 1`, where the closed-form update is singular.
pub const P_ONE_SUBSTITUTE: f64 = 1.0001;
/// Kernel weights below this are reported as exactly zero.
pub const REPORT_ZERO: f64 = 1e-12;

/// Norm parameter of the kernel-weight constraint.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum PNorm {
    Finite(f64),
    Infinity,
}

impl PNorm {
    pub fn validate(self) -> Result<Self> {
        match self {
            PNorm::Finite(p) if !(p >= 1.0) || !p.is_finite() => Err(Error::InvalidParameter(
                format!("p must lie in [1, inf], got {p}"),
            )),
            other => Ok(other),
        }
    }

    /// The value used by the update rule (`p = 1` becomes 1.0001).
    pub fn effective(self) -> PNorm {
        match self {
            PNorm::Finite(1.0) => PNorm::Finite(P_ONE_SUBSTITUTE),
            other => other,
        }
    }

    /// Sort key: finite values in order, infinity last.
    pub fn as_f64(self) -> f64 {
        match self {
            PNorm::Finite(p) => p,
            PNorm::Infinity => f64::INFINITY,
        }
    }

    /// `‖β‖_p` (max-norm for infinity).
    pub fn norm(self, beta: &[f64]) -> f64 {
        match self {
            PNorm::Finite(p) => math::powf(beta.iter().map(|b| math::powf(b.abs(), p)).sum(), 1.0 / p),
            PNorm::Infinity => beta.iter().fold(0.0, |a, b| a.max(b.abs())),
        }
    }
}

impl core::fmt::Display for PNorm {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PNorm::Finite(p) => write!(f, "{p}"),
            PNorm::Infinity => f.write_str("inf"),
        }
    }
}

/// `Σ βⱼ Kⱼ`.
pub fn combine_kernels(stack: &KernelStack, betas: &[f64]) -> Result<Matrix> {
    if betas.len() != stack.views() {
        return Err(mismatch(format_args!("{} weights", stack.views()), betas.len()));
    }
    if let Some(b) = betas.iter().find(|b| !(**b >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "kernel weights must be nonnegative, got {b}"
        )));
    }
    let n = stack.n();
    let mut k = Matrix::zeros(n, n);
    for (km, &b) in stack.kernels.iter().zip(betas) {
        if b != 0.0 {
            k = k.add_scaled(&km.data, b)?;
        }
    }
    Ok(k)
}

/// Closed-form weight step from per-view squared norms `sⱼ = ‖wⱼ‖²`.
///
/// For finite `p`: `βⱼ = sⱼ^{1/(p+1)} / (Σₖ sₖ^{p/(p+1)})^{1/p}`, which has
/// unit p-norm. For `p = ∞` every weight is one. Returns `None` when every
/// `sⱼ` is zero (no information to update from).
pub fn beta_update(norms: &[f64], p: PNorm) -> Option<Vec<f64>> {
    match p.effective() {
        PNorm::Infinity => Some(vec![1.0; norms.len()]),
        PNorm::Finite(p) => {
            if norms.iter().all(|&s| !(s > 0.0)) {
                return None;
            }
            let z = math::powf(
                norms.iter().map(|&s| math::powf(s.max(0.0), p / (p + 1.0))).sum(),
                1.0 / p,
            );
            Some(
                norms
                    .iter()
                    .map(|&s| math::powf(s.max(0.0), 1.0 / (p + 1.0)) / z)
                    .collect(),
            )
        }
    }
}

/// Uniform starting point with unit p-norm.
pub fn initial_betas(m: usize, p: PNorm) -> Vec<f64> {
    match p.effective() {
        PNorm::Infinity => vec![1.0; m],
        PNorm::Finite(p) => vec![math::powf(m as f64, -1.0 / p); m],
    }
}

/// `βⱼ² · αᵀ(Y Kⱼ Y)α` for each view.
pub fn weight_norms(stack: &KernelStack, labels: &[Label], alphas: &[f64], betas: &[f64]) -> Vec<f64> {
    let ya: Vec<f64> = alphas.iter().zip(labels).map(|(a, y)| a * y.sign()).collect();
    stack
        .kernels
        .iter()
        .zip(betas)
        .map(|(k, &b)| {
            let quad: f64 = (0..ya.len())
                .filter(|&i| ya[i] != 0.0)
                .map(|i| ya[i] * dot(k.data.row(i), &ya))
                .sum();
            b * b * quad.max(0.0)
        })
        .collect()
}

/// Stopping rules of the alternating optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MklOptions {
    pub beta_tol: f64,
    pub objective_rel_tol: f64,
    pub max_outer: usize,
    /// KKT tolerance for single SVM solves (`m = 1` or `p = ∞`).
    pub svm_tol: f64,
    /// KKT tolerance for the SVM solves inside the alternation; tighter so
    /// that the objective sequence is monotone to within `1e-8`.
    pub inner_svm_tol: f64,
}

impl Default for MklOptions {
    fn default() -> Self {
        Self {
            beta_tol: 1e-5,
            objective_rel_tol: 1e-7,
            max_outer: 200,
            svm_tol: 1e-5,
            inner_svm_tol: 1e-10,
        }
    }
}

/// Result of the joint optimization over `α`, `b` and `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct MklSolution {
    pub svm: SvmSolution,
    pub betas: Vec<f64>,
    pub p: PNorm,
    pub c: f64,
    /// Min-max objective at each outer iterate.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Set when every view norm vanished and `β` could not be updated.
    pub stagnated: bool,
}

impl MklSolution {
    /// Kernel weights with entries below [`REPORT_ZERO`] set to zero.
    pub fn reported_betas(&self) -> Vec<f64> {
        self.betas
            .iter()
            .map(|&b| if b < REPORT_ZERO { 0.0 } else { b })
            .collect()
    }
}

/// Jointly trains the SVM and the kernel weights.
pub fn mkl_train(
    stack: &KernelStack,
    labels: &[Label],
    c: f64,
    p: PNorm,
    opts: &MklOptions,
) -> Result<MklSolution> {
    let p = p.validate()?;
    if labels.len() != stack.n() {
        return Err(mismatch(format_args!("{} labels", stack.n()), labels.len()));
    }
    let m = stack.views();

    // single solve: one view (β = 1 forced) or the max-norm corner
    if m == 1 || p == PNorm::Infinity {
        let betas = vec![1.0; m];
        let k = if m == 1 {
            stack.kernels[0].data.clone()
        } else {
            combine_kernels(stack, &betas)?
        };
        let svm = svm_dual_solve_with(&k, labels, &SvmOptions::new(c).with_tol(opts.svm_tol), None)?;
        return Ok(MklSolution {
            objective_trace: vec![svm.objective],
            svm,
            betas,
            p,
            c,
            iterations: 1,
            converged: true,
            stagnated: false,
        });
    }

    let svm_opts = SvmOptions::new(c).with_tol(opts.inner_svm_tol);
    let mut betas = initial_betas(m, p);
    let mut trace = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    let mut last_delta = f64::INFINITY;
    let mut converged = false;
    let mut stagnated = false;
    let mut svm;
    let mut iterations = 0;
    loop {
        let k = combine_kernels(stack, &betas)?;
        svm = svm_dual_solve_with(&k, labels, &svm_opts, warm.as_deref())?;
        iterations += 1;
        let obj = dual_objective(&k, labels, &svm.alphas);
        let rel_change = trace
            .last()
            .map(|&prev: &f64| (prev - obj).abs() / prev.abs().max(1e-300))
            .unwrap_or(f64::INFINITY);
        trace.push(obj);
        if last_delta <= opts.beta_tol && rel_change <= opts.objective_rel_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_outer {
            log::warn!("MKL did not converge in {iterations} outer iterations");
            break;
        }
        let norms = weight_norms(stack, labels, &svm.alphas, &betas);
        let Some(next) = beta_update(&norms, p) else {
            log::warn!("all per-view weight norms vanished; keeping kernel weights");
            stagnated = true;
            converged = true;
            break;
        };
        last_delta = next
            .iter()
            .zip(&betas)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        betas = next;
        warm = Some(svm.alphas.clone());
    }

    Ok(MklSolution {
        svm,
        betas,
        p,
        c,
        objective_trace: trace,
        iterations,
        converged,
        stagnated,
    })
}

/// A trained MKL classifier that keeps its training features for
/// prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct MklModel {
    pub solution: MklSolution,
    pub view_ids: Vec<String>,
    pub norm_factors: Vec<f64>,
    /// One `n × dⱼ` matrix per view.
    pub train_views: Vec<Matrix>,
    pub labels: Vec<Label>,
}

/// Normalized linear kernel stack for per-view feature matrices.
pub fn stack_from_views(views: &[Matrix], view_ids: &[String]) -> Result<KernelStack> {
    if views.len() != view_ids.len() {
        return Err(mismatch(format_args!("{} view ids", views.len()), view_ids.len()));
    }
    let kernels = views
        .iter()
        .map(|v| {
            let rows: Vec<&[f64]> = (0..v.rows()).map(|i| v.row(i)).collect();
            normalize_avg_diag(&linear_kernel(&rows)?)
        })
        .collect::<Result<Vec<KernelMatrix>>>()?;
    KernelStack::new(kernels, view_ids.to_vec())
}

impl MklModel {
    /// Builds the normalized per-view linear kernels and trains.
    pub fn fit(
        train_views: Vec<Matrix>,
        view_ids: Vec<String>,
        labels: &[Label],
        c: f64,
        p: PNorm,
        opts: &MklOptions,
    ) -> Result<Self> {
        let stack = stack_from_views(&train_views, &view_ids)?;
        let solution = mkl_train(&stack, labels, c, p, opts)?;
        Ok(Self {
            solution,
            norm_factors: stack.norm_factors(),
            view_ids,
            train_views,
            labels: labels.to_vec(),
        })
    }

    pub fn betas(&self) -> &[f64] {
        &self.solution.betas
    }

    /// `f(x) = Σᵢ αᵢ yᵢ Σⱼ βⱼ kⱼ(xᵢ, x) + b` for each test point; one
    /// `t × dⱼ` matrix per view.
    pub fn predict(&self, test_views: &[Matrix]) -> Result<Vec<f64>> {
        if test_views.len() != self.train_views.len() {
            return Err(mismatch(
                format_args!("{} views", self.train_views.len()),
                test_views.len(),
            ));
        }
        let t = test_views.first().map_or(0, |v| v.rows());
        let n = self.labels.len();
        let mut combined = Matrix::zeros(t, n);
        for (j, (train, test)) in self.train_views.iter().zip(test_views).enumerate() {
            if test.rows() != t {
                return Err(mismatch(format_args!("{t} test rows"), test.rows()));
            }
            let beta = self.solution.betas[j];
            if beta == 0.0 {
                continue;
            }
            let tr: Vec<&[f64]> = (0..train.rows()).map(|i| train.row(i)).collect();
            let te: Vec<&[f64]> = (0..test.rows()).map(|i| test.row(i)).collect();
            let cross = cross_kernel(&tr, &te, self.norm_factors[j])?;
            combined = if self.train_views.len() == 1 {
                cross
            } else {
                combined.add_scaled(&cross, beta)?
            };
        }
        Ok(self.solution.svm.decisions(&combined, &self.labels))
    }
}

/// Convenience for labels from decision values (ties to `Pos`).
pub fn predict_labels(decisions: &[f64]) -> Vec<Label> {
    decisions.iter().map(|&f| Label::from_decision(f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn equal_norms_give_uniform_weights() {
        for &p in &[1.0, 1.125, 4.0 / 3.0, 2.0, 3.5] {
            let b = beta_update(&[0.7; 4], PNorm::Finite(p)).unwrap();
            let want = math::powf(4.0, -1.0 / PNorm::Finite(p).effective().as_f64());
            for v in &b {
                assert!((v - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn near_l1_concentrates() {
        let b = beta_update(&[1.0, 0.01], PNorm::Finite(1.0)).unwrap();
        assert!(b[1] / b[0] <= 0.11, "{b:?}");
    }

    #[test]
    fn unit_norm_after_update() {
        let s = [0.3, 2.0, 0.0, 5.5];
        for &p in &[1.0, 1.125, 1.333, 2.0, 7.0] {
            let pn = PNorm::Finite(p);
            let b = beta_update(&s, pn).unwrap();
            assert!((pn.effective().norm(&b) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn stagnation_and_infinity() {
        assert!(beta_update(&[0.0, 0.0], PNorm::Finite(2.0)).is_none());
        assert_eq!(beta_update(&[0.0, 3.0], PNorm::Infinity).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn combine_selector_and_null() {
        let k1 = KernelMatrix { data: Matrix::identity(2), norm_factor: 1.0 };
        let k2 = KernelMatrix {
            data: Matrix::from_rows(&[[1.0, 0.5], [0.5, 1.0]]).unwrap(),
            norm_factor: 1.0,
        };
        let stack = KernelStack::new(vec![k1, k2], vec!["a".to_string(), "b".to_string()]).unwrap();
        assert_eq!(combine_kernels(&stack, &[1.0, 0.0]).unwrap(), Matrix::identity(2));
        assert_eq!(combine_kernels(&stack, &[0.0, 0.0]).unwrap(), Matrix::zeros(2, 2));
        assert!(combine_kernels(&stack, &[-0.1, 1.0]).is_err());
        assert!(combine_kernels(&stack, &[1.0]).is_err());
    }

    #[test]
    fn p_validation() {
        assert!(PNorm::Finite(0.5).validate().is_err());
        assert!(PNorm::Finite(f64::NAN).validate().is_err());
        assert_eq!(PNorm::Finite(1.0).effective(), PNorm::Finite(P_ONE_SUBSTITUTE));
    }
}
