//! Dual soft-margin SVM solved by sequential minimal optimization.
//!
//! The dual is written as a minimization,
//!
//! ```text
//! min_α  ½ αᵀQα − 1ᵀα    s.t.  0 ≤ αᵢ ≤ C,  yᵀα = 0,    Q = (y yᵀ) ∘ K
//! ```
//!
//! and two variables are updated per step, chosen by the maximal-violating
//! pair with second-order gain for the partner (the working-set rule used
//! by LIBSVM). The decision function is `f(x) = Σ αᵢ yᵢ k(xᵢ, x) + b`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{mismatch, Error, Result};
use crate::matrix::{dot, Matrix};
use crate::signal::Label;

const TAU: f64 = 1e-12;
/// Relative distance to a box bound below which a multiplier is put on it.
const BOUND_SNAP: f64 = 1e-12;

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmOptions {
    pub c: f64,
    /// Stop once the maximal KKT violation `m(α) − M(α)` is at most this.
    pub tol: f64,
    pub max_iter: usize,
}

impl SvmOptions {
    pub fn new(c: f64) -> Self {
        Self {
            c,
            tol: 1e-5,
            max_iter: 10_000_000,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Output of [`svm_dual_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SvmSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// Dual objective `Σαᵢ − ½ Σ αᵢα_l yᵢy_l K_il` (to be maximized).
    pub objective: f64,
    pub support: Vec<usize>,
    pub iterations: usize,
    /// Final KKT violation.
    pub violation: f64,
    pub converged: bool,
}

impl SvmSolution {
    /// Decision value for one row of kernel values against the training set.
    pub fn decision(&self, kernel_row: &[f64], labels: &[Label]) -> f64 {
        let mut f = self.bias;
        for ((&a, &k), y) in self.alphas.iter().zip(kernel_row).zip(labels) {
            if a != 0.0 {
                f += a * y.sign() * k;
            }
        }
        f
    }

    /// Decision values for every row of a `t × n` cross kernel.
    pub fn decisions(&self, cross: &Matrix, labels: &[Label]) -> Vec<f64> {
        (0..cross.rows())
            .map(|r| self.decision(cross.row(r), labels))
            .collect()
    }
}

/// `Σαᵢ − ½ αᵀ(yyᵀ∘K)α`.
pub fn dual_objective(k: &Matrix, labels: &[Label], alphas: &[f64]) -> f64 {
    let n = alphas.len();
    let ya: Vec<f64> = alphas.iter().zip(labels).map(|(a, y)| a * y.sign()).collect();
    let mut quad = 0.0;
    for i in 0..n {
        if ya[i] != 0.0 {
            quad += ya[i] * dot(k.row(i), &ya);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

fn check_problem(k: &Matrix, labels: &[Label], c: f64) -> Result<()> {
    let n = labels.len();
    if k.shape() != (n, n) {
        return Err(mismatch(
            format_args!("{n}x{n} kernel"),
            format_args!("{}x{}", k.rows(), k.cols()),
        ));
    }
    if n < 2 || !labels.contains(&Label::Pos) || !labels.contains(&Label::Neg) {
        return Err(Error::InvalidParameter(
            "SVM training needs at least one example of each class".into(),
        ));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("C must be positive, got {c}")));
    }
    if !k.is_finite() {
        return Err(Error::NonFinite("kernel".into()));
    }
    Ok(())
}

/// Solves the dual with default tolerance `1e-5`.
pub fn svm_dual_solve(k: &Matrix, labels: &[Label], c: f64) -> Result<SvmSolution> {
    svm_dual_solve_with(k, labels, &SvmOptions::new(c), None)
}

/// Solves the dual, optionally warm-started from a feasible `α`.
pub fn svm_dual_solve_with(
    k: &Matrix,
    labels: &[Label],
    opts: &SvmOptions,
    warm_start: Option<&[f64]>,
) -> Result<SvmSolution> {
    check_problem(k, labels, opts.c)?;
    let n = labels.len();
    let c = opts.c;
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();

    let mut alpha = match warm_start {
        Some(a) if a.len() == n => a.iter().map(|v| v.clamp(0.0, c)).collect(),
        Some(a) => return Err(mismatch(format_args!("{n} warm-start values"), a.len())),
        None => vec![0.0; n],
    };
    // the clamp may break yᵀα = 0; fall back to zero in that case
    if dot(&alpha, &y).abs() > 1e-10 * c * n as f64 {
        alpha = vec![0.0; n];
    }

    let q = |i: usize, j: usize| y[i] * y[j] * k[(i, j)];
    let mut grad = vec![-1.0; n];
    for (i, &a) in alpha.iter().enumerate() {
        if a != 0.0 {
            for (t, g) in grad.iter_mut().enumerate() {
                *g += q(i, t) * a;
            }
        }
    }

    let is_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let is_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let mut violation;
    loop {
        // i: maximal −y∇f over I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if is_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_gain = f64::INFINITY;
        for t in 0..n {
            if !is_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            if i_sel == usize::MAX {
                continue;
            }
            let b = gmax - v;
            if b > 0.0 {
                let mut a = k[(i_sel, i_sel)] + k[(t, t)] - 2.0 * k[(i_sel, t)];
                if a <= 0.0 {
                    a = TAU;
                }
                let gain = -(b * b) / a;
                if gain < best_gain {
                    best_gain = gain;
                    j_sel = t;
                }
            }
        }
        violation = if gmax.is_finite() && gmin.is_finite() {
            gmax - gmin
        } else {
            0.0
        };
        if violation <= opts.tol || j_sel == usize::MAX || iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = q(i, j);
        let (qii, qjj) = (k[(i, i)], k[(j, j)]);
        if y[i] != y[j] {
            let mut quad = qii + qjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qii + qjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        // rounding can leave a multiplier one ulp inside a bound, which
        // would wrongly count it as a free support vector for the bias
        for t in [i, j] {
            if alpha[t] < BOUND_SNAP * c {
                alpha[t] = 0.0;
            } else if alpha[t] > c * (1.0 - BOUND_SNAP) {
                alpha[t] = c;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(i, t) * di + q(j, t) * dj;
        }
    }

    let bias = bias_from_kkt(&alpha, &y, &grad, c);
    let objective = dual_objective(k, labels, &alpha);
    if !objective.is_finite() {
        return Err(Error::NonFinite("SVM objective".into()));
    }
    let support = (0..n).filter(|&i| alpha[i] > 0.0).collect();
    let converged = violation <= opts.tol;
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations with violation {violation:e}");
    }
    Ok(SvmSolution {
        alphas: alpha,
        bias,
        objective,
        support,
        iterations,
        violation,
        converged,
    })
}

/// Bias from free support vectors, or the midpoint of the feasible interval
/// when every multiplier sits at a bound.
fn bias_from_kkt(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        0.5 * (upper + lower)
    };
    -rho
}
