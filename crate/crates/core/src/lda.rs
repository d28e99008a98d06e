//! Shrinkage linear discriminant analysis and error rates.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{mismatch, Error, Result};
use crate::linalg::spd_solve;
use crate::matrix::{dot, Matrix};
use crate::signal::Label;

pub const DEFAULT_GAMMA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
}

/// Fits `w = S̃⁻¹(μ₊ − μ₋)`, `b = −wᵀ(μ₊ + μ₋)/2` where `S̃` is the pooled
/// within-class scatter shrunk toward `mean(diag(S))·I` by `gamma`.
pub fn lda_fit<F: AsRef<[f64]>>(features: &[F], labels: &[Label], gamma: f64) -> Result<LdaModel> {
    if features.len() != labels.len() {
        return Err(mismatch(features.len(), labels.len()));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    let d = features.first().map_or(0, |f| f.as_ref().len());
    if d == 0 {
        return Err(Error::Empty("feature vectors"));
    }
    let mut mean_pos = alloc::vec![0.0; d];
    let mut mean_neg = alloc::vec![0.0; d];
    let (mut n_pos, mut n_neg) = (0usize, 0usize);
    for (f, &l) in features.iter().zip(labels) {
        let f = f.as_ref();
        if f.len() != d {
            return Err(mismatch(format_args!("dimension {d}"), f.len()));
        }
        let (acc, count) = match l {
            Label::Pos => (&mut mean_pos, &mut n_pos),
            Label::Neg => (&mut mean_neg, &mut n_neg),
        };
        acc.iter_mut().zip(f).for_each(|(a, x)| *a += x);
        *count += 1;
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidParameter(
            "LDA needs at least one example of each class".into(),
        ));
    }
    mean_pos.iter_mut().for_each(|m| *m /= n_pos as f64);
    mean_neg.iter_mut().for_each(|m| *m /= n_neg as f64);

    let mut scatter = Matrix::zeros(d, d);
    let mut centered = alloc::vec![0.0; d];
    for (f, &l) in features.iter().zip(labels) {
        let mu = if l == Label::Pos { &mean_pos } else { &mean_neg };
        for ((c, x), m) in centered.iter_mut().zip(f.as_ref()).zip(mu) {
            *c = x - m;
        }
        for i in 0..d {
            for j in 0..d {
                scatter[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    let scatter = scatter.scaled(1.0 / (features.len() as f64 - 2.0).max(1.0));
    let nu = scatter.trace() / d as f64;
    let mut shrunk = scatter.scaled(1.0 - gamma);
    for i in 0..d {
        shrunk[(i, i)] += gamma * nu;
    }

    let diff: Vec<f64> = mean_pos.iter().zip(&mean_neg).map(|(a, b)| a - b).collect();
    let weights = spd_solve(&shrunk, &diff).map_err(|e| match e {
        Error::NotPositiveDefinite { pivot, value } => Error::InvalidParameter(format!(
            "within-class scatter is singular (pivot {pivot}, value {value:e}); use gamma > 0"
        )),
        other => other,
    })?;
    let mid: Vec<f64> = mean_pos.iter().zip(&mean_neg).map(|(a, b)| a + b).collect();
    let bias = -0.5 * dot(&weights, &mid);
    Ok(LdaModel {
        weights,
        bias,
        gamma,
    })
}

/// `f = wᵀx + b` per feature vector.
pub fn lda_predict<F: AsRef<[f64]>>(model: &LdaModel, features: &[F]) -> Result<Vec<f64>> {
    features
        .iter()
        .map(|f| {
            let f = f.as_ref();
            if f.len() != model.weights.len() {
                return Err(mismatch(model.weights.len(), f.len()));
            }
            Ok(dot(&model.weights, f) + model.bias)
        })
        .collect()
}

/// Fraction of positions where the two label sequences differ.
pub fn error_rate(predicted: &[Label], truth: &[Label]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(mismatch(truth.len(), predicted.len()));
    }
    if truth.is_empty() {
        return Err(Error::Empty("label sequence"));
    }
    let wrong = predicted.iter().zip(truth).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn error_rate_cases() {
        let a = vec![Label::Pos, Label::Neg, Label::Pos];
        assert_eq!(error_rate(&a, &a).unwrap(), 0.0);
        let flipped: Vec<Label> = a.iter().map(|l| l.flipped()).collect();
        assert_eq!(error_rate(&flipped, &a).unwrap(), 1.0);
        let truth = vec![Label::Pos; 30];
        let mut pred = truth.clone();
        for p in pred.iter_mut().take(3) {
            *p = Label::Neg;
        }
        assert!((error_rate(&pred, &truth).unwrap() - 0.1).abs() < 1e-15);
        assert!(error_rate(&[], &[]).is_err());
        assert!(error_rate(&a, &a[..2]).is_err());
    }

    #[test]
    fn mirrored_classes_have_zero_bias() {
        let x = [[1.0, 2.0], [2.0, 1.5], [1.5, 3.0], [-1.0, -2.0], [-2.0, -1.5], [-1.5, -3.0]];
        let y = [Label::Pos, Label::Pos, Label::Pos, Label::Neg, Label::Neg, Label::Neg];
        let m = lda_fit(&x, &y, 0.05).unwrap();
        assert!(m.bias.abs() < 1e-10);
        let mid = lda_predict(&m, &[[0.0, 0.0]]).unwrap();
        assert!(mid[0].abs() < 1e-10);
    }

    #[test]
    fn singular_scatter_without_shrinkage() {
        // all points of each class identical: zero scatter
        let x = [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]];
        let y = [Label::Pos, Label::Pos, Label::Neg, Label::Neg];
        let err = lda_fit(&x, &y, 0.0).unwrap_err();
        assert!(format!("{err}").contains("gamma > 0"));
        assert!(lda_fit(&x, &y[..3], 0.1).is_err());
        assert!(lda_fit(&x, &[Label::Pos; 4], 0.1).is_err());
    }
}
