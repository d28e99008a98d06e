//! CSP filter estimation, composite-CSP covariance regularization,
//! log-variance features and activity patterns.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{mismatch, Error, Result};
use crate::linalg::{
    gen_eig_sym, kl_gaussian, regularize_spd, spd_inverse, CovMatrix, Gaussian, KL_EPS, PENCIL_EPS,
};
use crate::math;
use crate::matrix::Matrix;
use crate::signal::{Label, Trial};

/// Filters kept per subject: three from each end of the spectrum.
pub const FILTERS_PER_END: usize = 3;
pub const FILTERS: usize = 2 * FILTERS_PER_END;

/// Floor applied to filtered-signal variance before taking the log.
pub const VARIANCE_FLOOR: f64 = 1e-300;
/// Smallest KL value used in similarity weights.
pub const KL_FLOOR: f64 = 1e-12;

/// Per-class pair of covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCovariances {
    pub pos: CovMatrix,
    pub neg: CovMatrix,
}

impl ClassCovariances {
    pub fn get(&self, label: Label) -> &CovMatrix {
        match label {
            Label::Pos => &self.pos,
            Label::Neg => &self.neg,
        }
    }

    /// Class covariances of a labelled trial set.
    pub fn estimate(trials: &[&Trial]) -> Result<Self> {
        let pick = |label| -> Vec<&Matrix> {
            trials
                .iter()
                .filter(|t| t.label == label)
                .map(|t| &t.data)
                .collect()
        };
        Ok(Self {
            pos: crate::linalg::class_covariance(&pick(Label::Pos))?,
            neg: crate::linalg::class_covariance(&pick(Label::Neg))?,
        })
    }

    /// `(C₊ + C₋)/2`.
    pub fn average(&self) -> Result<CovMatrix> {
        CovMatrix::weighted_sum([(0.5, &self.pos), (0.5, &self.neg)], self.pos.channels())
    }
}

/// Six CSP filters of one subject with the eigenvalues they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub subject_id: String,
    /// `channels × 6`: columns for the three largest eigenvalues, then the
    /// three smallest.
    pub filters: Matrix,
    pub eigenvalues: [f64; FILTERS],
}

impl FilterBank {
    pub fn channels(&self) -> usize {
        self.filters.rows()
    }
}

/// Normalized inverse-KL similarity of other subjects to a target, for one
/// class.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityWeights {
    pub target: String,
    pub weights: BTreeMap<String, f64>,
    /// Subjects whose KL had to be clamped to [`KL_FLOOR`].
    pub clamped: Vec<String>,
}

/// Per-class similarity weights used by composite CSP.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSimilarity {
    pub pos: SimilarityWeights,
    pub neg: SimilarityWeights,
}

/// Solves the CSP pencil `(C₊, C₋)` and keeps the three largest- and three
/// smallest-eigenvalue filters.
pub fn fit_csp(subject_id: &str, c1: &CovMatrix, c2: &CovMatrix) -> Result<FilterBank> {
    let n = c1.channels();
    if n < FILTERS {
        return Err(Error::InvalidParameter(format!(
            "need at least {FILTERS} channels to select {FILTERS_PER_END}+{FILTERS_PER_END} filters, have {n}"
        )));
    }
    let eig = gen_eig_sym(c1, &regularize_spd(c2, PENCIL_EPS))?;
    let keep: Vec<usize> = (0..FILTERS_PER_END).chain(n - FILTERS_PER_END..n).collect();
    let mut eigenvalues = [0.0; FILTERS];
    for (slot, &k) in eigenvalues.iter_mut().zip(&keep) {
        *slot = eig.eigenvalues[k];
    }
    let filters = eig.eigenvectors.select_columns(&keep);
    if !filters.is_finite() {
        return Err(Error::NonFinite("CSP filters".into()));
    }
    Ok(FilterBank {
        subject_id: subject_id.into(),
        filters,
        eigenvalues,
    })
}

/// `αⱼ ∝ 1 / KL(Cⱼ ‖ C_target)` between zero-mean Gaussians, normalized to
/// sum to one.
pub fn similarity_weights(
    target_id: &str,
    target_cov: &CovMatrix,
    others: &BTreeMap<String, CovMatrix>,
) -> Result<SimilarityWeights> {
    if others.is_empty() {
        return Err(Error::Empty("other-subject covariance map"));
    }
    let target = Gaussian::zero_mean(regularize_spd(target_cov, KL_EPS));
    let mut inv_kl = BTreeMap::new();
    let mut clamped = Vec::new();
    for (id, cov) in others {
        let other = Gaussian::zero_mean(regularize_spd(cov, KL_EPS));
        let mut kl = kl_gaussian(&other, &target)?;
        if !(kl > KL_FLOOR) {
            log::warn!("KL({id} || {target_id}) = {kl:e}; clamping to {KL_FLOOR:e}");
            kl = KL_FLOOR;
            clamped.push(id.clone());
        }
        inv_kl.insert(id.clone(), 1.0 / kl);
    }
    Ok(SimilarityWeights {
        target: target_id.into(),
        weights: normalize_inverse(inv_kl),
        clamped,
    })
}

/// Normalizes positive scores to sum to one.
pub(crate) fn normalize_inverse(scores: BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let z: f64 = scores.values().sum();
    scores.into_iter().map(|(k, v)| (k, v / z)).collect()
}

/// Similarity weights from raw KL values, as used inside
/// [`similarity_weights`].
pub fn weights_from_kl(kl: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    normalize_inverse(kl.iter().map(|(k, &v)| (k.clone(), 1.0 / v.max(KL_FLOOR))).collect())
}

/// `(1 − λ)·C_target + λ·Σⱼ αⱼ·Cⱼ`.
pub fn composite_covariance(
    target: &CovMatrix,
    others: &BTreeMap<String, CovMatrix>,
    weights: &SimilarityWeights,
    lambda: f64,
) -> Result<CovMatrix> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    if weights.weights.len() != others.len()
        || weights.weights.keys().any(|k| !others.contains_key(k))
    {
        return Err(Error::InvalidParameter(
            "similarity weights must cover exactly the provided subjects".into(),
        ));
    }
    if lambda == 0.0 {
        return Ok(target.clone());
    }
    let n = target.channels();
    let pooled = CovMatrix::weighted_sum(
        others.iter().map(|(id, c)| (weights.weights[id], c)),
        n,
    )?;
    CovMatrix::weighted_sum([(1.0 - lambda, target), (lambda, &pooled)], n)
}

/// Per-class similarity weights of `others` relative to `target`.
pub fn class_similarity(
    target_id: &str,
    target: &ClassCovariances,
    others: &BTreeMap<String, ClassCovariances>,
) -> Result<ClassSimilarity> {
    let per_class = |label| {
        let map: BTreeMap<String, CovMatrix> = others
            .iter()
            .map(|(k, v)| (k.clone(), v.get(label).clone()))
            .collect();
        similarity_weights(target_id, target.get(label), &map)
    };
    Ok(ClassSimilarity {
        pos: per_class(Label::Pos)?,
        neg: per_class(Label::Neg)?,
    })
}

/// Composite CSP: each class covariance of the target is blended with the
/// similarity-weighted covariances of other subjects before solving the
/// pencil.
pub fn fit_ccsp(
    target_id: &str,
    target: &ClassCovariances,
    others: &BTreeMap<String, ClassCovariances>,
    similarity: &ClassSimilarity,
    lambda: f64,
) -> Result<FilterBank> {
    let blend = |label: Label, weights: &SimilarityWeights| {
        let map: BTreeMap<String, CovMatrix> = others
            .iter()
            .map(|(k, v)| (k.clone(), v.get(label).clone()))
            .collect();
        composite_covariance(target.get(label), &map, weights, lambda)
    };
    let pos = blend(Label::Pos, &similarity.pos)?;
    let neg = blend(Label::Neg, &similarity.neg)?;
    fit_csp(target_id, &pos, &neg)
}

/// Log-variance of each spatially filtered time course.
#[derive(Debug, Clone, PartialEq)]
pub struct LogVariance {
    pub values: [f64; FILTERS],
    /// Set when some filter output had zero variance and was floored.
    pub clamped: bool,
}

/// `log(var(Wᵀ·X))` per filter, with mean removal and `1/N` normalization.
pub fn log_variance_features(bank: &FilterBank, trial: &Trial) -> Result<LogVariance> {
    let x = &trial.data;
    if x.rows() != bank.channels() {
        return Err(mismatch(
            format_args!("{} channels", bank.channels()),
            x.rows(),
        ));
    }
    let n = x.cols();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "trial needs at least 2 samples, has {n}"
        )));
    }
    let projected = bank.filters.t_matmul(x)?;
    let mut values = [0.0; FILTERS];
    let mut clamped = false;
    for (k, v) in values.iter_mut().enumerate() {
        let row = projected.row(k);
        let mean = row.iter().sum::<f64>() / n as f64;
        let var = row.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n as f64;
        if !(var > VARIANCE_FLOOR) {
            clamped = true;
        }
        *v = math::ln(var.max(VARIANCE_FLOOR));
    }
    if clamped {
        log::warn!("trial produced zero variance on a filter of {}", bank.subject_id);
    }
    Ok(LogVariance { values, clamped })
}

/// One trial's concatenated features, one 6-block per view.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: Label,
}

impl FeatureVector {
    pub fn block(&self, view: usize) -> &[f64] {
        &self.values[view * FILTERS..(view + 1) * FILTERS]
    }

    pub fn views(&self) -> usize {
        self.values.len() / FILTERS
    }
}

/// Applies each bank to each trial and concatenates the blocks in bank order.
pub fn multi_view_features(banks: &[&FilterBank], trials: &[&Trial]) -> Result<Vec<FeatureVector>> {
    if banks.is_empty() {
        return Err(Error::Empty("filter bank list"));
    }
    trials
        .iter()
        .map(|t| {
            let mut values = Vec::with_capacity(banks.len() * FILTERS);
            for bank in banks {
                values.extend_from_slice(&log_variance_features(bank, t)?.values);
            }
            Ok(FeatureVector {
                values,
                label: t.label,
            })
        })
        .collect()
}

/// Regularization applied to `WᵀCW` when it is singular.
pub const PATTERN_EPS: f64 = 1e-10;

/// Activity patterns `A = C·W·(Wᵀ·C·W)⁻¹` of a filter bank.
pub fn activity_patterns(bank: &FilterBank, cavg: &CovMatrix) -> Result<Matrix> {
    if cavg.channels() != bank.channels() {
        return Err(mismatch(bank.channels(), cavg.channels()));
    }
    let cw = cavg.matrix().matmul(&bank.filters)?;
    let mut gram = bank.filters.t_matmul(&cw)?;
    gram.symmetrize();
    if let Ok(inv) = spd_inverse(&gram) {
        return cw.matmul(&inv);
    }
    log::warn!("WᵀCW is singular for {}; regularizing", bank.subject_id);
    // rank-deficient covariances leave roundoff-sized negative pivots, so
    // the ridge grows until the factorization succeeds
    let scale = gram.diag().iter().fold(1.0f64, |a, d| a.max(d.abs()));
    let mut shift = PATTERN_EPS * scale;
    loop {
        let mut reg = gram.clone();
        for i in 0..reg.rows() {
            reg[(i, i)] += shift;
        }
        match spd_inverse(&reg) {
            Ok(inv) => return cw.matmul(&inv),
            Err(e) if shift >= 1e-2 * scale => return Err(e),
            Err(_) => shift *= 100.0,
        }
    }
}
