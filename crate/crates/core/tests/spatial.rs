mod common;

use std::collections::BTreeMap;

use common::{gaussian, naive_matmul, random_spd, rng};
use mklcsp_core::linalg::CovMatrix;
use mklcsp_core::signal::{Label, Trial};
use mklcsp_core::spatial::{
    activity_patterns, class_similarity, composite_covariance, fit_ccsp, fit_csp, log_variance_features,
    multi_view_features, similarity_weights, ClassCovariances, FilterBank, SimilarityWeights, FILTERS,
};
use mklcsp_core::Matrix;
use proptest::prelude::*;

fn trials(seed: u64, n: usize, ch: usize, len: usize) -> Vec<Trial> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let mut data = gaussian(&mut r, ch, len);
            // give the classes different power on the first channel
            let boost = if i % 2 == 0 { 3.0 } else { 1.0 };
            data.row_mut(0).iter_mut().for_each(|v| *v *= boost);
            Trial {
                data,
                label: if i % 2 == 0 { Label::Pos } else { Label::Neg },
            }
        })
        .collect()
}

fn same_up_to_sign(a: &Matrix, b: &Matrix) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.cols() {
        let (x, y) = (a.column(j), b.column(j));
        let plus = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let minus = x.iter().zip(&y).map(|(p, q)| (p + q).abs()).fold(0.0, f64::max);
        worst = worst.max(plus.min(minus));
    }
    worst
}

#[test]
fn swapping_classes_inverts_eigenvalues() {
    let mut r = rng(20);
    let c1 = random_spd(&mut r, 8, 0.2);
    let c2 = random_spd(&mut r, 8, 0.2);
    let ab = fit_csp("s", &c1, &c2).unwrap();
    let ba = fit_csp("s", &c2, &c1).unwrap();
    for k in 0..FILTERS {
        let inv = 1.0 / ba.eigenvalues[FILTERS - 1 - k];
        assert!((ab.eigenvalues[k] - inv).abs() <= 1e-6 * inv.abs(), "{k}");
    }
}

#[test]
fn composite_matches_elementwise_blend() {
    let mut r = rng(21);
    let target = random_spd(&mut r, 6, 0.1);
    let others: BTreeMap<String, CovMatrix> =
        ["a", "b", "c"].iter().map(|k| (k.to_string(), random_spd(&mut r, 6, 0.1))).collect();
    let w = similarity_weights("t", &target, &others).unwrap();
    let lambda = 0.3;
    let got = composite_covariance(&target, &others, &w, lambda).unwrap();
    for i in 0..6 {
        for j in 0..6 {
            let mut want = (1.0 - lambda) * target.matrix()[(i, j)];
            for (id, c) in &others {
                want += lambda * w.weights[id] * c.matrix()[(i, j)];
            }
            assert!((got.matrix()[(i, j)] - want).abs() < 1e-12);
        }
    }
    let total: f64 = w.weights.values().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn ccsp_at_zero_lambda_is_csp() {
    let ts = trials(22, 40, 8, 100);
    let refs: Vec<&Trial> = ts.iter().collect();
    let target = ClassCovariances::estimate(&refs).unwrap();
    let mut others = BTreeMap::new();
    for (k, seed) in [("a", 23), ("b", 24)] {
        let o = trials(seed, 20, 8, 100);
        let orefs: Vec<&Trial> = o.iter().collect();
        others.insert(k.to_string(), ClassCovariances::estimate(&orefs).unwrap());
    }
    let sim = class_similarity("t", &target, &others).unwrap();
    let ccsp = fit_ccsp("t", &target, &others, &sim, 0.0).unwrap();
    let csp = fit_csp("t", &target.pos, &target.neg).unwrap();
    assert!(same_up_to_sign(&ccsp.filters, &csp.filters) <= 1e-10);
}

#[test]
fn full_weight_on_one_subject_reproduces_its_csp() {
    let mut r = rng(25);
    let mk = |r: &mut _| ClassCovariances {
        pos: random_spd(r, 7, 0.1),
        neg: random_spd(r, 7, 0.1),
    };
    let target = mk(&mut r);
    let others: BTreeMap<String, ClassCovariances> =
        [("a".to_string(), mk(&mut r)), ("b".to_string(), mk(&mut r))].into_iter().collect();
    let one_hot = |class| SimilarityWeights {
        target: "t".into(),
        weights: [("a".to_string(), 1.0), ("b".to_string(), 0.0)].into_iter().collect(),
        clamped: class,
    };
    let sim = mklcsp_core::spatial::ClassSimilarity {
        pos: one_hot(vec![]),
        neg: one_hot(vec![]),
    };
    let got = fit_ccsp("t", &target, &others, &sim, 1.0).unwrap();
    let want = fit_csp("a", &others["a"].pos, &others["a"].neg).unwrap();
    assert!(same_up_to_sign(&got.filters, &want.filters) <= 1e-8);
}

/// Explicit double loop over filter outputs.
fn log_var_oracle(w: &Matrix, x: &Matrix) -> Vec<f64> {
    let (ch, n) = x.shape();
    (0..w.cols())
        .map(|k| {
            let z: Vec<f64> = (0..n).map(|t| (0..ch).map(|c| w[(c, k)] * x[(c, t)]).sum()).collect();
            let mean = z.iter().sum::<f64>() / n as f64;
            (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).ln()
        })
        .collect()
}

#[test]
fn log_variance_matches_loop_oracle() {
    let mut r = rng(26);
    let bank = FilterBank {
        subject_id: "s".into(),
        filters: gaussian(&mut r, 5, FILTERS),
        eigenvalues: [0.0; FILTERS],
    };
    let trial = Trial {
        data: gaussian(&mut r, 5, 80),
        label: Label::Pos,
    };
    let got = log_variance_features(&bank, &trial).unwrap();
    for (a, b) in got.values.iter().zip(log_var_oracle(&bank.filters, &trial.data)) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn multi_view_dimensions() {
    let mut r = rng(27);
    let banks: Vec<FilterBank> = (0..10)
        .map(|i| FilterBank {
            subject_id: format!("S{i}"),
            filters: gaussian(&mut r, 8, FILTERS),
            eigenvalues: [0.0; FILTERS],
        })
        .collect();
    let ts = trials(28, 150, 8, 30);
    let bank_refs: Vec<&FilterBank> = banks.iter().collect();
    let trial_refs: Vec<&Trial> = ts.iter().collect();
    let fv = multi_view_features(&bank_refs, &trial_refs).unwrap();
    assert_eq!(fv.len(), 150);
    assert!(fv.iter().all(|f| f.values.len() == 60 && f.views() == 10));
    let direct = log_variance_features(&banks[4], &ts[9]).unwrap();
    assert_eq!(fv[9].block(4), &direct.values[..]);
    assert_eq!(fv[9].label, ts[9].label);
}

#[test]
fn patterns_are_biorthogonal_to_filters() {
    let mut r = rng(29);
    let c1 = random_spd(&mut r, 9, 0.1);
    let c2 = random_spd(&mut r, 9, 0.1);
    let bank = fit_csp("s", &c1, &c2).unwrap();
    let cavg = CovMatrix::weighted_sum([(0.5, &c1), (0.5, &c2)], 9).unwrap();
    let a = activity_patterns(&bank, &cavg).unwrap();
    let wta = naive_matmul(&bank.filters.transpose(), &a);
    assert!(wta.max_abs_diff(&Matrix::identity(FILTERS)) < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn composite_is_affine_in_lambda(seed in any::<u64>(), lambda in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let target = random_spd(&mut r, 5, 0.1);
        let others: BTreeMap<String, CovMatrix> =
            ["x", "y"].iter().map(|k| (k.to_string(), random_spd(&mut r, 5, 0.1))).collect();
        let w = similarity_weights("t", &target, &others).unwrap();
        let at = |l| composite_covariance(&target, &others, &w, l).unwrap().into_matrix();
        let want = at(0.0).scaled(1.0 - lambda).add_scaled(&at(1.0), lambda).unwrap();
        prop_assert!(at(lambda).max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn features_ignore_channel_offsets(seed in any::<u64>(), offset in -50.0f64..50.0) {
        let mut r = rng(seed);
        let bank = FilterBank {
            subject_id: "s".into(),
            filters: gaussian(&mut r, 6, FILTERS),
            eigenvalues: [0.0; FILTERS],
        };
        let data = gaussian(&mut r, 6, 60);
        let mut shifted = data.clone();
        for c in 0..6 {
            let o = offset * (c as f64 + 1.0);
            shifted.row_mut(c).iter_mut().for_each(|v| *v += o);
        }
        let a = log_variance_features(&bank, &Trial { data, label: Label::Pos }).unwrap();
        let b = log_variance_features(&bank, &Trial { data: shifted, label: Label::Pos }).unwrap();
        for (x, y) in a.values.iter().zip(b.values) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }
}
