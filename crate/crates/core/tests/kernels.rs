mod common;

use common::{gaussian, rng};
use mklcsp_core::kernels::{build_stack, cross_kernel, linear_kernel, normalize_avg_diag};
use mklcsp_core::signal::Label;
use mklcsp_core::spatial::FeatureVector;
use proptest::prelude::*;

fn rows(m: &mklcsp_core::Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

#[test]
fn linear_kernel_matches_elementwise_sum() {
    let mut r = rng(30);
    let x = rows(&gaussian(&mut r, 12, 6));
    let k = linear_kernel(&x).unwrap();
    for i in 0..12 {
        for l in 0..12 {
            let s: f64 = x[i].iter().zip(&x[l]).map(|(a, b)| a * b).sum();
            assert!((k.data[(i, l)] - s).abs() < 1e-12);
        }
    }
    assert_eq!(k.data.asymmetry(), 0.0);
}

#[test]
fn normalized_kernel_has_unit_mean_diagonal() {
    let mut r = rng(31);
    let x = rows(&gaussian(&mut r, 9, 4).scaled(3.7));
    let k = normalize_avg_diag(&linear_kernel(&x).unwrap()).unwrap();
    assert!((k.data.trace() / 9.0 - 1.0).abs() < 1e-12);
}

#[test]
fn cross_kernel_on_training_set_reproduces_normalized_kernel() {
    let mut r = rng(32);
    let x = rows(&gaussian(&mut r, 10, 6));
    let k = normalize_avg_diag(&linear_kernel(&x).unwrap()).unwrap();
    let cross = cross_kernel(&x, &x, k.norm_factor).unwrap();
    assert!(cross.max_abs_diff(&k.data) < 1e-12);
}

#[test]
fn stack_views_are_independent_kernels() {
    let mut r = rng(33);
    let feats: Vec<FeatureVector> = (0..8)
        .map(|i| FeatureVector {
            values: gaussian(&mut r, 1, 18).into_vec(),
            label: if i % 2 == 0 { Label::Pos } else { Label::Neg },
        })
        .collect();
    let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let stack = build_stack(&feats, &ids).unwrap();
    assert_eq!(stack.views(), 3);
    for j in 0..3 {
        let block: Vec<&[f64]> = feats.iter().map(|f| &f.values[6 * j..6 * j + 6]).collect();
        let want = normalize_avg_diag(&linear_kernel(&block).unwrap()).unwrap();
        assert_eq!(stack.kernels[j], want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn normalization_removes_feature_scale(seed in any::<u64>(), c in 1e-3f64..1e3) {
        let mut r = rng(seed);
        let x = rows(&gaussian(&mut r, 7, 5));
        let scaled: Vec<Vec<f64>> = x.iter().map(|v| v.iter().map(|a| a * c).collect()).collect();
        let a = normalize_avg_diag(&linear_kernel(&x).unwrap()).unwrap();
        let b = normalize_avg_diag(&linear_kernel(&scaled).unwrap()).unwrap();
        prop_assert!(a.data.max_abs_diff(&b.data) < 1e-12);
    }
}
