mod common;

use common::{gaussian, naive_matmul, random_spd, rng};
use mklcsp_core::linalg::{
    class_covariance, gen_eig_sym, kl_gaussian, regularize_spd, sym_eig, trial_covariance, CovMatrix,
    Gaussian,
};
use mklcsp_core::Matrix;
use proptest::prelude::*;

/// Textbook double loop: Σ_t x_i(t) x_j(t), then divide by the trace.
fn covariance_oracle(x: &Matrix) -> Matrix {
    let (ch, n) = x.shape();
    let mut c = Matrix::zeros(ch, ch);
    for i in 0..ch {
        for j in 0..ch {
            let mut s = 0.0;
            for t in 0..n {
                s += x[(i, t)] * x[(j, t)];
            }
            c[(i, j)] = s;
        }
    }
    let tr: f64 = (0..ch).map(|i| c[(i, i)]).sum();
    c.scaled(1.0 / tr)
}

#[test]
fn trial_covariance_matches_double_loop() {
    let mut r = rng(1);
    let x = gaussian(&mut r, 3, 200);
    let c = trial_covariance(&x).unwrap();
    assert!(c.matrix().max_abs_diff(&covariance_oracle(&x)) < 1e-12);
    assert!((c.matrix().trace() - 1.0).abs() < 1e-12);
    assert_eq!(c.matrix().asymmetry(), 0.0);
}

#[test]
fn class_covariance_matches_elementwise_mean() {
    let mut r = rng(2);
    let trials: Vec<Matrix> = (0..10).map(|_| gaussian(&mut r, 4, 50)).collect();
    let refs: Vec<&Matrix> = trials.iter().collect();
    let got = class_covariance(&refs).unwrap();
    let mut want = Matrix::zeros(4, 4);
    for t in &trials {
        let c = covariance_oracle(t);
        for i in 0..4 {
            for j in 0..4 {
                want[(i, j)] += c[(i, j)] / 10.0;
            }
        }
    }
    assert!(got.matrix().max_abs_diff(&want) < 1e-12);
}

#[test]
fn regularized_rank_deficient_floor() {
    let mut r = rng(3);
    // rank 2 in 5 dimensions
    let g = gaussian(&mut r, 5, 2);
    let mut m = g.matmul(&g.transpose()).unwrap();
    m.symmetrize();
    let c = CovMatrix::new(m).unwrap();
    let eps = 0.05;
    let reg = regularize_spd(&c, eps);
    let (ev, _) = sym_eig(reg.matrix()).unwrap();
    let floor = eps * c.mean_diag();
    let smallest = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(smallest >= floor - 1e-12, "{smallest} < {floor}");
}

fn pencil_checks(c1: &CovMatrix, c2: &CovMatrix) -> (f64, f64) {
    let res = gen_eig_sym(c1, c2).unwrap();
    let w = &res.eigenvectors;
    let lhs = naive_matmul(c1.matrix(), w);
    let mut rhs = naive_matmul(c2.matrix(), w);
    for j in 0..w.cols() {
        for i in 0..w.rows() {
            rhs[(i, j)] *= res.eigenvalues[j];
        }
    }
    let residual = lhs.add_scaled(&rhs, -1.0).unwrap().frobenius_norm() / c1.matrix().frobenius_norm();
    let gram = naive_matmul(&w.transpose(), &naive_matmul(c2.matrix(), w));
    let ortho = gram.add_scaled(&Matrix::identity(w.cols()), -1.0).unwrap().frobenius_norm();
    (residual, ortho)
}

#[test]
fn random_pencil_dim8() {
    let mut r = rng(4);
    let c1 = random_spd(&mut r, 8, 0.1);
    let c2 = random_spd(&mut r, 8, 0.1);
    let (residual, ortho) = pencil_checks(&c1, &c2);
    assert!(residual <= 1e-8, "{residual}");
    assert!(ortho <= 1e-8, "{ortho}");
    let res = gen_eig_sym(&c1, &c2).unwrap();
    assert!(res.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(res.eigenvalues.len(), 8);
}

#[test]
fn eigenvector_sign_is_canonical() {
    let mut r = rng(5);
    let c1 = random_spd(&mut r, 6, 0.1);
    let c2 = random_spd(&mut r, 6, 0.1);
    let res = gen_eig_sym(&c1, &c2).unwrap();
    for j in 0..6 {
        let col = res.eigenvectors.column(j);
        let big = col.iter().cloned().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        assert!(big > 0.0);
    }
}

#[test]
fn kl_identical_is_computed_zero() {
    let mut r = rng(6);
    for _ in 0..10 {
        let c = random_spd(&mut r, 7, 0.05);
        let mean: Vec<f64> = gaussian(&mut r, 1, 7).into_vec();
        let g = Gaussian::new(mean, c).unwrap();
        assert!(kl_gaussian(&g, &g).unwrap().abs() <= 1e-10);
    }
}

#[test]
fn kl_matches_explicit_inverse_formula() {
    use mklcsp_core::linalg::{log_det_spd, spd_inverse};
    let mut r = rng(7);
    let a = random_spd(&mut r, 5, 0.2);
    let b = random_spd(&mut r, 5, 0.2);
    let mu0: Vec<f64> = gaussian(&mut r, 1, 5).into_vec();
    let mu1: Vec<f64> = gaussian(&mut r, 1, 5).into_vec();
    let inv = spd_inverse(b.matrix()).unwrap();
    let tr = naive_matmul(&inv, a.matrix()).trace();
    let d: Vec<f64> = mu1.iter().zip(&mu0).map(|(x, y)| x - y).collect();
    let quad: f64 = (0..5).map(|i| (0..5).map(|j| d[i] * inv[(i, j)] * d[j]).sum::<f64>()).sum();
    let want = 0.5
        * (tr + quad - (log_det_spd(a.matrix()).unwrap() - log_det_spd(b.matrix()).unwrap()) - 5.0);
    let got = kl_gaussian(
        &Gaussian::new(mu0, a).unwrap(),
        &Gaussian::new(mu1, b).unwrap(),
    )
    .unwrap();
    assert!((got - want).abs() < 1e-10 * want.abs().max(1.0));
}

#[test]
fn kl_rejects_indefinite() {
    let bad = CovMatrix::new(Matrix::from_diag(&[1.0, -1.0])).unwrap();
    let a = Gaussian::zero_mean(CovMatrix::identity(2));
    assert!(kl_gaussian(&a, &Gaussian::zero_mean(bad)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pencil_invariants_hold(seed in any::<u64>(), n in 2usize..16) {
        let mut r = rng(seed);
        let c1 = random_spd(&mut r, n, 0.01);
        let c2 = random_spd(&mut r, n, 0.05);
        let (residual, ortho) = pencil_checks(&c1, &c2);
        prop_assert!(residual <= 1e-8, "residual {}", residual);
        prop_assert!(ortho <= 1e-8, "orthonormality {}", ortho);
    }

    #[test]
    fn congruence_preserves_spectrum(seed in any::<u64>(), n in 2usize..10) {
        let mut r = rng(seed);
        let c1 = random_spd(&mut r, n, 0.1);
        let c2 = random_spd(&mut r, n, 0.1);
        let mut t = gaussian(&mut r, n, n);
        for i in 0..n {
            t[(i, i)] += 3.0;
        }
        let congruent = |c: &CovMatrix| {
            let mut m = naive_matmul(&t.transpose(), &naive_matmul(c.matrix(), &t));
            m.symmetrize();
            CovMatrix::new(m).unwrap()
        };
        let base = gen_eig_sym(&c1, &c2).unwrap();
        let moved = gen_eig_sym(&congruent(&c1), &congruent(&c2)).unwrap();
        for (a, b) in base.eigenvalues.iter().zip(&moved.eigenvalues) {
            prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{} vs {}", a, b);
        }
    }

    #[test]
    fn kl_nonnegative(seed in any::<u64>(), n in 1usize..8) {
        let mut r = rng(seed);
        let a = Gaussian::new(gaussian(&mut r, 1, n).into_vec(), random_spd(&mut r, n, 0.05)).unwrap();
        let b = Gaussian::new(gaussian(&mut r, 1, n).into_vec(), random_spd(&mut r, n, 0.05)).unwrap();
        prop_assert!(kl_gaussian(&a, &b).unwrap() >= -1e-10);
    }

    #[test]
    fn trial_covariance_unit_trace(seed in any::<u64>(), ch in 1usize..8, n in 2usize..60) {
        let mut r = rng(seed);
        let x = gaussian(&mut r, ch, n);
        let c = trial_covariance(&x).unwrap();
        prop_assert!((c.matrix().trace() - 1.0).abs() <= 1e-12);
        prop_assert_eq!(c.matrix().asymmetry(), 0.0);
    }
}
