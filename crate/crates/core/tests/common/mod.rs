#![allow(dead_code)]

use mklcsp_core::linalg::CovMatrix;
use mklcsp_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// `G Gᵀ / n + shift·I`, strictly positive definite for `shift > 0`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> CovMatrix {
    let g = gaussian(rng, n, n + 2);
    let mut m = g.matmul(&g.transpose()).unwrap().scaled(1.0 / n as f64);
    for i in 0..n {
        m[(i, i)] += shift;
    }
    m.symmetrize();
    CovMatrix::new(m).unwrap()
}

pub fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut s = 0.0;
            for k in 0..a.cols() {
                s += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = s;
        }
    }
    out
}
