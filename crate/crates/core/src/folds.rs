//! Stratified k-fold partitions.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::signal::Label;

/// Splits `0..labels.len()` into `k` disjoint folds with per-class counts
/// differing by at most one between folds. Deterministic for a given seed.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = alloc::vec![Vec::new(); k];
    let mut next = 0usize;
    for class in [Label::Pos, Label::Neg] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < k {
            return Err(Error::InvalidParameter(format!(
                "class {} has {} members, fewer than {k} folds",
                class.as_i8(),
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Indices not in `fold`, in ascending order.
pub fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut mask = alloc::vec![false; n];
    for &i in fold {
        mask[i] = true;
    }
    (0..n).filter(|&i| !mask[i]).collect()
}
