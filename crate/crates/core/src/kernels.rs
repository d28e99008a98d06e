//! Linear Gram matrices per view, average-diagonal normalization and
//! train/test cross kernels.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{mismatch, Error, Result};
use crate::matrix::{dot, Matrix};
use crate::spatial::{FeatureVector, FILTERS};

/// An `n × n` Gram matrix and the divisor already applied to it.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub data: Matrix,
    pub norm_factor: f64,
}

impl KernelMatrix {
    pub fn n(&self) -> usize {
        self.data.rows()
    }
}

/// One kernel per view, all over the same `n` training points.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelStack {
    pub kernels: Vec<KernelMatrix>,
    pub view_ids: Vec<String>,
}

impl KernelStack {
    pub fn new(kernels: Vec<KernelMatrix>, view_ids: Vec<String>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::Empty("kernel stack"));
        }
        if kernels.len() != view_ids.len() {
            return Err(mismatch(
                format_args!("{} view ids", kernels.len()),
                view_ids.len(),
            ));
        }
        let n = kernels[0].n();
        if let Some(k) = kernels.iter().find(|k| k.n() != n) {
            return Err(mismatch(format_args!("{n}x{n} kernels"), k.n()));
        }
        Ok(Self { kernels, view_ids })
    }

    pub fn views(&self) -> usize {
        self.kernels.len()
    }

    pub fn n(&self) -> usize {
        self.kernels[0].n()
    }

    pub fn norm_factors(&self) -> Vec<f64> {
        self.kernels.iter().map(|k| k.norm_factor).collect()
    }
}

/// `K[i][l] = ⟨xᵢ, x_l⟩`, unnormalized (`norm_factor = 1`).
pub fn linear_kernel<F: AsRef<[f64]>>(features: &[F]) -> Result<KernelMatrix> {
    let n = features.len();
    if n == 0 {
        return Err(Error::Empty("feature set"));
    }
    let d = features[0].as_ref().len();
    if let Some((i, f)) = features.iter().enumerate().find(|(_, f)| f.as_ref().len() != d) {
        return Err(mismatch(
            format_args!("dimension {d}"),
            format_args!("dimension {} at row {i}", f.as_ref().len()),
        ));
    }
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for l in i..n {
            let v = dot(features[i].as_ref(), features[l].as_ref());
            k[(i, l)] = v;
            k[(l, i)] = v;
        }
    }
    Ok(KernelMatrix {
        data: k,
        norm_factor: 1.0,
    })
}

/// Divides every entry by the mean of the diagonal. The recorded
/// `norm_factor` accumulates the divisors applied so far.
pub fn normalize_avg_diag(k: &KernelMatrix) -> Result<KernelMatrix> {
    let n = k.n();
    if n == 0 {
        return Err(Error::Empty("kernel"));
    }
    let mean = k.data.trace() / n as f64;
    if !(mean > 1e-300) {
        return Err(Error::Degenerate(format!(
            "kernel mean diagonal {mean:e} is not positive"
        )));
    }
    if mean == 1.0 {
        return Ok(k.clone());
    }
    Ok(KernelMatrix {
        data: k.data.scaled(1.0 / mean),
        norm_factor: k.norm_factor * mean,
    })
}

/// `t × n` matrix of test-train inner products divided by the training
/// normalization factor.
pub fn cross_kernel<A: AsRef<[f64]>, B: AsRef<[f64]>>(
    train: &[A],
    test: &[B],
    norm_factor: f64,
) -> Result<Matrix> {
    let d = train.first().map_or(0, |f| f.as_ref().len());
    let check = |f: &[f64]| {
        if f.len() != d {
            Err(mismatch(format_args!("dimension {d}"), f.len()))
        } else {
            Ok(())
        }
    };
    for f in train {
        check(f.as_ref())?;
    }
    for f in test {
        check(f.as_ref())?;
    }
    if !(norm_factor > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "norm factor must be positive, got {norm_factor}"
        )));
    }
    let inv = 1.0 / norm_factor;
    let mut out = Matrix::zeros(test.len(), train.len());
    for (r, x) in test.iter().enumerate() {
        for (c, y) in train.iter().enumerate() {
            out[(r, c)] = dot(x.as_ref(), y.as_ref()) * inv;
        }
    }
    Ok(out)
}

/// Feature block `view` of every vector.
pub fn view_block(features: &[FeatureVector], view: usize) -> Vec<&[f64]> {
    features.iter().map(|f| f.block(view)).collect()
}

/// Builds the normalized per-view kernel stack for multi-view features.
pub fn build_stack(features: &[FeatureVector], view_ids: &[String]) -> Result<KernelStack> {
    let views = view_ids.len();
    if let Some(f) = features.iter().find(|f| f.values.len() != views * FILTERS) {
        return Err(mismatch(
            format_args!("{} features ({views} views)", views * FILTERS),
            f.values.len(),
        ));
    }
    let kernels = (0..views)
        .map(|j| normalize_avg_diag(&linear_kernel(&view_block(features, j))?))
        .collect::<Result<Vec<_>>>()?;
    KernelStack::new(kernels, view_ids.to_vec())
}
