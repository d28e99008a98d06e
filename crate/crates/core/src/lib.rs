//! Numerical core for multi-subject motor-imagery decoding.
//!
//! Everything in this crate is allocation-only (`alloc`, no `std`): dense
//! symmetric linear algebra, Butterworth band-pass design, CSP and
//! composite-CSP spatial filtering, linear kernels, an SMO dual SVM solver,
//! lp-norm multiple kernel learning, shrinkage LDA and a synthetic cohort
//! generator with known ground truth.
//!
//! File formats, configuration and the experiment runner live in the
//! `mklcsp` companion crate.
#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
mod math;

pub mod folds;
pub mod kernels;
pub mod lda;
pub mod linalg;
pub mod matrix;
pub mod mkl;
pub mod signal;
pub mod spatial;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::Matrix;
