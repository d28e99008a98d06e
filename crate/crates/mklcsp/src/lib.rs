//! File formats, experiment orchestration and command line for
//! multi-subject CSP decoding with multiple kernel learning.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cohort;
pub mod config;
pub mod error;
pub mod experiment;
pub mod report;
pub mod session;

pub use error::{Error, Result};
