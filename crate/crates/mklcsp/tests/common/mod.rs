#![allow(dead_code)]

pub mod formats;

use std::path::{Path, PathBuf};

use mklcsp::cohort::{write_cohort, Cohort};
use mklcsp::config::{ExperimentConfig, Method};
use mklcsp_core::mkl::PNorm;
use mklcsp_core::synth::{generate_cohort, CohortSpec};

pub fn benchmark_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("benchmark")
}

/// The pinned benchmark cohort specification and configuration.
pub fn pinned() -> (CohortSpec, ExperimentConfig) {
    let text = std::fs::read_to_string(benchmark_dir().join("cohort_spec.json")).unwrap();
    let spec: CohortSpec = serde_json::from_str(&text).unwrap();
    let cfg = ExperimentConfig::load(&benchmark_dir().join("config.json")).unwrap();
    (spec, cfg)
}

pub fn small_spec(subjects: usize) -> CohortSpec {
    CohortSpec {
        subjects,
        trials_per_class: 15,
        test_trials_per_class: 10,
        trial_length_ms: 2500.0,
        ..CohortSpec::default()
    }
}

pub fn small_cohort(subjects: usize) -> Cohort {
    let spec = small_spec(subjects);
    Cohort::from_synthetic(Some(spec.clone()), generate_cohort(&spec).unwrap())
}

/// Reduced grids that keep integration runs fast.
pub fn quick_config(methods: &[Method]) -> ExperimentConfig {
    ExperimentConfig {
        c_grid: vec![0.1, 1.0],
        p_grid: vec![PNorm::Finite(1.0), PNorm::Finite(2.0), PNorm::Infinity],
        lambda_grid: vec![0.0, 0.5],
        folds: 3,
        window_ms: mklcsp::config::Window {
            start_ms: 500.0,
            end_ms: 2500.0,
        },
        methods: methods.to_vec(),
        ..ExperimentConfig::default()
    }
}

pub fn write_small_cohort(dir: &Path, subjects: usize) -> Cohort {
    let cohort = small_cohort(subjects);
    write_cohort(dir, &cohort).unwrap();
    cohort
}
