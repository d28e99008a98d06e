mod common;

use mklcsp::config::{ExperimentConfig, Method};
use mklcsp::experiment::run_benchmark;
use mklcsp::report::{emit_reports, load_report, read_matrix, scatter_svg, write_errors};

#[test]
fn empty_method_list_gives_header_only_table() {
    let cohort = common::small_cohort(2);
    let r = run_benchmark(&cohort, &common::quick_config(&[])).unwrap();
    assert!(r.results.is_empty() && r.betas.is_empty() && r.patterns.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("errors.csv");
    write_errors(&r, &path).unwrap();
    assert_eq!(std::fs::read_to_string(path).unwrap(), "subject,method,error,C,p,lambda\n");
    assert!(!scatter_svg(&r).contains("marker"));
}

#[test]
fn emitted_files_are_consistent() {
    let cohort = common::small_cohort(3);
    let cfg = ExperimentConfig {
        calibration_trials: Some(12),
        ..common::quick_config(&[Method::CspLda, Method::CspSvm, Method::Mkl])
    };
    let r = run_benchmark(&cohort, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_reports(&r, dir.path()).unwrap();
    assert_eq!(files.len(), 7);

    let (ids, rows) = read_matrix(&dir.path().join("betas.csv")).unwrap();
    assert_eq!(ids, cohort.ids());
    assert_eq!(rows, r.betas);
    let (_, alphas) = read_matrix(&dir.path().join("alphas.csv")).unwrap();
    assert_eq!(alphas, r.alphas);

    let errors = std::fs::read_to_string(dir.path().join("errors.csv")).unwrap();
    assert_eq!(errors.lines().count(), 1 + 3 * 3);
    assert!(errors.lines().any(|l| l.starts_with("S01,mkl,")));

    let patterns = std::fs::read_to_string(dir.path().join("patterns.csv")).unwrap();
    assert_eq!(patterns.lines().count(), 1 + 2 * 16);

    // one marker per target in each of the two baseline panels
    let svg = std::fs::read_to_string(dir.path().join("scatter.svg")).unwrap();
    assert_eq!(svg.matches("class=\"panel\"").count(), 2);
    assert_eq!(svg.matches("class=\"marker\"").count(), 2 * 3);
    assert_eq!(svg.matches("class=\"identity\"").count(), 2);

    let cfg_back = ExperimentConfig::load(&dir.path().join("config.json")).unwrap();
    assert_eq!(cfg_back, cfg);
    assert_eq!(load_report(dir.path()).unwrap(), r);
}

#[test]
fn re_emitting_reproduces_files() {
    let cohort = common::small_cohort(2);
    let r = run_benchmark(&cohort, &common::quick_config(&[Method::CspSvm, Method::Mkl])).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_reports(&r, dir.path()).unwrap();
    let before: Vec<Vec<u8>> = ["errors.csv", "betas.csv", "scatter.svg"]
        .iter()
        .map(|f| std::fs::read(dir.path().join(f)).unwrap())
        .collect();
    emit_reports(&load_report(dir.path()).unwrap(), dir.path()).unwrap();
    for (f, old) in ["errors.csv", "betas.csv", "scatter.svg"].iter().zip(before) {
        assert_eq!(std::fs::read(dir.path().join(f)).unwrap(), old, "{f}");
    }
}
