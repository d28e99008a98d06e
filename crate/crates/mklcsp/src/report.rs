//! Report files: error table, weight matrices, patterns, scatter plot.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::Method;
use crate::error::{Error, Result};
use crate::experiment::{ExperimentReport, MatrixRow};

pub const RESULTS_FILE: &str = "results.json";

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::validation(path, format!("{other:?}")),
    }
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Rows of `errors.csv`, without wall-clock so reruns compare byte-equal.
pub fn write_errors(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let wrap = |e| csv_error(path, e);
    w.write_record(["subject", "method", "error", "C", "p", "lambda"]).map_err(wrap)?;
    for c in &report.results {
        w.write_record([
            c.subject.as_str(),
            c.method.as_str(),
            &num(c.error),
            &num(c.c),
            c.p.as_deref().unwrap_or(""),
            &num(c.lambda),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Dense matrix with a header row and column of subject ids.
pub fn write_matrix(rows: &[MatrixRow], ids: &[String], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let wrap = |e| csv_error(path, e);
    let header: Vec<&str> = std::iter::once("target").chain(ids.iter().map(String::as_str)).collect();
    w.write_record(&header).map_err(wrap)?;
    for r in rows {
        let mut rec = vec![r.target.clone()];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a matrix written by [`write_matrix`].
pub fn read_matrix(path: &Path) -> Result<(Vec<String>, Vec<MatrixRow>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let ids: Vec<String> = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .skip(1)
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let values = rec
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().map_err(|e| Error::validation(path, format!("bad number {v:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(MatrixRow {
            target: rec.get(0).unwrap_or_default().to_string(),
            values,
        });
    }
    Ok((ids, rows))
}

fn write_patterns(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let wrap = |e| csv_error(path, e);
    w.write_record(["subject", "role", "channel", "f1", "f2", "f3", "f4", "f5", "f6"])
        .map_err(wrap)?;
    for set in &report.patterns {
        for (name, row) in set.channel_names.iter().zip(&set.patterns) {
            let mut rec = vec![set.subject.clone(), set.role.clone(), name.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(wrap)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `(baseline error, mkl error)` per target that has both.
pub fn scatter_points(report: &ExperimentReport, baseline: Method) -> Vec<(String, f64, f64)> {
    report
        .targets
        .iter()
        .filter_map(|t| {
            let x = report.cell(t, baseline)?.error?;
            let y = report.cell(t, Method::Mkl)?.error?;
            Some((t.clone(), x, y))
        })
        .collect()
}

/// One panel per baseline arm: baseline error on x, mkl error on y, with
/// the identity line. Points below the line favour mkl.
pub fn scatter_svg(report: &ExperimentReport) -> String {
    let baselines: Vec<Method> = report.methods.iter().copied().filter(|m| *m != Method::Mkl).collect();
    let (size, pad) = (240.0, 40.0);
    let width = pad + baselines.len().max(1) as f64 * (size + pad);
    let height = size + 2.0 * pad;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    for (k, m) in baselines.iter().enumerate() {
        let x0 = pad + k as f64 * (size + pad);
        let y0 = pad;
        let _ = writeln!(svg, r#"<g class="panel" data-baseline="{m}">"#);
        let _ = writeln!(
            svg,
            r##"<rect x="{x0}" y="{y0}" width="{size}" height="{size}" fill="none" stroke="#444"/>"##
        );
        let _ = writeln!(
            svg,
            r##"<line class="identity" x1="{x0}" y1="{}" x2="{}" y2="{y0}" stroke="#999" stroke-dasharray="4 3"/>"##,
            y0 + size,
            x0 + size
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{m} error</text>"#,
            x0 + size / 2.0,
            y0 + size + 28.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">mkl error</text>"#,
            x0 - 24.0,
            y0 + size / 2.0,
            x0 - 24.0,
            y0 + size / 2.0
        );
        // axes span error rates 0..0.6, clipped at the border
        let scale = |e: f64| (e / 0.6).clamp(0.0, 1.0) * size;
        for (t, x, y) in scatter_points(report, *m) {
            let _ = writeln!(
                svg,
                r##"<circle class="marker" data-subject="{t}" cx="{:.2}" cy="{:.2}" r="3.5" fill="#1f77b4"/>"##,
                x0 + scale(x),
                y0 + size - scale(y)
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes every report file into `out_dir` and returns their paths.
pub fn emit_reports(report: &ExperimentReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let ids: Vec<String> = report.subjects.iter().map(|s| s.id.clone()).collect();
    let path = |name: &str| out_dir.join(name);
    let mut written = Vec::new();

    write_errors(report, &path("errors.csv"))?;
    written.push(path("errors.csv"));
    write_matrix(&report.betas, &ids, &path("betas.csv"))?;
    written.push(path("betas.csv"));
    write_matrix(&report.alphas, &ids, &path("alphas.csv"))?;
    written.push(path("alphas.csv"));
    write_patterns(report, &path("patterns.csv"))?;
    written.push(path("patterns.csv"));
    for (name, text) in [
        ("scatter.svg", scatter_svg(report)),
        ("config.json", report.config.to_json()),
        (RESULTS_FILE, serde_json::to_string_pretty(report).expect("report serializes")),
    ] {
        fs::write(path(name), text).map_err(|e| Error::io(path(name), e))?;
        written.push(path(name));
    }
    Ok(written)
}

/// Loads a report previously written by [`emit_reports`].
pub fn load_report(dir: &Path) -> Result<ExperimentReport> {
    let path = dir.join(RESULTS_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path,
        offset: 0,
        message: format!("invalid results file: {e}"),
    })
}
