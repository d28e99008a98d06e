//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use mklcsp_core::synth::{generate_cohort, CohortSpec};

use crate::cohort::{load_cohort, write_cohort, Cohort};
use crate::config::{ExperimentConfig, Method};
use crate::error::{Error, Result};
use crate::experiment::run_benchmark;
use crate::report::{emit_reports, load_report};
use crate::session::validate_session;

#[derive(Debug, Parser)]
#[command(name = "mklcsp", version, about = "Multi-subject CSP and MKL decoding of two-class EEG")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic cohort directory.
    Synth {
        /// Cohort specification (JSON); defaults apply to missing fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the specification.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the benchmark on a cohort directory and write reports.
    Run {
        #[arg(long)]
        cohort: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated arms, overriding the configuration.
        #[arg(long)]
        methods: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-emit report files from a stored results.json.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Check a session file pair.
    Validate {
        /// Path to the `.eegmeta.json` file.
        #[arg(long)]
        session: PathBuf,
    },
}

/// Parses arguments, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Synth { spec, out, seed } => {
            let mut spec = match spec {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    serde_json::from_str::<CohortSpec>(&text)
                        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                }
                None => CohortSpec::default(),
            };
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let subjects = generate_cohort(&spec)?;
            let n = subjects.len();
            write_cohort(&out, &Cohort::from_synthetic(Some(spec), subjects))?;
            println!("wrote {n} subjects to {}", out.display());
        }
        Command::Run { cohort, config, methods, out } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::load(&path)?,
                None => ExperimentConfig::default(),
            };
            if let Some(list) = methods {
                cfg.methods = Method::parse_list(&list)?;
            }
            let cohort = load_cohort(&cohort)?;
            let report = run_benchmark(&cohort, &cfg)?;
            emit_reports(&report, &out)?;
            for m in &report.methods {
                if let Some(e) = report.mean_error(*m) {
                    println!("{m:<9} mean test error {e:.4}");
                }
            }
            let failed = report.results.iter().filter(|c| c.failure.is_some()).count();
            if failed > 0 {
                eprintln!("warning: {failed} cells failed; see results.json");
            }
            println!("selection trace {}", report.selection_trace_hash);
        }
        Command::Report { input } => {
            let report = load_report(&input)?;
            let files = emit_reports(&report, &input)?;
            println!("re-emitted {} files in {}", files.len(), input.display());
        }
        Command::Validate { session } => {
            let s = validate_session(&session)?;
            println!(
                "ok: {} channels, {} samples at {} Hz, {} markers ({} positive, {} negative)",
                s.channels, s.samples, s.fs, s.markers, s.positive, s.negative
            );
        }
    }
    Ok(())
}
