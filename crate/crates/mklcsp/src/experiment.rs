//! Cross-validated model selection and evaluation of the five arms.
//!
//! Other subjects contribute fixed prior knowledge: their class covariances
//! and CSP filter banks are estimated once from their full calibration
//! sessions. Everything derived from the target (its own filters, the
//! similarity weights, kernel normalizations) is re-estimated inside each
//! fold from that fold's training trials only.

use std::collections::BTreeMap;
use std::time::Instant;

use mklcsp_core::folds::{complement, stratified_folds};
use mklcsp_core::kernels::{cross_kernel, linear_kernel, normalize_avg_diag};
use mklcsp_core::lda::{error_rate, lda_fit, lda_predict};
use mklcsp_core::mkl::{predict_labels, MklModel, MklOptions, PNorm};
use mklcsp_core::signal::{apply_filter, design_butterworth_bandpass, epoch, select_channels, Label, Recording, Trial};
use mklcsp_core::spatial::{
    class_similarity, fit_ccsp, fit_csp, multi_view_features, ClassCovariances, FeatureVector, FilterBank,
};
use mklcsp_core::svm::svm_dual_solve;
use mklcsp_core::synth::Group;
use mklcsp_core::{Matrix, Result as CoreResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cohort::Cohort;
use crate::config::{p_to_string, ExperimentConfig, Method};
use crate::error::{Error, Result};

/// Band-pass filters, optionally selects channels, and epochs a session.
pub fn preprocess(rec: &Recording, cfg: &ExperimentConfig) -> Result<Vec<Trial>> {
    let rec = match &cfg.channels {
        Some(names) => select_channels(rec, names)?,
        None => rec.clone(),
    };
    let filter = design_butterworth_bandpass(cfg.filter_order, cfg.band.low_hz, cfg.band.high_hz, rec.fs)?;
    let filtered = apply_filter(&filter, &rec)?;
    Ok(epoch(&filtered, cfg.window_ms.start_ms, cfg.window_ms.end_ms)?)
}

/// Keeps the earliest `n / 2` trials of each class, in original order.
pub fn truncate_calibration(trials: Vec<Trial>, n: usize) -> Result<Vec<Trial>> {
    let per_class = n / 2;
    let mut kept = [0usize; 2];
    let out: Vec<Trial> = trials
        .into_iter()
        .filter(|t| {
            let k = &mut kept[(t.label == Label::Neg) as usize];
            *k += 1;
            *k <= per_class
        })
        .collect();
    if out.len() != 2 * per_class {
        return Err(Error::Config(format!(
            "cannot keep {per_class} calibration trials per class: only {} available",
            out.len()
        )));
    }
    Ok(out)
}

/// Fixed contribution of one subject when another subject is the target.
#[derive(Debug, Clone)]
pub struct Prior {
    pub covariances: ClassCovariances,
    pub bank: FilterBank,
}

/// Preprocessed cohort shared by every target and method.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub ids: Vec<String>,
    pub groups: Vec<Option<Group>>,
    pub channel_names: Vec<Vec<String>>,
    pub calibration: Vec<Vec<Trial>>,
    pub test: Vec<Option<Vec<Trial>>>,
    pub priors: Vec<Prior>,
}

pub fn prepare(cohort: &Cohort, cfg: &ExperimentConfig) -> Result<Prepared> {
    let per_subject: Vec<_> = cohort
        .subjects
        .par_iter()
        .map(|s| -> Result<_> {
            let calibration = preprocess(&s.calibration, cfg)?;
            let test = s.test.as_ref().map(|t| preprocess(t, cfg)).transpose()?;
            let refs: Vec<&Trial> = calibration.iter().collect();
            let covariances = ClassCovariances::estimate(&refs)?;
            let bank = fit_csp(&s.id, &covariances.pos, &covariances.neg)?;
            let names = cfg.channels.clone().unwrap_or_else(|| s.calibration.channel_names.clone());
            Ok((calibration, test, Prior { covariances, bank }, names))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut prepared = Prepared {
        ids: cohort.ids(),
        groups: cohort.subjects.iter().map(|s| s.group).collect(),
        channel_names: Vec::new(),
        calibration: Vec::new(),
        test: Vec::new(),
        priors: Vec::new(),
    };
    for (cal, test, prior, names) in per_subject {
        prepared.calibration.push(cal);
        prepared.test.push(test);
        prepared.priors.push(prior);
        prepared.channel_names.push(names);
    }
    Ok(prepared)
}

/// One evaluated hyperparameter combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: Option<f64>,
    pub p: Option<String>,
    pub lambda: Option<f64>,
    /// Misclassified validation trials summed over folds; `None` if some
    /// fold failed numerically.
    pub errors: Option<usize>,
    pub trials: usize,
}

/// Outcome of one target × method cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub subject: String,
    pub method: Method,
    /// Test-session error; absent without a test session or on failure.
    pub error: Option<f64>,
    pub cv_error: Option<f64>,
    pub c: Option<f64>,
    pub p: Option<String>,
    pub lambda: Option<f64>,
    /// Kernel weights aligned with the cohort's subject order.
    pub betas: Option<Vec<f64>>,
    pub decisions: Option<Vec<f64>>,
    pub trace: Vec<GridPoint>,
    pub trace_hash: String,
    pub wall_ms: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Spatial {
    Csp,
    Ccsp(f64),
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Classifier {
    Lda(f64),
    Svm(f64),
    Mkl(f64, PNorm),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Setting {
    spatial: Spatial,
    classifier: Classifier,
}

impl Setting {
    fn grid_point(&self, errors: Option<usize>, trials: usize) -> GridPoint {
        let (c, p) = match self.classifier {
            Classifier::Lda(_) => (None, None),
            Classifier::Svm(c) => (Some(c), None),
            Classifier::Mkl(c, p) => (Some(c), Some(p_to_string(p))),
        };
        let lambda = match self.spatial {
            Spatial::Ccsp(l) => Some(l),
            _ => None,
        };
        GridPoint {
            c,
            p,
            lambda,
            errors,
            trials,
        }
    }

    /// Tie-break order after the error count: smaller C, then smaller p or λ.
    fn order_key(&self) -> (f64, f64) {
        let c = match self.classifier {
            Classifier::Svm(c) | Classifier::Mkl(c, _) => c,
            Classifier::Lda(_) => 0.0,
        };
        let second = match (self.spatial, self.classifier) {
            (_, Classifier::Mkl(_, p)) => p.as_f64(),
            (Spatial::Ccsp(l), _) => l,
            _ => 0.0,
        };
        (c, second)
    }
}

fn settings(method: Method, cfg: &ExperimentConfig) -> Vec<Setting> {
    let gamma = cfg.lda_gamma;
    let s = |spatial, classifier| Setting { spatial, classifier };
    match method {
        Method::CspLda => vec![s(Spatial::Csp, Classifier::Lda(gamma))],
        Method::CspSvm => cfg.c_grid.iter().map(|&c| s(Spatial::Csp, Classifier::Svm(c))).collect(),
        Method::CcspLda => cfg
            .lambda_grid
            .iter()
            .map(|&l| s(Spatial::Ccsp(l), Classifier::Lda(gamma)))
            .collect(),
        Method::CcspSvm => cfg
            .lambda_grid
            .iter()
            .flat_map(|&l| cfg.c_grid.iter().map(move |&c| s(Spatial::Ccsp(l), Classifier::Svm(c))))
            .collect(),
        Method::Mkl => cfg
            .c_grid
            .iter()
            .flat_map(|&c| cfg.p_grid.iter().map(move |&p| s(Spatial::Multi, Classifier::Mkl(c, p))))
            .collect(),
    }
}

/// Filter banks for the target given its training trials; for the
/// multi-view arm, one bank per cohort subject in cohort order.
fn banks(spatial: Spatial, target: usize, train: &[&Trial], prep: &Prepared) -> CoreResult<Vec<FilterBank>> {
    let id = &prep.ids[target];
    let own = ClassCovariances::estimate(train)?;
    match spatial {
        Spatial::Csp => Ok(vec![fit_csp(id, &own.pos, &own.neg)?]),
        Spatial::Ccsp(lambda) => {
            let others: BTreeMap<String, ClassCovariances> = prep
                .ids
                .iter()
                .zip(&prep.priors)
                .enumerate()
                .filter(|(j, _)| *j != target)
                .map(|(_, (k, p))| (k.clone(), p.covariances.clone()))
                .collect();
            let sim = class_similarity(id, &own, &others)?;
            Ok(vec![fit_ccsp(id, &own, &others, &sim, lambda)?])
        }
        Spatial::Multi => {
            let own_bank = fit_csp(id, &own.pos, &own.neg)?;
            Ok((0..prep.ids.len())
                .map(|j| if j == target { own_bank.clone() } else { prep.priors[j].bank.clone() })
                .collect())
        }
    }
}

fn view_matrices(features: &[FeatureVector], views: usize) -> CoreResult<Vec<Matrix>> {
    (0..views)
        .map(|j| {
            let rows: Vec<&[f64]> = features.iter().map(|f| f.block(j)).collect();
            Matrix::from_rows(&rows)
        })
        .collect()
}

/// Trains on `train` and returns decision values on `eval`, plus the kernel
/// weights for the multi-view classifier.
fn fit_predict(
    classifier: Classifier,
    train: &[FeatureVector],
    eval: &[FeatureVector],
    view_ids: &[String],
) -> CoreResult<(Vec<f64>, Option<Vec<f64>>)> {
    let labels: Vec<Label> = train.iter().map(|f| f.label).collect();
    let values = |fs: &[FeatureVector]| fs.iter().map(|f| f.values.clone()).collect::<Vec<_>>();
    match classifier {
        Classifier::Lda(gamma) => {
            let model = lda_fit(&values(train), &labels, gamma)?;
            Ok((lda_predict(&model, &values(eval))?, None))
        }
        Classifier::Svm(c) => {
            let tr = values(train);
            let k = normalize_avg_diag(&linear_kernel(&tr)?)?;
            let svm = svm_dual_solve(&k.data, &labels, c)?;
            let cross = cross_kernel(&tr, &values(eval), k.norm_factor)?;
            Ok((svm.decisions(&cross, &labels), None))
        }
        Classifier::Mkl(c, p) => {
            let m = view_ids.len();
            let model = MklModel::fit(
                view_matrices(train, m)?,
                view_ids.to_vec(),
                &labels,
                c,
                p,
                &MklOptions::default(),
            )?;
            let decisions = model.predict(&view_matrices(eval, m)?)?;
            Ok((decisions, Some(model.betas().to_vec())))
        }
    }
}

/// Seed of a target's fold split: shared by every method so that all arms
/// see identical folds.
pub fn fold_seed(seed: u64, target_id: &str) -> u64 {
    target_id
        .bytes()
        .fold(seed ^ 0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Target calibration trials after optional truncation.
pub fn target_calibration(prep: &Prepared, target: usize, cfg: &ExperimentConfig) -> Result<Vec<Trial>> {
    let trials = prep.calibration[target].clone();
    match cfg.calibration_trials {
        Some(n) => truncate_calibration(trials, n),
        None => Ok(trials),
    }
}

fn count_errors(decisions: &[f64], truth: &[Label]) -> usize {
    predict_labels(decisions).iter().zip(truth).filter(|(a, b)| a != b).count()
}

/// Validation error counts of every setting, summed over folds.
fn cross_validate(
    settings: &[Setting],
    target: usize,
    trials: &[Trial],
    folds: &[Vec<usize>],
    prep: &Prepared,
) -> Vec<Option<usize>> {
    let mut totals: Vec<Option<usize>> = vec![Some(0); settings.len()];
    let mut spatials: Vec<Spatial> = Vec::new();
    for s in settings {
        if !spatials.contains(&s.spatial) {
            spatials.push(s.spatial);
        }
    }
    for fold in folds {
        let train_idx = complement(trials.len(), fold);
        let train: Vec<&Trial> = train_idx.iter().map(|&i| &trials[i]).collect();
        let eval: Vec<&Trial> = fold.iter().map(|&i| &trials[i]).collect();
        let truth: Vec<Label> = eval.iter().map(|t| t.label).collect();
        for &spatial in &spatials {
            let feats = banks(spatial, target, &train, prep).and_then(|b| {
                let refs: Vec<&FilterBank> = b.iter().collect();
                Ok((multi_view_features(&refs, &train)?, multi_view_features(&refs, &eval)?, b.len()))
            });
            for (s, total) in settings.iter().zip(totals.iter_mut()) {
                if s.spatial != spatial || total.is_none() {
                    continue;
                }
                let outcome = feats.as_ref().map_err(Clone::clone).and_then(|(tr, ev, m)| {
                    let view_ids: Vec<String> = if *m == 1 { vec![prep.ids[target].clone()] } else { prep.ids.clone() };
                    fit_predict(s.classifier, tr, ev, &view_ids)
                });
                match outcome {
                    Ok((dec, _)) => *total = total.map(|t| t + count_errors(&dec, &truth)),
                    Err(e) => {
                        log::warn!("{} {:?} failed in a fold: {e}", prep.ids[target], s);
                        *total = None;
                    }
                }
            }
        }
    }
    totals
}

fn trace_hash(target: &str, method: Method, trace: &[GridPoint], chosen: Option<&GridPoint>) -> String {
    let mut h = Sha256::new();
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:e}"));
    for g in trace.iter().chain(chosen) {
        let line = format!(
            "{target}\t{method}\t{}\t{}\t{}\t{}/{}\n",
            opt(g.c),
            g.p.as_deref().unwrap_or("-"),
            opt(g.lambda),
            g.errors.map_or_else(|| "failed".to_string(), |e| e.to_string()),
            g.trials
        );
        h.update(line.as_bytes());
    }
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs model selection, final training and test evaluation for one cell.
pub fn run_subject(method: Method, target: usize, prep: &Prepared, cfg: &ExperimentConfig) -> CellResult {
    let start = Instant::now();
    let id = prep.ids[target].clone();
    let mut cell = CellResult {
        subject: id.clone(),
        method,
        error: None,
        cv_error: None,
        c: None,
        p: None,
        lambda: None,
        betas: None,
        decisions: None,
        trace: Vec::new(),
        trace_hash: String::new(),
        wall_ms: 0.0,
        failure: None,
    };
    if let Err(e) = evaluate(&mut cell, method, target, prep, cfg) {
        log::warn!("{id} {method}: {e}");
        cell.failure = Some(e.to_string());
    }
    if cell.trace_hash.is_empty() {
        cell.trace_hash = trace_hash(&id, method, &cell.trace, None);
    }
    cell.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    cell
}

fn evaluate(cell: &mut CellResult, method: Method, target: usize, prep: &Prepared, cfg: &ExperimentConfig) -> Result<()> {
    let trials = target_calibration(prep, target, cfg)?;
    let labels: Vec<Label> = trials.iter().map(|t| t.label).collect();
    let folds = stratified_folds(&labels, cfg.folds, fold_seed(cfg.seed, &prep.ids[target]))?;
    let grid = settings(method, cfg);
    let counts = cross_validate(&grid, target, &trials, &folds, prep);
    cell.trace = grid
        .iter()
        .zip(&counts)
        .map(|(s, &e)| s.grid_point(e, trials.len()))
        .collect();

    let best = grid
        .iter()
        .zip(&counts)
        .filter_map(|(s, e)| e.map(|e| (e, s)))
        .min_by(|(ea, sa), (eb, sb)| {
            ea.cmp(eb).then_with(|| sa.order_key().partial_cmp(&sb.order_key()).expect("grid values are finite"))
        })
        .map(|(e, s)| (e, *s))
        .ok_or_else(|| Error::Numerical(mklcsp_core::Error::Degenerate("every grid point failed".into())))?;
    let (errors, chosen) = best;
    let point = chosen.grid_point(Some(errors), trials.len());
    cell.trace_hash = trace_hash(&prep.ids[target], method, &cell.trace, Some(&point));
    cell.cv_error = Some(errors as f64 / trials.len() as f64);
    cell.c = point.c;
    cell.p = point.p.clone();
    cell.lambda = point.lambda;

    // final model on the whole (possibly truncated) calibration set
    let train: Vec<&Trial> = trials.iter().collect();
    let b = banks(chosen.spatial, target, &train, prep)?;
    let refs: Vec<&FilterBank> = b.iter().collect();
    let train_feats = multi_view_features(&refs, &train)?;
    let view_ids: Vec<String> = if b.len() == 1 { vec![prep.ids[target].clone()] } else { prep.ids.clone() };
    let test: Vec<&Trial> = prep.test[target].iter().flatten().collect();
    let test_feats = if test.is_empty() { Vec::new() } else { multi_view_features(&refs, &test)? };
    let eval = if test_feats.is_empty() { &train_feats[..1] } else { &test_feats[..] };
    let (decisions, betas) = fit_predict(chosen.classifier, &train_feats, eval, &view_ids)?;
    cell.betas = betas;
    if !test.is_empty() {
        let truth: Vec<Label> = test.iter().map(|t| t.label).collect();
        cell.error = Some(error_rate(&predict_labels(&decisions), &truth)?);
        cell.decisions = Some(decisions);
    }
    Ok(())
}

/// Similarity weights of every other subject to `target`, averaged over
/// the two classes, in cohort order with a zero at the target.
pub fn alpha_row(target: usize, prep: &Prepared, cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let trials = target_calibration(prep, target, cfg)?;
    let refs: Vec<&Trial> = trials.iter().collect();
    let own = ClassCovariances::estimate(&refs)?;
    let others: BTreeMap<String, ClassCovariances> = prep
        .ids
        .iter()
        .zip(&prep.priors)
        .enumerate()
        .filter(|(j, _)| *j != target)
        .map(|(_, (k, p))| (k.clone(), p.covariances.clone()))
        .collect();
    let sim = class_similarity(&prep.ids[target], &own, &others)?;
    Ok(prep
        .ids
        .iter()
        .map(|id| {
            if *id == prep.ids[target] {
                0.0
            } else {
                0.5 * (sim.pos.weights[id] + sim.neg.weights[id])
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectInfo {
    pub id: String,
    pub group: Option<Group>,
}

/// One row of a targets × subjects matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub target: String,
    pub values: Vec<f64>,
}

/// Activity patterns of one subject's own filter bank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSet {
    pub subject: String,
    /// `"largest"` or `"smallest"` average kernel weight.
    pub role: String,
    pub average_beta: f64,
    pub channel_names: Vec<String>,
    /// `channels × 6`, one row per channel.
    pub patterns: Vec<Vec<f64>>,
}

/// Everything a benchmark run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub subjects: Vec<SubjectInfo>,
    pub targets: Vec<String>,
    pub methods: Vec<Method>,
    pub results: Vec<CellResult>,
    /// Kernel weights of the mkl arm with the diagonal set to zero.
    pub betas: Vec<MatrixRow>,
    /// Similarity scores with the diagonal set to zero.
    pub alphas: Vec<MatrixRow>,
    pub patterns: Vec<PatternSet>,
    /// Digest of every target's hyperparameter search, in order.
    pub selection_trace_hash: String,
    pub wall_ms: f64,
}

impl ExperimentReport {
    pub fn cell(&self, subject: &str, method: Method) -> Option<&CellResult> {
        self.results.iter().find(|c| c.subject == subject && c.method == method)
    }

    /// Mean test error of a method over targets with a result.
    pub fn mean_error(&self, method: Method) -> Option<f64> {
        let errs: Vec<f64> = self
            .results
            .iter()
            .filter(|c| c.method == method)
            .filter_map(|c| c.error)
            .collect();
        (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
    }
}

fn resolve_targets(prep: &Prepared, cfg: &ExperimentConfig) -> Result<Vec<usize>> {
    match &cfg.targets {
        None => Ok((0..prep.ids.len()).collect()),
        Some(list) => list
            .iter()
            .map(|t| {
                prep.ids
                    .iter()
                    .position(|id| id == t)
                    .ok_or_else(|| Error::Config(format!("target {t:?} is not in the cohort")))
            })
            .collect(),
    }
}

/// Runs every target × method cell and assembles the report.
pub fn run_benchmark(cohort: &Cohort, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let prep = prepare(cohort, cfg)?;
    let targets = resolve_targets(&prep, cfg)?;
    let cells: Vec<(usize, Method)> = targets
        .iter()
        .flat_map(|&t| cfg.methods.iter().map(move |&m| (t, m)))
        .collect();
    let results: Vec<CellResult> = cells
        .par_iter()
        .map(|&(t, m)| run_subject(m, t, &prep, cfg))
        .collect();

    let mut digest = Sha256::new();
    for c in &results {
        digest.update(c.trace_hash.as_bytes());
    }

    let betas: Vec<MatrixRow> = results
        .iter()
        .filter(|c| c.method == Method::Mkl)
        .filter_map(|c| {
            let mut values = c.betas.clone()?;
            if values.len() != prep.ids.len() {
                return None;
            }
            let t = prep.ids.iter().position(|id| *id == c.subject)?;
            values[t] = 0.0;
            values.iter_mut().filter(|b| **b < mklcsp_core::mkl::REPORT_ZERO).for_each(|b| *b = 0.0);
            Some(MatrixRow {
                target: c.subject.clone(),
                values,
            })
        })
        .collect();

    let alphas = if prep.ids.len() >= 2 {
        targets
            .par_iter()
            .map(|&t| {
                Ok(MatrixRow {
                    target: prep.ids[t].clone(),
                    values: alpha_row(t, &prep, cfg)?,
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let patterns = select_patterns(&betas, &prep)?;
    Ok(ExperimentReport {
        config: cfg.clone(),
        subjects: prep
            .ids
            .iter()
            .zip(&prep.groups)
            .map(|(id, g)| SubjectInfo { id: id.clone(), group: *g })
            .collect(),
        targets: targets.iter().map(|&t| prep.ids[t].clone()).collect(),
        methods: cfg.methods.clone(),
        results,
        betas,
        alphas,
        patterns,
        selection_trace_hash: hex(&digest.finalize()),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Average off-diagonal kernel weight received by each subject.
pub fn average_betas(betas: &[MatrixRow], ids: &[String]) -> Vec<Option<f64>> {
    (0..ids.len())
        .map(|j| {
            let vals: Vec<f64> = betas
                .iter()
                .filter(|r| r.target != ids[j])
                .map(|r| r.values[j])
                .collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect()
}

fn select_patterns(betas: &[MatrixRow], prep: &Prepared) -> Result<Vec<PatternSet>> {
    let avg = average_betas(betas, &prep.ids);
    let scored: Vec<(usize, f64)> = avg.iter().enumerate().filter_map(|(j, a)| a.map(|a| (j, a))).collect();
    let Some(&largest) = scored.iter().max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0))) else {
        return Ok(Vec::new());
    };
    let smallest = *scored
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("non-empty");
    let mut out = Vec::new();
    for (role, (j, a)) in [("largest", largest), ("smallest", smallest)] {
        let prior = &prep.priors[j];
        let patterns = mklcsp_core::spatial::activity_patterns(&prior.bank, &prior.covariances.average()?)?;
        out.push(PatternSet {
            subject: prep.ids[j].clone(),
            role: role.into(),
            average_beta: a,
            channel_names: prep.channel_names[j].clone(),
            patterns: (0..patterns.rows()).map(|r| patterns.row(r).to_vec()).collect(),
        });
    }
    Ok(out)
}
