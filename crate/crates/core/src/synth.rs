//! Synthetic multi-subject motor-imagery cohorts with known forward models.
//!
//! Each subject has two band-limited (8–30 Hz) discriminative sources, one
//! per class. During a trial of class `c` the variance of source `c` is
//! multiplied by its gain. Sources are projected to the scalp through a
//! `channels × 2` mixing matrix and spatially correlated band-limited noise
//! of level `σ` is added. Subjects in the target's group share the target's
//! mixing columns up to a perturbation orthogonal to them; the others draw
//! independent columns.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, sym_eig};
use crate::math;
use crate::matrix::{dot, norm, Matrix};
use crate::signal::{design_butterworth_bandpass, ms_to_samples, BandpassFilter, Label, Marker, Recording, Trial};

/// Relationship of a subject to the cohort's reference target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Group {
    Target,
    Similar,
    Dissimilar,
}

impl Group {
    /// Target and similar subjects share one discriminative subspace.
    pub fn shares_target_subspace(self) -> bool {
        matches!(self, Group::Target | Group::Similar)
    }
}

/// Generation parameters of a cohort.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CohortSpec {
    pub subjects: usize,
    pub channels: usize,
    pub fs: f64,
    /// Calibration trials per class.
    pub trials_per_class: usize,
    /// Test-session trials per class.
    pub test_trials_per_class: usize,
    /// Duration of the class-specific modulation, starting 500 ms after the cue.
    pub trial_length_ms: f64,
    pub seed: u64,
    /// Fraction of the non-target subjects that share the target's subspace.
    pub similar_fraction: f64,
    /// Band-power gain of the class-specific source.
    pub gain_ratio: f64,
    pub noise_level: f64,
    /// Size of the orthogonal perturbation of similar subjects' mixing
    /// columns, as `tan` of the largest principal angle.
    pub similar_perturbation: f64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            subjects: 10,
            channels: 16,
            fs: 100.0,
            trials_per_class: 50,
            test_trials_per_class: 50,
            trial_length_ms: 3000.0,
            seed: 20120829,
            similar_fraction: 1.0 / 3.0,
            gain_ratio: 2.0,
            noise_level: 1.0,
            similar_perturbation: 0.15,
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.subjects < 2 {
            return bad(format!("a cohort needs at least 2 subjects, got {}", self.subjects));
        }
        if self.channels < SOURCES {
            return bad(format!(
                "{SOURCES} sources cannot be mixed into {} channels",
                self.channels
            ));
        }
        if !(self.fs > 2.0 * BAND.1) {
            return bad(format!("fs must exceed {} Hz, got {}", 2.0 * BAND.1, self.fs));
        }
        if self.trials_per_class == 0 || self.test_trials_per_class == 0 {
            return bad("trial counts must be positive".into());
        }
        if !(self.trial_length_ms > 0.0) {
            return bad("trial length must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.similar_fraction) {
            return bad(format!("similar fraction {} outside [0, 1]", self.similar_fraction));
        }
        if !(self.gain_ratio > 0.0) || !(self.noise_level >= 0.0) || !(self.similar_perturbation >= 0.0) {
            return bad("gain must be positive, noise and perturbation nonnegative".into());
        }
        Ok(())
    }

    pub fn similar_count(&self) -> usize {
        math::round(self.similar_fraction * (self.subjects - 1) as f64) as usize
    }
}

const SOURCES: usize = 2;
const BAND: (f64, f64) = (8.0, 30.0);
const LEAD_IN_MS: f64 = 2000.0;
const MODULATION_DELAY_MS: f64 = 500.0;
const REST_MS: f64 = 1500.0;

/// Ground truth of one synthetic subject.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubjectModel {
    pub id: String,
    pub group: Group,
    /// `channels × 2`; column 0 is the `Pos` source, column 1 the `Neg` one.
    pub mixing: Matrix,
    /// Source gains during `Pos` and `Neg` trials respectively.
    pub gains: [f64; 2],
    pub noise_level: f64,
    /// Symmetric square root of the noise spatial covariance.
    pub noise_mixing: Matrix,
    /// Overall amplitude scale applied to the recordings.
    pub amplitude: f64,
}

impl SubjectModel {
    /// Rows of the pseudo-inverse of the mixing matrix (`2 × channels`).
    pub fn unmixing(&self) -> Result<Matrix> {
        let ata = self.mixing.t_matmul(&self.mixing)?;
        spd_inverse(&ata)?.matmul(&self.mixing.transpose())
    }

    /// Expected variance of each unmixed source for a trial of `label`,
    /// up to the common amplitude and spectral factors.
    fn expected_unmixed_variance(&self, unmix: &Matrix, label: Label) -> Result<[f64; 2]> {
        let mut out = [0.0; 2];
        for (k, slot) in out.iter_mut().enumerate() {
            let u = unmix.row(k);
            let mu = self.noise_mixing.mat_vec(u)?;
            let noise = self.noise_level * self.noise_level * dot(&mu, &mu);
            let active = matches!((k, label), (0, Label::Pos) | (1, Label::Neg));
            let gain = if active { self.gains[k] } else { 1.0 };
            *slot = gain + noise;
        }
        Ok(out)
    }
}

/// Calibration and test recordings of one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSubject {
    pub model: SubjectModel,
    pub calibration: Recording,
    pub test: Recording,
}

pub fn subject_id(index: usize) -> String {
    format!("S{:02}", index + 1)
}

pub fn channel_names(channels: usize) -> Vec<String> {
    (0..channels).map(|i| format!("E{:02}", i + 1)).collect()
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Box-Muller on libm, so samples do not depend on which float backend
/// the dependency graph happens to select.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * PI * u2)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| standard_normal(rng)).collect();
    Matrix::from_vec(rows, cols, data).expect("shape matches")
}

fn unit_columns(mut m: Matrix) -> Matrix {
    for j in 0..m.cols() {
        let c = m.column(j);
        let n = norm(&c);
        m.set_column(j, &c.iter().map(|x| x / n).collect::<Vec<_>>());
    }
    m
}

/// `A + E` with `E` orthogonal to `span(A)` and `‖E‖_F = eps·σ_min(A)`, so
/// every principal angle to `span(A)` is at most `atan(eps)`.
fn perturb_within_angle(rng: &mut ChaCha8Rng, a: &Matrix, eps: f64) -> Result<Matrix> {
    let g = gaussian_matrix(rng, a.rows(), a.cols());
    let ata = a.t_matmul(a)?;
    let coef = spd_inverse(&ata)?.matmul(&a.t_matmul(&g)?)?;
    let e = g.add_scaled(&a.matmul(&coef)?, -1.0)?;
    let (ev, _) = sym_eig(&ata)?;
    let sigma_min = math::sqrt(ev.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0));
    let en = e.frobenius_norm();
    if en == 0.0 {
        return Ok(a.clone());
    }
    a.add_scaled(&e, eps * sigma_min / en)
}

fn noise_mixing(rng: &mut ChaCha8Rng, channels: usize) -> Result<Matrix> {
    let g = gaussian_matrix(rng, channels, channels);
    let mut m = g.matmul(&g.transpose())?.scaled(1.0 / channels as f64);
    for i in 0..channels {
        m[(i, i)] += 0.5;
    }
    m.symmetrize();
    // unit mean noise variance per channel: tr(M²)/channels = 1
    let scale = math::sqrt(channels as f64 / m.matmul(&m)?.trace());
    Ok(m.scaled(scale))
}

fn band_limited(rng: &mut ChaCha8Rng, filter: &BandpassFilter, len: usize) -> Vec<f64> {
    let white: Vec<f64> = (0..len).map(|_| standard_normal(rng)).collect();
    let mut y = filter.filter(&white);
    let var = y.iter().map(|v| v * v).sum::<f64>() / len as f64;
    let s = 1.0 / math::sqrt(var);
    y.iter_mut().for_each(|v| *v *= s);
    y
}

fn balanced_labels(rng: &mut ChaCha8Rng, per_class: usize) -> Vec<Label> {
    use rand::seq::SliceRandom;
    let mut labels: Vec<Label> = (0..2 * per_class)
        .map(|i| if i < per_class { Label::Pos } else { Label::Neg })
        .collect();
    labels.shuffle(rng);
    labels
}

fn simulate_session(
    rng: &mut ChaCha8Rng,
    model: &SubjectModel,
    spec: &CohortSpec,
    filter: &BandpassFilter,
    per_class: usize,
) -> Result<Recording> {
    let fs = spec.fs;
    let lead = ms_to_samples(LEAD_IN_MS, fs) as usize;
    let delay = ms_to_samples(MODULATION_DELAY_MS, fs) as usize;
    let active = ms_to_samples(spec.trial_length_ms, fs).max(1) as usize;
    let block = delay + active + ms_to_samples(REST_MS, fs) as usize;
    let labels = balanced_labels(rng, per_class);
    let total = lead + labels.len() * block;

    let mut sources: Vec<Vec<f64>> = (0..SOURCES).map(|_| band_limited(rng, filter, total)).collect();
    let markers: Vec<Marker> = labels
        .iter()
        .enumerate()
        .map(|(t, &label)| Marker {
            sample: lead + t * block,
            label,
        })
        .collect();
    for m in &markers {
        let k = match m.label {
            Label::Pos => 0,
            Label::Neg => 1,
        };
        let amp = math::sqrt(model.gains[k]);
        let start = m.sample + delay;
        for v in &mut sources[k][start..start + active] {
            *v *= amp;
        }
    }

    let ch = spec.channels;
    let mut data = Matrix::zeros(ch, total);
    for (k, s) in sources.iter().enumerate() {
        for c in 0..ch {
            let a = model.mixing[(c, k)];
            for (x, &v) in data.row_mut(c).iter_mut().zip(s) {
                *x += a * v;
            }
        }
    }
    if model.noise_level > 0.0 {
        for c in 0..ch {
            let n = band_limited(rng, filter, total);
            for r in 0..ch {
                let w = model.noise_level * model.noise_mixing[(r, c)];
                for (x, &v) in data.row_mut(r).iter_mut().zip(&n) {
                    *x += w * v;
                }
            }
        }
    }
    let data = data.scaled(model.amplitude);
    Recording::new(data, fs, channel_names(ch), markers)
}

/// Generates every subject of a cohort. Subject `0` is the reference
/// target, the next `similar_count()` subjects share its subspace and the
/// rest are dissimilar.
pub fn generate_cohort(spec: &CohortSpec) -> Result<Vec<SyntheticSubject>> {
    spec.validate()?;
    let filter = design_butterworth_bandpass(5, BAND.0, BAND.1, spec.fs)?;
    let ch = spec.channels;
    let n_similar = spec.similar_count();
    let target_mixing = unit_columns(gaussian_matrix(&mut rng_for(spec.seed, u64::MAX), ch, SOURCES));

    (0..spec.subjects)
        .map(|s| {
            let mut rng = rng_for(spec.seed, s as u64);
            let group = match s {
                0 => Group::Target,
                s if s <= n_similar => Group::Similar,
                _ => Group::Dissimilar,
            };
            let mixing = match group {
                Group::Target => target_mixing.clone(),
                Group::Similar => perturb_within_angle(&mut rng, &target_mixing, spec.similar_perturbation)?,
                Group::Dissimilar => unit_columns(gaussian_matrix(&mut rng, ch, SOURCES)),
            };
            let noise = noise_mixing(&mut rng, ch)?;
            let power = mixing.frobenius_norm() * mixing.frobenius_norm() * 0.5 * (1.0 + spec.gain_ratio)
                + spec.noise_level * spec.noise_level * ch as f64;
            let model = SubjectModel {
                id: subject_id(s),
                group,
                mixing,
                gains: [spec.gain_ratio; 2],
                noise_level: spec.noise_level,
                noise_mixing: noise,
                amplitude: 1.0 / math::sqrt(power),
            };
            let calibration = simulate_session(&mut rng, &model, spec, &filter, spec.trials_per_class)?;
            let test = simulate_session(&mut rng, &model, spec, &filter, spec.test_trials_per_class)?;
            Ok(SyntheticSubject {
                model,
                calibration,
                test,
            })
        })
        .collect()
}

/// Error of the oracle classifier that unmixes with the true forward model
/// and thresholds the log-variance ratio of the two sources at the midpoint
/// of its class-conditional expectations.
pub fn bayes_reference_error(model: &SubjectModel, trials: &[Trial]) -> Result<f64> {
    if trials.is_empty() {
        return Err(Error::Empty("trial list"));
    }
    let unmix = model.unmixing()?;
    let stat_mean = |label| -> Result<f64> {
        let v = model.expected_unmixed_variance(&unmix, label)?;
        Ok(math::ln(v[0] / v[1]))
    };
    let threshold = 0.5 * (stat_mean(Label::Pos)? + stat_mean(Label::Neg)?);
    let mut wrong = 0usize;
    for t in trials {
        let u = unmix.matmul(&t.data)?;
        let var = |r: usize| {
            let row = u.row(r);
            let m = row.iter().sum::<f64>() / row.len() as f64;
            row.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / row.len() as f64
        };
        let stat = math::ln(var(0).max(1e-300) / var(1).max(1e-300));
        let predicted = if stat > threshold { Label::Pos } else { Label::Neg };
        if predicted != t.label {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / trials.len() as f64)
}

/// Largest principal angle (radians) between the column spans of two
/// `channels × k` matrices.
pub fn max_principal_angle(a: &Matrix, b: &Matrix) -> Result<f64> {
    let qa = orthonormal_basis(a)?;
    let qb = orthonormal_basis(b)?;
    let m = qa.t_matmul(&qb)?;
    let (ev, _) = sym_eig(&m.t_matmul(&m)?)?;
    let smallest = ev.iter().cloned().fold(f64::INFINITY, f64::min).clamp(0.0, 1.0);
    Ok(math::acos(math::sqrt(smallest)))
}

fn orthonormal_basis(a: &Matrix) -> Result<Matrix> {
    // modified Gram–Schmidt
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(a.cols());
    for j in 0..a.cols() {
        let mut v = a.column(j);
        for q in &cols {
            let d = dot(q, &v);
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
        }
        let n = norm(&v);
        if n == 0.0 {
            return Err(Error::Degenerate("matrix is column-rank deficient".into()));
        }
        cols.push(v.iter().map(|x| x / n).collect());
    }
    Matrix::from_columns(&cols)
}
