//! Continuous-recording preprocessing: Butterworth band-pass design,
//! causal filtering, channel selection and cue-aligned epoching.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{mismatch, Error, Result};
use crate::math;
use crate::matrix::Matrix;

/// Two-class label. `Pos` is the left-hand class (+1), `Neg` the right-hand
/// class (−1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Pos,
    Neg,
}

impl Label {
    pub fn from_sign(v: i64) -> Option<Self> {
        match v {
            1 => Some(Label::Pos),
            -1 => Some(Label::Neg),
            _ => None,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }

    /// Label of a decision value; zero goes to `Pos`.
    pub fn from_decision(f: f64) -> Self {
        if f >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.as_i8())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Label::from_sign(v)
            .ok_or_else(|| serde::de::Error::custom(format!("label must be -1 or +1, got {v}")))
    }
}

/// A cue marker in a continuous recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Marker {
    pub sample: usize,
    pub label: Label,
}

/// A continuous multichannel recording with cue markers.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    /// `channels × samples`.
    pub data: Matrix,
    pub fs: f64,
    pub channel_names: Vec<String>,
    pub markers: Vec<Marker>,
}

impl Recording {
    /// Checks the structural invariants and wraps the parts.
    pub fn new(
        data: Matrix,
        fs: f64,
        channel_names: Vec<String>,
        markers: Vec<Marker>,
    ) -> Result<Self> {
        let rec = Self {
            data,
            fs,
            channel_names,
            markers,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fs > 0.0) || !self.fs.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sampling rate must be positive, got {}",
                self.fs
            )));
        }
        if self.channel_names.len() != self.data.rows() {
            return Err(mismatch(
                format_args!("{} channel names", self.data.rows()),
                self.channel_names.len(),
            ));
        }
        let n = self.samples();
        if let Some((i, m)) = self.markers.iter().enumerate().find(|(_, m)| m.sample >= n) {
            return Err(Error::InvalidParameter(format!(
                "marker {i} at sample {} is outside the recording of {n} samples",
                m.sample
            )));
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.data.rows()
    }

    pub fn samples(&self) -> usize {
        self.data.cols()
    }
}

/// One epoched trial: `channels × samples` plus its label.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub data: Matrix,
    pub label: Label,
}

/// One biquad `b0 + b1 z⁻¹ + b2 z⁻² / 1 + a1 z⁻¹ + a2 z⁻²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Section {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = Complex64::new(self.b[0], 0.0) + z_inv * self.b[1] + z2 * self.b[2];
        let den = Complex64::new(1.0, 0.0) + z_inv * self.a[0] + z2 * self.a[1];
        num / den
    }

    fn poles(&self) -> [Complex64; 2] {
        // z² + a1 z + a2 = 0
        let a1 = self.a[0];
        let a2 = self.a[1];
        let disc = math::csqrt(Complex64::new(a1 * a1 - 4.0 * a2, 0.0));
        [(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }
}

/// Digital Butterworth band-pass realized as a cascade of second-order
/// sections.
#[derive(Debug, Clone, PartialEq)]
pub struct BandpassFilter {
    pub sections: Vec<Section>,
    pub order: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub fs: f64,
}

impl BandpassFilter {
    /// Complex frequency response at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / self.fs;
        let z_inv = math::polar(1.0, -w);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        math::abs(self.response(freq_hz))
    }

    /// All z-plane poles of the cascade.
    pub fn poles(&self) -> Vec<Complex64> {
        self.sections.iter().flat_map(|s| s.poles()).collect()
    }

    /// Filters one sequence causally from zero initial state.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[0] * out + z2;
                z2 = s.b[2] * input - s.a[1] * out;
                *v = out;
            }
        }
        y
    }
}

/// Designs an `order`-th order Butterworth band-pass by band-transforming
/// the analog prototype and applying the bilinear transform with pre-warped
/// edges. The result has `2·order` poles grouped into `order` sections.
pub fn design_butterworth_bandpass(
    order: usize,
    low_hz: f64,
    high_hz: f64,
    fs: f64,
) -> Result<BandpassFilter> {
    if order == 0 {
        return Err(Error::InvalidParameter("filter order must be at least 1".into()));
    }
    if !(fs > 0.0) || !(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < fs / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "band edges must satisfy 0 < low < high < fs/2, got {low_hz}..{high_hz} Hz at fs {fs}"
        )));
    }

    let fs2 = 2.0 * fs;
    let w_low = fs2 * math::tan(PI * low_hz / fs);
    let w_high = fs2 * math::tan(PI * high_hz / fs);
    let bw = w_high - w_low;
    let w0_sq = w_low * w_high;

    // analog prototype poles on the left half of the unit circle
    let n = order as f64;
    let mut analog = Vec::with_capacity(2 * order);
    for k in 0..order {
        let theta = PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n);
        let p = math::polar(1.0, theta);
        // lowpass -> bandpass: s² - p·bw·s + w0² = 0
        let pb = p * bw;
        let disc = math::csqrt(pb * pb - 4.0 * w0_sq);
        analog.push((pb + disc) / 2.0);
        analog.push((pb - disc) / 2.0);
    }

    // bilinear transform; zeros at s = 0 map to z = 1, zeros at ∞ to z = −1
    let fs2c = Complex64::new(fs2, 0.0);
    let mut gain = Complex64::new(math::powf(bw, n), 0.0);
    let mut digital = Vec::with_capacity(2 * order);
    for &p in &analog {
        gain /= fs2c - p;
        digital.push((fs2c + p) / (fs2c - p));
    }
    gain *= math::powf(fs2, n);
    let gain = gain.re;

    let sections = pair_sections(&digital, gain)?;
    Ok(BandpassFilter {
        sections,
        order,
        low_hz,
        high_hz,
        fs,
    })
}

fn pair_sections(poles: &[Complex64], gain: f64) -> Result<Vec<Section>> {
    let tol = 1e-10;
    let mut upper: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > tol).collect();
    let mut real: Vec<f64> = poles.iter().filter(|p| p.im.abs() <= tol).map(|p| p.re).collect();
    if !real.len().is_multiple_of(2) || upper.len() * 2 + real.len() != poles.len() {
        return Err(Error::Degenerate("pole set is not closed under conjugation".into()));
    }
    upper.sort_by(|a, b| math::abs(*a).partial_cmp(&math::abs(*b)).unwrap_or(core::cmp::Ordering::Equal));
    real.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));

    let mut sections: Vec<Section> = upper
        .iter()
        .map(|p| Section {
            b: [1.0, 0.0, -1.0],
            a: [-2.0 * p.re, p.norm_sqr()],
        })
        .collect();
    for pair in real.chunks(2) {
        sections.push(Section {
            b: [1.0, 0.0, -1.0],
            a: [-(pair[0] + pair[1]), pair[0] * pair[1]],
        });
    }
    if let Some(first) = sections.first_mut() {
        first.b.iter_mut().for_each(|b| *b *= gain);
    }
    Ok(sections)
}

/// Filters every channel of a recording; markers and names are kept.
pub fn apply_filter(filter: &BandpassFilter, rec: &Recording) -> Result<Recording> {
    if (filter.fs - rec.fs).abs() > 1e-9 * rec.fs {
        return Err(Error::InvalidParameter(format!(
            "filter designed for fs {} applied to recording at fs {}",
            filter.fs, rec.fs
        )));
    }
    let mut data = Matrix::zeros(rec.channels(), rec.samples());
    for ch in 0..rec.channels() {
        let y = filter.filter(rec.data.row(ch));
        data.row_mut(ch).copy_from_slice(&y);
    }
    Ok(Recording {
        data,
        fs: rec.fs,
        channel_names: rec.channel_names.clone(),
        markers: rec.markers.clone(),
    })
}

/// Keeps the named channels in the requested order.
pub fn select_channels<S: AsRef<str>>(rec: &Recording, names: &[S]) -> Result<Recording> {
    let mut unknown = Vec::new();
    let mut duplicate = Vec::new();
    let mut rows = Vec::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        let name = name.as_ref();
        if names[..i].iter().any(|n| n.as_ref() == name) {
            duplicate.push(name);
            continue;
        }
        let hits: Vec<usize> = rec
            .channel_names
            .iter()
            .enumerate()
            .filter(|(_, n)| n.as_str() == name)
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [row] => rows.push(*row),
            [] => unknown.push(name),
            _ => duplicate.push(name),
        }
    }
    if !unknown.is_empty() || !duplicate.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "channel selection failed: unknown {unknown:?}, duplicate {duplicate:?}"
        )));
    }
    Ok(Recording {
        data: rec.data.select_rows(&rows),
        fs: rec.fs,
        channel_names: rows.iter().map(|&r| rec.channel_names[r].clone()).collect(),
        markers: rec.markers.clone(),
    })
}

/// Converts a millisecond offset to samples with round-to-nearest.
pub fn ms_to_samples(ms: f64, fs: f64) -> i64 {
    math::round(ms * fs / 1000.0) as i64
}

/// Cuts one trial per marker over the half-open window
/// `[cue + start, cue + end)`.
pub fn epoch(rec: &Recording, start_ms: f64, end_ms: f64) -> Result<Vec<Trial>> {
    let start = ms_to_samples(start_ms, rec.fs);
    let end = ms_to_samples(end_ms, rec.fs);
    if end <= start {
        return Err(Error::InvalidParameter(format!(
            "epoch window {start_ms}..{end_ms} ms is empty at fs {}",
            rec.fs
        )));
    }
    let len = (end - start) as usize;
    let n = rec.samples() as i64;
    let mut trials = Vec::with_capacity(rec.markers.len());
    for (i, m) in rec.markers.iter().enumerate() {
        let from = m.sample as i64 + start;
        let to = m.sample as i64 + end;
        if from < 0 || to > n {
            return Err(Error::InvalidParameter(format!(
                "marker {i} at sample {}: window [{from}, {to}) exceeds the recording of {n} samples",
                m.sample
            )));
        }
        let mut data = Matrix::zeros(rec.channels(), len);
        for ch in 0..rec.channels() {
            data.row_mut(ch)
                .copy_from_slice(&rec.data.row(ch)[from as usize..to as usize]);
        }
        trials.push(Trial {
            data,
            label: m.label,
        });
    }
    Ok(trials)
}
