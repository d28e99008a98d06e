//! Experiment configuration and its default grids.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use mklcsp_core::mkl::PNorm;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five compared pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    CspLda,
    CspSvm,
    CcspLda,
    CcspSvm,
    Mkl,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::CspLda,
        Method::CspSvm,
        Method::CcspLda,
        Method::CcspSvm,
        Method::Mkl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::CspLda => "csp-lda",
            Method::CspSvm => "csp-svm",
            Method::CcspLda => "ccsp-lda",
            Method::CcspSvm => "ccsp-svm",
            Method::Mkl => "mkl",
        }
    }

    /// Parses a comma-separated method list.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = Method::ALL.iter().map(|m| m.as_str()).collect();
                Error::Usage(format!("unknown method {s:?}; expected one of {}", known.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub low_hz: f64,
    pub high_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub start_ms: f64,
    pub end_ms: f64,
}

/// JSON form of `p`: a number, or the string `"inf"`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PWire {
    Number(f64),
    Text(String),
}

pub(crate) fn p_to_string(p: PNorm) -> String {
    p.to_string()
}

pub(crate) fn p_from_str(s: &str) -> Option<PNorm> {
    match s {
        "inf" | "infinity" | "Infinity" => Some(PNorm::Infinity),
        other => other.parse::<f64>().ok().map(PNorm::Finite),
    }
}

mod p_grid {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(grid: &[PNorm], s: S) -> std::result::Result<S::Ok, S::Error> {
        let wire: Vec<PWire> = grid
            .iter()
            .map(|p| match p {
                PNorm::Finite(v) => PWire::Number(*v),
                PNorm::Infinity => PWire::Text("inf".into()),
            })
            .collect();
        wire.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<PNorm>, D::Error> {
        Vec::<PWire>::deserialize(d)?
            .into_iter()
            .map(|w| match w {
                PWire::Number(v) => Ok(PNorm::Finite(v)),
                PWire::Text(t) => p_from_str(&t)
                    .ok_or_else(|| serde::de::Error::custom(format!("invalid p value {t:?}"))),
            })
            .collect()
    }
}

/// Every knob of a benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub band: Band,
    pub filter_order: usize,
    pub window_ms: Window,
    /// Channels to keep, in order; `None` keeps all.
    pub channels: Option<Vec<String>>,
    pub folds: usize,
    pub c_grid: Vec<f64>,
    #[serde(with = "p_grid")]
    pub p_grid: Vec<PNorm>,
    pub lambda_grid: Vec<f64>,
    pub lda_gamma: f64,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Subjects evaluated as targets; `None` means every subject.
    pub targets: Option<Vec<String>>,
    /// Keep only this many of the target's calibration trials (half per
    /// class, earliest first). Other subjects always use all of theirs.
    pub calibration_trials: Option<usize>,
}

pub fn default_c_grid() -> Vec<f64> {
    (0..=8).map(|i| 10f64.powf(-2.0 + 0.5 * i as f64)).collect()
}

pub fn default_p_grid() -> Vec<PNorm> {
    [1.0, 1.125, 1.333, 2.0]
        .into_iter()
        .map(PNorm::Finite)
        .chain([PNorm::Infinity])
        .collect()
}

pub fn default_lambda_grid() -> Vec<f64> {
    let mut grid = vec![0.0, 1e-5, 1e-4, 1e-3, 1e-2];
    grid.extend((1..=10).map(|k| k as f64 / 10.0));
    grid
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            band: Band {
                low_hz: 8.0,
                high_hz: 30.0,
            },
            filter_order: 5,
            window_ms: Window {
                start_ms: 750.0,
                end_ms: 3500.0,
            },
            channels: None,
            folds: 5,
            c_grid: default_c_grid(),
            p_grid: default_p_grid(),
            lambda_grid: default_lambda_grid(),
            lda_gamma: mklcsp_core::lda::DEFAULT_GAMMA,
            seed: 1,
            methods: Method::ALL.to_vec(),
            targets: None,
            calibration_trials: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.band.low_hz > 0.0 && self.band.low_hz < self.band.high_hz) {
            return bad(format!(
                "band must satisfy 0 < low < high, got {}..{}",
                self.band.low_hz, self.band.high_hz
            ));
        }
        if self.filter_order == 0 {
            return bad("filter order must be at least 1".into());
        }
        if !(self.window_ms.start_ms < self.window_ms.end_ms) {
            return bad(format!(
                "epoch window {}..{} ms is empty",
                self.window_ms.start_ms, self.window_ms.end_ms
            ));
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.c_grid.is_empty() || self.p_grid.is_empty() || self.lambda_grid.is_empty() {
            return bad("hyperparameter grids must not be empty".into());
        }
        if let Some(c) = self.c_grid.iter().find(|c| !(**c > 0.0) || !c.is_finite()) {
            return bad(format!("C values must be positive and finite, got {c}"));
        }
        for p in &self.p_grid {
            p.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(l) = self.lambda_grid.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return bad(format!("lambda values must lie in [0, 1], got {l}"));
        }
        if !(0.0..=1.0).contains(&self.lda_gamma) {
            return bad(format!("lda_gamma must lie in [0, 1], got {}", self.lda_gamma));
        }
        if let Some(n) = self.calibration_trials {
            if n < 2 * self.folds || n % 2 != 0 {
                return bad(format!(
                    "calibration_trials must be even and at least {} for {} folds, got {n}",
                    2 * self.folds,
                    self.folds
                ));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }
}
