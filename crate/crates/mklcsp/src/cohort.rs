//! Cohort directories: a `cohort.json` manifest plus per-subject sessions.

use std::fs;
use std::path::Path;

use mklcsp_core::signal::Recording;
use mklcsp_core::synth::{CohortSpec, Group, SubjectModel, SyntheticSubject};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::session::{load_session, save_session, META_SUFFIX};

pub const MANIFEST: &str = "cohort.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<Group>,
    /// Metadata file of the calibration session, relative to the directory.
    pub calibration: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<String>,
    /// Ground-truth generator model, for synthetic cohorts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<CohortSpec>,
    pub subjects: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortSubject {
    pub id: String,
    pub group: Option<Group>,
    pub calibration: Recording,
    /// Absent when the test session is not on disk.
    pub test: Option<Recording>,
    pub model: Option<SubjectModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub spec: Option<CohortSpec>,
    pub subjects: Vec<CohortSubject>,
}

impl Cohort {
    pub fn from_synthetic(spec: Option<CohortSpec>, subjects: Vec<SyntheticSubject>) -> Self {
        Self {
            spec,
            subjects: subjects
                .into_iter()
                .map(|s| CohortSubject {
                    id: s.model.id.clone(),
                    group: Some(s.model.group),
                    calibration: s.calibration,
                    test: Some(s.test),
                    model: Some(s.model),
                })
                .collect(),
        }
    }

    pub fn ids(&self) -> Vec<String> {
        self.subjects.iter().map(|s| s.id.clone()).collect()
    }

    pub fn subject(&self, id: &str) -> Option<&CohortSubject> {
        self.subjects.iter().find(|s| s.id == id)
    }
}

/// Writes every session and model of a cohort plus its manifest.
pub fn write_cohort(dir: &Path, cohort: &Cohort) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(cohort.subjects.len());
    for s in &cohort.subjects {
        let cal = save_session(&s.calibration, dir, &format!("{}_calibration", s.id))?;
        let test = match &s.test {
            Some(t) => Some(save_session(t, dir, &format!("{}_test", s.id))?),
            None => None,
        };
        let model = match &s.model {
            Some(m) => {
                let name = format!("{}_model.json", s.id);
                let path = dir.join(&name);
                let text = serde_json::to_string(m).expect("subject model serializes");
                fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
                Some(name)
            }
            None => None,
        };
        let file_name = |p: &Path| p.file_name().expect("session path has a name").to_string_lossy().into_owned();
        entries.push(ManifestEntry {
            id: s.id.clone(),
            group: s.group,
            calibration: file_name(&cal),
            test: test.as_deref().map(file_name),
            model,
        });
    }
    let manifest = CohortManifest {
        spec: cohort.spec.clone(),
        subjects: entries,
    };
    let path = dir.join(MANIFEST);
    fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))
        .map_err(|e| Error::io(&path, e))
}

/// Loads a cohort directory. A listed test session that is missing from
/// disk is treated as absent rather than as an error.
pub fn load_cohort(dir: &Path) -> Result<Cohort> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: CohortManifest = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.clone(),
        offset: 0,
        message: format!("invalid cohort manifest: {e}"),
    })?;
    if manifest.subjects.is_empty() {
        return Err(Error::validation(&path, "cohort lists no subjects"));
    }
    let mut seen = std::collections::HashSet::new();
    let mut subjects = Vec::with_capacity(manifest.subjects.len());
    for e in manifest.subjects {
        if !seen.insert(e.id.clone()) {
            return Err(Error::validation(&path, format!("duplicate subject id {:?}", e.id)));
        }
        let calibration = load_session(&dir.join(&e.calibration))?;
        let test = match &e.test {
            Some(t) if dir.join(t).exists() => Some(load_session(&dir.join(t))?),
            _ => None,
        };
        let model = match &e.model {
            Some(m) => {
                let mp = dir.join(m);
                let text = fs::read_to_string(&mp).map_err(|err| Error::io(&mp, err))?;
                Some(serde_json::from_str(&text).map_err(|err| Error::Format {
                    path: mp.clone(),
                    offset: 0,
                    message: format!("invalid subject model: {err}"),
                })?)
            }
            None => None,
        };
        subjects.push(CohortSubject {
            id: e.id,
            group: e.group,
            calibration,
            test,
            model,
        });
    }
    Ok(Cohort {
        spec: manifest.spec,
        subjects,
    })
}

/// Deletes every test session of a cohort directory (both files).
pub fn remove_test_sessions(dir: &Path) -> Result<usize> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: CohortManifest = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.clone(),
        offset: 0,
        message: e.to_string(),
    })?;
    let mut removed = 0;
    for t in manifest.subjects.iter().filter_map(|e| e.test.as_ref()) {
        let meta = dir.join(t);
        if meta.exists() {
            let data = dir.join(format!(
                "{}{}",
                t.strip_suffix(META_SUFFIX).unwrap_or(t),
                crate::session::DATA_SUFFIX
            ));
            fs::remove_file(&meta).map_err(|e| Error::io(&meta, e))?;
            if data.exists() {
                fs::remove_file(&data).map_err(|e| Error::io(&data, e))?;
            }
            removed += 1;
        }
    }
    Ok(removed)
}
