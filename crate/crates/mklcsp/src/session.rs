//! Two-file session format: a JSON sidecar with sampling rate, channel
//! names and cue markers, and a little-endian binary sample matrix.
//!
//! Binary layout: `"EEGS"`, `u32` version (1), `u32` channel count, `u64`
//! sample count, then `channels × samples` `f64` values, channel-major.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mklcsp_core::signal::{Label, Marker, Recording};
use mklcsp_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EEGS";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 20;
pub const META_SUFFIX: &str = ".eegmeta.json";
pub const DATA_SUFFIX: &str = ".eegdata";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarkerRecord {
    sample: i64,
    label: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionMeta {
    fs: f64,
    channel_names: Vec<String>,
    markers: Vec<MarkerRecord>,
    data_file: String,
}

/// Writes `<dir>/<name>.eegmeta.json` and `<dir>/<name>.eegdata` and
/// returns the metadata path.
pub fn save_session(rec: &Recording, dir: &Path, name: &str) -> Result<PathBuf> {
    rec.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let data_name = format!("{name}{DATA_SUFFIX}");
    let data_path = dir.join(&data_name);
    let file = fs::File::create(&data_path).map_err(|e| Error::io(&data_path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<fs::File>, bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(&data_path, e));
    write(&mut w, MAGIC)?;
    write(&mut w, &VERSION.to_le_bytes())?;
    let channels = u32::try_from(rec.channels())
        .map_err(|_| Error::validation(&data_path, "too many channels for the format"))?;
    write(&mut w, &channels.to_le_bytes())?;
    write(&mut w, &(rec.samples() as u64).to_le_bytes())?;
    for v in rec.data.as_slice() {
        write(&mut w, &v.to_le_bytes())?;
    }
    w.flush().map_err(|e| Error::io(&data_path, e))?;

    let meta = SessionMeta {
        fs: rec.fs,
        channel_names: rec.channel_names.clone(),
        markers: rec
            .markers
            .iter()
            .map(|m| MarkerRecord {
                sample: m.sample as i64,
                label: m.label.as_i8() as i64,
            })
            .collect(),
        data_file: data_name,
    };
    let meta_path = dir.join(format!("{name}{META_SUFFIX}"));
    let text = serde_json::to_string_pretty(&meta).expect("session metadata serializes");
    fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))?;
    Ok(meta_path)
}

/// Byte offset of a 1-based line/column position.
fn byte_offset(text: &str, line: usize, column: usize) -> u64 {
    let start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column.saturating_sub(1)) as u64
}

fn read_meta(path: &Path) -> Result<SessionMeta> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::Format {
        path: path.into(),
        offset: e.valid_up_to() as u64,
        message: "metadata is not valid UTF-8".into(),
    })?;
    serde_json::from_str(text).map_err(|e| Error::Format {
        path: path.into(),
        offset: byte_offset(text, e.line(), e.column()),
        message: format!("invalid session metadata: {e}"),
    })
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

/// Parses the binary sample file into a `channels × samples` matrix.
pub fn read_data(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let fmt = |offset: u64, message: String| Error::Format {
        path: path.into(),
        offset,
        message,
    };
    let len = bytes.len() as u64;
    if len < 4 || &bytes[..4] != MAGIC {
        let found = &bytes[..bytes.len().min(4)];
        return Err(fmt(0, format!("bad magic: expected {MAGIC:?}, found {found:?}")));
    }
    if len < HEADER_LEN {
        return Err(fmt(
            len,
            format!("truncated header: expected {HEADER_LEN} bytes, found {len}"),
        ));
    }
    let version = read_u32(&bytes, 4);
    if version != VERSION {
        return Err(fmt(4, format!("unsupported version {version}, expected {VERSION}")));
    }
    let channels = read_u32(&bytes, 8) as u64;
    let samples = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let expected = channels
        .checked_mul(samples)
        .and_then(|v| v.checked_mul(8))
        .and_then(|v| v.checked_add(HEADER_LEN))
        .ok_or_else(|| fmt(8, format!("shape {channels}x{samples} overflows the byte count")))?;
    if len < expected {
        return Err(fmt(
            len,
            format!("truncated data: expected {expected} bytes, found {len}"),
        ));
    }
    if len > expected {
        return Err(fmt(
            expected,
            format!("trailing bytes: expected {expected} bytes, found {len}"),
        ));
    }
    let values: Vec<f64> = bytes[HEADER_LEN as usize..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(fmt(
            HEADER_LEN + 8 * i as u64,
            format!("non-finite sample at channel {}, sample {}", i as u64 / samples, i as u64 % samples),
        ));
    }
    Ok(Matrix::from_vec(channels as usize, samples as usize, values)?)
}

/// Loads and validates a session from its metadata path.
pub fn load_session(meta_path: &Path) -> Result<Recording> {
    let meta = read_meta(meta_path)?;
    let invalid = |msg: String| Error::validation(meta_path, msg);
    if !(meta.fs > 0.0) || !meta.fs.is_finite() {
        return Err(invalid(format!("sampling rate must be positive, got {}", meta.fs)));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = meta.channel_names.iter().find(|n| !seen.insert(n.as_str())) {
        return Err(invalid(format!("duplicate channel name {dup:?}")));
    }
    let data_path = meta_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&meta.data_file);
    let data = read_data(&data_path)?;
    if data.rows() != meta.channel_names.len() {
        return Err(invalid(format!(
            "data file has {} channels but {} channel names are listed",
            data.rows(),
            meta.channel_names.len()
        )));
    }
    if data.rows() == 0 || data.cols() == 0 {
        return Err(invalid("session has no samples".into()));
    }
    let n = data.cols() as i64;
    let markers = meta
        .markers
        .iter()
        .enumerate()
        .map(|(i, m)| {
            if !(0..n).contains(&m.sample) {
                return Err(invalid(format!(
                    "marker {i} at sample {} is outside the recording of {n} samples",
                    m.sample
                )));
            }
            let label = Label::from_sign(m.label)
                .ok_or_else(|| invalid(format!("marker {i} has label {}, expected -1 or +1", m.label)))?;
            Ok(Marker {
                sample: m.sample as usize,
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Recording::new(data, meta.fs, meta.channel_names, markers)?)
}

/// Short description of a valid session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionSummary {
    pub channels: usize,
    pub samples: usize,
    pub fs: f64,
    pub markers: usize,
    pub positive: usize,
    pub negative: usize,
}

/// Loads a session and summarizes it.
pub fn validate_session(meta_path: &Path) -> Result<SessionSummary> {
    let rec = load_session(meta_path)?;
    let positive = rec.markers.iter().filter(|m| m.label == Label::Pos).count();
    Ok(SessionSummary {
        channels: rec.channels(),
        samples: rec.samples(),
        fs: rec.fs,
        markers: rec.markers.len(),
        positive,
        negative: rec.markers.len() - positive,
    })
}
