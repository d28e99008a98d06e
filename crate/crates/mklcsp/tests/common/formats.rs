use std::fs;
use std::path::{Path, PathBuf};

use mklcsp::session::{save_session, HEADER_LEN};
use mklcsp::Error;
use mklcsp_core::signal::{Label, Marker, Recording};
use mklcsp_core::Matrix;

pub fn recording() -> Recording {
    let (ch, n) = (4, 50);
    // awkward values: subnormals, signed zero, extremes
    let mut data: Vec<f64> = (0..ch * n).map(|i| ((i as f64) * 0.7315).sin() * 1e-3).collect();
    data[3] = -0.0;
    data[7] = f64::MIN_POSITIVE / 4.0;
    data[11] = f64::MAX;
    data[13] = -1.0 / 3.0;
    let markers = vec![
        Marker { sample: 0, label: Label::Pos },
        Marker { sample: 20, label: Label::Neg },
        Marker { sample: 49, label: Label::Pos },
    ];
    let names = ["C3", "Cz", "C4", "Pz"].map(String::from).to_vec();
    Recording::new(Matrix::from_vec(ch, n, data).unwrap(), 250.0, names, markers).unwrap()
}

pub fn saved(dir: &Path) -> (PathBuf, PathBuf) {
    let meta = save_session(&recording(), dir, "s").unwrap();
    (meta, dir.join("s.eegdata"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Class {
    Format,
    Validation,
    Io,
}

pub fn class_of(e: &Error) -> Option<Class> {
    match e {
        Error::Format { .. } => Some(Class::Format),
        Error::Validation { .. } => Some(Class::Validation),
        Error::Io { .. } => Some(Class::Io),
        _ => None,
    }
}

pub type Corrupt = fn(&Path, &Path);

pub fn edit_bytes(path: &Path, f: impl FnOnce(&mut Vec<u8>)) {
    let mut b = fs::read(path).unwrap();
    f(&mut b);
    fs::write(path, b).unwrap();
}

pub fn edit_meta(path: &Path, f: impl FnOnce(&mut serde_json::Value)) {
    let mut v: serde_json::Value = serde_json::from_slice(&fs::read(path).unwrap()).unwrap();
    f(&mut v);
    fs::write(path, serde_json::to_vec(&v).unwrap()).unwrap();
}

pub fn cases() -> Vec<(&'static str, Corrupt, Class)> {
    vec![
        ("bad magic", |_, d| edit_bytes(d, |b| b[0] = b'X'), Class::Format),
        ("empty data file", |_, d| fs::write(d, b"").unwrap(), Class::Format),
        ("three byte file", |_, d| fs::write(d, b"EEG").unwrap(), Class::Format),
        ("truncated header", |_, d| edit_bytes(d, |b| b.truncate(12)), Class::Format),
        ("unknown version", |_, d| edit_bytes(d, |b| b[4] = 2), Class::Format),
        ("truncated by one byte", |_, d| edit_bytes(d, |b| { b.pop(); }), Class::Format),
        ("truncated to half", |_, d| edit_bytes(d, |b| b.truncate(b.len() / 2)), Class::Format),
        ("header only", |_, d| edit_bytes(d, |b| b.truncate(HEADER_LEN as usize)), Class::Format),
        ("trailing bytes", |_, d| edit_bytes(d, |b| b.extend_from_slice(&[0; 3])), Class::Format),
        (
            "sample count overflow",
            |_, d| edit_bytes(d, |b| b[12..20].copy_from_slice(&u64::MAX.to_le_bytes())),
            Class::Format,
        ),
        (
            "inflated sample count",
            |_, d| edit_bytes(d, |b| b[12..20].copy_from_slice(&51u64.to_le_bytes())),
            Class::Format,
        ),
        (
            "nan sample",
            |_, d| edit_bytes(d, |b| b[28..36].copy_from_slice(&f64::NAN.to_le_bytes())),
            Class::Format,
        ),
        (
            "infinite sample",
            |_, d| edit_bytes(d, |b| b[20..28].copy_from_slice(&f64::NEG_INFINITY.to_le_bytes())),
            Class::Format,
        ),
        (
            "channel count disagrees with names",
            |_, d| {
                edit_bytes(d, |b| {
                    // same byte count, reshaped to 2 x 100
                    b[8..12].copy_from_slice(&2u32.to_le_bytes());
                    b[12..20].copy_from_slice(&100u64.to_le_bytes());
                })
            },
            Class::Validation,
        ),
        ("missing data file", |_, d| fs::remove_file(d).unwrap(), Class::Io),
        ("malformed json", |m, _| edit_bytes(m, |b| b.truncate(b.len() / 2)), Class::Format),
        ("metadata not utf-8", |m, _| edit_bytes(m, |b| b.insert(1, 0xff)), Class::Format),
        (
            "unknown metadata key",
            |m, _| edit_meta(m, |v| { v["extra"] = 1.into(); }),
            Class::Format,
        ),
        (
            "missing metadata key",
            |m, _| edit_meta(m, |v| { v.as_object_mut().unwrap().remove("fs"); }),
            Class::Format,
        ),
        (
            "marker beyond the recording",
            |m, _| edit_meta(m, |v| v["markers"][1]["sample"] = 50.into()),
            Class::Validation,
        ),
        (
            "negative marker",
            |m, _| edit_meta(m, |v| v["markers"][0]["sample"] = (-1).into()),
            Class::Validation,
        ),
        (
            "marker sample overflows i64",
            |m, _| {
                edit_bytes(m, |b| {
                    let text = String::from_utf8(b.clone()).unwrap().replacen("\"sample\":20", "\"sample\":99999999999999999999", 1);
                    *b = text.into_bytes();
                })
            },
            Class::Format,
        ),
        (
            "label outside plus or minus one",
            |m, _| edit_meta(m, |v| v["markers"][2]["label"] = 0.into()),
            Class::Validation,
        ),
        (
            "duplicate channel names",
            |m, _| edit_meta(m, |v| v["channel_names"][3] = "C3".into()),
            Class::Validation,
        ),
        ("zero sampling rate", |m, _| edit_meta(m, |v| v["fs"] = 0.0.into()), Class::Validation),
    ]
}

/// Corrupts a fresh copy of the reference session with every case and
/// returns the cases whose error class was wrong, together with a
/// description of what happened.
pub fn failing_cases() -> Vec<String> {
    let mut bad = Vec::new();
    for (name, corrupt, expected) in cases() {
        let dir = tempfile::tempdir().unwrap();
        let (meta, data) = saved(dir.path());
        // compact JSON so byte-level edits see `"sample":20`
        edit_meta(&meta, |_| {});
        corrupt(&meta, &data);
        match std::panic::catch_unwind(|| mklcsp::session::load_session(&meta)) {
            Ok(Ok(_)) => bad.push(format!("{name}: loaded silently")),
            Ok(Err(e)) if class_of(&e) != Some(expected) => bad.push(format!("{name}: {e}")),
            Ok(Err(_)) => {}
            Err(_) => bad.push(format!("{name}: panicked")),
        }
    }
    bad
}
