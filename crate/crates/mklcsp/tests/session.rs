mod common;

use common::formats::{cases, edit_bytes, failing_cases, recording, saved};
use mklcsp::session::{load_session, read_data, validate_session};
use mklcsp::Error;
use mklcsp_core::Matrix;

#[test]
fn round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let (meta, _) = saved(dir.path());
    let back = load_session(&meta).unwrap();
    let orig = recording();
    assert_eq!(back.channel_names, orig.channel_names);
    assert_eq!(back.markers, orig.markers);
    assert_eq!(back.fs.to_bits(), orig.fs.to_bits());
    let bits = |m: &Matrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back.data), bits(&orig.data));
}

#[test]
fn summary_counts_classes() {
    let dir = tempfile::tempdir().unwrap();
    let (meta, _) = saved(dir.path());
    let s = validate_session(&meta).unwrap();
    assert_eq!((s.channels, s.samples, s.markers, s.positive, s.negative), (4, 50, 3, 2, 1));
}

#[test]
fn corrupted_files_map_to_designated_errors() {
    assert!(cases().len() >= 20);
    let bad = failing_cases();
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn format_errors_carry_offsets() {
    let dir = tempfile::tempdir().unwrap();
    let (_, data) = saved(dir.path());
    edit_bytes(&data, |b| b[20 + 8 * 5..20 + 8 * 6].copy_from_slice(&f64::NAN.to_le_bytes()));
    match read_data(&data) {
        Err(Error::Format { offset, .. }) => assert_eq!(offset, 60),
        other => panic!("{other:?}"),
    }
    edit_bytes(&data, |b| b.truncate(100));
    match read_data(&data) {
        Err(Error::Format { offset, message, .. }) => {
            assert_eq!(offset, 100);
            assert!(message.contains("truncated"), "{message}");
        }
        other => panic!("{other:?}"),
    }
}
