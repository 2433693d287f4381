use std::fs;
use std::path::PathBuf;

use proptest::prelude::*;
use raven_core::gen::{generate_dataset, GenConfig};
use raven_core::io::{
    decode_grvn, decode_jsonl, encode_grvn, encode_jsonl, read_dataset, read_manifest, write_dataset, Format,
    GrvnFile, HEADER_LEN, RECORD_LEN,
};
use raven_core::rng::Split;
use raven_core::types::Slot;
use raven_core::{RuleId, Sample};

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn golden_config() -> GenConfig {
    GenConfig::new(7, 2).with_held_out(Vec::new())
}

/// Rewrites the pinned files when `RAVEN_BLESS=1`.
fn check_golden(name: &str, bytes: &[u8]) {
    let path = golden_dir().join(name);
    if std::env::var("RAVEN_BLESS").as_deref() == Ok("1") {
        fs::create_dir_all(golden_dir()).unwrap();
        fs::write(&path, bytes).unwrap();
    }
    let pinned = fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(pinned == bytes, "{name} differs from the pinned golden file");
}

#[test]
fn golden_dataset_bytes() {
    let (samples, manifest) = generate_dataset(&golden_config()).unwrap();
    assert_eq!(samples.len(), 80);
    let bin = encode_grvn(&samples).unwrap();
    assert_eq!(bin.len(), HEADER_LEN + RECORD_LEN * 80);
    check_golden("seed7_2_per_rule.grvn", &bin);
    check_golden("seed7_2_per_rule.jsonl", encode_jsonl(&samples).as_bytes());
    check_golden("seed7_2_per_rule.manifest.json", manifest.to_canonical_json().as_bytes());
}

#[test]
fn golden_files_decode_to_the_same_samples() {
    let (samples, manifest) = generate_dataset(&golden_config()).unwrap();
    let dir = golden_dir();
    assert_eq!(read_dataset(dir.join("seed7_2_per_rule.grvn")).unwrap(), samples);
    assert_eq!(read_dataset(dir.join("seed7_2_per_rule.jsonl")).unwrap(), samples);
    assert_eq!(read_manifest(dir.join("seed7_2_per_rule.manifest.json")).unwrap(), manifest);
}

#[test]
fn single_object_record_layout() {
    let mut s = Sample::default().with_label(Some("OR-SIZE".parse().unwrap()));
    s.panel_mut(0).slots[0] = Slot::from_raw([2, 0, 5]);
    let bin = encode_grvn(&[s]).unwrap();
    assert_eq!(&bin[..4], b"GRVN");
    assert_eq!(&bin[4..16], &[1, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0]);
    let rec = &bin[16..];
    assert_eq!(rec[0], "OR-SIZE".parse::<RuleId>().unwrap().index() as u8);
    assert_eq!(rec[1], 2);
    assert_eq!(rec[1 + 81], 0);
    assert_eq!(rec[1 + 162], 5);
    let minus_one = rec[1..].iter().filter(|&&b| b == 0xFF).count();
    assert_eq!(minus_one, 240);
}

#[test]
fn files_round_trip_through_both_formats() {
    let (samples, _) = generate_dataset(&GenConfig::new(3, 5).with_split(Split::Control)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("d.grvn");
    let txt = dir.path().join("d.jsonl");
    write_dataset(&samples, &bin, Format::Binary).unwrap();
    let back = read_dataset(&bin).unwrap();
    write_dataset(&back, &txt, Format::Jsonl).unwrap();
    let again = read_dataset(&txt).unwrap();
    let bin2 = dir.path().join("e.grvn");
    write_dataset(&again, &bin2, Format::Binary).unwrap();
    assert_eq!(fs::read(&bin).unwrap(), fs::read(&bin2).unwrap());
    let f = GrvnFile::open(&bin).unwrap();
    assert_eq!(f.len(), samples.len());
    assert!(f.is_labeled());
    assert_eq!(f.sample(123).unwrap(), samples[123]);
}

fn arbitrary_byte_grid() -> impl Strategy<Value = (Option<u8>, Vec<i8>)> {
    (prop::option::of(0u8..40), prop::collection::vec(prop_oneof![Just(-1i8), 0i8..10, any::<i8>()], 243))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Readers take any signed-byte payload; re-encoding must reproduce it.
    #[test]
    fn arbitrary_records_survive_both_codecs(recs in prop::collection::vec(arbitrary_byte_grid(), 0..6)) {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"GRVN");
        bytes.extend_from_slice(&1u16.to_le_bytes());
        let labeled = !recs.is_empty() && recs.iter().all(|r| r.0.is_some());
        bytes.extend_from_slice(&(labeled as u16).to_le_bytes());
        bytes.extend_from_slice(&(recs.len() as u64).to_le_bytes());
        for (label, grid) in &recs {
            bytes.push(label.unwrap_or(255));
            bytes.extend(grid.iter().map(|&v| v as u8));
        }
        let samples = decode_grvn(bytes.clone()).unwrap();
        prop_assert_eq!(&encode_grvn(&samples).unwrap(), &bytes);
        let via_text = decode_jsonl(&encode_jsonl(&samples)).unwrap();
        prop_assert_eq!(encode_grvn(&via_text).unwrap(), bytes);
    }
}
