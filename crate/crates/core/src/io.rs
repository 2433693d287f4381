//! Dataset files and manifests.
//!
//! # GRVN binary layout
//!
//! ```text
//! offset  size  field
//! 0       4     magic "GRVN" (0x47 0x52 0x56 0x4E)
//! 4       2     version, u16 LE (= 1)
//! 6       2     flags, u16 LE (bit 0: every record is labeled)
//! 8       8     record count, u64 LE
//! 16      244n  records
//! ```
//!
//! Each record is one rule byte (inventory index 0..39, 255 = unlabeled)
//! followed by the 243 grid values as signed bytes in `(channel, panel,
//! slot)` order.
//!
//! # JSONL layout
//!
//! One object per line: `{"rule": "CONST-SHAPE" | null, "grid": [[[..]]]}`
//! where `grid` is indexed `[channel][panel][slot]`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gen::GenConfig;
use crate::inventory::{inventory_digest, inventory_names, RuleId};
use crate::rng::{Split, RNG_SCHEME};
use crate::types::{decode_sample, encode_sample, Sample, CHANNELS, GRID_LEN, PANELS, SLOTS};

pub const MAGIC: [u8; 4] = *b"GRVN";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;
pub const RECORD_LEN: usize = 1 + GRID_LEN;
pub const UNLABELED: u8 = 255;
const FLAG_LABELED: u16 = 1;

pub const MANIFEST_VERSION: u32 = 1;
pub const PURITY_POLICY: &str = "all-dimensions";
/// Per-channel (shape, size, color) normalization constants for model training.
pub const NORMALIZATION_MEAN: [f64; 3] = [1.5, 2.5, 2.5];
pub const NORMALIZATION_STD: [f64; 3] = [2.5, 3.5, 3.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Binary,
    Jsonl,
}

impl Format {
    /// `.jsonl` / `.json` select JSONL, anything else binary.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => Format::Jsonl,
            _ => Format::Binary,
        }
    }
}

fn grid_to_bytes(sample: &Sample, out: &mut Vec<u8>) -> Result<()> {
    for (position, &v) in encode_sample(sample).iter().enumerate() {
        let b = i8::try_from(v).map_err(|_| Error::Unencodable { position, value: v })?;
        out.push(b as u8);
    }
    Ok(())
}

pub fn encode_grvn(samples: &[Sample]) -> Result<Vec<u8>> {
    let labeled = !samples.is_empty() && samples.iter().all(|s| s.label.is_some());
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * samples.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(if labeled { FLAG_LABELED } else { 0 }).to_le_bytes());
    out.extend_from_slice(&(samples.len() as u64).to_le_bytes());
    for (i, s) in samples.iter().enumerate() {
        out.push(s.label.map_or(UNLABELED, |r| r.index() as u8));
        grid_to_bytes(s, &mut out).map_err(|e| e.at_record(i))?;
    }
    Ok(out)
}

/// A GRVN file held in memory with O(1) record access.
#[derive(Debug, Clone)]
pub struct GrvnFile {
    bytes: Vec<u8>,
    count: usize,
    labeled: bool,
}

impl GrvnFile {
    pub fn from_bytes(bytes: Vec<u8>) -> Result<GrvnFile> {
        let fmt = |offset: usize, reason: String| Error::Format { offset: offset as u64, reason };
        if bytes.len() < HEADER_LEN {
            return Err(fmt(bytes.len(), format!("truncated header ({} of {HEADER_LEN} bytes)", bytes.len())));
        }
        if bytes[..4] != MAGIC {
            return Err(fmt(0, format!("bad magic {:02x?}", &bytes[..4])));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(fmt(4, format!("unsupported version {version}")));
        }
        let flags = u16::from_le_bytes([bytes[6], bytes[7]]);
        if flags & !FLAG_LABELED != 0 {
            return Err(fmt(6, format!("unknown flags {flags:#06x}")));
        }
        let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        let expected = (count as u128) * RECORD_LEN as u128 + HEADER_LEN as u128;
        if (bytes.len() as u128) < expected {
            let complete = (bytes.len() - HEADER_LEN) / RECORD_LEN;
            return Err(fmt(
                HEADER_LEN + complete * RECORD_LEN,
                format!("truncated: header declares {count} records, file holds {complete}"),
            ));
        }
        if (bytes.len() as u128) > expected {
            return Err(fmt(expected as usize, "trailing bytes after last record".into()));
        }
        let file = GrvnFile { bytes, count: count as usize, labeled: flags & FLAG_LABELED != 0 };
        for i in 0..file.count {
            file.rule_byte(i)?;
        }
        Ok(file)
    }

    pub fn open(path: impl AsRef<Path>) -> Result<GrvnFile> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
        GrvnFile::from_bytes(bytes).map_err(|e| e.in_file(path))
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn is_labeled(&self) -> bool {
        self.labeled
    }

    fn record_offset(&self, index: usize) -> usize {
        HEADER_LEN + index * RECORD_LEN
    }

    fn rule_byte(&self, index: usize) -> Result<Option<RuleId>> {
        let offset = self.record_offset(index);
        match self.bytes[offset] {
            UNLABELED if self.labeled => Err(Error::Format {
                offset: offset as u64,
                reason: "unlabeled record in a file flagged as labeled".into(),
            }),
            UNLABELED => Ok(None),
            b => RuleId::from_index(b as usize).map(Some).ok_or(Error::Format {
                offset: offset as u64,
                reason: format!("rule index {b} out of range"),
            }),
        }
    }

    /// Raw grid values of record `index`.
    pub fn grid(&self, index: usize) -> [i32; GRID_LEN] {
        let start = self.record_offset(index) + 1;
        let mut g = [0i32; GRID_LEN];
        for (dst, &b) in g.iter_mut().zip(&self.bytes[start..start + GRID_LEN]) {
            *dst = b as i8 as i32;
        }
        g
    }

    pub fn sample(&self, index: usize) -> Result<Sample> {
        assert!(index < self.count, "record {index} out of range ({} records)", self.count);
        let label = self.rule_byte(index)?;
        let (s, _) = decode_sample(&self.grid(index))?;
        Ok(s.with_label(label))
    }

    pub fn samples(&self) -> Result<Vec<Sample>> {
        (0..self.count).map(|i| self.sample(i)).collect()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

pub fn decode_grvn(bytes: Vec<u8>) -> Result<Vec<Sample>> {
    GrvnFile::from_bytes(bytes)?.samples()
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    rule: Option<String>,
    grid: Vec<Vec<Vec<i64>>>,
}

pub fn sample_to_json_line(sample: &Sample) -> String {
    let g = encode_sample(sample);
    let grid = (0..CHANNELS)
        .map(|c| {
            (0..PANELS)
                .map(|p| (0..SLOTS).map(|s| g[crate::types::grid_index(c, p, s)] as i64).collect())
                .collect()
        })
        .collect();
    let rec = JsonRecord { rule: sample.label.map(|r| r.name().to_string()), grid };
    serde_json::to_string(&rec).expect("record serializes")
}

pub fn sample_from_json_line(line: &str) -> Result<Sample> {
    let rec: JsonRecord = serde_json::from_str(line)?;
    if rec.grid.len() != CHANNELS
        || rec.grid.iter().any(|c| c.len() != PANELS || c.iter().any(|p| p.len() != SLOTS))
    {
        let actual = rec.grid.iter().flatten().map(Vec::len).sum();
        return Err(Error::Dimension { expected: GRID_LEN, actual });
    }
    let mut values = Vec::with_capacity(GRID_LEN);
    for (position, &v) in rec.grid.iter().flatten().flatten().enumerate() {
        let v = i32::try_from(v).map_err(|_| Error::TextFormat {
            line: 0,
            reason: format!("grid value {v} at position {position} is out of range"),
        })?;
        values.push(v);
    }
    let label = rec.rule.map(|n| n.parse::<RuleId>()).transpose()?;
    let (s, _) = decode_sample(&values)?;
    Ok(s.with_label(label))
}

pub fn encode_jsonl(samples: &[Sample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&sample_to_json_line(s));
        out.push('\n');
    }
    out
}

pub fn decode_jsonl(text: &str) -> Result<Vec<Sample>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            sample_from_json_line(l).map_err(|e| Error::TextFormat { line: i + 1, reason: e.to_string() })
        })
        .collect()
}

pub fn write_dataset(samples: &[Sample], path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        Format::Binary => encode_grvn(samples).map_err(|e| e.in_file(path))?,
        Format::Jsonl => encode_jsonl(samples).into_bytes(),
    };
    fs::write(path, bytes).map_err(|e| Error::from(e).in_file(path))
}

/// Reads a dataset. Files named `*.grvn` / `*.bin` or starting with the
/// GRVN magic are binary; everything else is JSONL.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<Sample>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    let binary_ext = matches!(path.extension().and_then(|e| e.to_str()), Some("grvn") | Some("bin"));
    let parsed = if binary_ext || bytes.starts_with(&MAGIC) {
        decode_grvn(bytes)
    } else {
        String::from_utf8(bytes)
            .map_err(|e| Error::Format { offset: e.utf8_error().valid_up_to() as u64, reason: "not GRVN and not UTF-8 text".into() })
            .and_then(|t| decode_jsonl(&t))
    };
    parsed.map_err(|e| e.in_file(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization { mean: NORMALIZATION_MEAN, std: NORMALIZATION_STD }
    }
}

/// Reproducibility record written next to every generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub seed: u64,
    pub split: Split,
    pub rule_inventory: Vec<String>,
    /// `0x`-prefixed hex of [`inventory_digest`] over `rule_inventory`.
    pub inventory_digest: String,
    /// Rules present in the dataset, in file order.
    pub rules: Vec<String>,
    pub held_out: Vec<String>,
    pub samples_per_rule: u64,
    pub total_samples: u64,
    pub purity_policy: String,
    pub max_stage_attempts: u32,
    pub max_row_restarts: u32,
    pub normalization: Normalization,
    pub rng_scheme: String,
}

fn digest_hex(names: &[String]) -> String {
    format!("{:#018x}", inventory_digest(names))
}

impl DatasetManifest {
    pub fn for_config(cfg: &GenConfig, rules: &[RuleId]) -> DatasetManifest {
        let inventory = inventory_names();
        DatasetManifest {
            format_version: MANIFEST_VERSION,
            seed: cfg.seed,
            split: cfg.split,
            inventory_digest: digest_hex(&inventory),
            rule_inventory: inventory,
            rules: rules.iter().map(|r| r.name().to_string()).collect(),
            held_out: cfg.held_out.iter().map(|r| r.name().to_string()).collect(),
            samples_per_rule: cfg.samples_per_rule,
            total_samples: cfg.samples_per_rule * rules.len() as u64,
            purity_policy: PURITY_POLICY.to_string(),
            max_stage_attempts: cfg.budget.max_stage_attempts,
            max_row_restarts: cfg.budget.max_row_restarts,
            normalization: Normalization::default(),
            rng_scheme: RNG_SCHEME.to_string(),
        }
    }

    pub fn verify_digest(&self) -> Result<()> {
        let want = digest_hex(&self.rule_inventory);
        if want != self.inventory_digest {
            return Err(Error::Integrity(format!(
                "inventory digest {} does not match listing (expected {want})",
                self.inventory_digest
            )));
        }
        Ok(())
    }

    /// True when the recorded inventory is this library's built-in one.
    pub fn uses_builtin_inventory(&self) -> bool {
        self.rule_inventory == inventory_names()
    }

    pub fn held_out_rules(&self) -> Result<Vec<RuleId>> {
        self.held_out.iter().map(|n| n.parse()).collect()
    }

    /// Canonical JSON: keys sorted, two-space indent, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("manifest serializes");
        let mut s = serde_json::to_string_pretty(&sort_keys(value)).expect("value serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<DatasetManifest> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0);
        if version != MANIFEST_VERSION as u64 {
            return Err(Error::Version { found: version as u32, expected: MANIFEST_VERSION });
        }
        let m: DatasetManifest = serde_json::from_value(value)?;
        m.verify_digest()?;
        Ok(m)
    }
}

fn sort_keys(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Object(map) => {
            let mut entries: Vec<_> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort_keys(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

pub fn write_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, manifest.to_canonical_json()).map_err(|e| Error::from(e).in_file(path))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
    DatasetManifest::from_json(&text).map_err(|e| e.in_file(path))
}
