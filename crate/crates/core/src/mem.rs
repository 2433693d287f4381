//! Exact-copy memorization analysis.
//!
//! A reference dataset is indexed at five granularities: whole samples,
//! rows (3 per sample, panel order kept), panels (9 per sample), and
//! single-attribute rows and panels (one channel of a row or panel). A
//! generated unit counts as memorized when its canonical encoding is in
//! the reference set. Membership is exact.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::REPORT_SCHEMA_VERSION;
use crate::types::{encode_sample, grid_index, Grid, Sample, CHANNELS, PANELS, SLOTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Sample,
    Row,
    Panel,
    AttrRow,
    AttrPanel,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::Sample, Level::Row, Level::Panel, Level::AttrRow, Level::AttrPanel];

    pub fn name(self) -> &'static str {
        match self {
            Level::Sample => "sample",
            Level::Row => "row",
            Level::Panel => "panel",
            Level::AttrRow => "attr_row",
            Level::AttrPanel => "attr_panel",
        }
    }

    /// Units of this level per sample.
    pub fn units_per_sample(self) -> u64 {
        match self {
            Level::Sample => 1,
            Level::Row => 3,
            Level::Panel => 9,
            Level::AttrRow => 9,
            Level::AttrPanel => 27,
        }
    }
}

type Key = Box<[u8]>;

/// Byte key for the given grid positions. Values that all fit a signed
/// byte give a key of `len` bytes; otherwise each value takes four bytes
/// after a marker byte, so the two forms never collide.
fn key(grid: &Grid, positions: impl Iterator<Item = usize> + Clone) -> Key {
    if positions.clone().all(|i| i8::try_from(grid[i]).is_ok()) {
        positions.map(|i| grid[i] as i8 as u8).collect()
    } else {
        std::iter::once(0xA5).chain(positions.flat_map(|i| grid[i].to_le_bytes())).collect()
    }
}

fn panel_positions(p: usize) -> impl Iterator<Item = usize> + Clone {
    (0..CHANNELS).flat_map(move |c| (0..SLOTS).map(move |s| grid_index(c, p, s)))
}

fn channel_panel_positions(c: usize, p: usize) -> impl Iterator<Item = usize> + Clone {
    (0..SLOTS).map(move |s| grid_index(c, p, s))
}

struct Keys {
    sample: Key,
    rows: [Key; 3],
    panels: [Key; PANELS],
    /// `[channel][row]`
    attr_rows: [[Key; 3]; CHANNELS],
    /// `[channel][panel]`
    attr_panels: [[Key; PANELS]; CHANNELS],
}

impl Keys {
    fn of(sample: &Sample) -> Keys {
        let g = encode_sample(sample);
        Keys {
            sample: key(&g, 0..g.len()),
            rows: std::array::from_fn(|r| key(&g, (3 * r..3 * r + 3).flat_map(panel_positions))),
            panels: std::array::from_fn(|p| key(&g, panel_positions(p))),
            attr_rows: std::array::from_fn(|c| {
                std::array::from_fn(|r| key(&g, (3 * r..3 * r + 3).flat_map(move |p| channel_panel_positions(c, p))))
            }),
            attr_panels: std::array::from_fn(|c| std::array::from_fn(|p| key(&g, channel_panel_positions(c, p)))),
        }
    }
}

/// Which units of one generated sample have exact copies in an index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleHits {
    pub sample: bool,
    pub rows: [bool; 3],
    pub panels: [bool; PANELS],
    /// `[channel][row]`
    pub attr_rows: [[bool; 3]; CHANNELS],
    /// `[channel][panel]`
    pub attr_panels: [[bool; PANELS]; CHANNELS],
}

/// Immutable exact-membership index over a reference dataset.
#[derive(Debug, Clone, Default)]
pub struct MemorizationIndex {
    n_samples: u64,
    samples: HashSet<Key>,
    rows: HashSet<Key>,
    panels: HashSet<Key>,
    attr_rows: [HashSet<Key>; CHANNELS],
    attr_panels: [HashSet<Key>; CHANNELS],
}

/// Sets in index order: sample, row, panel, attr rows (3 channels), attr panels (3 channels).
type SetBank = [HashSet<Key>; 9];

fn bank_of(chunk: &[Sample]) -> SetBank {
    let mut bank: SetBank = Default::default();
    for s in chunk {
        let k = Keys::of(s);
        bank[0].insert(k.sample);
        bank[1].extend(k.rows);
        bank[2].extend(k.panels);
        for (c, rows) in k.attr_rows.into_iter().enumerate() {
            bank[3 + c].extend(rows);
        }
        for (c, panels) in k.attr_panels.into_iter().enumerate() {
            bank[6 + c].extend(panels);
        }
    }
    bank
}

fn merge_banks(a: SetBank, b: SetBank) -> SetBank {
    let mut out: Vec<HashSet<Key>> = a
        .into_iter()
        .zip(b)
        .map(|(mut x, y)| {
            if x.len() < y.len() {
                let mut y = y;
                y.extend(x);
                y
            } else {
                x.extend(y);
                x
            }
        })
        .collect();
    std::array::from_fn(|_| out.remove(0))
}

pub fn build_index(reference: &[Sample]) -> MemorizationIndex {
    let [samples, rows, panels, r0, r1, r2, p0, p1, p2] =
        reference.par_chunks(2048).map(bank_of).reduce(SetBank::default, merge_banks);
    MemorizationIndex {
        n_samples: reference.len() as u64,
        samples,
        rows,
        panels,
        attr_rows: [r0, r1, r2],
        attr_panels: [p0, p1, p2],
    }
}

impl MemorizationIndex {
    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    /// Distinct keys stored at a level (summed over channels for attribute levels).
    pub fn distinct(&self, level: Level) -> usize {
        match level {
            Level::Sample => self.samples.len(),
            Level::Row => self.rows.len(),
            Level::Panel => self.panels.len(),
            Level::AttrRow => self.attr_rows.iter().map(HashSet::len).sum(),
            Level::AttrPanel => self.attr_panels.iter().map(HashSet::len).sum(),
        }
    }

    /// Units indexed at a level before deduplication.
    pub fn indexed_units(&self, level: Level) -> u64 {
        self.n_samples * level.units_per_sample()
    }

    pub fn hits(&self, sample: &Sample) -> SampleHits {
        let k = Keys::of(sample);
        SampleHits {
            sample: self.samples.contains(&k.sample),
            rows: k.rows.each_ref().map(|x| self.rows.contains(x)),
            panels: k.panels.each_ref().map(|x| self.panels.contains(x)),
            attr_rows: std::array::from_fn(|c| k.attr_rows[c].each_ref().map(|x| self.attr_rows[c].contains(x))),
            attr_panels: std::array::from_fn(|c| k.attr_panels[c].each_ref().map(|x| self.attr_panels[c].contains(x))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct HitTally {
    sample: u64,
    row: u64,
    panel: u64,
    attr_row: [u64; CHANNELS],
    attr_panel: [u64; CHANNELS],
}

impl HitTally {
    fn of(h: &SampleHits) -> HitTally {
        let count = |b: &[bool]| b.iter().filter(|x| **x).count() as u64;
        HitTally {
            sample: h.sample as u64,
            row: count(&h.rows),
            panel: count(&h.panels),
            attr_row: h.attr_rows.each_ref().map(|r| count(r)),
            attr_panel: h.attr_panels.each_ref().map(|p| count(p)),
        }
    }

    fn merge(mut self, o: HitTally) -> HitTally {
        self.sample += o.sample;
        self.row += o.row;
        self.panel += o.panel;
        for c in 0..CHANNELS {
            self.attr_row[c] += o.attr_row[c];
            self.attr_panel[c] += o.attr_panel[c];
        }
        self
    }

    fn level(&self, level: Level) -> u64 {
        match level {
            Level::Sample => self.sample,
            Level::Row => self.row,
            Level::Panel => self.panel,
            Level::AttrRow => self.attr_row.iter().sum(),
            Level::AttrPanel => self.attr_panel.iter().sum(),
        }
    }
}

fn tally(generated: &[Sample], index: &MemorizationIndex) -> HitTally {
    generated
        .par_iter()
        .map(|s| HitTally::of(&index.hits(s)))
        .reduce(HitTally::default, HitTally::merge)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelFraction {
    pub level: Level,
    pub units: u64,
    pub train_hits: u64,
    pub train_fraction: f64,
    pub control_hits: Option<u64>,
    pub control_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFraction {
    pub level: Level,
    pub channel: String,
    pub units: u64,
    pub train_fraction: f64,
    pub control_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemReport {
    pub schema: String,
    pub schema_version: u32,
    pub n_generated: u64,
    pub n_train: u64,
    pub n_control: Option<u64>,
    /// Generated units are counted as-is, duplicates included.
    pub generated_deduplicated: bool,
    pub levels: Vec<LevelFraction>,
    pub channels: Vec<ChannelFraction>,
}

impl MemReport {
    pub fn fraction(&self, level: Level) -> f64 {
        self.levels.iter().find(|l| l.level == level).map_or(0.0, |l| l.train_fraction)
    }

    pub fn control_fraction(&self, level: Level) -> Option<f64> {
        self.levels.iter().find(|l| l.level == level).and_then(|l| l.control_fraction)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per level: `level,units,train_hits,train_fraction,control_hits,control_fraction`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> crate::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["level", "units", "train_hits", "train_fraction", "control_hits", "control_fraction"])?;
        for l in &self.levels {
            w.write_record([
                l.level.name().to_string(),
                l.units.to_string(),
                l.train_hits.to_string(),
                l.train_fraction.to_string(),
                l.control_hits.map(|x| x.to_string()).unwrap_or_default(),
                l.control_fraction.map(|x| x.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn frac(hits: u64, units: u64) -> f64 {
    if units == 0 {
        0.0
    } else {
        hits as f64 / units as f64
    }
}

pub fn memorization_report(
    generated: &[Sample],
    train: &MemorizationIndex,
    control: Option<&MemorizationIndex>,
) -> MemReport {
    let n = generated.len() as u64;
    let t = tally(generated, train);
    let c = control.map(|idx| tally(generated, idx));
    let levels = Level::ALL
        .iter()
        .map(|&level| {
            let units = n * level.units_per_sample();
            LevelFraction {
                level,
                units,
                train_hits: t.level(level),
                train_fraction: frac(t.level(level), units),
                control_hits: c.map(|c| c.level(level)),
                control_fraction: c.map(|c| frac(c.level(level), units)),
            }
        })
        .collect();
    let channel_names = ["shape", "size", "color"];
    let mut channels = Vec::new();
    for (level, per) in [(Level::AttrRow, 3u64), (Level::AttrPanel, 9u64)] {
        for (ch, name) in channel_names.iter().enumerate().take(CHANNELS) {
            let pick = |t: &HitTally| if level == Level::AttrRow { t.attr_row[ch] } else { t.attr_panel[ch] };
            channels.push(ChannelFraction {
                level,
                channel: name.to_string(),
                units: n * per,
                train_fraction: frac(pick(&t), n * per),
                control_fraction: c.as_ref().map(|c| frac(pick(c), n * per)),
            });
        }
    }
    MemReport {
        schema: "memorization-report".into(),
        schema_version: REPORT_SCHEMA_VERSION,
        n_generated: n,
        n_train: train.n_samples(),
        n_control: control.map(MemorizationIndex::n_samples),
        generated_deduplicated: false,
        levels,
        channels,
    }
}
