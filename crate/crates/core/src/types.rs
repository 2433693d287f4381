//! Sample, row, panel and slot types plus the canonical 3×9×9 encoding.
//!
//! The encoded grid is a flat array of 243 integers laid out as
//! `(channel, panel, slot)`: channel order shape, size, color; panels in
//! raster order (row 1 holds panels 0..3, row 2 panels 3..6, row 3 panels
//! 6..9); slots row-major within a panel. Empty slots are `-1` in all
//! three channels.

use std::fmt;

use crate::error::Error;
use crate::inventory::{Attribute, RuleId};

pub const SLOTS: usize = 9;
pub const PANELS: usize = 9;
pub const CHANNELS: usize = 3;
pub const GRID_LEN: usize = CHANNELS * PANELS * SLOTS;
pub const EMPTY: i32 = -1;

/// Flat encoded sample, `(channel, panel, slot)` order.
pub type Grid = [i32; GRID_LEN];

#[inline]
pub fn grid_index(channel: usize, panel: usize, slot: usize) -> usize {
    channel * PANELS * SLOTS + panel * SLOTS + slot
}

/// A well-formed object: shape in 0..=6, size and color in 0..=9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectSpec {
    pub shape: u8,
    pub size: u8,
    pub color: u8,
}

impl ObjectSpec {
    pub fn new(shape: u8, size: u8, color: u8) -> Option<ObjectSpec> {
        let o = ObjectSpec { shape, size, color };
        o.is_well_formed().then_some(o)
    }

    pub fn is_well_formed(&self) -> bool {
        Attribute::ALL.iter().all(|&a| self.get(a) < a.domain_size())
    }

    pub fn get(&self, attr: Attribute) -> u8 {
        match attr {
            Attribute::Shape => self.shape,
            Attribute::Size => self.size,
            Attribute::Color => self.color,
        }
    }

    pub fn set(&mut self, attr: Attribute, value: u8) {
        match attr {
            Attribute::Shape => self.shape = value,
            Attribute::Size => self.size = value,
            Attribute::Color => self.color = value,
        }
    }
}

/// One position inside a panel.
///
/// `Malformed` keeps the raw triple of a slot that is neither a valid
/// object nor a clean `(-1,-1,-1)`, so encoding stays lossless for
/// out-of-domain model output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Slot {
    #[default]
    Empty,
    Object(ObjectSpec),
    Malformed([i32; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotStatus {
    ValidObject,
    ValidEmpty,
    Malformed,
}

impl Slot {
    /// Classifies a raw `(shape, size, color)` triple.
    pub fn from_raw(raw: [i32; 3]) -> Slot {
        if raw == [EMPTY; 3] {
            return Slot::Empty;
        }
        let in_domain = |v: i32, a: Attribute| v >= 0 && v < a.domain_size() as i32;
        if in_domain(raw[0], Attribute::Shape)
            && in_domain(raw[1], Attribute::Size)
            && in_domain(raw[2], Attribute::Color)
        {
            Slot::Object(ObjectSpec {
                shape: raw[0] as u8,
                size: raw[1] as u8,
                color: raw[2] as u8,
            })
        } else {
            Slot::Malformed(raw)
        }
    }

    pub fn raw(&self) -> [i32; 3] {
        match *self {
            Slot::Empty => [EMPTY; 3],
            Slot::Object(o) => [o.shape as i32, o.size as i32, o.color as i32],
            Slot::Malformed(raw) => raw,
        }
    }

    pub fn status(&self) -> SlotStatus {
        match self {
            Slot::Empty => SlotStatus::ValidEmpty,
            Slot::Object(o) if o.is_well_formed() => SlotStatus::ValidObject,
            _ => SlotStatus::Malformed,
        }
    }

    pub fn object(&self) -> Option<&ObjectSpec> {
        match self {
            Slot::Object(o) => Some(o),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Panel {
    pub slots: [Slot; SLOTS],
}

impl Panel {
    pub fn empty() -> Panel {
        Panel::default()
    }

    /// Builds a panel from `(slot, object)` placements.
    pub fn from_objects<I: IntoIterator<Item = (usize, ObjectSpec)>>(objects: I) -> Panel {
        let mut p = Panel::empty();
        for (slot, o) in objects {
            p.slots[slot] = Slot::Object(o);
        }
        p
    }

    pub fn is_structurally_valid(&self) -> bool {
        self.slots.iter().all(|s| s.status() != SlotStatus::Malformed)
    }

    pub fn count(&self) -> usize {
        self.slots.iter().filter(|s| matches!(s, Slot::Object(_))).count()
    }

    pub fn objects(&self) -> impl Iterator<Item = (usize, &ObjectSpec)> {
        self.slots.iter().enumerate().filter_map(|(i, s)| s.object().map(|o| (i, o)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Row {
    pub panels: [Panel; 3],
}

impl Row {
    pub fn new(panels: [Panel; 3]) -> Row {
        Row { panels }
    }

    pub fn is_structurally_valid(&self) -> bool {
        self.panels.iter().all(Panel::is_structurally_valid)
    }

    pub fn reversed(&self) -> Row {
        Row::new([self.panels[2], self.panels[1], self.panels[0]])
    }

    pub fn swap_first_two(&self) -> Row {
        Row::new([self.panels[1], self.panels[0], self.panels[2]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Sample {
    pub rows: [Row; 3],
    pub label: Option<RuleId>,
}

impl Sample {
    pub fn new(rows: [Row; 3], label: Option<RuleId>) -> Sample {
        Sample { rows, label }
    }

    /// Panel by raster index 0..9.
    pub fn panel(&self, index: usize) -> &Panel {
        &self.rows[index / 3].panels[index % 3]
    }

    pub fn panel_mut(&mut self, index: usize) -> &mut Panel {
        &mut self.rows[index / 3].panels[index % 3]
    }

    pub fn panels(&self) -> impl Iterator<Item = &Panel> {
        self.rows.iter().flat_map(|r| r.panels.iter())
    }

    pub fn with_label(mut self, label: Option<RuleId>) -> Sample {
        self.label = label;
        self
    }

    pub fn encode(&self) -> Grid {
        encode_sample(self)
    }
}

impl fmt::Display for Sample {
    /// Text rendering: one block per row, three panels side by side, each
    /// slot shown as `shape.size.color` or `.....` when empty.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (ri, row) in self.rows.iter().enumerate() {
            writeln!(f, "row {}:", ri + 1)?;
            for line in 0..3 {
                let mut parts = Vec::with_capacity(3);
                for panel in &row.panels {
                    let cells: Vec<String> = (0..3)
                        .map(|col| match panel.slots[line * 3 + col] {
                            Slot::Empty => "  .  ".to_string(),
                            Slot::Object(o) => format!("{}.{}.{}", o.shape, o.size, o.color),
                            Slot::Malformed(_) => "  ?  ".to_string(),
                        })
                        .map(|c| format!("{c:>5}"))
                        .collect();
                    parts.push(cells.join(" "));
                }
                writeln!(f, "  {}", parts.join("  |  "))?;
            }
        }
        Ok(())
    }
}

/// Per-slot structure classification from [`decode_sample`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureReport {
    pub slots: [[SlotStatus; SLOTS]; PANELS],
}

impl StructureReport {
    pub fn of(sample: &Sample) -> StructureReport {
        let mut slots = [[SlotStatus::ValidEmpty; SLOTS]; PANELS];
        for (p, panel) in sample.panels().enumerate() {
            for (s, slot) in panel.slots.iter().enumerate() {
                slots[p][s] = slot.status();
            }
        }
        StructureReport { slots }
    }

    pub fn is_valid(&self) -> bool {
        self.malformed_count() == 0
    }

    pub fn panel_valid(&self, panel: usize) -> bool {
        self.slots[panel].iter().all(|s| *s != SlotStatus::Malformed)
    }

    pub fn malformed_count(&self) -> usize {
        self.slots.iter().flatten().filter(|s| **s == SlotStatus::Malformed).count()
    }
}

/// Encodes a sample into the flat 243-value grid. Never fails.
pub fn encode_sample(sample: &Sample) -> Grid {
    let mut grid = [EMPTY; GRID_LEN];
    for (p, panel) in sample.panels().enumerate() {
        for (s, slot) in panel.slots.iter().enumerate() {
            let raw = slot.raw();
            for c in 0..CHANNELS {
                grid[grid_index(c, p, s)] = raw[c];
            }
        }
    }
    grid
}

/// Decodes an arbitrary integer array into a sample, flagging malformed slots.
///
/// The returned sample is unlabeled.
pub fn decode_sample(values: &[i32]) -> Result<(Sample, StructureReport), Error> {
    if values.len() != GRID_LEN {
        return Err(Error::Dimension { expected: GRID_LEN, actual: values.len() });
    }
    let mut sample = Sample::default();
    for p in 0..PANELS {
        let panel = sample.panel_mut(p);
        for s in 0..SLOTS {
            let raw = [
                values[grid_index(0, p, s)],
                values[grid_index(1, p, s)],
                values[grid_index(2, p, s)],
            ];
            panel.slots[s] = Slot::from_raw(raw);
        }
    }
    let report = StructureReport::of(&sample);
    Ok((sample, report))
}
