//! Exact rule predicates over rows.
//!
//! Every rule requires three summarizable panels (structurally valid and
//! nonempty). Scalar relations on an attribute additionally require each
//! panel to be uniform in that attribute; logic relations compare the
//! per-panel distinct-value sets (or occupied-slot sets for position) with
//! set equality and a nonempty right-hand side.

use crate::inventory::{Attribute, Dimension, Relation, RuleId, RuleSet};
use crate::types::{Panel, Row, Sample, Slot};

/// Features of a nonempty, structurally valid panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PanelSummary {
    /// Occupied slots as a 9-bit mask.
    pub occupied: u16,
    pub count: u8,
    /// Distinct values per attribute channel as bit masks.
    pub values: [u16; 3],
    /// The single shared value per channel, when all objects agree.
    pub uniform: [Option<u8>; 3],
}

impl PanelSummary {
    pub fn value_set(&self, attr: Attribute) -> u16 {
        self.values[attr.channel()]
    }

    pub fn uniform_value(&self, attr: Attribute) -> Option<u8> {
        self.uniform[attr.channel()]
    }

    /// Occupied slot indices in ascending order.
    pub fn positions(&self) -> Vec<usize> {
        mask_members(self.occupied)
    }
}

pub fn mask_members(mask: u16) -> Vec<usize> {
    (0..16).filter(|i| mask & (1 << i) != 0).collect()
}

/// Summarizes a panel; `None` when it is empty or structurally invalid.
pub fn panel_summary(panel: &Panel) -> Option<PanelSummary> {
    let mut occupied = 0u16;
    let mut count = 0u8;
    let mut values = [0u16; 3];
    for (i, slot) in panel.slots.iter().enumerate() {
        match slot {
            Slot::Empty => {}
            Slot::Object(o) if o.is_well_formed() => {
                occupied |= 1 << i;
                count += 1;
                for a in Attribute::ALL {
                    values[a.channel()] |= 1 << o.get(a);
                }
            }
            _ => return None,
        }
    }
    if count == 0 {
        return None;
    }
    let uniform = values.map(|m| (m.count_ones() == 1).then(|| m.trailing_zeros() as u8));
    Some(PanelSummary { occupied, count, values, uniform })
}

fn summarize_row(row: &Row) -> Option<[PanelSummary; 3]> {
    Some([
        panel_summary(&row.panels[0])?,
        panel_summary(&row.panels[1])?,
        panel_summary(&row.panels[2])?,
    ])
}

fn scalar_holds(rel: Relation, v: [i32; 3], lo: i32, hi: i32) -> bool {
    v.iter().all(|x| (lo..=hi).contains(x)) && rel.holds_scalar(v[0], v[1], v[2])
}

fn rule_holds(rule: RuleId, s: &[PanelSummary; 3]) -> bool {
    let rel = rule.relation();
    match rule.dimension() {
        Dimension::Number => {
            let n = s.map(|p| p.count as i32);
            scalar_holds(rel, n, 1, 9)
        }
        Dimension::Position => rel.holds_set(s[0].occupied, s[1].occupied, s[2].occupied),
        dim => {
            let attr = dim.attribute().expect("attribute dimension");
            if rel.is_logic() {
                rel.holds_set(s[0].value_set(attr), s[1].value_set(attr), s[2].value_set(attr))
            } else {
                match (s[0].uniform_value(attr), s[1].uniform_value(attr), s[2].uniform_value(attr)) {
                    (Some(a), Some(b), Some(c)) => scalar_holds(
                        rel,
                        [a as i32, b as i32, c as i32],
                        0,
                        attr.domain_size() as i32 - 1,
                    ),
                    _ => false,
                }
            }
        }
    }
}

pub fn rule_applies(rule: RuleId, row: &Row) -> bool {
    summarize_row(row).is_some_and(|s| rule_holds(rule, &s))
}

/// All inventory rules the row satisfies; empty for rows with an empty or malformed panel.
pub fn applicable_rules(row: &Row) -> RuleSet {
    match summarize_row(row) {
        Some(s) => applicable_from_summaries(&s),
        None => RuleSet::empty(),
    }
}

pub fn applicable_from_summaries(s: &[PanelSummary; 3]) -> RuleSet {
    RuleId::all().filter(|&r| rule_holds(r, s)).collect()
}

/// Dimensions with at least one applicable rule, as a 5-bit mask indexed by `Dimension as usize`.
pub fn active_dimensions(rules: RuleSet) -> u8 {
    rules.iter().fold(0, |m, r| m | 1 << r.dimension() as usize)
}

/// Rule sets per row plus the C2/C3 view of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharedRules {
    pub per_row: [RuleSet; 3],
    /// Some pair of rows shares at least one rule.
    pub pair_shared: bool,
    pub all_shared: RuleSet,
}

impl SharedRules {
    pub fn c2(&self) -> bool {
        self.pair_shared
    }

    pub fn c3(&self) -> bool {
        !self.all_shared.is_empty()
    }

    pub fn valid_rows(&self) -> usize {
        self.per_row.iter().filter(|r| !r.is_empty()).count()
    }
}

pub fn shared_rules(sample: &Sample) -> SharedRules {
    let per_row = sample.rows.each_ref().map(applicable_rules);
    let [a, b, c] = per_row;
    let pair_shared = !(a & b).is_empty() || !(a & c).is_empty() || !(b & c).is_empty();
    SharedRules { per_row, pair_shared, all_shared: a & b & c }
}
