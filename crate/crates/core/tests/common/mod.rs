//! Straight-line reference rule checker working on raw slot triples.
//! Shares nothing with the library's summary machinery.
#![allow(dead_code)]

use std::collections::BTreeSet;

use raven_core::{Row, Sample};

pub const RELATIONS: [&str; 10] =
    ["CONST", "PROG_P1", "PROG_M1", "PROG_P2", "PROG_M2", "ARITH_P", "ARITH_M", "XOR", "OR", "AND"];
pub const DIMENSIONS: [&str; 5] = ["SHAPE", "SIZE", "COLOR", "NUMBER", "POSITION"];

/// `(relation, dimension)` in index order.
pub fn reference_table() -> Vec<(&'static str, &'static str)> {
    let mut out = Vec::new();
    for dim in DIMENSIONS {
        for rel in RELATIONS {
            let logic = matches!(rel, "XOR" | "OR" | "AND");
            let keep = match dim {
                "NUMBER" => !logic,
                "POSITION" => logic,
                _ => true,
            };
            if keep {
                out.push((rel, dim));
            }
        }
    }
    out
}

pub type RawPanel = [[i32; 3]; 9];
pub type RawRow = [RawPanel; 3];

pub fn raw_row(row: &Row) -> RawRow {
    let mut out = [[[0; 3]; 9]; 3];
    for (p, panel) in row.panels.iter().enumerate() {
        for (s, slot) in panel.slots.iter().enumerate() {
            out[p][s] = slot.raw();
        }
    }
    out
}

fn object_ok(t: [i32; 3]) -> bool {
    (0..=6).contains(&t[0]) && (0..=9).contains(&t[1]) && (0..=9).contains(&t[2])
}

/// Occupied slot lists per panel, or `None` when any slot is malformed or
/// any panel is empty.
fn occupied(row: &RawRow) -> Option<[Vec<usize>; 3]> {
    let mut out: [Vec<usize>; 3] = Default::default();
    for p in 0..3 {
        for s in 0..9 {
            let t = row[p][s];
            if t == [-1, -1, -1] {
                continue;
            }
            if !object_ok(t) {
                return None;
            }
            out[p].push(s);
        }
        if out[p].is_empty() {
            return None;
        }
    }
    Some(out)
}

fn scalar_holds(rel: &str, a: i32, b: i32, c: i32, lo: i32, hi: i32) -> bool {
    let ok = match rel {
        "CONST" => a == b && b == c,
        "PROG_P1" => b == a + 1 && c == b + 1,
        "PROG_M1" => b == a - 1 && c == b - 1,
        "PROG_P2" => b == a + 2 && c == b + 2,
        "PROG_M2" => b == a - 2 && c == b - 2,
        "ARITH_P" => c == a + b,
        "ARITH_M" => c == a - b,
        _ => false,
    };
    ok && [a, b, c].iter().all(|v| (lo..=hi).contains(v))
}

fn logic_holds(rel: &str, a: &BTreeSet<i32>, b: &BTreeSet<i32>, c: &BTreeSet<i32>) -> bool {
    let rhs: BTreeSet<i32> = match rel {
        "XOR" => a.symmetric_difference(b).copied().collect(),
        "OR" => a.union(b).copied().collect(),
        "AND" => a.intersection(b).copied().collect(),
        _ => return false,
    };
    !rhs.is_empty() && &rhs == c
}

pub fn reference_applies(rel: &str, dim: &str, row: &RawRow) -> bool {
    let Some(occ) = occupied(row) else {
        return false;
    };
    match dim {
        "NUMBER" => scalar_holds(rel, occ[0].len() as i32, occ[1].len() as i32, occ[2].len() as i32, 1, 9),
        "POSITION" => {
            let sets: Vec<BTreeSet<i32>> = occ.iter().map(|v| v.iter().map(|&s| s as i32).collect()).collect();
            logic_holds(rel, &sets[0], &sets[1], &sets[2])
        }
        _ => {
            let ch = match dim {
                "SHAPE" => 0,
                "SIZE" => 1,
                _ => 2,
            };
            let hi = if ch == 0 { 6 } else { 9 };
            let sets: Vec<BTreeSet<i32>> =
                (0..3).map(|p| occ[p].iter().map(|&s| row[p][s][ch]).collect()).collect();
            if matches!(rel, "XOR" | "OR" | "AND") {
                return logic_holds(rel, &sets[0], &sets[1], &sets[2]);
            }
            if sets.iter().any(|s| s.len() != 1) {
                return false;
            }
            let v: Vec<i32> = sets.iter().map(|s| *s.iter().next().unwrap()).collect();
            scalar_holds(rel, v[0], v[1], v[2], 0, hi)
        }
    }
}

/// Bitmask over rule indices of every rule the reference accepts.
pub fn reference_mask(row: &RawRow) -> u64 {
    reference_table()
        .iter()
        .enumerate()
        .filter(|(_, (rel, dim))| reference_applies(rel, dim, row))
        .fold(0u64, |m, (i, _)| m | (1u64 << i))
}

/// Rule names shared by all three rows according to the reference.
pub fn reference_c3(sample: &Sample) -> bool {
    sample.rows.iter().map(|r| reference_mask(&raw_row(r))).fold(u64::MAX, |a, b| a & b) != 0
}

/// Deterministic mix of generated, corrupted and malformed rows.
pub mod corpus {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use raven_core::gen::{generate_row, random_object, Budget};
    use raven_core::types::Slot;
    use raven_core::{RuleId, Row};

    pub fn mixed_rows(seed: u64, n: usize) -> Vec<Row> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rules: Vec<RuleId> = RuleId::all().collect();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let rule = rules[i % rules.len()];
            let mut row = generate_row(rule, Budget::default(), &mut rng).expect("generation");
            match i % 4 {
                0 => {}
                1 => corrupt_value(&mut row, &mut rng),
                2 => corrupt_structure(&mut row, &mut rng),
                _ => {
                    for _ in 0..rng.random_range(1..=3) {
                        corrupt_value(&mut row, &mut rng);
                    }
                }
            }
            out.push(row);
        }
        out
    }

    /// Changes one in-domain attribute, adds or removes an object.
    pub fn corrupt_value<R: Rng>(row: &mut Row, rng: &mut R) {
        let p = rng.random_range(0..3);
        let s = rng.random_range(0..9);
        let slot = &mut row.panels[p].slots[s];
        *slot = match *slot {
            Slot::Object(mut o) if rng.random_bool(0.75) => {
                let ch = rng.random_range(0..3);
                let hi = if ch == 0 { 7 } else { 10 };
                let v = rng.random_range(0..hi) as u8;
                match ch {
                    0 => o.shape = v,
                    1 => o.size = v,
                    _ => o.color = v,
                }
                Slot::Object(o)
            }
            Slot::Object(_) => Slot::Empty,
            _ => Slot::Object(random_object(rng)),
        };
    }

    /// Out-of-domain values or partial emptiness in one slot.
    pub fn corrupt_structure<R: Rng>(row: &mut Row, rng: &mut R) {
        let p = rng.random_range(0..3);
        let s = rng.random_range(0..9);
        let mut raw = row.panels[p].slots[s].raw();
        let ch = rng.random_range(0..3);
        raw[ch] = match rng.random_range(0..3) {
            0 => -1,
            1 => rng.random_range(7..=12),
            _ => -rng.random_range(2..=5),
        };
        if raw == [-1, -1, -1] {
            raw[0] = 0;
        }
        row.panels[p].slots[s] = Slot::from_raw(raw);
    }
}
