//! The 40-rule inventory and bit-set rule collections.
//!
//! Rules are `(relation, dimension)` pairs. The canonical order is
//! dimension-major over `[Shape, Size, Color, Number, Position]` and
//! relation order `[Const, ProgP1, ProgM1, ProgP2, ProgM2, ArithP, ArithM,
//! Xor, Or, And]` within a dimension, skipping pairs that are not part of
//! the inventory:
//!
//! | dimension | relations                            | count |
//! |-----------|--------------------------------------|-------|
//! | shape     | all ten                              | 10    |
//! | size      | all ten                              | 10    |
//! | color     | all ten                              | 10    |
//! | number    | const, prog ±1, prog ±2, arith ±     | 7     |
//! | position  | xor, or, and                         | 3     |

use std::fmt;
use std::ops::{BitAnd, BitOr, Not, Sub};
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;

pub const NUM_RULES: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    Const,
    ProgP1,
    ProgM1,
    ProgP2,
    ProgM2,
    ArithP,
    ArithM,
    Xor,
    Or,
    And,
}

impl Relation {
    pub const ALL: [Relation; 10] = [
        Relation::Const,
        Relation::ProgP1,
        Relation::ProgM1,
        Relation::ProgP2,
        Relation::ProgM2,
        Relation::ArithP,
        Relation::ArithM,
        Relation::Xor,
        Relation::Or,
        Relation::And,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::Const => "CONST",
            Relation::ProgP1 => "PROG_P1",
            Relation::ProgM1 => "PROG_M1",
            Relation::ProgP2 => "PROG_P2",
            Relation::ProgM2 => "PROG_M2",
            Relation::ArithP => "ARITH_P",
            Relation::ArithM => "ARITH_M",
            Relation::Xor => "XOR",
            Relation::Or => "OR",
            Relation::And => "AND",
        }
    }

    /// True for the set-valued relations (XOR, OR, AND).
    pub fn is_logic(self) -> bool {
        matches!(self, Relation::Xor | Relation::Or | Relation::And)
    }

    /// Step of a progression relation, `None` otherwise.
    pub fn progression_step(self) -> Option<i32> {
        match self {
            Relation::ProgP1 => Some(1),
            Relation::ProgM1 => Some(-1),
            Relation::ProgP2 => Some(2),
            Relation::ProgM2 => Some(-2),
            _ => None,
        }
    }

    /// Applies a scalar relation to the first two values, yielding the third.
    ///
    /// Returns `None` for logic relations and for inconsistent prefixes
    /// (e.g. `Const` with `a != b`, a progression whose step does not match).
    pub fn scalar_successor(self, a: i32, b: i32) -> Option<i32> {
        match self {
            Relation::Const => (a == b).then_some(b),
            Relation::ArithP => Some(a + b),
            Relation::ArithM => Some(a - b),
            Relation::Xor | Relation::Or | Relation::And => None,
            _ => {
                let k = self.progression_step()?;
                (b == a + k).then_some(b + k)
            }
        }
    }

    /// Does the scalar triple satisfy this relation? (Domain checks are the caller's.)
    pub fn holds_scalar(self, a: i32, b: i32, c: i32) -> bool {
        self.scalar_successor(a, b) == Some(c)
    }

    /// Applies a logic relation to two bit-sets.
    pub fn apply_set(self, a: u16, b: u16) -> Option<u16> {
        match self {
            Relation::Xor => Some(a ^ b),
            Relation::Or => Some(a | b),
            Relation::And => Some(a & b),
            _ => None,
        }
    }

    /// Logic relation on sets: `c == op(a, b)` with a nonempty right-hand side.
    pub fn holds_set(self, a: u16, b: u16, c: u16) -> bool {
        matches!(self.apply_set(a, b), Some(r) if r != 0 && r == c)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Attribute channels, in encoding order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Attribute {
    Shape,
    Size,
    Color,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::Shape, Attribute::Size, Attribute::Color];

    pub fn channel(self) -> usize {
        self as usize
    }

    /// Number of allowed values; the domain is `0..domain_size`.
    pub fn domain_size(self) -> u8 {
        match self {
            Attribute::Shape => 7,
            Attribute::Size | Attribute::Color => 10,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Shape => "shape",
            Attribute::Size => "size",
            Attribute::Color => "color",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dimension {
    Shape,
    Size,
    Color,
    Number,
    Position,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Shape,
        Dimension::Size,
        Dimension::Color,
        Dimension::Number,
        Dimension::Position,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Shape => "SHAPE",
            Dimension::Size => "SIZE",
            Dimension::Color => "COLOR",
            Dimension::Number => "NUMBER",
            Dimension::Position => "POSITION",
        }
    }

    pub fn attribute(self) -> Option<Attribute> {
        match self {
            Dimension::Shape => Some(Attribute::Shape),
            Dimension::Size => Some(Attribute::Size),
            Dimension::Color => Some(Attribute::Color),
            Dimension::Number | Dimension::Position => None,
        }
    }

    /// Relations this dimension carries in the inventory.
    pub fn relations(self) -> &'static [Relation] {
        const NUMBER: [Relation; 7] = [
            Relation::Const,
            Relation::ProgP1,
            Relation::ProgM1,
            Relation::ProgP2,
            Relation::ProgM2,
            Relation::ArithP,
            Relation::ArithM,
        ];
        const POSITION: [Relation; 3] = [Relation::Xor, Relation::Or, Relation::And];
        match self {
            Dimension::Shape | Dimension::Size | Dimension::Color => &Relation::ALL,
            Dimension::Number => &NUMBER,
            Dimension::Position => &POSITION,
        }
    }

    /// All rules on this dimension.
    pub fn rules(self) -> RuleSet {
        RuleId::all().filter(|r| r.dimension() == self).collect()
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const INVENTORY: [(Relation, Dimension); NUM_RULES] = build_inventory();

const fn build_inventory() -> [(Relation, Dimension); NUM_RULES] {
    let mut out = [(Relation::Const, Dimension::Shape); NUM_RULES];
    let mut n = 0;
    let mut d = 0;
    while d < 5 {
        let dim = Dimension::ALL[d];
        let mut r = 0;
        while r < 10 {
            let rel = Relation::ALL[r];
            let included = match dim {
                Dimension::Shape | Dimension::Size | Dimension::Color => true,
                Dimension::Number => r <= 6,
                Dimension::Position => r >= 7,
            };
            if included {
                out[n] = (rel, dim);
                n += 1;
            }
            r += 1;
        }
        d += 1;
    }
    assert!(n == NUM_RULES);
    out
}

/// Index of a rule in the canonical inventory.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleId(u8);

impl RuleId {
    pub fn from_index(index: usize) -> Option<RuleId> {
        (index < NUM_RULES).then_some(RuleId(index as u8))
    }

    pub fn new(relation: Relation, dimension: Dimension) -> Option<RuleId> {
        INVENTORY
            .iter()
            .position(|&(r, d)| r == relation && d == dimension)
            .map(|i| RuleId(i as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn relation(self) -> Relation {
        INVENTORY[self.index()].0
    }

    pub fn dimension(self) -> Dimension {
        INVENTORY[self.index()].1
    }

    pub fn name(self) -> &'static str {
        static NAMES: OnceLock<Vec<String>> = OnceLock::new();
        let names = NAMES.get_or_init(|| {
            INVENTORY
                .iter()
                .map(|(r, d)| format!("{}-{}", r.name(), d.name()))
                .collect()
        });
        names[self.index()].as_str()
    }

    pub fn all() -> impl Iterator<Item = RuleId> + Clone {
        (0..NUM_RULES as u8).map(RuleId)
    }
}

impl fmt::Debug for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RuleId({}:{})", self.0, self.name())
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleId {
    type Err = Error;

    /// Parses `RELATION-DIMENSION` names such as `PROG_P1-NUMBER`, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let want = s.trim().to_ascii_uppercase();
        RuleId::all()
            .find(|r| r.name() == want)
            .ok_or_else(|| Error::UnknownRule(s.to_string()))
    }
}

impl Serialize for RuleId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for RuleId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The canonical ordered inventory of all 40 rules.
pub fn rule_inventory() -> Vec<RuleId> {
    RuleId::all().collect()
}

/// Names of the inventory rules, in canonical order.
pub fn inventory_names() -> Vec<String> {
    RuleId::all().map(|r| r.name().to_string()).collect()
}

/// 64-bit content digest of an inventory listing: the first eight bytes
/// (big-endian) of SHA-256 over the names joined by `\n`.
pub fn inventory_digest<S: AsRef<str>>(names: &[S]) -> u64 {
    let mut h = Sha256::new();
    for (i, n) in names.iter().enumerate() {
        if i > 0 {
            h.update(b"\n");
        }
        h.update(n.as_ref().as_bytes());
    }
    let out = h.finalize();
    u64::from_be_bytes(out[..8].try_into().expect("sha256 is 32 bytes"))
}

/// A subset of the inventory, stored as a 40-bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct RuleSet(u64);

impl RuleSet {
    const UNIVERSE: u64 = (1u64 << NUM_RULES) - 1;

    pub const fn empty() -> RuleSet {
        RuleSet(0)
    }

    pub const fn universe() -> RuleSet {
        RuleSet(Self::UNIVERSE)
    }

    pub fn from_bits(bits: u64) -> RuleSet {
        RuleSet(bits & Self::UNIVERSE)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(rule: RuleId) -> RuleSet {
        RuleSet(1 << rule.index())
    }

    pub fn insert(&mut self, rule: RuleId) {
        self.0 |= 1 << rule.index();
    }

    pub fn remove(&mut self, rule: RuleId) {
        self.0 &= !(1 << rule.index());
    }

    pub fn contains(self, rule: RuleId) -> bool {
        self.0 & (1 << rule.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: RuleSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in inventory order.
    pub fn iter(self) -> impl Iterator<Item = RuleId> {
        let bits = self.0;
        RuleId::all().filter(move |r| bits & (1 << r.index()) != 0)
    }

    pub fn first(self) -> Option<RuleId> {
        (self.0 != 0).then(|| RuleId(self.0.trailing_zeros() as u8))
    }

    /// Distinct dimensions touched by the members.
    pub fn dimensions(self) -> Vec<Dimension> {
        let mut out: Vec<Dimension> = Vec::new();
        for r in self.iter() {
            if !out.contains(&r.dimension()) {
                out.push(r.dimension());
            }
        }
        out
    }

    pub fn names(self) -> Vec<&'static str> {
        self.iter().map(RuleId::name).collect()
    }
}

impl fmt::Debug for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(RuleId::name)).finish()
    }
}

impl BitAnd for RuleSet {
    type Output = RuleSet;
    fn bitand(self, rhs: RuleSet) -> RuleSet {
        RuleSet(self.0 & rhs.0)
    }
}

impl BitOr for RuleSet {
    type Output = RuleSet;
    fn bitor(self, rhs: RuleSet) -> RuleSet {
        RuleSet(self.0 | rhs.0)
    }
}

impl Sub for RuleSet {
    type Output = RuleSet;
    fn sub(self, rhs: RuleSet) -> RuleSet {
        RuleSet(self.0 & !rhs.0)
    }
}

impl Not for RuleSet {
    type Output = RuleSet;
    fn not(self) -> RuleSet {
        RuleSet(!self.0 & Self::UNIVERSE)
    }
}

impl FromIterator<RuleId> for RuleSet {
    fn from_iter<I: IntoIterator<Item = RuleId>>(iter: I) -> Self {
        let mut s = RuleSet::empty();
        for r in iter {
            s.insert(r);
        }
        s
    }
}

impl Serialize for RuleSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter().map(RuleId::name))
    }
}

impl<'de> Deserialize<'de> for RuleSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let names = Vec::<RuleId>::deserialize(deserializer)?;
        Ok(names.into_iter().collect())
    }
}
