//! Procedural row, sample and dataset generation.
//!
//! A row is built in stages: the target dimension's structure is drawn
//! first (a value tuple, value sets, counts or position sets), objects are
//! placed, the remaining dimensions are drawn independently, and any
//! non-target dimension that happens to satisfy a rule is redrawn. A row
//! gets `max_stage_attempts` redraw rounds per restart and
//! `max_row_restarts` restarts before generation fails.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inventory::{Attribute, Dimension, Relation, RuleId, RuleSet};
use crate::io::DatasetManifest;
use crate::rng::{sample_rng, Split};
use crate::rules::applicable_rules;
use crate::types::{ObjectSpec, Panel, Row, Sample, SLOTS};

pub const DEFAULT_STAGE_ATTEMPTS: u32 = 100;
pub const DEFAULT_ROW_RESTARTS: u32 = 10;

/// Held-out rules of the default split: one per relation family.
pub fn default_held_out() -> Vec<RuleId> {
    ["CONST-COLOR", "PROG_P1-SIZE", "ARITH_M-NUMBER", "XOR-SHAPE", "AND-POSITION"]
        .iter()
        .map(|n| n.parse().expect("default held-out rule is in the inventory"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_stage_attempts: u32,
    pub max_row_restarts: u32,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_stage_attempts: DEFAULT_STAGE_ATTEMPTS, max_row_restarts: DEFAULT_ROW_RESTARTS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    /// Rules to generate; on the train split held-out rules are skipped.
    pub rules: Vec<RuleId>,
    pub samples_per_rule: u64,
    pub held_out: Vec<RuleId>,
    pub split: Split,
    pub budget: Budget,
}

impl GenConfig {
    /// All 40 rules, default held-out split, train stream.
    pub fn new(seed: u64, samples_per_rule: u64) -> GenConfig {
        GenConfig {
            seed,
            rules: RuleId::all().collect(),
            samples_per_rule,
            held_out: default_held_out(),
            split: Split::Train,
            budget: Budget::default(),
        }
    }

    pub fn with_split(mut self, split: Split) -> GenConfig {
        self.split = split;
        self
    }

    pub fn with_rules(mut self, rules: Vec<RuleId>) -> GenConfig {
        self.rules = rules;
        self
    }

    pub fn with_held_out(mut self, held_out: Vec<RuleId>) -> GenConfig {
        self.held_out = held_out;
        self
    }

    /// Rules that actually produce samples for this split, in request order.
    pub fn effective_rules(&self) -> Vec<RuleId> {
        let held: RuleSet = self.held_out.iter().copied().collect();
        let mut seen = RuleSet::empty();
        self.rules
            .iter()
            .copied()
            .filter(|r| self.split != Split::Train || !held.contains(*r))
            .filter(|r| {
                let fresh = !seen.contains(*r);
                seen.insert(*r);
                fresh
            })
            .collect()
    }
}

/// Every tuple in `[lo, hi]^3` satisfying a scalar relation, lexicographic order.
pub fn value_tuple_support(relation: Relation, lo: i32, hi: i32) -> Vec<[i32; 3]> {
    let mut out = Vec::new();
    if relation.is_logic() {
        return out;
    }
    for a in lo..=hi {
        for b in lo..=hi {
            if let Some(c) = relation.scalar_successor(a, b) {
                if (lo..=hi).contains(&c) {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

/// Draws uniformly from [`value_tuple_support`].
pub fn sample_value_tuple<R: Rng + ?Sized>(
    relation: Relation,
    lo: i32,
    hi: i32,
    rng: &mut R,
) -> Result<[i32; 3]> {
    let support = value_tuple_support(relation, lo, hi);
    if support.is_empty() {
        return Err(Error::Infeasible { relation: relation.name().to_string(), lo, hi });
    }
    Ok(support[rng.random_range(0..support.len())])
}

fn random_nonempty_mask<R: Rng + ?Sized>(width: u32, rng: &mut R) -> u16 {
    rng.random_range(1..(1u32 << width)) as u16
}

/// Value sets `(S1, S2, S3)` over `0..domain_size` with `S3 = op(S1, S2)`.
///
/// `S1` and `S2` are distinct nonempty subsets, the result is nonempty, and
/// every set has at most 9 members so one object per value fits a panel.
pub fn sample_value_sets<R: Rng + ?Sized>(relation: Relation, domain_size: u8, rng: &mut R) -> [u16; 3] {
    assert!(relation.is_logic(), "{relation} is not a logic relation");
    loop {
        let a = random_nonempty_mask(domain_size as u32, rng);
        let b = random_nonempty_mask(domain_size as u32, rng);
        let c = relation.apply_set(a, b).expect("logic relation");
        let fits = |m: u16| m.count_ones() as usize <= SLOTS;
        if a != b && c != 0 && fits(a) && fits(b) && fits(c) {
            return [a, b, c];
        }
    }
}

/// Occupied-slot sets `(P1, P2, P3)` with `P1 != P2` and nonempty `P3 = op(P1, P2)`.
pub fn sample_position_sets<R: Rng + ?Sized>(relation: Relation, rng: &mut R) -> [u16; 3] {
    assert!(relation.is_logic(), "{relation} is not a logic relation");
    loop {
        let a = random_nonempty_mask(SLOTS as u32, rng);
        let b = random_nonempty_mask(SLOTS as u32, rng);
        let c = relation.apply_set(a, b).expect("logic relation");
        if a != b && c != 0 {
            return [a, b, c];
        }
    }
}

pub fn random_positions<R: Rng + ?Sized>(count: usize, rng: &mut R) -> u16 {
    index::sample(rng, SLOTS, count).iter().fold(0u16, |m, i| m | 1 << i)
}

pub fn random_object<R: Rng + ?Sized>(rng: &mut R) -> ObjectSpec {
    ObjectSpec {
        shape: rng.random_range(0..Attribute::Shape.domain_size()),
        size: rng.random_range(0..Attribute::Size.domain_size()),
        color: rng.random_range(0..Attribute::Color.domain_size()),
    }
}

/// Values for `count` objects covering every member of `set` at least once.
pub fn cover_value_set<R: Rng + ?Sized>(set: u16, count: usize, rng: &mut R) -> Vec<u8> {
    let members: Vec<u8> = (0..16u8).filter(|v| set & (1 << v) != 0).collect();
    assert!(!members.is_empty() && members.len() <= count);
    let mut values = members.clone();
    while values.len() < count {
        values.push(members[rng.random_range(0..members.len())]);
    }
    values.shuffle(rng);
    values
}

/// What the target rule fixes in a row.
#[derive(Debug, Clone, Copy)]
enum Plan {
    Scalar { attr: Attribute, values: [u8; 3] },
    Sets { attr: Attribute, sets: [u16; 3] },
    Counts([u8; 3]),
    Positions([u16; 3]),
}

impl Plan {
    fn draw<R: Rng + ?Sized>(target: RuleId, rng: &mut R) -> Result<Plan> {
        let rel = target.relation();
        Ok(match (target.dimension().attribute(), target.dimension()) {
            (Some(attr), _) if rel.is_logic() => {
                Plan::Sets { attr, sets: sample_value_sets(rel, attr.domain_size(), rng) }
            }
            (Some(attr), _) => {
                let t = sample_value_tuple(rel, 0, attr.domain_size() as i32 - 1, rng)?;
                Plan::Scalar { attr, values: t.map(|v| v as u8) }
            }
            (None, Dimension::Number) => {
                Plan::Counts(sample_value_tuple(rel, 1, SLOTS as i32, rng)?.map(|v| v as u8))
            }
            (None, _) => Plan::Positions(sample_position_sets(rel, rng)),
        })
    }

    fn min_count(&self, panel: usize) -> usize {
        match self {
            Plan::Sets { sets, .. } => sets[panel].count_ones() as usize,
            _ => 1,
        }
    }
}

/// Row under construction: per panel, an occupied mask and objects in slot order.
struct Draft {
    target: RuleId,
    plan: Plan,
    positions: [u16; 3],
    objects: [Vec<ObjectSpec>; 3],
}

impl Draft {
    fn new<R: Rng + ?Sized>(target: RuleId, rng: &mut R) -> Result<Draft> {
        let plan = Plan::draw(target, rng)?;
        let mut d = Draft { target, plan, positions: [0; 3], objects: Default::default() };
        d.redraw_layout(rng);
        Ok(d)
    }

    /// Redraws counts, positions and all objects, keeping the plan.
    fn redraw_layout<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for p in 0..3 {
            let (count, positions) = match self.plan {
                Plan::Counts(c) => {
                    let n = c[p] as usize;
                    (n, random_positions(n, rng))
                }
                Plan::Positions(sets) => (sets[p].count_ones() as usize, sets[p]),
                _ => {
                    let n = rng.random_range(self.plan.min_count(p)..=SLOTS);
                    (n, random_positions(n, rng))
                }
            };
            self.positions[p] = positions;
            let mut objs: Vec<ObjectSpec> = (0..count).map(|_| random_object(rng)).collect();
            match self.plan {
                Plan::Scalar { attr, values } => objs.iter_mut().for_each(|o| o.set(attr, values[p])),
                Plan::Sets { attr, sets } => {
                    let vals = cover_value_set(sets[p], count, rng);
                    objs.iter_mut().zip(vals).for_each(|(o, v)| o.set(attr, v));
                }
                _ => {}
            }
            self.objects[p] = objs;
        }
    }

    fn redraw_attribute<R: Rng + ?Sized>(&mut self, attr: Attribute, rng: &mut R) {
        for objs in &mut self.objects {
            for o in objs.iter_mut() {
                o.set(attr, rng.random_range(0..attr.domain_size()));
            }
        }
    }

    /// New slots for the same objects.
    fn redraw_positions<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for p in 0..3 {
            self.positions[p] = random_positions(self.objects[p].len(), rng);
        }
    }

    fn redraw<R: Rng + ?Sized>(&mut self, dim: Dimension, rng: &mut R) -> Result<()> {
        debug_assert_ne!(dim, self.target.dimension());
        match (dim, self.plan) {
            (Dimension::Number, Plan::Positions(_)) => {
                // counts are implied by the target position sets
                self.plan = Plan::draw(self.target, rng)?;
                self.redraw_layout(rng);
            }
            (Dimension::Number, _) => self.redraw_layout(rng),
            (Dimension::Position, _) => self.redraw_positions(rng),
            (d, _) => self.redraw_attribute(d.attribute().expect("attribute dimension"), rng),
        }
        Ok(())
    }

    fn row(&self) -> Row {
        let panels = std::array::from_fn(|p| {
            let slots = (0..SLOTS).filter(|s| self.positions[p] & (1 << s) != 0);
            Panel::from_objects(slots.zip(self.objects[p].iter().copied()))
        });
        Row::new(panels)
    }
}

/// Dimensions other than `target`'s that carry an applicable rule.
fn offending_dimensions(target: RuleId, rules: RuleSet) -> Vec<Dimension> {
    let foreign = rules - target.dimension().rules();
    foreign.dimensions()
}

/// Generates one row satisfying `target` with no rule on any other dimension.
pub fn generate_row<R: Rng + ?Sized>(target: RuleId, budget: Budget, rng: &mut R) -> Result<Row> {
    for _ in 0..budget.max_row_restarts {
        let mut draft = Draft::new(target, rng)?;
        for _ in 0..budget.max_stage_attempts {
            let row = draft.row();
            let rules = applicable_rules(&row);
            let offending = offending_dimensions(target, rules);
            if offending.is_empty() {
                if !rules.contains(target) {
                    return Err(Error::Generation {
                        rule: target,
                        index: None,
                        reason: "constructed row violates its target rule".into(),
                    });
                }
                return Ok(row);
            }
            // number redraws replace the layout, which also covers positions
            let redraw_layout = offending.contains(&Dimension::Number);
            for dim in offending {
                if redraw_layout && dim == Dimension::Position {
                    continue;
                }
                draft.redraw(dim, rng)?;
            }
        }
    }
    Err(Error::Generation {
        rule: target,
        index: None,
        reason: format!(
            "no pure row after {} restarts of {} attempts",
            budget.max_row_restarts, budget.max_stage_attempts
        ),
    })
}

/// Three independent rows under `target`, labeled with it.
pub fn generate_sample<R: Rng + ?Sized>(target: RuleId, budget: Budget, rng: &mut R) -> Result<Sample> {
    let a = generate_row(target, budget, rng)?;
    let b = generate_row(target, budget, rng)?;
    let c = generate_row(target, budget, rng)?;
    Ok(Sample::new([a, b, c], Some(target)))
}

/// Sample `index` of `rule` in a dataset with the given seed and split.
pub fn generate_indexed(seed: u64, split: Split, rule: RuleId, index: u64, budget: Budget) -> Result<Sample> {
    let mut rng = sample_rng(seed, split, rule.index(), index);
    generate_sample(rule, budget, &mut rng).map_err(|e| match e {
        Error::Generation { rule, reason, .. } => Error::Generation { rule, index: Some(index), reason },
        e => e,
    })
}

/// Generates the dataset rule-major: all samples of the first effective
/// rule in index order, then the next rule, and so on.
///
/// Runs on the current rayon pool; the output does not depend on its size.
pub fn generate_dataset(cfg: &GenConfig) -> Result<(Vec<Sample>, DatasetManifest)> {
    let rules = cfg.effective_rules();
    let n = cfg.samples_per_rule;
    let total = rules.len() as u64 * n;
    let samples = (0..total)
        .into_par_iter()
        .map(|k| {
            let rule = rules[(k / n) as usize];
            generate_indexed(cfg.seed, cfg.split, rule, k % n, cfg.budget)
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest::for_config(cfg, &rules);
    Ok((samples, manifest))
}

/// Noise sample: each slot independently occupied with probability
/// `occupancy`, attributes uniform over their domains. Unlabeled.
pub fn random_sample<R: Rng + ?Sized>(occupancy: f64, rng: &mut R) -> Sample {
    let mut s = Sample::default();
    for p in 0..9 {
        s.panel_mut(p).slots = random_panel(occupancy, rng).slots;
    }
    s
}

pub fn random_panel<R: Rng + ?Sized>(occupancy: f64, rng: &mut R) -> Panel {
    let mut panel = Panel::empty();
    for slot in panel.slots.iter_mut() {
        if rng.random_bool(occupancy) {
            *slot = crate::types::Slot::Object(random_object(rng));
        }
    }
    panel
}
