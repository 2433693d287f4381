//! Consistency and completion metrics.
//!
//! A row is *valid* when any inventory rule applies to it. A sample is C2
//! when some pair of its rows shares a rule and C3 when all three rows do;
//! C2 is inclusive, so every C3 sample is also C2. Per-rule C3 counts credit
//! every rule in a sample's shared set (`c3_count`), with the
//! singleton-only view reported alongside (`c3_singleton_count`).

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inventory::{RuleId, RuleSet, NUM_RULES};
use crate::rules::shared_rules;
use crate::types::{Panel, Row, Sample};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub schema: String,
    pub schema_version: u32,
    pub n_samples: u64,
    pub n_rows: u64,
    pub valid_row_fraction: f64,
    pub c2_fraction: f64,
    pub c3_fraction: f64,
    pub c2_count: u64,
    pub c3_count: u64,
    /// Rule names, the index space of the per-rule columns.
    pub rules: Vec<String>,
    pub per_rule_c3_count: Vec<u64>,
    pub per_rule_c3_singleton_count: Vec<u64>,
    /// `c3_count / n_samples * 40`; 1.0 means the rule's share of a uniform mix.
    pub per_rule_c3_frequency_normalized: Vec<f64>,
    pub per_rule_valid_row_count: Vec<u64>,
}

#[derive(Debug, Clone, Copy)]
struct ConsistencyTally {
    samples: u64,
    valid_rows: u64,
    c2: u64,
    c3: u64,
    c3_rule: [u64; NUM_RULES],
    c3_singleton: [u64; NUM_RULES],
    valid_rule: [u64; NUM_RULES],
}

impl ConsistencyTally {
    fn zero() -> Self {
        ConsistencyTally {
            samples: 0,
            valid_rows: 0,
            c2: 0,
            c3: 0,
            c3_rule: [0; NUM_RULES],
            c3_singleton: [0; NUM_RULES],
            valid_rule: [0; NUM_RULES],
        }
    }

    fn of(sample: &Sample) -> Self {
        let mut t = ConsistencyTally::zero();
        let sr = shared_rules(sample);
        t.samples = 1;
        t.valid_rows = sr.valid_rows() as u64;
        t.c2 = sr.c2() as u64;
        t.c3 = sr.c3() as u64;
        for r in sr.all_shared.iter() {
            t.c3_rule[r.index()] += 1;
        }
        if sr.all_shared.len() == 1 {
            t.c3_singleton[sr.all_shared.first().expect("singleton").index()] += 1;
        }
        for row in sr.per_row {
            for r in row.iter() {
                t.valid_rule[r.index()] += 1;
            }
        }
        t
    }

    fn merge(mut self, other: Self) -> Self {
        self.samples += other.samples;
        self.valid_rows += other.valid_rows;
        self.c2 += other.c2;
        self.c3 += other.c3;
        for i in 0..NUM_RULES {
            self.c3_rule[i] += other.c3_rule[i];
            self.c3_singleton[i] += other.c3_singleton[i];
            self.valid_rule[i] += other.valid_rule[i];
        }
        self
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn consistency_report(samples: &[Sample]) -> ConsistencyReport {
    let t = samples
        .par_iter()
        .map(ConsistencyTally::of)
        .reduce(ConsistencyTally::zero, ConsistencyTally::merge);
    let n = t.samples;
    ConsistencyReport {
        schema: "consistency-report".into(),
        schema_version: REPORT_SCHEMA_VERSION,
        n_samples: n,
        n_rows: 3 * n,
        valid_row_fraction: ratio(t.valid_rows, 3 * n),
        c2_fraction: ratio(t.c2, n),
        c3_fraction: ratio(t.c3, n),
        c2_count: t.c2,
        c3_count: t.c3,
        rules: RuleId::all().map(|r| r.name().to_string()).collect(),
        per_rule_c3_count: t.c3_rule.to_vec(),
        per_rule_c3_singleton_count: t.c3_singleton.to_vec(),
        per_rule_c3_frequency_normalized: t
            .c3_rule
            .iter()
            .map(|&c| ratio(c, n) * NUM_RULES as f64)
            .collect(),
        per_rule_valid_row_count: t.valid_rule.to_vec(),
    }
}

impl ConsistencyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per rule: `rule,index,c3_count,c3_singleton_count,c3_frequency_normalized,valid_row_count`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rule", "index", "c3_count", "c3_singleton_count", "c3_frequency_normalized", "valid_row_count"])?;
        for i in 0..self.rules.len() {
            w.write_record([
                self.rules[i].clone(),
                i.to_string(),
                self.per_rule_c3_count[i].to_string(),
                self.per_rule_c3_singleton_count[i].to_string(),
                self.per_rule_c3_frequency_normalized[i].to_string(),
                self.per_rule_valid_row_count[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionVerdict {
    pub c3: bool,
    pub shared_rules: RuleSet,
    pub matched_ground_truth: Option<bool>,
    pub structural_failure: bool,
}

/// The first eight panels of a sample in raster order.
pub fn first_eight(sample: &Sample) -> [Panel; 8] {
    std::array::from_fn(|i| *sample.panel(i))
}

pub fn score_completion(test8: &[Panel; 8], completion: &Panel, label: Option<RuleId>) -> Result<CompletionVerdict> {
    if let Some(i) = test8.iter().position(|p| !p.is_structurally_valid()) {
        return Err(Error::TestCase(format!("panel {} has malformed slots", i + 1)));
    }
    if !completion.is_structurally_valid() {
        return Ok(CompletionVerdict {
            c3: false,
            shared_rules: RuleSet::empty(),
            matched_ground_truth: label.map(|_| false),
            structural_failure: true,
        });
    }
    let row = |i: usize| Row::new([test8[3 * i], test8[3 * i + 1], if i == 2 { *completion } else { test8[3 * i + 2] }]);
    let sample = Sample::new([row(0), row(1), row(2)], label);
    let shared = shared_rules(&sample).all_shared;
    Ok(CompletionVerdict {
        c3: !shared.is_empty(),
        shared_rules: shared,
        matched_ground_truth: label.map(|r| shared.contains(r)),
        structural_failure: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionReport {
    pub schema: String,
    pub schema_version: u32,
    pub n_tests: u64,
    pub n_correct: u64,
    pub overall_accuracy: f64,
    pub n_structural_failures: u64,
    /// Among labeled tests, fraction whose label is in the shared set.
    pub ground_truth_match_fraction: f64,
    pub rules: Vec<String>,
    pub held_out: Vec<String>,
    pub n_tests_per_rule: Vec<u64>,
    pub n_correct_per_rule: Vec<u64>,
    /// `null` for rules without tests.
    pub per_rule_accuracy: Vec<Option<f64>>,
    pub n_trained_tests: u64,
    pub trained_accuracy: Option<f64>,
    pub n_held_out_tests: u64,
    pub held_out_accuracy: Option<f64>,
}

/// Scores aligned `completions[i]` for the first eight panels of `tests[i]`.
///
/// Per-rule blocks are keyed by each test's label; unlabeled tests count
/// toward the overall accuracy only.
pub fn completion_report(tests: &[Sample], completions: &[Panel], held_out: &[RuleId]) -> Result<CompletionReport> {
    if tests.len() != completions.len() {
        return Err(Error::Alignment { tests: tests.len(), completions: completions.len() });
    }
    let verdicts = tests
        .par_iter()
        .zip(completions.par_iter())
        .enumerate()
        .map(|(i, (t, c))| score_completion(&first_eight(t), c, t.label).map_err(|e| e.at_record(i)))
        .collect::<Result<Vec<_>>>()?;

    let held: RuleSet = held_out.iter().copied().collect();
    let mut per_n = [0u64; NUM_RULES];
    let mut per_ok = [0u64; NUM_RULES];
    let (mut correct, mut failures, mut labeled, mut matched) = (0u64, 0u64, 0u64, 0u64);
    let (mut tr_n, mut tr_ok, mut ho_n, mut ho_ok) = (0u64, 0u64, 0u64, 0u64);
    for (t, v) in tests.iter().zip(&verdicts) {
        correct += v.c3 as u64;
        failures += v.structural_failure as u64;
        if let Some(r) = t.label {
            labeled += 1;
            matched += v.matched_ground_truth.unwrap_or(false) as u64;
            per_n[r.index()] += 1;
            per_ok[r.index()] += v.c3 as u64;
            if held.contains(r) {
                ho_n += 1;
                ho_ok += v.c3 as u64;
            } else {
                tr_n += 1;
                tr_ok += v.c3 as u64;
            }
        }
    }
    let n = tests.len() as u64;
    let opt = |ok: u64, n: u64| (n > 0).then(|| ok as f64 / n as f64);
    Ok(CompletionReport {
        schema: "completion-report".into(),
        schema_version: REPORT_SCHEMA_VERSION,
        n_tests: n,
        n_correct: correct,
        overall_accuracy: ratio(correct, n),
        n_structural_failures: failures,
        ground_truth_match_fraction: ratio(matched, labeled),
        rules: RuleId::all().map(|r| r.name().to_string()).collect(),
        held_out: held.iter().map(|r| r.name().to_string()).collect(),
        n_tests_per_rule: per_n.to_vec(),
        n_correct_per_rule: per_ok.to_vec(),
        per_rule_accuracy: (0..NUM_RULES).map(|i| opt(per_ok[i], per_n[i])).collect(),
        n_trained_tests: tr_n,
        trained_accuracy: opt(tr_ok, tr_n),
        n_held_out_tests: ho_n,
        held_out_accuracy: opt(ho_ok, ho_n),
    })
}

impl CompletionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per rule: `rule,index,held_out,n_tests,n_correct,accuracy` (empty accuracy when untested).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rule", "index", "held_out", "n_tests", "n_correct", "accuracy"])?;
        for i in 0..self.rules.len() {
            w.write_record([
                self.rules[i].clone(),
                i.to_string(),
                self.held_out.contains(&self.rules[i]).to_string(),
                self.n_tests_per_rule[i].to_string(),
                self.n_correct_per_rule[i].to_string(),
                self.per_rule_accuracy[i].map(|a| a.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pearson correlation via a single-pass co-moment update.
///
/// `None` for fewer than two points, mismatched lengths, or zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    // Shifting by the first pair keeps large common offsets out of the updates.
    let (x0, y0) = (xs[0], ys[0]);
    let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        let n = (k + 1) as f64;
        let (x, y) = (x - x0, y - y0);
        let dx = x - mx;
        let dy = y - my;
        mx += dx / n;
        my += dy / n;
        sxx += dx * (x - mx);
        syy += dy * (y - my);
        sxy += dx * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Per-rule (normalized C3 frequency, completion accuracy) pairs over rules
/// with completion tests, and their Pearson correlation.
pub fn c3_frequency_vs_accuracy(
    consistency: &ConsistencyReport,
    completion: &CompletionReport,
) -> (Vec<(String, f64, f64)>, Option<f64>) {
    let rows: Vec<(String, f64, f64)> = (0..NUM_RULES)
        .filter_map(|i| {
            completion.per_rule_accuracy[i]
                .map(|acc| (consistency.rules[i].clone(), consistency.per_rule_c3_frequency_normalized[i], acc))
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let r = pearson(&xs, &ys);
    (rows, r)
}
