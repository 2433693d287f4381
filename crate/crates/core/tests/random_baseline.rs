//! Valid-row rate of noise samples (each slot occupied with probability 0.5,
//! attributes uniform), checked against an exact enumeration over counts.

mod common;

use raven_core::eval::consistency_report;
use raven_core::gen::random_sample;
use raven_core::inventory::Dimension;
use raven_core::rng::{stream_rng, Purpose, Split};
use raven_core::rules::applicable_rules;
use raven_core::Sample;

const NUMBER_RELATIONS: [&str; 7] = ["CONST", "PROG_P1", "PROG_M1", "PROG_P2", "PROG_M2", "ARITH_P", "ARITH_M"];

fn binomial_pmf(n: u32, k: u32) -> f64 {
    let choose = (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    choose / 2f64.powi(n as i32)
}

fn counts_satisfy(a: i32, b: i32, c: i32) -> bool {
    NUMBER_RELATIONS.iter().any(|rel| match *rel {
        "CONST" => a == b && b == c,
        "PROG_P1" => b == a + 1 && c == b + 1,
        "PROG_M1" => b == a - 1 && c == b - 1,
        "PROG_P2" => b == a + 2 && c == b + 2,
        "PROG_M2" => b == a - 2 && c == b - 2,
        "ARITH_P" => c == a + b,
        _ => c == a - b,
    })
}

/// Exact probability that a noise row satisfies some count rule.
fn number_rule_probability() -> f64 {
    let mut p = 0.0;
    for a in 1..=9 {
        for b in 1..=9 {
            for c in 1..=9 {
                if counts_satisfy(a, b, c) {
                    p += binomial_pmf(9, a as u32) * binomial_pmf(9, b as u32) * binomial_pmf(9, c as u32);
                }
            }
        }
    }
    p
}

fn noise(n: usize) -> Vec<Sample> {
    let mut rng = stream_rng(2024, Purpose::Baseline, Split::Control, 0);
    (0..n).map(|_| random_sample(0.5, &mut rng)).collect()
}

#[test]
fn count_rules_alone_fire_on_about_a_sixth_of_noise_rows() {
    let p = number_rule_probability();
    assert!((0.16..0.18).contains(&p), "{p}");

    let samples = noise(20_000);
    let number = Dimension::Number.rules();
    let rows: Vec<_> = samples.iter().flat_map(|s| s.rows.iter()).collect();
    let hits = rows.iter().filter(|r| !(applicable_rules(r) & number).is_empty()).count();
    let n = rows.len() as f64;
    let observed = hits as f64 / n;
    let sigma = (p * (1.0 - p) / n).sqrt();
    assert!((observed - p).abs() < 5.0 * sigma, "observed {observed}, exact {p}");
}

#[test]
fn noise_valid_row_fraction_regression() {
    let samples = noise(20_000);
    let rep = consistency_report(&samples);
    let valid_rows = (rep.valid_row_fraction * rep.n_rows as f64).round() as u64;
    assert_eq!(rep.n_rows, 60_000);
    assert_eq!(valid_rows, 11_630);
    assert!(rep.c3_fraction < 0.01, "{}", rep.c3_fraction);

    let reference_valid: usize = samples
        .iter()
        .flat_map(|s| s.rows.iter())
        .filter(|r| common::reference_mask(&common::raw_row(r)) != 0)
        .count();
    assert_eq!(reference_valid as u64, valid_rows);
}
