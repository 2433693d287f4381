mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use raven_core::gen::{generate_row, generate_sample, Budget};
use raven_core::inventory::{Dimension, Relation};
use raven_core::rules::{applicable_rules, shared_rules};
use raven_core::types::Slot;
use raven_core::{RuleId, RuleSet, Row};

use common::{corpus, raw_row, reference_mask, reference_table};

fn rule(name: &str) -> RuleId {
    name.parse().unwrap()
}

fn generated_rows(seed: u64, n: usize) -> Vec<(RuleId, Row)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rules: Vec<RuleId> = RuleId::all().collect();
    (0..n)
        .map(|i| {
            let r = rules[i % rules.len()];
            (r, generate_row(r, Budget::default(), &mut rng).unwrap())
        })
        .collect()
}

fn mirror(rel: Relation) -> Relation {
    match rel {
        Relation::ProgP1 => Relation::ProgM1,
        Relation::ProgM1 => Relation::ProgP1,
        Relation::ProgP2 => Relation::ProgM2,
        Relation::ProgM2 => Relation::ProgP2,
        other => other,
    }
}

#[test]
fn reference_table_matches_inventory() {
    let table = reference_table();
    assert_eq!(table.len(), 40);
    for (r, (rel, dim)) in RuleId::all().zip(table) {
        assert_eq!(r.name(), format!("{rel}-{dim}"));
    }
}

#[test]
fn reversal_maps_progressions_and_keeps_const_and_xor() {
    for (_, row) in generated_rows(11, 10_000) {
        let fwd = applicable_rules(&row);
        let back = applicable_rules(&row.reversed());
        for r in fwd.iter() {
            let rel = r.relation();
            if matches!(rel, Relation::ProgP1 | Relation::ProgM1 | Relation::ProgP2 | Relation::ProgM2) {
                let m = RuleId::new(mirror(rel), r.dimension()).unwrap();
                assert!(back.contains(m), "{} lost its mirror under reversal", r.name());
            }
            if matches!(rel, Relation::Const | Relation::Xor) {
                assert!(back.contains(r), "{} lost under reversal", r.name());
            }
        }
    }
}

#[test]
fn swapping_first_two_panels_keeps_commutative_relations() {
    let commutative = [Relation::ArithP, Relation::Xor, Relation::Or, Relation::And, Relation::Const];
    for (_, row) in generated_rows(12, 10_000) {
        let a = applicable_rules(&row);
        let b = applicable_rules(&row.swap_first_two());
        for r in a.iter().filter(|r| commutative.contains(&r.relation())) {
            assert!(b.contains(r), "{} lost when swapping panels 1 and 2", r.name());
        }
        for r in b.iter().filter(|r| commutative.contains(&r.relation())) {
            assert!(a.contains(r));
        }
    }
}

#[test]
fn and_or_position_coapply_only_on_equal_sets() {
    let and = rule("AND-POSITION");
    let or = rule("OR-POSITION");
    let xor_and: Vec<(RuleId, RuleId)> = [Dimension::Shape, Dimension::Size, Dimension::Color, Dimension::Position]
        .into_iter()
        .map(|d| (RuleId::new(Relation::Xor, d).unwrap(), RuleId::new(Relation::And, d).unwrap()))
        .collect();
    let mut rows: Vec<Row> = generated_rows(13, 4_000).into_iter().map(|(_, r)| r).collect();
    rows.extend(corpus::mixed_rows(14, 4_000));
    // Rows with P1 = P2 = P3 exercise the co-application branch.
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..500 {
        let mut row = generate_row(rule("CONST-NUMBER"), Budget::default(), &mut rng).unwrap();
        let occ = row.panels[0].slots.map(|s| s != Slot::Empty);
        for p in 1..3 {
            let objs: Vec<_> = row.panels[p].objects().map(|(_, o)| *o).collect();
            let mut it = objs.into_iter();
            for s in 0..9 {
                row.panels[p].slots[s] = if occ[s] { Slot::Object(it.next().unwrap()) } else { Slot::Empty };
            }
        }
        rows.push(row);
    }
    let mut both = 0;
    for row in &rows {
        let set = applicable_rules(row);
        let same = row.panels[0].slots.map(|s| s != Slot::Empty) == row.panels[1].slots.map(|s| s != Slot::Empty);
        let co = set.contains(and) && set.contains(or);
        if co {
            both += 1;
            assert!(same, "AND and OR co-apply with P1 != P2");
        }
        if same && row.is_structurally_valid() && row.panels.iter().all(|p| p.count() > 0) {
            let p3 = row.panels[2].slots.map(|s| s != Slot::Empty);
            let p1 = row.panels[0].slots.map(|s| s != Slot::Empty);
            assert_eq!(co, p3 == p1);
        }
        for &(x, a) in &xor_and {
            assert!(!(set.contains(x) && set.contains(a)), "{} and {} co-apply", x.name(), a.name());
        }
    }
    assert!(both >= 500);
}

#[test]
fn changing_one_shape_breaks_const_shape() {
    let target = rule("CONST-SHAPE");
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..2_000 {
        let row = generate_row(target, Budget::default(), &mut rng).unwrap();
        assert!(applicable_rules(&row).contains(target));
        let p = rng.random_range(0..3);
        let occupied: Vec<usize> = row.panels[p].objects().map(|(s, _)| s).collect();
        let s = occupied[rng.random_range(0..occupied.len())];
        let mut broken = row;
        if let Slot::Object(o) = &mut broken.panels[p].slots[s] {
            o.shape = (o.shape + rng.random_range(1..7)) % 7;
        }
        assert!(!applicable_rules(&broken).contains(target));
    }
}

#[test]
fn engine_agrees_with_reference_on_mixed_rows() {
    let rows = corpus::mixed_rows(17, 20_000);
    let mut seen = RuleSet::empty();
    for (i, row) in rows.iter().enumerate() {
        let got = applicable_rules(row);
        let want = reference_mask(&raw_row(row));
        assert_eq!(got.bits(), want, "row {i}: {:?} vs {:#x}", got.names(), want);
        seen = seen | got;
    }
    assert_eq!(seen, RuleSet::universe(), "corpus must exercise every rule");
}

#[test]
fn generated_samples_are_c3_under_the_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for r in RuleId::all() {
        for _ in 0..25 {
            let s = generate_sample(r, Budget::default(), &mut rng).unwrap();
            assert!(common::reference_c3(&s));
            assert!(shared_rules(&s).all_shared.contains(r));
        }
    }
}

#[test]
fn named_generation_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let number = Dimension::Number.rules();
    for _ in 0..200 {
        let row = generate_row(rule("AND-POSITION"), Budget::default(), &mut rng).unwrap();
        let pos: Vec<[bool; 9]> = row.panels.iter().map(|p| p.slots.map(|s| s != Slot::Empty)).collect();
        assert_ne!(pos[0], pos[1]);
        for s in 0..9 {
            assert_eq!(pos[2][s], pos[0][s] && pos[1][s]);
        }
        assert!((applicable_rules(&row) & number).is_empty());

        let row = generate_row(rule("ARITH_M-NUMBER"), Budget::default(), &mut rng).unwrap();
        let n: Vec<usize> = row.panels.iter().map(|p| p.count()).collect();
        assert_eq!(n[2] + n[1], n[0]);
        assert!(n[2] >= 1);
        let set = applicable_rules(&row);
        assert!(set.is_subset(Dimension::Number.rules()), "{:?}", set.names());
    }
}
