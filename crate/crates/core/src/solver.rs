//! Oracle panel completion.
//!
//! Given the first eight panels, candidate rules are those shared by rows 1
//! and 2 for which some ninth panel can complete row 3. The ninth panel is
//! then built constructively: the rule fixes the target dimension's content
//! and everything else is drawn at random (no purity rejection).

use rand::Rng;

use crate::error::{Error, Result};
use crate::gen::{cover_value_set, random_object, random_positions};
use crate::inventory::{Attribute, Dimension, RuleId, RuleSet};
use crate::rules::{applicable_rules, panel_summary, rule_applies, PanelSummary};
use crate::types::{Panel, Row, Sample, SLOTS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionContext {
    pub rows12: [Row; 2],
    /// Panels 7 and 8, the start of row 3.
    pub prefix3: [Panel; 2],
}

impl CompletionContext {
    pub fn new(rows12: [Row; 2], prefix3: [Panel; 2]) -> Result<CompletionContext> {
        for (i, row) in rows12.iter().enumerate() {
            if !row.is_structurally_valid() {
                return Err(Error::InvalidContext(format!("row {} has malformed slots", i + 1)));
            }
        }
        for (i, p) in prefix3.iter().enumerate() {
            if !p.is_structurally_valid() {
                return Err(Error::InvalidContext(format!("panel {} has malformed slots", i + 7)));
            }
        }
        Ok(CompletionContext { rows12, prefix3 })
    }

    /// The first eight panels of `sample`; its ninth panel is ignored.
    pub fn from_sample(sample: &Sample) -> Result<CompletionContext> {
        let r3 = &sample.rows[2];
        CompletionContext::new([sample.rows[0], sample.rows[1]], [r3.panels[0], r3.panels[1]])
    }

    pub fn assemble(&self, panel9: Panel, label: Option<RuleId>) -> Sample {
        let [p7, p8] = self.prefix3;
        Sample::new([self.rows12[0], self.rows12[1], Row::new([p7, p8, panel9])], label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionResult {
    pub panel9: Panel,
    pub used_rule: RuleId,
    pub candidates: RuleSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Lowest inventory index among the candidates.
    #[default]
    First,
    /// Uniform over the candidates.
    Random,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "first" => Ok(Strategy::First),
            "random" => Ok(Strategy::Random),
            other => Err(format!("unknown strategy `{other}` (expected first or random)")),
        }
    }
}

/// Content a rule forces on the ninth panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Forced {
    Value(Attribute, u8),
    Values(Attribute, u16),
    Count(usize),
    Positions(u16),
}

fn forced_content(rule: RuleId, a: &PanelSummary, b: &PanelSummary) -> Option<Forced> {
    let rel = rule.relation();
    match rule.dimension() {
        Dimension::Number => {
            let n = rel.scalar_successor(a.count as i32, b.count as i32)?;
            (1..=SLOTS as i32).contains(&n).then_some(Forced::Count(n as usize))
        }
        Dimension::Position => {
            let p = rel.apply_set(a.occupied, b.occupied)?;
            (p != 0).then_some(Forced::Positions(p))
        }
        dim => {
            let attr = dim.attribute()?;
            if rel.is_logic() {
                let s = rel.apply_set(a.value_set(attr), b.value_set(attr))?;
                (s != 0 && s.count_ones() as usize <= SLOTS).then_some(Forced::Values(attr, s))
            } else {
                let v = rel.scalar_successor(a.uniform_value(attr)? as i32, b.uniform_value(attr)? as i32)?;
                (0..attr.domain_size() as i32).contains(&v).then_some(Forced::Value(attr, v as u8))
            }
        }
    }
}

/// Rules for which some third panel completes a row starting with `first`, `second`.
pub fn feasible_rules(first: &Panel, second: &Panel) -> RuleSet {
    match (panel_summary(first), panel_summary(second)) {
        (Some(a), Some(b)) => RuleId::all().filter(|&r| forced_content(r, &a, &b).is_some()).collect(),
        _ => RuleSet::empty(),
    }
}

/// Number of rules a row's first two panels leave open.
pub fn prefix_ambiguity(row: &Row) -> usize {
    feasible_rules(&row.panels[0], &row.panels[1]).len()
}

fn shared_by_first_rows(ctx: &CompletionContext) -> RuleSet {
    applicable_rules(&ctx.rows12[0]) & applicable_rules(&ctx.rows12[1])
}

pub fn candidate_rules(ctx: &CompletionContext) -> RuleSet {
    shared_by_first_rows(ctx) & feasible_rules(&ctx.prefix3[0], &ctx.prefix3[1])
}

/// Builds a ninth panel making `(prefix[0], prefix[1], panel)` satisfy `rule`.
pub fn third_panel_for_rule<R: Rng + ?Sized>(rule: RuleId, prefix: &[Panel; 2], rng: &mut R) -> Result<Panel> {
    let (a, b) = match (panel_summary(&prefix[0]), panel_summary(&prefix[1])) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InfeasibleCompletion(rule)),
    };
    let forced = forced_content(rule, &a, &b).ok_or(Error::InfeasibleCompletion(rule))?;
    let min_count = match forced {
        Forced::Values(_, s) => s.count_ones() as usize,
        _ => 1,
    };
    let positions = match forced {
        Forced::Positions(p) => p,
        Forced::Count(n) => random_positions(n, rng),
        _ => random_positions(rng.random_range(min_count..=SLOTS), rng),
    };
    let slots: Vec<usize> = (0..SLOTS).filter(|s| positions & (1 << s) != 0).collect();
    let mut objects: Vec<_> = slots.iter().map(|_| random_object(rng)).collect();
    match forced {
        Forced::Value(attr, v) => objects.iter_mut().for_each(|o| o.set(attr, v)),
        Forced::Values(attr, set) => {
            let vals = cover_value_set(set, objects.len(), rng);
            objects.iter_mut().zip(vals).for_each(|(o, v)| o.set(attr, v));
        }
        Forced::Count(_) | Forced::Positions(_) => {}
    }
    let panel = Panel::from_objects(slots.into_iter().zip(objects));
    debug_assert!(rule_applies(rule, &Row::new([prefix[0], prefix[1], panel])));
    Ok(panel)
}

pub fn complete_panel<R: Rng + ?Sized>(
    ctx: &CompletionContext,
    strategy: Strategy,
    rng: &mut R,
) -> Result<CompletionResult> {
    let shared = shared_by_first_rows(ctx);
    if shared.is_empty() {
        return Err(Error::NoSharedRule);
    }
    let candidates = shared & feasible_rules(&ctx.prefix3[0], &ctx.prefix3[1]);
    let used_rule = match strategy {
        Strategy::First => candidates.first(),
        Strategy::Random if candidates.is_empty() => None,
        Strategy::Random => candidates.iter().nth(rng.random_range(0..candidates.len())),
    }
    .ok_or(Error::AllInfeasible)?;
    let panel9 = third_panel_for_rule(used_rule, &ctx.prefix3, rng)?;
    Ok(CompletionResult { panel9, used_rule, candidates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{generate_row, generate_sample, Budget};
    use crate::rules::shared_rules;
    use crate::types::ObjectSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rule(name: &str) -> RuleId {
        name.parse().unwrap()
    }

    fn o(shape: u8, size: u8, color: u8) -> ObjectSpec {
        ObjectSpec::new(shape, size, color).unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn progression_size_fixes_uniform_five() {
        let sized = |v: u8| Panel::from_objects([(2, o(1, v, 2)), (6, o(4, v, 7))]);
        let p = third_panel_for_rule(rule("PROG_P2-SIZE"), &[sized(1), sized(3)], &mut rng(0)).unwrap();
        let s = panel_summary(&p).unwrap();
        assert_eq!(s.uniform_value(Attribute::Size), Some(5));
    }

    #[test]
    fn and_position_fixes_intersection() {
        let at = |slots: &[usize]| Panel::from_objects(slots.iter().map(|&s| (s, o(0, 0, 0))));
        let p = third_panel_for_rule(rule("AND-POSITION"), &[at(&[0, 1, 4]), at(&[1, 4, 8])], &mut rng(1))
            .unwrap();
        assert_eq!(panel_summary(&p).unwrap().positions(), vec![1, 4]);
    }

    #[test]
    fn arith_color_out_of_domain_is_infeasible() {
        let colored = |c: u8| Panel::from_objects([(0, o(0, 0, c))]);
        let err = third_panel_for_rule(rule("ARITH_P-COLOR"), &[colored(7), colored(6)], &mut rng(2));
        assert!(matches!(err, Err(Error::InfeasibleCompletion(_))));
    }

    fn ctx_for(target: RuleId, seed: u64) -> (Sample, CompletionContext) {
        let s = generate_sample(target, Budget::default(), &mut rng(seed)).unwrap();
        let ctx = CompletionContext::from_sample(&s).unwrap();
        (s, ctx)
    }

    #[test]
    fn const_shape_context_has_const_shape_candidate() {
        let (_, ctx) = ctx_for(rule("CONST-SHAPE"), 3);
        let c = candidate_rules(&ctx);
        assert!(c.contains(rule("CONST-SHAPE")));
        assert!(c.is_subset(Dimension::Shape.rules()));
    }

    #[test]
    fn rows_from_different_dimensions_share_nothing() {
        let mut r = rng(4);
        let a = generate_row(rule("CONST-SHAPE"), Budget::default(), &mut r).unwrap();
        let b = generate_row(rule("OR-POSITION"), Budget::default(), &mut r).unwrap();
        let c = generate_row(rule("PROG_M1-NUMBER"), Budget::default(), &mut r).unwrap();
        let ctx = CompletionContext::new([a, b], [c.panels[0], c.panels[1]]).unwrap();
        assert!(candidate_rules(&ctx).is_empty());
        assert!(matches!(complete_panel(&ctx, Strategy::First, &mut r), Err(Error::NoSharedRule)));
    }

    #[test]
    fn arith_minus_number_excluded_by_prefix_counts() {
        let (_, ctx) = ctx_for(rule("ARITH_M-NUMBER"), 5);
        let n = |k: usize| Panel::from_objects((0..k).map(|s| (s, o(s as u8 % 7, 2, 3))));
        let ctx = CompletionContext::new(ctx.rows12, [n(3), n(5)]).unwrap();
        assert!(!candidate_rules(&ctx).contains(rule("ARITH_M-NUMBER")));
        assert!(matches!(complete_panel(&ctx, Strategy::First, &mut rng(0)), Err(Error::AllInfeasible)));
    }

    #[test]
    fn completions_are_c3_and_stay_on_target_dimension() {
        for (i, target) in RuleId::all().enumerate() {
            for strategy in [Strategy::First, Strategy::Random] {
                let (_, ctx) = ctx_for(target, 100 + i as u64);
                let res = complete_panel(&ctx, strategy, &mut rng(i as u64)).unwrap();
                assert_eq!(res.used_rule.dimension(), target.dimension());
                let full = ctx.assemble(res.panel9, Some(target));
                assert!(shared_rules(&full).all_shared.contains(res.used_rule));
            }
        }
    }

    #[test]
    fn first_strategy_is_deterministic() {
        let (_, ctx) = ctx_for(rule("XOR-COLOR"), 6);
        let a = complete_panel(&ctx, Strategy::First, &mut rng(9)).unwrap();
        let b = complete_panel(&ctx, Strategy::First, &mut rng(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(Some(a.used_rule), a.candidates.first());
    }

    #[test]
    fn malformed_context_is_refused() {
        let (s, _) = ctx_for(rule("OR-SHAPE"), 7);
        let mut bad = s;
        bad.panel_mut(6).slots[0] = crate::types::Slot::Malformed([1, -1, 1]);
        assert!(matches!(CompletionContext::from_sample(&bad), Err(Error::InvalidContext(_))));
    }

    #[test]
    fn ambiguity_is_at_least_one_on_generated_rows() {
        let mut r = rng(8);
        for target in RuleId::all() {
            let row = generate_row(target, Budget::default(), &mut r).unwrap();
            assert!(prefix_ambiguity(&row) >= 1);
            assert!(feasible_rules(&row.panels[0], &row.panels[1]).contains(target));
        }
    }
}
