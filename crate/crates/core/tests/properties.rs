use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use pickles::compose::{master, prune};
use pickles::parser::ast::TestStep;
use pickles::parser::{parse_spec, parse_testcase};
use pickles::render::render_test;
use pickles::sts::{normalize, Sts, StsVar, VarIdx};
use pickles::symbolic::{count_satisfying_inputs, default_plan, path_condition, solve, Backtracking, Domains, PathVar};
use pickles::testgen::{generate_switch_coverage, maximal_paths, FormalTestCase};
use pickles::translate::{translate_suite, Position, TranslationResult};
use pickles::value::{Decimal, SamplingPlan, Value};
use proptest::prelude::*;

const CASE_STUDY: &str = include_str!("../data/case_study.pickles");

struct Fixture {
    r: TranslationResult,
    pruned: Sts,
    domains: Domains,
    suite: Vec<FormalTestCase>,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let r = translate_suite(&parse_spec(CASE_STUDY).unwrap()).unwrap();
        let m = master(&r.primary, &r.all(), 3).unwrap();
        let plan = default_plan(&r.context.signature, m.switches.iter().map(|s| &s.guard));
        let domains = Domains::new(r.context.signature.clone(), plan);
        let (pruned, _) = prune(&m, &domains, &Backtracking, m.switches.len()).unwrap();
        let suite = generate_switch_coverage(&pruned, &domains, &Backtracking, 3).unwrap();
        Fixture { r, pruned, domains, suite }
    })
}

#[test]
fn translated_scenarios_are_simple_paths_with_scoped_guards() {
    let f = fixture();
    for s in f.r.all() {
        assert!(s.validate().is_empty());
        assert_eq!(s.switches.len(), s.locations.len() - 1);
        assert_eq!(s.sink_locations().len(), 1);
        for sw in &s.switches {
            let params: BTreeSet<VarIdx> = sw.params.iter().copied().collect();
            for v in sw.guard.free_vars() {
                if let StsVar::Param(p) = v {
                    assert!(params.contains(&p));
                }
            }
        }
    }
}

#[test]
fn surviving_locations_are_reachable() {
    let p = &fixture().pruned;
    let mut seen = BTreeSet::from([p.initial.clone()]);
    let mut todo = vec![p.initial.clone()];
    while let Some(l) = todo.pop() {
        for k in p.outgoing(&l) {
            if seen.insert(p.switches[k].target.clone()) {
                todo.push(p.switches[k].target.clone());
            }
        }
    }
    assert_eq!(seen, p.locations.iter().cloned().collect());
}

#[test]
fn rendered_tests_carry_their_values_and_guards() {
    let f = fixture();
    let ctx = &f.r.context;
    let sig = &ctx.signature;
    for t in &f.suite {
        let text = render_test(t, &f.pruned).unwrap();
        let parsed = parse_testcase(&text).unwrap();
        assert_eq!(render_test(t, &f.pruned).unwrap(), text);
        let ids: Vec<&str> = parsed.given.iter().map(|d| d.id.as_str()).collect();
        let declared: Vec<&str> = sig.vars.iter().map(|b| b.id.as_str()).collect();
        assert_eq!(ids, declared);
        for d in &parsed.given {
            assert_eq!(ctx.resolve_value(&d.id, &d.value).unwrap(), t.ini[&sig.var(&d.id).unwrap()]);
        }
        for ((step, &k), vals) in parsed.steps.iter().zip(&t.switches).zip(&t.values) {
            let sw = &f.pruned.switches[k];
            match step {
                TestStep::Input { values, .. } => {
                    let got: Vec<Value> = values.iter().map(|d| ctx.resolve_value(&d.id, &d.value).unwrap()).collect();
                    assert_eq!(&got, vals);
                }
                TestStep::Output(s) => {
                    let guard = ctx.map_guard_block(s.guard.as_ref().unwrap(), Position::Step(&sw.params)).unwrap();
                    assert_eq!(normalize(&guard), normalize(&sw.guard));
                }
            }
        }
    }
}

#[test]
fn solver_results_satisfy_every_prefix() {
    let f = fixture();
    for (path, w) in maximal_paths(&f.pruned, &f.domains, &Backtracking, 3).unwrap() {
        let full = path_condition(&f.pruned, &path).unwrap();
        let env: BTreeMap<PathVar, Value> = w
            .ini
            .iter()
            .map(|(v, x)| (PathVar::Ini(*v), x.clone()))
            .chain(w.values.iter().enumerate().flat_map(|(step, vals)| {
                f.pruned.switches[path[step]]
                    .params
                    .iter()
                    .zip(vals)
                    .map(move |(v, x)| (PathVar::Step { step, var: *v }, x.clone()))
            }))
            .collect();
        assert!(full.condition().holds(&|v: &PathVar| env.get(v)).unwrap());
        for n in 1..path.len() {
            let prefix = path_condition(&f.pruned, &path[..n]).unwrap();
            assert!(prefix.condition().holds(&|v: &PathVar| env.get(v)).unwrap(), "prefix {n} of {path:?}");
            assert!(solve(&f.pruned, &prefix, &f.domains, &Backtracking).unwrap().is_some());
        }
    }
}

/// Counts of distinct detector sets of size 1..=3 with zero, one and more
/// detectors strictly inside the critical section, by enumeration over bit
/// masks of (lane, position) configurations.
fn oracle(positions: &[i64], lane: i64, start: i64, end: i64) -> [u128; 3] {
    let configs: Vec<(i64, i64)> = (1..=3).flat_map(|l| positions.iter().map(move |&p| (l, p))).collect();
    let mut out = [0u128; 3];
    for mask in 1u32..(1 << configs.len()) {
        if mask.count_ones() > 3 {
            continue;
        }
        let inside = (0..configs.len())
            .filter(|&i| mask & (1 << i) != 0 && configs[i].0 == lane && start < configs[i].1 && configs[i].1 < end)
            .count();
        out[inside.min(2)] += 1;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn input_counts_match_enumeration(
        positions in prop::collection::btree_set(1001i64..3000, 1..5),
        lane in 1i64..=3,
        bounds in (1001i64..3000, 1001i64..3000),
    ) {
        let f = fixture();
        let sig = &f.r.context.signature;
        let (start, end) = (bounds.0.min(bounds.1), bounds.0.max(bounds.1));
        let positions: Vec<i64> = positions.into_iter().collect();
        let mut plan = SamplingPlan::new();
        plan.set("faulty detectors.length position", positions.iter().map(|&u| Decimal::from_units(u)).collect());
        let domains = Domains::new(sig.clone(), plan);
        let v = |id: &str| sig.var(id).unwrap();
        let fixed = BTreeMap::from([
            (v("availability"), Value::Str("AV".into())),
            (v("enabledness"), Value::Bool(true)),
            (v("critical section lane"), Value::Int(lane)),
            (v("critical section start"), Value::Dec(Decimal::from_units(start))),
            (v("critical section end"), Value::Dec(Decimal::from_units(end))),
        ]);
        let expected = oracle(&positions, lane, start, end);
        let p = &f.pruned;
        for k in p.initial_switches() {
            let scenario = p.switches[k].origin.as_ref().unwrap().scenario;
            if scenario < 3 {
                prop_assert_eq!(count_satisfying_inputs(p, k, &fixed, &domains).unwrap(), expected[scenario]);
            }
        }
    }
}
