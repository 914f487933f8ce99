//! Choice and sequential composition of STSs, the master model, and pruning
//! of switches that no satisfiable path reaches.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::sts::{Location, Sts, StsTerm, StsVar, Term};
use crate::symbolic::{solve, Domains, Solver, SymbolicError, SymbolicPath};
use crate::value::Type;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("operands have different signatures")]
    SignatureMismatch,
    #[error("location {0} occurs in both operands")]
    OverlappingLocations(Location),
    #[error("the initial location of the second operand has incoming switches")]
    InitialHasIncoming,
    #[error("no primary scenario: an initial scenario must be executed before any other")]
    NoPrimary,
    #[error("master depth must be at least 1")]
    ZeroDepth,
    #[error("nothing to compose")]
    Empty,
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

/// Non-fatal finding during composition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ComposeWarning {
    /// The first operand of a sequential composition has no sink, so the
    /// second operand was dropped.
    NoSinks,
}

fn check_compatible(s1: &Sts, s2: &Sts) -> Result<(), ComposeError> {
    if !Arc::ptr_eq(&s1.signature, &s2.signature) && s1.signature != s2.signature {
        return Err(ComposeError::SignatureMismatch);
    }
    let l1: BTreeSet<&Location> = s1.locations.iter().collect();
    if let Some(l) = s2.locations.iter().find(|l| l1.contains(l)) {
        return Err(ComposeError::OverlappingLocations(l.clone()));
    }
    Ok(())
}

/// A location name not used by any of `stss`.
fn fresh_location<'a>(stss: impl IntoIterator<Item = &'a Sts> + Clone) -> Location {
    let used: BTreeSet<&Location> = stss.into_iter().flat_map(|s| &s.locations).collect();
    (0..)
        .map(|i| Location(if i == 0 { "l0".to_string() } else { format!("l0.{i}") }))
        .find(|l| !used.contains(l))
        .expect("unbounded supply of names")
}

/// Choice composition: a fresh initial location offering the initial
/// switches of both operands. All other locations and switches are kept.
pub fn choice(s1: &Sts, s2: &Sts) -> Result<Sts, ComposeError> {
    check_compatible(s1, s2)?;
    let l0 = fresh_location([s1, s2]);
    let mut locations = vec![l0.clone()];
    locations.extend(s1.locations.iter().cloned());
    locations.extend(s2.locations.iter().cloned());
    let mut switches = Vec::new();
    for s in [s1, s2] {
        for sw in &s.switches {
            let mut sw = sw.clone();
            if sw.source == s.initial {
                sw.source = l0.clone();
            }
            switches.push(sw);
        }
    }
    Ok(Sts { signature: s1.signature.clone(), locations, initial: l0, switches })
}

/// Choice over any number of operands. Former initial locations that no
/// switch enters are dropped, since nothing can reach them.
pub fn choice_all(stss: &[Sts]) -> Result<Sts, ComposeError> {
    let first = stss.first().ok_or(ComposeError::Empty)?;
    for (i, a) in stss.iter().enumerate() {
        for b in &stss[i + 1..] {
            check_compatible(a, b)?;
        }
    }
    let l0 = fresh_location(stss.iter());
    let mut locations = vec![l0.clone()];
    let mut switches = Vec::new();
    for s in stss {
        let entered = s.switches.iter().any(|sw| sw.target == s.initial);
        locations.extend(s.locations.iter().filter(|l| entered || **l != s.initial).cloned());
        for sw in &s.switches {
            let mut sw = sw.clone();
            if sw.source == s.initial {
                sw.source = l0.clone();
            }
            switches.push(sw);
        }
    }
    Ok(Sts { signature: first.signature.clone(), locations, initial: l0, switches })
}

/// Sequential composition: every sink of `s1` takes over the initial
/// switches of `s2`, whose initial location is removed.
pub fn sequential(s1: &Sts, s2: &Sts) -> Result<(Sts, Option<ComposeWarning>), ComposeError> {
    check_compatible(s1, s2)?;
    if s2.switches.iter().any(|sw| sw.target == s2.initial) {
        return Err(ComposeError::InitialHasIncoming);
    }
    let sinks = s1.sink_locations();
    if sinks.is_empty() {
        return Ok((s1.clone(), Some(ComposeWarning::NoSinks)));
    }
    let mut locations = s1.locations.clone();
    locations.extend(s2.locations.iter().filter(|l| **l != s2.initial).cloned());
    let mut switches = s1.switches.clone();
    let initial: Vec<usize> = s2.initial_switches();
    for sink in &sinks {
        for &k in &initial {
            let mut sw = s2.switches[k].clone();
            sw.source = sink.clone();
            switches.push(sw);
        }
    }
    switches.extend(s2.switches.iter().filter(|sw| sw.source != s2.initial).cloned());
    Ok((Sts { signature: s1.signature.clone(), locations, initial: s1.initial.clone(), switches }, None))
}

/// Master model `⋏primary ▷ (⋏all ▷ ⋏all)`, generalized to `depth` stages:
/// the primary choice followed by `depth - 1` copies of the choice over all
/// scenarios. Stage `k` has its locations prefixed with `d{k}/`.
pub fn master(primary: &[Sts], all: &[Sts], depth: usize) -> Result<Sts, ComposeError> {
    if primary.is_empty() {
        return Err(ComposeError::NoPrimary);
    }
    if depth == 0 {
        return Err(ComposeError::ZeroDepth);
    }
    let stage = |k: usize, parts: &[Sts]| -> Result<Sts, ComposeError> {
        let s = choice_all(parts)?;
        Ok(s.rename_locations(|l| Location(format!("d{k}/{l}"))))
    };
    let mut acc: Option<Sts> = None;
    for k in (2..=depth).rev() {
        let s = stage(k, all)?;
        acc = Some(match acc {
            None => s,
            Some(rest) => sequential(&s, &rest)?.0,
        });
    }
    let ini = stage(1, primary)?;
    Ok(match acc {
        None => ini,
        Some(rest) => sequential(&ini, &rest)?.0,
    })
}

/// A switch removed by pruning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovedSwitch {
    /// Index in the unpruned model.
    pub index: usize,
    pub source: Location,
    pub target: Location,
    pub gate: String,
    pub scenario: Option<String>,
    /// The guard mentions a decimal value, so a larger sample set might
    /// make it reachable.
    pub mentions_decimals: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PruneReport {
    pub removed: Vec<RemovedSwitch>,
    pub removed_locations: Vec<Location>,
    /// Scenarios none of whose switches survive.
    pub unreachable_scenarios: Vec<String>,
    /// For each surviving switch, its index in the unpruned model.
    pub kept: Vec<usize>,
}

impl PruneReport {
    pub fn render(&self) -> String {
        let mut out = format!(
            "pruning kept {} switches and removed {} switches and {} locations\n",
            self.kept.len(),
            self.removed.len(),
            self.removed_locations.len()
        );
        for r in &self.removed {
            out.push_str(&format!(
                "  removed switch {} {} -[{}]-> {}{}{}\n",
                r.index,
                r.source,
                r.gate,
                r.target,
                r.scenario.as_ref().map(|s| format!(" ({s})")).unwrap_or_default(),
                if r.mentions_decimals { " [decimal guard: consider more samples]" } else { "" }
            ));
        }
        for s in &self.unreachable_scenarios {
            out.push_str(&format!("  scenario never reachable: {s}\n"));
        }
        out
    }
}

/// Removes every switch that lies on no satisfiable path from the initial
/// location, then every location left unreachable. Paths are explored up to
/// `max_len` switches, which bounds the search on cyclic models.
pub fn prune(
    s: &Sts,
    domains: &Domains,
    solver: &dyn Solver,
    max_len: usize,
) -> Result<(Sts, PruneReport), ComposeError> {
    let adjacency: BTreeMap<&Location, Vec<usize>> = s.adjacency();
    let mut live = vec![false; s.switches.len()];
    let mut stack = vec![SymbolicPath::start(s)];
    while let Some(sp) = stack.pop() {
        if sp.switches.len() >= max_len {
            continue;
        }
        for &k in adjacency.get(&sp.location).map(Vec::as_slice).unwrap_or(&[]).iter().rev() {
            let mut next = sp.clone();
            next.push(s, k)?;
            if solve(s, &next, domains, solver)?.is_some() {
                live[k] = true;
                stack.push(next);
            }
        }
    }
    let mut reachable: BTreeSet<&Location> = BTreeSet::from([&s.initial]);
    for (k, sw) in s.switches.iter().enumerate() {
        if live[k] {
            reachable.insert(&sw.target);
        }
    }
    let sig = &s.signature;
    let mut report = PruneReport::default();
    let mut switches = Vec::new();
    for (k, sw) in s.switches.iter().enumerate() {
        if live[k] {
            report.kept.push(k);
            switches.push(sw.clone());
        } else {
            report.removed.push(RemovedSwitch {
                index: k,
                source: sw.source.clone(),
                target: sw.target.clone(),
                gate: sig.gate(sw.gate).name.clone(),
                scenario: sw.origin.as_ref().and_then(|o| sig.scenarios.get(o.scenario)).cloned(),
                mentions_decimals: mentions_decimals(s, &sw.guard),
            });
        }
    }
    let locations: Vec<Location> = s.locations.iter().filter(|l| reachable.contains(l)).cloned().collect();
    report.removed_locations = s.locations.iter().filter(|l| !reachable.contains(l)).cloned().collect();
    let surviving: BTreeSet<usize> = switches.iter().filter_map(|sw| sw.origin.as_ref().map(|o| o.scenario)).collect();
    let mentioned: BTreeSet<usize> =
        s.switches.iter().filter_map(|sw| sw.origin.as_ref().map(|o| o.scenario)).collect();
    report.unreachable_scenarios =
        mentioned.difference(&surviving).filter_map(|&i| sig.scenarios.get(i).cloned()).collect();
    Ok((Sts { signature: s.signature.clone(), locations, initial: s.initial.clone(), switches }, report))
}

fn mentions_decimals(s: &Sts, guard: &StsTerm) -> bool {
    fn has_decimal(t: &Type) -> bool {
        match t {
            Type::Decimal => true,
            Type::Array(e) => has_decimal(e),
            Type::Struct(attrs) => attrs.iter().any(|(_, t)| has_decimal(t)),
            _ => false,
        }
    }
    let mut found = false;
    guard.for_each_var(&mut |v: &StsVar| {
        found |= s.signature.var_type(v).is_some_and(|t| has_decimal(&t));
    });
    found || contains_decimal_const(guard)
}

fn contains_decimal_const(t: &StsTerm) -> bool {
    match t {
        Term::Const(v) => matches!(v, crate::value::Value::Dec(_)),
        Term::Var(_) | Term::Elem(_) => false,
        Term::Attr(b, _) => contains_decimal_const(b),
        Term::InRange(b, d) => d.ty() == Type::Decimal || contains_decimal_const(b),
        Term::Cmp(_, a, b) | Term::And(a, b) | Term::Or(a, b) => contains_decimal_const(a) || contains_decimal_const(b),
        Term::CountWhere { array, pred, .. } => contains_decimal_const(array) || contains_decimal_const(pred),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_spec;
    use crate::sts::tests::{bool_sig, chain};
    use crate::symbolic::{default_plan, Backtracking};
    use crate::translate::translate_suite;
    use proptest::prelude::*;

    const CASE_STUDY: &str = include_str!("../data/case_study.pickles");

    fn counts(s: &Sts) -> (usize, usize) {
        (s.locations.len(), s.switches.len())
    }

    #[test]
    fn choice_of_chains() {
        let sig = bool_sig();
        let c = choice(&chain(&sig, "a", 2), &chain(&sig, "b", 2)).unwrap();
        assert_eq!(counts(&c), (7, 4));
        assert_eq!(c.initial_switches().len(), 2);
        assert!(c.validate().is_empty());
        let mut two = chain(&sig, "c", 2);
        let mut extra = two.switches[0].clone();
        extra.target = Location::from("c2");
        two.switches.push(extra);
        let c = choice(&chain(&sig, "a", 2), &two).unwrap();
        assert_eq!(c.initial_switches().len(), 3);
        assert!(matches!(
            choice(&chain(&sig, "a", 2), &chain(&sig, "a", 1)),
            Err(ComposeError::OverlappingLocations(_))
        ));
    }

    #[test]
    fn sequential_of_chains() {
        let sig = bool_sig();
        let (s, w) = sequential(&chain(&sig, "a", 2), &chain(&sig, "b", 2)).unwrap();
        assert_eq!(counts(&s), (5, 4));
        assert_eq!(w, None);
        assert!(s.validate().is_empty());
        let mut looped = chain(&sig, "a", 2);
        let mut back = looped.switches[1].clone();
        back.source = Location::from("a2");
        back.target = Location::from("a1");
        looped.switches.push(back);
        let (s, w) = sequential(&looped, &chain(&sig, "b", 2)).unwrap();
        assert_eq!(w, Some(ComposeWarning::NoSinks));
        assert_eq!(s, looped);
    }

    #[test]
    fn case_study_master_counts() {
        let r = translate_suite(&parse_spec(CASE_STUDY).unwrap()).unwrap();
        let all = r.all();
        let sys = choice_all(&all).unwrap();
        assert_eq!(counts(&sys), (9, 8));
        assert_eq!(sys.initial_switches().len(), 4);
        let renamed = sys.rename_locations(|l| Location(format!("x/{l}")));
        let (twice, _) = sequential(&sys, &renamed).unwrap();
        assert_eq!(twice.switches.len(), 8 + 4 + 16);
        let m = master(&r.primary, &all, 3).unwrap();
        assert_eq!(m.switches.len(), 48);
        assert!(m.validate().is_empty());
        assert_eq!(master(&r.primary, &all, 2).unwrap().switches.len(), 8 + 4 * 4 + 4);
        assert_eq!(master(&r.primary, &all, 1).unwrap().switches.len(), 8);
        assert!(matches!(master(&[], &all, 3), Err(ComposeError::NoPrimary)));
    }

    #[test]
    fn single_scenario_master_is_a_chain() {
        let sig = bool_sig();
        let s = chain(&sig, "a", 2);
        let m = master(std::slice::from_ref(&s), std::slice::from_ref(&s), 3).unwrap();
        assert_eq!(counts(&m), (7, 6));
        assert_eq!(m.sink_locations().len(), 1);
    }

    #[test]
    fn identical_primaries_branch_at_every_stage() {
        let sig = bool_sig();
        let (a, b) = (chain(&sig, "a", 1), chain(&sig, "b", 1));
        let m = master(&[a.clone(), b.clone()], &[a, b], 3).unwrap();
        assert_eq!(m.initial_switches().len(), 2);
        for sink in choice_all(&[chain(&sig, "a", 1), chain(&sig, "b", 1)]).unwrap().sink_locations() {
            assert_eq!(m.outgoing(&Location(format!("d1/{sink}"))).len(), 2);
            assert_eq!(m.outgoing(&Location(format!("d2/{sink}"))).len(), 2);
        }
    }

    fn pruned_case_study() -> (Sts, PruneReport, Sts) {
        let r = translate_suite(&parse_spec(CASE_STUDY).unwrap()).unwrap();
        let m = master(&r.primary, &r.all(), 3).unwrap();
        let plan = default_plan(&r.context.signature, m.switches.iter().map(|s| &s.guard));
        let domains = Domains::new(r.context.signature.clone(), plan);
        let (p, rep) = prune(&m, &domains, &Backtracking, m.switches.len()).unwrap();
        (m, rep, p)
    }

    #[test]
    fn case_study_pruning() {
        let (m, rep, p) = pruned_case_study();
        assert_eq!(p.switches.len(), 28);
        assert_eq!(p.locations.len(), 25);
        assert!(p.validate().is_empty());
        assert!(rep.unreachable_scenarios.is_empty());
        let sig = &m.signature;
        // nothing continues after the lost-access scenario
        for sw in &p.switches {
            if sw.origin.as_ref().is_some_and(|o| o.scenario == 3 && o.step == 1) {
                assert!(p.outgoing(&sw.target).is_empty(), "{}", sw.target);
            }
        }
        // after one faulty detector only lost access can follow
        for sw in &p.switches {
            if sw.origin.as_ref().is_some_and(|o| o.scenario == 1 && o.step == 1) {
                let next: Vec<usize> =
                    p.outgoing(&sw.target).iter().map(|&k| p.switches[k].origin.as_ref().unwrap().scenario).collect();
                assert!(next.iter().all(|&s| s == 3), "{next:?}");
            }
        }
        assert!(rep.removed.iter().all(|r| r.scenario.is_some()));
        assert_eq!(rep.removed.len(), 20);
        assert!(rep.render().contains("removed 20 switches"));
        assert_eq!(sig.scenarios.len(), 4);
    }

    #[test]
    fn pruning_is_idempotent_and_identity_on_true_guards() {
        let (m, _, p) = pruned_case_study();
        let plan = default_plan(&m.signature, m.switches.iter().map(|s| &s.guard));
        let domains = Domains::new(m.signature.clone(), plan);
        let (again, rep) = prune(&p, &domains, &Backtracking, p.switches.len()).unwrap();
        assert_eq!(again, p);
        assert!(rep.removed.is_empty());
        let sig = bool_sig();
        let s = master(&[chain(&sig, "a", 2)], &[chain(&sig, "a", 2)], 2).unwrap();
        let domains = Domains::new(sig, Default::default());
        let (q, _) = prune(&s, &domains, &Backtracking, 10).unwrap();
        assert_eq!(q, s);
    }

    fn random_chain(prefix: &'static str) -> impl Strategy<Value = Sts> {
        (1usize..5, prop::collection::vec((0usize..5, 0usize..5), 0..4)).prop_map(move |(n, extra)| {
            let sig = bool_sig();
            let mut s = chain(&sig, prefix, n);
            for (a, b) in extra {
                let mut sw = s.switches[0].clone();
                sw.source = s.locations[a % (n + 1)].clone();
                sw.target = s.locations[(b % n) + 1].clone();
                s.switches.push(sw);
            }
            s
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn composition_counts(s1 in random_chain("a"), s2 in random_chain("b")) {
            let c = choice(&s1, &s2).unwrap();
            prop_assert_eq!(c.locations.len(), s1.locations.len() + s2.locations.len() + 1);
            prop_assert_eq!(c.switches.len(), s1.switches.len() + s2.switches.len());
            let (q, w) = sequential(&s1, &s2).unwrap();
            let sinks = s1.sink_locations().len();
            if sinks == 0 {
                prop_assert_eq!(w, Some(ComposeWarning::NoSinks));
            } else {
                let k = s2.initial_switches().len();
                prop_assert_eq!(q.locations.len(), s1.locations.len() + s2.locations.len() - 1);
                prop_assert_eq!(q.switches.len(), s1.switches.len() + s2.switches.len() - k + sinks * k);
                prop_assert!(q.validate().is_empty());
            }
        }
    }
}
