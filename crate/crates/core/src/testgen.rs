//! Switch-coverage test generation over a (pruned) master model.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::sts::{Sts, VarIdx};
use crate::symbolic::{solve, Domains, Solver, SymbolicError, SymbolicPath, Witness};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TestgenError {
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error("switch {0} lies on no satisfiable path within the depth bound")]
    Uncoverable(usize),
    #[error("test {test} references switch {switch}, which the model does not have")]
    ForeignSwitch { test: usize, switch: usize },
}

/// A switch sequence from the initial location with an initial valuation of
/// every location variable and the parameter values of each switch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalTestCase {
    pub switches: Vec<usize>,
    pub ini: BTreeMap<VarIdx, Value>,
    pub values: Vec<Vec<Value>>,
}

impl FormalTestCase {
    pub fn from_witness(switches: Vec<usize>, w: Witness) -> Self {
        FormalTestCase { switches, ini: w.ini, values: w.values }
    }

    pub fn witness(&self) -> Witness {
        Witness { ini: self.ini.clone(), values: self.values.clone() }
    }
}

/// Every maximal satisfiable path from the initial location, in depth-first
/// switch order, with a solution for each. A path is maximal when it ends at
/// a sink, when no satisfiable switch extends it, or when extending it would
/// start scenario number `depth + 1`.
pub fn maximal_paths(
    master: &Sts,
    domains: &Domains,
    solver: &dyn Solver,
    depth: usize,
) -> Result<Vec<(Vec<usize>, Witness)>, TestgenError> {
    let adjacency = master.adjacency();
    let mut out = Vec::new();
    let mut stack: Vec<(SymbolicPath, usize, Option<Witness>)> = vec![(SymbolicPath::start(master), 0, None)];
    while let Some((sp, started, witness)) = stack.pop() {
        let mut children = Vec::new();
        for &k in adjacency.get(&sp.location).map(Vec::as_slice).unwrap_or(&[]) {
            let sw = &master.switches[k];
            let starts = if sw.starts_scenario() || sp.switches.is_empty() { 1 } else { 0 };
            if started + starts > depth {
                continue;
            }
            let mut next = sp.clone();
            next.push(master, k)?;
            if let Some(w) = solve(master, &next, domains, solver)? {
                children.push((next, started + starts, Some(w)));
            }
        }
        if children.is_empty() {
            if let Some(w) = witness {
                out.push((sp.switches, w));
            }
        } else {
            stack.extend(children.into_iter().rev());
        }
    }
    Ok(out)
}

/// A test suite covering every switch of `master`: maximal satisfiable paths
/// are chosen greedily by the number of switches they add, earlier paths
/// winning ties.
pub fn generate_switch_coverage(
    master: &Sts,
    domains: &Domains,
    solver: &dyn Solver,
    depth: usize,
) -> Result<Vec<FormalTestCase>, TestgenError> {
    let mut paths = maximal_paths(master, domains, solver, depth)?;
    let reachable: BTreeSet<usize> = paths.iter().flat_map(|(p, _)| p.iter().copied()).collect();
    if let Some(k) = (0..master.switches.len()).find(|k| !reachable.contains(k)) {
        return Err(TestgenError::Uncoverable(k));
    }
    let mut uncovered = reachable;
    let mut suite = Vec::new();
    while !uncovered.is_empty() {
        let gain = |p: &[usize]| p.iter().collect::<BTreeSet<_>>().iter().filter(|k| uncovered.contains(k)).count();
        let best = (0..paths.len())
            .max_by_key(|&i| (gain(&paths[i].0), std::cmp::Reverse(i)))
            .expect("uncovered switches lie on some path");
        let (path, w) = paths.remove(best);
        for k in &path {
            uncovered.remove(k);
        }
        suite.push(FormalTestCase::from_witness(path, w));
    }
    Ok(suite)
}

/// Runs of single scenarios from the initial location: each initial switch
/// followed while the switches stay within its scenario.
pub fn scenario_runs(master: &Sts) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for k in master.initial_switches() {
        let scenario = master.switches[k].origin.as_ref().map(|o| o.scenario);
        let mut path = vec![k];
        loop {
            let at = &master.switches[*path.last().expect("non-empty")].target;
            let next = master.outgoing(at).into_iter().find(|&j| {
                let sw = &master.switches[j];
                !sw.starts_scenario() && sw.origin.as_ref().map(|o| o.scenario) == scenario
            });
            match next {
                Some(j) => path.push(j),
                None => break,
            }
        }
        out.push(path);
    }
    out
}

/// The path that executes the given scenarios one after the other, each
/// from its first step to its last.
pub fn path_for_scenarios(master: &Sts, scenarios: &[usize]) -> Option<Vec<usize>> {
    let mut path = Vec::new();
    let mut at = master.initial.clone();
    for &sc in scenarios {
        let mut first = true;
        loop {
            let next = master.outgoing(&at).into_iter().find(|&j| {
                let sw = &master.switches[j];
                sw.origin.as_ref().is_some_and(|o| o.scenario == sc && (o.step == 0) == first)
            });
            match next {
                Some(j) => {
                    path.push(j);
                    at = master.switches[j].target.clone();
                    first = false;
                }
                None if first => return None,
                None => break,
            }
        }
    }
    Some(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub covered: BTreeSet<usize>,
    pub total: BTreeSet<usize>,
    pub ratio: f64,
    /// Switches exercised by each test.
    pub per_test: Vec<Vec<usize>>,
}

impl CoverageReport {
    pub fn render(&self) -> String {
        format!(
            "switch coverage {}/{} ({:.1}%) with {} tests\n",
            self.covered.len(),
            self.total.len(),
            self.ratio * 100.0,
            self.per_test.len()
        )
    }
}

/// Switches of `master` exercised by `tests`. Every switch of the model
/// counts towards the total, so run this on a pruned model.
pub fn coverage_of(tests: &[FormalTestCase], master: &Sts) -> Result<CoverageReport, TestgenError> {
    let total: BTreeSet<usize> = (0..master.switches.len()).collect();
    let mut covered = BTreeSet::new();
    let mut per_test = Vec::new();
    for (i, t) in tests.iter().enumerate() {
        if let Some(&k) = t.switches.iter().find(|k| !total.contains(k)) {
            return Err(TestgenError::ForeignSwitch { test: i, switch: k });
        }
        covered.extend(t.switches.iter().copied());
        per_test.push(t.switches.clone());
    }
    let ratio = if total.is_empty() { 1.0 } else { covered.len() as f64 / total.len() as f64 };
    let ratio = if tests.is_empty() { 0.0 } else { ratio };
    Ok(CoverageReport { covered, total, ratio, per_test })
}
