//! Backtracking search over finitized domains.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::sts::{EvalError, Term};
use crate::value::Value;

use super::{PathTerm, PathVar};

/// A conjunction of constraints over path variables with finite candidate
/// lists.
#[derive(Debug, Clone)]
pub struct Problem {
    pub constraints: Vec<PathTerm>,
    pub domains: BTreeMap<PathVar, Arc<Vec<Value>>>,
}

/// Finds values for the variables of a [`Problem`]. Returns `None` when the
/// constraints are unsatisfiable over the given domains.
pub trait Solver {
    fn solve(&self, problem: &Problem) -> Result<Option<BTreeMap<PathVar, Value>>, EvalError>;
}

/// Depth-first search with forward checking and fewest-candidates-first
/// variable ordering. Ties go to the smaller variable (initial copies before
/// step instances), and candidates are tried in domain order, so the first
/// solution found is deterministic.
#[derive(Debug, Clone, Copy, Default)]
pub struct Backtracking;

impl Solver for Backtracking {
    fn solve(&self, problem: &Problem) -> Result<Option<BTreeMap<PathVar, Value>>, EvalError> {
        let mut all = BTreeSet::new();
        for c in &problem.constraints {
            all.extend(c.free_vars());
        }
        let vars: Vec<PathVar> = all.into_iter().collect();
        let position = |v: &PathVar| vars.binary_search(v).expect("collected above");
        let mut constraints: Vec<(&PathTerm, Vec<usize>)> = Vec::new();
        for c in problem.constraints.iter().flat_map(|c| c.conjuncts()) {
            match c {
                Term::Const(Value::Bool(true)) => continue,
                Term::Const(Value::Bool(false)) => return Ok(None),
                _ => {}
            }
            let vs: Vec<usize> = c.free_vars().iter().map(position).collect();
            constraints.push((c, vs));
        }
        let mut values: Vec<&[Value]> = Vec::new();
        for v in &vars {
            match problem.domains.get(v) {
                Some(d) => values.push(d),
                None => return Err(EvalError::MissingVariable(format!("{v}"))),
            }
        }
        let mut search = Search {
            candidates: values.iter().map(|d| (0..d.len()).collect()).collect(),
            assigned: vec![None; vars.len()],
            by_var: {
                let mut by = vec![Vec::new(); vars.len()];
                for (k, (_, vs)) in constraints.iter().enumerate() {
                    for &v in vs {
                        by[v].push(k);
                    }
                }
                by
            },
            vars: &vars,
            values,
            constraints,
        };
        // constant and unary constraints
        for k in 0..search.constraints.len() {
            match search.constraints[k].1.len() {
                0 => {
                    if !search.check(k)? {
                        return Ok(None);
                    }
                }
                1 => {
                    let v = search.constraints[k].1[0];
                    if !search.filter(v, &[k])? {
                        return Ok(None);
                    }
                }
                _ => {}
            }
        }
        if !search.run()? {
            return Ok(None);
        }
        Ok(Some(
            vars.iter()
                .enumerate()
                .map(|(i, v)| (*v, search.values[i][search.assigned[i].expect("complete assignment")].clone()))
                .collect(),
        ))
    }
}

struct Search<'a> {
    vars: &'a [PathVar],
    values: Vec<&'a [Value]>,
    constraints: Vec<(&'a PathTerm, Vec<usize>)>,
    by_var: Vec<Vec<usize>>,
    candidates: Vec<Vec<usize>>,
    assigned: Vec<Option<usize>>,
}

impl Search<'_> {
    fn holds_with(&self, k: usize, extra: Option<(usize, usize)>) -> Result<bool, EvalError> {
        let (term, vs) = &self.constraints[k];
        let env = |pv: &PathVar| {
            let i = self.vars.binary_search(pv).ok()?;
            if !vs.contains(&i) {
                return None;
            }
            let c = match extra {
                Some((v, c)) if v == i => c,
                _ => self.assigned[i]?,
            };
            Some(&self.values[i][c])
        };
        term.holds(&env)
    }

    fn check(&self, k: usize) -> Result<bool, EvalError> {
        self.holds_with(k, None)
    }

    /// Removes candidates of `v` violating any of `cs` (each of which has `v`
    /// as its only unassigned variable). Returns false when none remain.
    fn filter(&mut self, v: usize, cs: &[usize]) -> Result<bool, EvalError> {
        let mut kept = Vec::with_capacity(self.candidates[v].len());
        'cand: for &c in &self.candidates[v] {
            for &k in cs {
                if !self.holds_with(k, Some((v, c)))? {
                    continue 'cand;
                }
            }
            kept.push(c);
        }
        let empty = kept.is_empty();
        self.candidates[v] = kept;
        Ok(!empty)
    }

    fn run(&mut self) -> Result<bool, EvalError> {
        let next =
            (0..self.vars.len()).filter(|&i| self.assigned[i].is_none()).min_by_key(|&i| (self.candidates[i].len(), i));
        let Some(v) = next else { return Ok(true) };
        for c in self.candidates[v].clone() {
            self.assigned[v] = Some(c);
            let saved = self.candidates.clone();
            if self.propagate(v)? && self.run()? {
                return Ok(true);
            }
            self.candidates = saved;
            self.assigned[v] = None;
        }
        Ok(false)
    }

    /// Forward checking after assigning `v`.
    fn propagate(&mut self, v: usize) -> Result<bool, EvalError> {
        let mut pending: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &k in &self.by_var[v] {
            let open: Vec<usize> =
                self.constraints[k].1.iter().copied().filter(|&u| self.assigned[u].is_none()).collect();
            match open[..] {
                [] => {
                    if !self.check(k)? {
                        return Ok(false);
                    }
                }
                [u] => pending.entry(u).or_default().push(k),
                _ => {}
            }
        }
        for (u, cs) in pending {
            if !self.filter(u, &cs)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
