//! Path conditions by forward symbolic execution, solving them over
//! finitized domains, and counting satisfying inputs of a switch.

mod solver;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

pub use solver::{Backtracking, Problem, Solver};

use crate::sts::{EvalError, Location, Signature, Sts, StsTerm, StsVar, Term, VarIdx};
use crate::value::{attr_path, Decimal, Domain, SamplingPlan, Value, ValueError};

/// Variable of a path condition: the initial value of a location variable,
/// or the value a parameter takes at one step of the path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathVar {
    Ini(VarIdx),
    Step { step: usize, var: VarIdx },
}

impl fmt::Display for PathVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathVar::Ini(v) => write!(f, "v{}@ini", v.0),
            PathVar::Step { step, var } => write!(f, "p{}@{step}", var.0),
        }
    }
}

pub type PathTerm = Term<PathVar>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolicError {
    #[error("switch {0} does not exist")]
    UnknownSwitch(usize),
    #[error("step {step}: switch {switch} does not start where the path is")]
    Disconnected { step: usize, switch: usize },
    #[error(transparent)]
    Domain(#[from] ValueError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("no fixed value for location variable \"{0}\"")]
    Uncovered(String),
    #[error("switch {0} is an output switch")]
    NotInput(usize),
}

/// Symbolic state after a sequence of switches.
#[derive(Debug, Clone)]
pub struct SymbolicPath {
    pub switches: Vec<usize>,
    /// Guard of each step with variables replaced by their symbolic values.
    pub guards: Vec<PathTerm>,
    /// Symbolic value of every location variable after the last step.
    pub state: Vec<PathTerm>,
    pub location: Location,
}

impl SymbolicPath {
    pub fn start(sts: &Sts) -> Self {
        let n = sts.signature.vars.len();
        SymbolicPath {
            switches: Vec::new(),
            guards: Vec::new(),
            state: (0..n).map(|i| Term::Var(PathVar::Ini(VarIdx(i)))).collect(),
            location: sts.initial.clone(),
        }
    }

    /// Appends switch `k`: its guard is instantiated against the current
    /// state, then its assignment updates the state. Unassigned location
    /// variables keep their value.
    pub fn push(&mut self, sts: &Sts, k: usize) -> Result<(), SymbolicError> {
        let sw = sts.switches.get(k).ok_or(SymbolicError::UnknownSwitch(k))?;
        let step = self.switches.len();
        if sw.source != self.location {
            return Err(SymbolicError::Disconnected { step, switch: k });
        }
        let state = &self.state;
        let subst = |t: &StsTerm| {
            t.map_vars(&mut |v| match v {
                StsVar::Loc(i) => state[i.0].clone(),
                StsVar::Param(i) => Term::Var(PathVar::Step { step, var: *i }),
            })
        };
        let guard = subst(&sw.guard);
        let updates: Vec<(VarIdx, PathTerm)> = sw.assignment.iter().map(|(v, t)| (*v, subst(t))).collect();
        for (v, t) in updates {
            self.state[v.0] = t;
        }
        self.guards.push(guard);
        self.switches.push(k);
        self.location = sw.target.clone();
        Ok(())
    }

    pub fn condition(&self) -> PathTerm {
        Term::conjunction(self.guards.iter().cloned())
    }
}

/// Path condition of a switch sequence starting at the initial location.
pub fn path_condition(sts: &Sts, path: &[usize]) -> Result<SymbolicPath, SymbolicError> {
    let mut sp = SymbolicPath::start(sts);
    for &k in path {
        sp.push(sts, k)?;
    }
    Ok(sp)
}

/// Enumerated domains of every declared variable, computed on first use.
pub struct Domains {
    signature: Arc<Signature>,
    plan: SamplingPlan,
    cache: Vec<OnceLock<Result<Arc<Vec<Value>>, ValueError>>>,
}

impl Domains {
    pub fn new(signature: Arc<Signature>, plan: SamplingPlan) -> Self {
        let cache = (0..signature.vars.len()).map(|_| OnceLock::new()).collect();
        Domains { signature, plan, cache }
    }

    pub fn plan(&self) -> &SamplingPlan {
        &self.plan
    }

    pub fn values(&self, v: VarIdx) -> Result<Arc<Vec<Value>>, ValueError> {
        self.cache[v.0]
            .get_or_init(|| {
                let b = self.signature.binding(v);
                b.domain.enumerate(&self.plan, &b.id).map(Arc::new)
            })
            .clone()
    }
}

/// Concrete values for a path: an initial valuation of every location
/// variable and the parameter values of each step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub ini: BTreeMap<VarIdx, Value>,
    pub values: Vec<Vec<Value>>,
}

/// Solves a path condition. Variables the condition leaves free take the
/// first value of their domain.
pub fn solve(
    sts: &Sts,
    sp: &SymbolicPath,
    domains: &Domains,
    solver: &dyn Solver,
) -> Result<Option<Witness>, SymbolicError> {
    let mut problem = Problem { constraints: sp.guards.clone(), domains: BTreeMap::new() };
    let mut free = BTreeSet::new();
    for g in &sp.guards {
        free.extend(g.free_vars());
    }
    for pv in free {
        let (PathVar::Ini(v) | PathVar::Step { var: v, .. }) = pv;
        problem.domains.insert(pv, domains.values(v)?);
    }
    let Some(found) = solver.solve(&problem)? else { return Ok(None) };
    let pick = |pv: PathVar, v: VarIdx| -> Result<Value, SymbolicError> {
        match found.get(&pv) {
            Some(x) => Ok(x.clone()),
            None => domains
                .values(v)?
                .first()
                .cloned()
                .ok_or_else(|| SymbolicError::Domain(ValueError::EmptySet(sts.signature.binding(v).id.clone()))),
        }
    };
    let ini = (0..sts.signature.vars.len())
        .map(|i| Ok((VarIdx(i), pick(PathVar::Ini(VarIdx(i)), VarIdx(i))?)))
        .collect::<Result<BTreeMap<_, _>, SymbolicError>>()?;
    let mut values = Vec::new();
    for (step, &k) in sp.switches.iter().enumerate() {
        let params = &sts.switches[k].params;
        values.push(params.iter().map(|&v| pick(PathVar::Step { step, var: v }, v)).collect::<Result<_, _>>()?);
    }
    Ok(Some(Witness { ini, values }))
}

/// Executes a path concretely: evaluates each guard with the current
/// valuation and the step's parameter values, then applies the assignment.
/// Returns the index of the first step whose guard is false.
pub fn replay(sts: &Sts, path: &[usize], w: &Witness) -> Result<Option<usize>, SymbolicError> {
    let mut state: Vec<Option<Value>> = (0..sts.signature.vars.len()).map(|i| w.ini.get(&VarIdx(i)).cloned()).collect();
    let mut at = sts.initial.clone();
    for (step, &k) in path.iter().enumerate() {
        let sw = sts.switches.get(k).ok_or(SymbolicError::UnknownSwitch(k))?;
        if sw.source != at {
            return Err(SymbolicError::Disconnected { step, switch: k });
        }
        let params: BTreeMap<VarIdx, &Value> =
            sw.params.iter().copied().zip(w.values.get(step).into_iter().flatten()).collect();
        let new_state = {
            let env = |v: &StsVar| match v {
                StsVar::Loc(i) => state[i.0].as_ref(),
                StsVar::Param(i) => params.get(i).copied(),
            };
            if !sw.guard.holds(&env)? {
                return Ok(Some(step));
            }
            let mut next = state.clone();
            for (v, t) in &sw.assignment {
                next[v.0] = Some(t.evaluate(&env)?);
            }
            next
        };
        state = new_state;
        at = sw.target.clone();
    }
    Ok(None)
}

/// Number of parameter tuples of input switch `k` that satisfy its guard with
/// location variables bound by `fixed`.
pub fn count_satisfying_inputs(
    sts: &Sts,
    k: usize,
    fixed: &BTreeMap<VarIdx, Value>,
    domains: &Domains,
) -> Result<u128, SymbolicError> {
    let sw = sts.switches.get(k).ok_or(SymbolicError::UnknownSwitch(k))?;
    if sts.direction(sw) != crate::sts::Direction::Input {
        return Err(SymbolicError::NotInput(k));
    }
    for v in sw.guard.free_vars() {
        if let StsVar::Loc(i) = v {
            if !fixed.contains_key(&i) {
                return Err(SymbolicError::Uncovered(sts.signature.binding(i).id.clone()));
            }
        }
    }
    let lists = sw.params.iter().map(|&p| domains.values(p)).collect::<Result<Vec<_>, _>>()?;
    let mut count = 0u128;
    let mut idx = vec![0usize; lists.len()];
    if lists.iter().any(|l| l.is_empty()) {
        return Ok(0);
    }
    loop {
        let env = |v: &StsVar| match v {
            StsVar::Loc(i) => fixed.get(i),
            StsVar::Param(i) => sw.params.iter().position(|p| p == i).map(|j| &lists[j][idx[j]]),
        };
        if sw.guard.holds(&env)? {
            count += 1;
        }
        // odometer over the parameter tuple, last parameter fastest
        let mut j = lists.len();
        loop {
            if j == 0 {
                return Ok(count);
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < lists[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// Sampling plan with boundary samples for every decimal interval declared
/// in `sig`, using the decimal constants the switches compare against it.
pub fn default_plan<'a>(sig: &Signature, switches: impl IntoIterator<Item = &'a StsTerm>) -> SamplingPlan {
    let mut constants: BTreeMap<String, Vec<Decimal>> = BTreeMap::new();
    for t in switches {
        collect_constants(sig, t, &mut Vec::new(), &mut constants);
    }
    let mut plan = SamplingPlan::new();
    for b in &sig.vars {
        let mut intervals = Vec::new();
        b.domain.decimal_intervals(&b.id, &mut intervals);
        for (path, dom) in intervals {
            let cs = constants.get(&path).map(Vec::as_slice).unwrap_or(&[]);
            plan.set(path, SamplingPlan::boundary_samples(dom, cs, Decimal::EPSILON));
        }
    }
    plan
}

fn term_path(sig: &Signature, t: &StsTerm, elems: &[String]) -> Option<String> {
    match t {
        Term::Var(StsVar::Loc(v) | StsVar::Param(v)) => Some(sig.binding(*v).id.clone()),
        Term::Attr(b, k) => term_path(sig, b, elems).map(|p| attr_path(&p, k)),
        Term::Elem(d) => elems.len().checked_sub(*d as usize + 1).and_then(|i| elems.get(i)).cloned(),
        _ => None,
    }
}

fn collect_constants(sig: &Signature, t: &StsTerm, elems: &mut Vec<String>, out: &mut BTreeMap<String, Vec<Decimal>>) {
    match t {
        Term::Cmp(_, a, b) => {
            for (x, y) in [(a, b), (b, a)] {
                if let (Some(p), Term::Const(Value::Dec(d))) = (term_path(sig, x, elems), &**y) {
                    out.entry(p).or_default().push(*d);
                }
            }
        }
        Term::InRange(a, Domain::DecInterval { lo, hi, .. }) => {
            if let Some(p) = term_path(sig, a, elems) {
                out.entry(p).or_default().extend([*lo, *hi]);
            }
        }
        Term::InRange(a, Domain::Set { values, .. }) => {
            if let Some(p) = term_path(sig, a, elems) {
                let ds = values.iter().filter_map(|v| if let Value::Dec(d) = v { Some(*d) } else { None });
                out.entry(p).or_default().extend(ds);
            }
        }
        Term::And(a, b) | Term::Or(a, b) => {
            collect_constants(sig, a, elems, out);
            collect_constants(sig, b, elems, out);
        }
        Term::CountWhere { array, pred, .. } => {
            let p = term_path(sig, array, elems).unwrap_or_default();
            elems.push(p);
            collect_constants(sig, pred, elems, out);
            elems.pop();
        }
        _ => {}
    }
}
