//! Symbolic transition systems: locations, shared variables and gates,
//! and switches carrying guards and assignments.

mod normal;
mod term;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

pub use normal::{negate, normalize};
pub use term::{type_of_term, CmpOp, CountCmp, EvalError, Term, TermDisplay};

use crate::value::{Domain, Type};

/// Index of a declared variable in [`Signature::vars`]. The same index names
/// both the location variable and the gate parameter of that declaration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarIdx(pub usize);

/// Index of a gate in [`Signature::gates`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GateIdx(pub usize);

/// Variable as it occurs in switch guards and assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StsVar {
    Loc(VarIdx),
    Param(VarIdx),
}

pub type StsTerm = Term<StsVar>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarBinding {
    pub id: String,
    pub ty: Type,
    pub domain: Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Input,
    Output,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Input => "input",
            Direction::Output => "output",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    /// Short symbolic name such as `i1` or `o2`.
    pub name: String,
    pub direction: Direction,
    /// Action text of the step the gate was created from.
    pub action: Option<String>,
    /// Interaction: the ordered parameter list every switch on this gate uses.
    pub params: Vec<VarIdx>,
}

/// Everything the STSs of one suite share: variables, gates and scenario titles.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    pub vars: Vec<VarBinding>,
    pub gates: Vec<Gate>,
    pub scenarios: Vec<String>,
}

impl Signature {
    pub fn var(&self, id: &str) -> Option<VarIdx> {
        self.vars.iter().position(|b| b.id == id).map(VarIdx)
    }

    pub fn binding(&self, v: VarIdx) -> &VarBinding {
        &self.vars[v.0]
    }

    pub fn gate(&self, g: GateIdx) -> &Gate {
        &self.gates[g.0]
    }

    pub fn gate_by_name(&self, name: &str) -> Option<GateIdx> {
        self.gates.iter().position(|g| g.name == name).map(GateIdx)
    }

    pub fn var_type(&self, v: &StsVar) -> Option<Type> {
        let (StsVar::Loc(i) | StsVar::Param(i)) = v;
        self.vars.get(i.0).map(|b| b.ty.clone())
    }

    /// Human-readable variable name: `v_<id>` for location variables,
    /// `p_<id>` for parameters.
    pub fn var_name(&self, v: &StsVar) -> String {
        match v {
            StsVar::Loc(i) => format!("v[{}]", self.vars[i.0].id),
            StsVar::Param(i) => format!("p[{}]", self.vars[i.0].id),
        }
    }

    pub fn show<'a>(&'a self, t: &'a StsTerm) -> impl fmt::Display + 'a {
        TermDisplay { term: t, name: move |v: &StsVar| self.var_name(v) }
    }
}

/// Opaque location identifier with a human-readable label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location(pub String);

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Location {
    fn from(s: &str) -> Self {
        Location(s.to_string())
    }
}

/// Where a switch came from in the specification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Origin {
    /// Index into [`Signature::scenarios`].
    pub scenario: usize,
    /// Zero-based step index within the scenario.
    pub step: usize,
    /// Canonical text of the step (action, parameters and guard block).
    pub text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Switch {
    pub source: Location,
    pub gate: GateIdx,
    pub params: Vec<VarIdx>,
    pub guard: StsTerm,
    /// Updated location variables; every other variable keeps its value.
    pub assignment: Vec<(VarIdx, StsTerm)>,
    pub target: Location,
    pub origin: Option<Origin>,
}

impl Switch {
    /// True when this switch starts a scenario.
    pub fn starts_scenario(&self) -> bool {
        self.origin.as_ref().is_some_and(|o| o.step == 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sts {
    pub signature: Arc<Signature>,
    pub locations: Vec<Location>,
    pub initial: Location,
    pub switches: Vec<Switch>,
}

/// Broken structural invariant of an [`Sts`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    InitialNotLocation(Location),
    DuplicateLocation(Location),
    UnknownLocation { switch: usize, location: Location },
    UnknownGate { switch: usize },
    UnknownVariable { switch: usize },
    GateOverlap(String),
    DuplicateGateParams(String),
    InteractionInconsistency { switch: usize, gate: String },
    ParameterScope { switch: usize, param: String },
    UnboundElement { switch: usize },
    IllTyped { switch: usize, reason: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InitialNotLocation(l) => write!(f, "initial location {l} is not a location"),
            Violation::DuplicateLocation(l) => write!(f, "location {l} listed twice"),
            Violation::UnknownLocation { switch, location } => {
                write!(f, "switch {switch} uses unknown location {location}")
            }
            Violation::UnknownGate { switch } => write!(f, "switch {switch} uses an unknown gate"),
            Violation::UnknownVariable { switch } => {
                write!(f, "switch {switch} uses an unknown variable")
            }
            Violation::GateOverlap(g) => write!(f, "gate {g} is both an input and an output"),
            Violation::DuplicateGateParams(g) => write!(f, "gate {g} repeats a parameter"),
            Violation::InteractionInconsistency { switch, gate } => {
                write!(f, "interaction inconsistency: switch {switch} disagrees with gate {gate}")
            }
            Violation::ParameterScope { switch, param } => {
                write!(f, "parameter scope: switch {switch} uses foreign parameter {param}")
            }
            Violation::UnboundElement { switch } => {
                write!(f, "switch {switch} references an element outside an element predicate")
            }
            Violation::IllTyped { switch, reason } => write!(f, "switch {switch} is ill-typed: {reason}"),
        }
    }
}

impl Sts {
    pub fn direction(&self, sw: &Switch) -> Direction {
        self.signature.gate(sw.gate).direction
    }

    /// Locations without outgoing switches, in location order.
    pub fn sink_locations(&self) -> Vec<Location> {
        let sources: BTreeSet<&Location> = self.switches.iter().map(|s| &s.source).collect();
        self.locations.iter().filter(|l| !sources.contains(l)).cloned().collect()
    }

    /// Indices of the switches leaving `loc`, in switch order.
    pub fn outgoing(&self, loc: &Location) -> Vec<usize> {
        (0..self.switches.len()).filter(|&i| self.switches[i].source == *loc).collect()
    }

    /// Outgoing switch indices for every location.
    pub fn adjacency(&self) -> BTreeMap<&Location, Vec<usize>> {
        let mut adj: BTreeMap<&Location, Vec<usize>> = BTreeMap::new();
        for (i, s) in self.switches.iter().enumerate() {
            adj.entry(&s.source).or_default().push(i);
        }
        adj
    }

    pub fn initial_switches(&self) -> Vec<usize> {
        self.outgoing(&self.initial)
    }

    /// Checks the structural invariants and lists every violation found.
    pub fn validate(&self) -> Vec<Violation> {
        let sig = &self.signature;
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for l in &self.locations {
            if !seen.insert(l) {
                out.push(Violation::DuplicateLocation(l.clone()));
            }
        }
        if !seen.contains(&self.initial) {
            out.push(Violation::InitialNotLocation(self.initial.clone()));
        }
        let mut names: BTreeMap<&str, Direction> = BTreeMap::new();
        for g in &sig.gates {
            if names.insert(&g.name, g.direction).is_some_and(|d| d != g.direction) {
                out.push(Violation::GateOverlap(g.name.clone()));
            }
            let distinct: BTreeSet<_> = g.params.iter().collect();
            if distinct.len() != g.params.len() {
                out.push(Violation::DuplicateGateParams(g.name.clone()));
            }
        }
        for (i, sw) in self.switches.iter().enumerate() {
            for loc in [&sw.source, &sw.target] {
                if !seen.contains(loc) {
                    out.push(Violation::UnknownLocation { switch: i, location: loc.clone() });
                }
            }
            let Some(gate) = sig.gates.get(sw.gate.0) else {
                out.push(Violation::UnknownGate { switch: i });
                continue;
            };
            if gate.params != sw.params {
                out.push(Violation::InteractionInconsistency { switch: i, gate: gate.name.clone() });
            }
            let mut vars = BTreeSet::new();
            sw.guard.for_each_var(&mut |v| {
                vars.insert(*v);
            });
            for (v, t) in &sw.assignment {
                vars.insert(StsVar::Loc(*v));
                t.for_each_var(&mut |v| {
                    vars.insert(*v);
                });
            }
            if vars.iter().any(|v| matches!(v, StsVar::Loc(x) | StsVar::Param(x) if x.0 >= sig.vars.len())) {
                out.push(Violation::UnknownVariable { switch: i });
                continue;
            }
            for v in &vars {
                if let StsVar::Param(p) = v {
                    if !sw.params.contains(p) {
                        out.push(Violation::ParameterScope { switch: i, param: sig.vars[p.0].id.clone() });
                    }
                }
            }
            let terms = std::iter::once(&sw.guard).chain(sw.assignment.iter().map(|(_, t)| t));
            if terms.clone().any(|t| !t.elements_bound()) {
                out.push(Violation::UnboundElement { switch: i });
                continue;
            }
            let var_type = |v: &StsVar| sig.var_type(v);
            match type_of_term(&sw.guard, &var_type) {
                Ok(Type::Boolean) => {}
                Ok(other) => out.push(Violation::IllTyped { switch: i, reason: format!("guard has type {other}") }),
                Err(reason) => out.push(Violation::IllTyped { switch: i, reason }),
            }
            for (v, t) in &sw.assignment {
                match type_of_term(t, &var_type) {
                    Ok(ty) if ty == sig.vars[v.0].ty => {}
                    Ok(ty) => out.push(Violation::IllTyped {
                        switch: i,
                        reason: format!("assigns {ty} to {}", sig.vars[v.0].id),
                    }),
                    Err(reason) => out.push(Violation::IllTyped { switch: i, reason }),
                }
            }
        }
        out
    }

    /// Renames every location with `f`.
    pub fn rename_locations(&self, f: impl Fn(&Location) -> Location) -> Sts {
        Sts {
            signature: self.signature.clone(),
            locations: self.locations.iter().map(&f).collect(),
            initial: f(&self.initial),
            switches: self
                .switches
                .iter()
                .map(|s| Switch { source: f(&s.source), target: f(&s.target), ..s.clone() })
                .collect(),
        }
    }

    /// Relabels locations `l0, l1, ...` in breadth-first order from the
    /// initial location; unreachable locations follow in their current order.
    pub fn relabel(&self) -> Sts {
        let adj = self.adjacency();
        let mut order: Vec<&Location> = vec![&self.initial];
        let mut seen: BTreeSet<&Location> = BTreeSet::from([&self.initial]);
        let mut head = 0;
        while head < order.len() {
            let l = order[head];
            head += 1;
            for &i in adj.get(l).map(Vec::as_slice).unwrap_or(&[]) {
                let t = &self.switches[i].target;
                if seen.insert(t) {
                    order.push(t);
                }
            }
        }
        for l in &self.locations {
            if seen.insert(l) {
                order.push(l);
            }
        }
        let names: BTreeMap<&Location, Location> =
            order.iter().enumerate().map(|(k, l)| (*l, Location(format!("l{k}")))).collect();
        let mut out = self.rename_locations(|l| names[l].clone());
        out.locations = (0..order.len()).map(|k| Location(format!("l{k}"))).collect();
        out
    }
}
