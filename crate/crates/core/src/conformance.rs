//! Execution of rendered test cases against a system under test, with an
//! in-process reference implementation of the case-study controller.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use thiserror::Error;

use crate::parser::ast::TestStep;
use crate::parser::{parse_testcase, print_step, ParseError};
use crate::sts::{Direction, GateIdx, Signature, StsVar, VarIdx};
use crate::translate::{resolve_given, Position, SuiteContext, TranslateError};
use crate::value::{Decimal, Value};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdapterError {
    #[error("no output within {0:?}")]
    Timeout(Duration),
    #[error("unknown gate \"{0}\"")]
    UnknownGate(String),
    #[error("{0}")]
    Transport(String),
}

/// Binding of a system under test. Gates are named as in the model
/// signature (`i1`, `o1`, ...).
pub trait SutAdapter {
    /// Returns the system to its initial state, here given explicitly as the
    /// test's initial valuation keyed by variable identifier.
    fn reset(&mut self, initial: &BTreeMap<String, Value>) -> Result<(), AdapterError>;
    fn apply_input(&mut self, gate: &str, values: &[Value]) -> Result<(), AdapterError>;
    fn await_output(&mut self, timeout: Duration) -> Result<(String, Vec<Value>), AdapterError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailReason {
    GuardViolated { guard: String, observed: Vec<Value> },
    WrongGate { expected: String, found: String },
    Timeout(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// The first failing step, counted from 0 over When and Then steps.
    Fail {
        step: usize,
        reason: FailReason,
    },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        *self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Fail { step, reason } => {
                write!(f, "fail at step {step}: ")?;
                match reason {
                    FailReason::GuardViolated { guard, observed } => {
                        let vals: Vec<String> = observed.iter().map(Value::to_string).collect();
                        write!(f, "observed [{}] violates \"{guard}\"", vals.join(", "))
                    }
                    FailReason::WrongGate { expected, found } => write!(f, "expected gate {expected}, got {found}"),
                    FailReason::Timeout(msg) => write!(f, "{msg}"),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConformanceError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error("step {step}: {reason}")]
    Step { step: usize, reason: String },
    #[error("no initial value for \"{0}\"")]
    MissingInitial(String),
    #[error("reset failed: {0}")]
    Reset(AdapterError),
}

/// Verdict of one run and the stored state when it ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub verdict: Verdict,
    pub state: BTreeMap<VarIdx, Value>,
}

fn gate_for(sig: &Signature, direction: Direction, action: &str) -> Option<GateIdx> {
    sig.gates.iter().position(|g| g.direction == direction && g.action.as_deref() == Some(action)).map(GateIdx)
}

/// Runs a test case written in Pickles syntax. Inputs update the stored
/// state with their values; each output is checked against the Then guard
/// with observed values bound to parameters and the stored state to
/// location variables, and then stored as well.
pub fn run_test(
    text: &str,
    adapter: &mut dyn SutAdapter,
    ctx: &SuiteContext,
    timeout: Duration,
) -> Result<Run, ConformanceError> {
    let tc = parse_testcase(text)?;
    let sig = &ctx.signature;
    let mut state = resolve_given(ctx, &tc.given)?;
    if let Some(b) = sig.vars.iter().find(|b| sig.var(&b.id).is_some_and(|v| !state.contains_key(&v))) {
        return Err(ConformanceError::MissingInitial(b.id.clone()));
    }
    let initial = state.iter().map(|(v, x)| (sig.binding(*v).id.clone(), x.clone())).collect();
    adapter.reset(&initial).map_err(ConformanceError::Reset)?;
    for (j, step) in tc.steps.iter().enumerate() {
        let bad = |reason: String| ConformanceError::Step { step: j, reason };
        match step {
            TestStep::Input { action, params, values } => {
                let g =
                    gate_for(sig, Direction::Input, action).ok_or_else(|| bad(format!("unknown input '{action}'")))?;
                let gate = sig.gate(g);
                let ids: Vec<&str> = gate.params.iter().map(|p| sig.binding(*p).id.as_str()).collect();
                if params.iter().map(String::as_str).ne(ids.iter().copied()) {
                    return Err(bad(format!("parameters {params:?} do not match the gate's {ids:?}")));
                }
                let mut vals = Vec::new();
                for (p, id) in gate.params.iter().zip(&ids) {
                    let def =
                        values.iter().find(|d| d.id == *id).ok_or_else(|| bad(format!("no value for \"{id}\"")))?;
                    let v = ctx.resolve_value(id, &def.value)?;
                    state.insert(*p, v.clone());
                    vals.push(v);
                }
                if let Err(e) = adapter.apply_input(&gate.name, &vals) {
                    return Ok(Run {
                        verdict: Verdict::Fail { step: j, reason: FailReason::Timeout(e.to_string()) },
                        state,
                    });
                }
            }
            TestStep::Output(s) => {
                let g = gate_for(sig, Direction::Output, &s.action)
                    .ok_or_else(|| bad(format!("unknown output '{}'", s.action)))?;
                let gate = sig.gate(g);
                let guard = match &s.guard {
                    Some(gb) => Some(ctx.map_guard_block(gb, Position::Step(&gate.params)).map_err(&bad)?),
                    None => None,
                };
                let fail = |reason| Run { verdict: Verdict::Fail { step: j, reason }, state: state.clone() };
                let (name, observed) = match adapter.await_output(timeout) {
                    Ok(o) => o,
                    Err(e) => return Ok(fail(FailReason::Timeout(e.to_string()))),
                };
                if name != gate.name {
                    return Ok(fail(FailReason::WrongGate { expected: gate.name.clone(), found: name }));
                }
                let violated = || FailReason::GuardViolated { guard: print_step(s), observed: observed.clone() };
                if observed.len() != gate.params.len()
                    || gate.params.iter().zip(&observed).any(|(p, x)| !sig.binding(*p).domain.contains(x))
                {
                    return Ok(fail(violated()));
                }
                if let Some(guard) = guard {
                    let params: BTreeMap<VarIdx, &Value> = gate.params.iter().copied().zip(&observed).collect();
                    let env = |v: &StsVar| match v {
                        StsVar::Param(i) => params.get(i).copied(),
                        StsVar::Loc(i) => state.get(i),
                    };
                    if !guard.holds(&env).unwrap_or(false) {
                        return Ok(fail(violated()));
                    }
                }
                for (p, x) in gate.params.iter().zip(observed) {
                    state.insert(*p, x);
                }
            }
        }
    }
    Ok(Run { verdict: Verdict::Pass, state })
}

/// Output rule a [`ReferenceSut`] may get wrong on purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mutant {
    /// No detector inside the critical section reports PART AV.
    NoneInsidePartial,
    /// One detector inside reports AV.
    OneInsideAvailable,
    /// Two or more inside report AV.
    ManyInsideAvailable,
    /// Losing controller access keeps the system enabled.
    AccessLostStaysEnabled,
}

impl Mutant {
    pub const ALL: [Mutant; 4] = [
        Mutant::NoneInsidePartial,
        Mutant::OneInsideAvailable,
        Mutant::ManyInsideAvailable,
        Mutant::AccessLostStaysEnabled,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("the signature lacks {0}")]
pub struct SignatureMismatch(String);

#[derive(Debug, Clone)]
struct Gates {
    detect: String,
    lost: String,
    show_availability: String,
    show_enabledness: String,
}

/// The case-study controller: detector reports set the availability from
/// the number of faulty detectors strictly inside the critical section
/// (none: AV, one: PART AV, more: NOT AV); losing controller access
/// disables the system.
#[derive(Debug, Clone)]
pub struct ReferenceSut {
    gates: Gates,
    mutant: Option<Mutant>,
    availability: String,
    enabled: bool,
    lane: i64,
    start: Decimal,
    end: Decimal,
    pending: Option<(String, Vec<Value>)>,
}

impl ReferenceSut {
    /// Binds the controller to the gates of a case-study signature.
    pub fn new(sig: &Signature) -> Result<Self, SignatureMismatch> {
        let find = |dir: Direction, param: Option<&str>| {
            sig.gates
                .iter()
                .find(|g| {
                    g.direction == dir
                        && match param {
                            Some(id) => g.params.len() == 1 && sig.binding(g.params[0]).id == id,
                            None => g.params.is_empty(),
                        }
                })
                .map(|g| g.name.clone())
                .ok_or_else(|| SignatureMismatch(format!("an {dir} gate over {param:?}")))
        };
        for id in
            ["availability", "enabledness", "critical section lane", "critical section start", "critical section end"]
        {
            sig.var(id).ok_or_else(|| SignatureMismatch(format!("variable \"{id}\"")))?;
        }
        Ok(ReferenceSut {
            gates: Gates {
                detect: find(Direction::Input, Some("faulty detectors"))?,
                lost: find(Direction::Input, None)?,
                show_availability: find(Direction::Output, Some("availability"))?,
                show_enabledness: find(Direction::Output, Some("enabledness"))?,
            },
            mutant: None,
            availability: "AV".into(),
            enabled: true,
            lane: 1,
            start: Decimal::from_units(0),
            end: Decimal::from_units(0),
            pending: None,
        })
    }

    pub fn mutated(mut self, m: Mutant) -> Self {
        self.mutant = Some(m);
        self
    }

    fn inside(&self, detectors: &[Value]) -> usize {
        detectors
            .iter()
            .filter(|d| {
                let Value::Struct(attrs) = d else { return false };
                let get = |k: &str| attrs.iter().find(|(key, _)| key == k).map(|(_, v)| v);
                matches!(
                    (get("lane"), get("length position")),
                    (Some(Value::Int(l)), Some(Value::Dec(p))) if *l == self.lane && self.start < *p && *p < self.end
                )
            })
            .count()
    }
}

impl SutAdapter for ReferenceSut {
    fn reset(&mut self, initial: &BTreeMap<String, Value>) -> Result<(), AdapterError> {
        let get = |id: &str| initial.get(id).ok_or_else(|| AdapterError::Transport(format!("no initial \"{id}\"")));
        let bad = |id: &str| AdapterError::Transport(format!("ill-typed initial \"{id}\""));
        self.availability = match get("availability")? {
            Value::Str(s) => s.clone(),
            _ => return Err(bad("availability")),
        };
        self.enabled = match get("enabledness")? {
            Value::Bool(b) => *b,
            _ => return Err(bad("enabledness")),
        };
        self.lane = match get("critical section lane")? {
            Value::Int(i) => *i,
            _ => return Err(bad("critical section lane")),
        };
        let dec = |id: &str| match get(id)? {
            Value::Dec(d) => Ok(*d),
            _ => Err(bad(id)),
        };
        self.start = dec("critical section start")?;
        self.end = dec("critical section end")?;
        self.pending = None;
        Ok(())
    }

    fn apply_input(&mut self, gate: &str, values: &[Value]) -> Result<(), AdapterError> {
        if gate == self.gates.detect {
            let [Value::Array(detectors)] = values else {
                return Err(AdapterError::Transport("detector report must be one array".into()));
            };
            let status = match (self.inside(detectors), self.mutant) {
                (0, Some(Mutant::NoneInsidePartial)) => "PART AV",
                (0, _) => "AV",
                (1, Some(Mutant::OneInsideAvailable)) => "AV",
                (1, _) => "PART AV",
                (_, Some(Mutant::ManyInsideAvailable)) => "AV",
                _ => "NOT AV",
            };
            self.availability = status.into();
            self.pending = Some((self.gates.show_availability.clone(), vec![Value::Str(self.availability.clone())]));
        } else if gate == self.gates.lost {
            self.enabled = self.mutant == Some(Mutant::AccessLostStaysEnabled);
            self.pending = Some((self.gates.show_enabledness.clone(), vec![Value::Bool(self.enabled)]));
        } else {
            return Err(AdapterError::UnknownGate(gate.to_string()));
        }
        Ok(())
    }

    fn await_output(&mut self, timeout: Duration) -> Result<(String, Vec<Value>), AdapterError> {
        self.pending.take().ok_or(AdapterError::Timeout(timeout))
    }
}
