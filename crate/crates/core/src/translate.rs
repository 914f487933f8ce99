//! Semantic mapping from a parsed specification suite to one STS per
//! scenario, sharing a signature of variables and gates.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::parser::ast::*;
use crate::parser::print_step;
use crate::sts::{
    type_of_term, CmpOp, CountCmp, Direction, Gate, GateIdx, Location, Origin, Signature, Sts, StsTerm, StsVar, Switch,
    Term, VarBinding, VarIdx,
};
use crate::value::{Decimal, Domain, Type, Value, ValueError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("variable \"{0}\" declared twice")]
    DuplicateVariable(String),
    #[error("\"{0}\" names both a variable and a struct attribute")]
    NameCollision(String),
    #[error("variable \"{var}\": {reason}")]
    InvalidDeclaration { var: String, reason: String },
    #[error("unknown variable \"{0}\"")]
    UnknownVariable(String),
    #[error("{ty} has no attribute \"{attr}\"")]
    UnknownAttribute { ty: String, attr: String },
    #[error("scenario '{scenario}': {reason}")]
    Guard { scenario: String, reason: String },
    #[error("action '{action}' is used with parameters {first:?} and {second:?}")]
    InteractionInconsistency { action: String, first: Vec<String>, second: Vec<String> },
    #[error("value for \"{var}\": {reason}")]
    BadValue { var: String, reason: String },
    #[error("translated scenario '{scenario}' is malformed: {reason}")]
    Malformed { scenario: String, reason: String },
}

type Result<T, E = TranslateError> = std::result::Result<T, E>;

/// Names recorded while translating a suite: variable bindings and gates
/// (held in the signature) and the struct attribute keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteContext {
    pub signature: Arc<Signature>,
    pub attr_keys: BTreeSet<String>,
}

#[derive(Debug, Clone)]
pub struct TranslationResult {
    /// Scenarios starting from the initial state, in suite order.
    pub primary: Vec<Sts>,
    pub secondary: Vec<Sts>,
    pub context: SuiteContext,
}

impl TranslationResult {
    pub fn all(&self) -> Vec<Sts> {
        let mut all: Vec<Sts> = self.primary.iter().chain(&self.secondary).cloned().collect();
        all.sort_by_key(|s| s.switches.first().and_then(|sw| sw.origin.as_ref()).map(|o| o.scenario));
        all
    }
}

/// Where a guard block occurs, which decides how variable references resolve.
#[derive(Debug, Clone, Copy)]
pub enum Position<'a> {
    Given,
    Step(&'a [VarIdx]),
}

pub fn build_context(ast: &SpecSuite) -> Result<SuiteContext> {
    let mut vars: Vec<VarBinding> = Vec::new();
    let mut attr_keys = BTreeSet::new();
    for decl in &ast.variables {
        if vars.iter().any(|b| b.id == decl.id) {
            return Err(TranslateError::DuplicateVariable(decl.id.clone()));
        }
        let domain = domain_of(&decl.ty, &mut attr_keys)
            .map_err(|reason| TranslateError::InvalidDeclaration { var: decl.id.clone(), reason })?;
        vars.push(VarBinding { id: decl.id.clone(), ty: domain.ty(), domain });
    }
    if let Some(v) = vars.iter().find(|b| attr_keys.contains(&b.id)) {
        return Err(TranslateError::NameCollision(v.id.clone()));
    }
    let mut sig = Signature { vars, gates: Vec::new(), scenarios: Vec::new() };
    for sc in &ast.scenarios {
        sig.scenarios.push(sc.title.clone());
        for step in sc.when.iter().chain(&sc.then) {
            let params = step
                .params
                .iter()
                .map(|p| sig.var(p).ok_or_else(|| TranslateError::UnknownVariable(p.clone())))
                .collect::<Result<Vec<_>>>()?;
            let direction = direction_of(step.kind);
            match sig.gates.iter().find(|g| g.direction == direction && g.action.as_deref() == Some(&step.action)) {
                Some(g) if g.params != params => {
                    return Err(TranslateError::InteractionInconsistency {
                        action: step.action.clone(),
                        first: g.params.iter().map(|v| sig.vars[v.0].id.clone()).collect(),
                        second: step.params.clone(),
                    })
                }
                Some(_) => {}
                None => {
                    let n = sig.gates.iter().filter(|g| g.direction == direction).count() + 1;
                    let prefix = if direction == Direction::Input { 'i' } else { 'o' };
                    sig.gates.push(Gate {
                        name: format!("{prefix}{n}"),
                        direction,
                        action: Some(step.action.clone()),
                        params,
                    });
                }
            }
        }
    }
    Ok(SuiteContext { signature: Arc::new(sig), attr_keys })
}

fn direction_of(kind: StepKind) -> Direction {
    match kind {
        StepKind::Input => Direction::Input,
        StepKind::Output => Direction::Output,
    }
}

fn prim_type(p: PrimType) -> Type {
    match p {
        PrimType::Boolean => Type::Boolean,
        PrimType::Integer => Type::Integer,
        PrimType::Decimal => Type::Decimal,
        PrimType::String => Type::String,
    }
}

fn domain_of(t: &TypeDesc, attr_keys: &mut BTreeSet<String>) -> Result<Domain, String> {
    let domain = match t {
        TypeDesc::Primitive { ty, range } => range_domain(&prim_type(*ty), range).map_err(|e| e.to_string())?,
        TypeDesc::Array { cardinality, element } => {
            let (min, max) = match *cardinality {
                Cardinality::AtMost(n) => (1, n),
                Cardinality::Exactly(n) => (n, n),
                Cardinality::Between(a, b) => (a, b),
            };
            Domain::Array { element: Box::new(domain_of(element, attr_keys)?), min, max }
        }
        TypeDesc::Struct { attrs, .. } => {
            let mut out = Vec::new();
            for (k, t) in attrs {
                attr_keys.insert(k.clone());
                out.push((k.clone(), domain_of(t, attr_keys)?));
            }
            Domain::Struct(out)
        }
    };
    domain.validate().map_err(|e| e.to_string())?;
    Ok(domain)
}

/// Domain denoted by a range written against a primitive type.
pub fn range_domain(ty: &Type, range: &RangeAst) -> Result<Domain, ValueError> {
    let incompatible = |text: &str| ValueError::BadLiteral { ty: ty.to_string(), text: text.to_string() };
    match range {
        RangeAst::Set(items) => {
            let mut values = Vec::new();
            for it in items {
                let v = ty.parse_literal(it)?;
                if !values.contains(&v) {
                    values.push(v);
                }
            }
            Ok(Domain::Set { ty: ty.clone(), values })
        }
        RangeAst::Interval { lo, lo_closed, hi, hi_closed } => match ty {
            Type::Integer => {
                let parse = |s: &str| s.trim().parse::<i64>().map_err(|_| incompatible(s));
                let lo = parse(lo)? + i64::from(!lo_closed);
                let hi = parse(hi)? - i64::from(!hi_closed);
                if lo > hi {
                    return Err(ValueError::EmptyInterval { lo: lo.to_string(), hi: hi.to_string() });
                }
                Ok(Domain::IntInterval { lo, hi })
            }
            Type::Decimal => Ok(Domain::DecInterval {
                lo: lo.parse::<Decimal>()?,
                lo_closed: *lo_closed,
                hi: hi.parse::<Decimal>()?,
                hi_closed: *hi_closed,
            }),
            _ => Err(incompatible(&format!("{lo}..{hi}"))),
        },
    }
}

impl SuiteContext {
    /// Context of an already built signature, e.g. one read from JSON.
    pub fn from_signature(signature: Arc<Signature>) -> Self {
        fn keys(d: &Domain, out: &mut BTreeSet<String>) {
            match d {
                Domain::Array { element, .. } => keys(element, out),
                Domain::Struct(attrs) => {
                    for (k, d) in attrs {
                        out.insert(k.clone());
                        keys(d, out);
                    }
                }
                _ => {}
            }
        }
        let mut attr_keys = BTreeSet::new();
        for b in &signature.vars {
            keys(&b.domain, &mut attr_keys);
        }
        SuiteContext { signature, attr_keys }
    }

    fn var(&self, id: &str) -> Result<VarIdx> {
        self.signature.var(id).ok_or_else(|| TranslateError::UnknownVariable(id.to_string()))
    }

    fn resolve(&self, r: &VarRef, pos: Position<'_>) -> Result<StsVar> {
        let v = self.var(&r.id)?;
        Ok(match pos {
            Position::Step(params) if !r.stored && params.contains(&v) => StsVar::Param(v),
            _ => StsVar::Loc(v),
        })
    }

    /// Maps a guard block to a boolean term. AND binds tighter than OR and
    /// both associate to the left.
    pub fn map_guard_block(&self, gb: &GuardBlock, pos: Position<'_>) -> Result<StsTerm, String> {
        let terms = gb
            .clauses
            .iter()
            .map(|c| {
                let v = self.resolve(&c.var, pos).map_err(|e| e.to_string())?;
                let ty = self.signature.var_type(&v).unwrap_or(Type::Boolean);
                self.guard(Term::Var(v), &ty, &c.guard, pos)
            })
            .collect::<Result<Vec<_>, String>>()?;
        let term = combine(terms, &gb.conjs);
        let sig = &self.signature;
        match type_of_term(&term, &|v| sig.var_type(v)) {
            Ok(Type::Boolean) => Ok(term),
            Ok(t) => Err(format!("guard has type {t}")),
            Err(e) => Err(e),
        }
    }

    fn guard(&self, subject: StsTerm, ty: &Type, g: &Guard, pos: Position<'_>) -> Result<StsTerm, String> {
        match g {
            Guard::Compare { op, rhs: Rhs::Range(r) } => {
                if *op != Op::Eq {
                    return Err(format!("a range can only be used with '{}'", Op::Eq.phrase()));
                }
                if !ty.is_primitive() {
                    return Err(format!("a {ty} cannot lie in a range"));
                }
                let dom = range_domain(ty, r).map_err(|e| e.to_string())?;
                dom.validate().map_err(|e| e.to_string())?;
                Ok(Term::InRange(Box::new(subject), dom))
            }
            Guard::Compare { op, rhs } => {
                let rhs = self.operand(rhs, ty, pos)?;
                Ok(Term::cmp(cmp_op(*op), subject, rhs))
            }
            Guard::Between { lo, hi } => {
                let lo = self.operand(lo, ty, pos)?;
                let hi = self.operand(hi, ty, pos)?;
                Ok(Term::and(Term::cmp(CmpOp::Ge, subject.clone(), lo), Term::cmp(CmpOp::Le, subject, hi)))
            }
            Guard::Array { quantifier, element } => {
                let Type::Array(elem_ty) = ty else {
                    return Err(format!("element quantifier applied to a {ty}"));
                };
                let pred = self.guard(Term::Elem(0), elem_ty, element, pos)?;
                let (cmp, count) = match *quantifier {
                    Quantifier::AtLeast(n) => (CountCmp::AtLeast, n),
                    Quantifier::AtMost(n) => (CountCmp::AtMost, n),
                    Quantifier::Exactly(n) => (CountCmp::Exactly, n),
                    Quantifier::All => (CountCmp::All, 0),
                };
                Ok(Term::CountWhere { array: Box::new(subject), pred: Box::new(pred), cmp, count })
            }
            Guard::Struct { attrs, conjs } => {
                let terms = attrs
                    .iter()
                    .map(|(key, g)| {
                        let aty = ty.attribute(key).ok_or_else(|| {
                            TranslateError::UnknownAttribute { ty: ty.to_string(), attr: key.clone() }.to_string()
                        })?;
                        self.guard(Term::attr(subject.clone(), key.clone()), aty, g, pos)
                    })
                    .collect::<Result<Vec<_>, String>>()?;
                Ok(combine(terms, conjs))
            }
        }
    }

    fn operand(&self, rhs: &Rhs, ty: &Type, pos: Position<'_>) -> Result<StsTerm, String> {
        match rhs {
            Rhs::Literal(text) => {
                if !ty.is_primitive() {
                    return Err(format!("literal '{text}' compared with a {ty}"));
                }
                ty.parse_literal(text).map(Term::Const).map_err(|e| e.to_string())
            }
            Rhs::Var(r) => Ok(Term::Var(self.resolve(r, pos).map_err(|e| e.to_string())?)),
            Rhs::Range(_) => Err("a range cannot be a comparison bound".into()),
        }
    }

    /// Resolves a written value against the declared type of `var`.
    pub fn resolve_value(&self, var: &str, v: &ValueAst) -> Result<Value> {
        let idx = self.var(var)?;
        let binding = self.signature.binding(idx);
        let value =
            value_of(v, &binding.ty).map_err(|reason| TranslateError::BadValue { var: var.to_string(), reason })?;
        if !binding.domain.contains(&value) {
            return Err(TranslateError::BadValue {
                var: var.to_string(),
                reason: format!("{value} lies outside the declared range"),
            });
        }
        Ok(value)
    }
}

fn value_of(v: &ValueAst, ty: &Type) -> Result<Value, String> {
    match (v, ty) {
        (ValueAst::Scalar(text), t) if t.is_primitive() => t.parse_literal(text).map_err(|e| e.to_string()),
        (ValueAst::Indexed(entries), Type::Array(elem)) => {
            let mut out = Vec::new();
            for (i, (n, e)) in entries.iter().enumerate() {
                if *n != i + 1 {
                    return Err(format!("array entries must be numbered 1, 2, ... (found {n})"));
                }
                out.push(value_of(e, elem)?);
            }
            Ok(Value::Array(out))
        }
        (ValueAst::Keyed(entries), Type::Struct(attrs)) => {
            if let Some((k, _)) = entries.iter().find(|(k, _)| ty.attribute(k).is_none()) {
                return Err(format!("unknown attribute \"{k}\""));
            }
            let mut out = Vec::new();
            for (k, aty) in attrs {
                let mut found = entries.iter().filter(|(ek, _)| ek == k);
                let (Some((_, e)), None) = (found.next(), found.next()) else {
                    return Err(format!("attribute \"{k}\" must be given exactly once"));
                };
                out.push((k.clone(), value_of(e, aty)?));
            }
            Ok(Value::Struct(out))
        }
        (_, t) => Err(format!("value does not have type {t}")),
    }
}

fn cmp_op(op: Op) -> CmpOp {
    match op {
        Op::Eq => CmpOp::Eq,
        Op::Ne => CmpOp::Ne,
        Op::Gt => CmpOp::Gt,
        Op::Lt => CmpOp::Lt,
        Op::Le => CmpOp::Le,
        Op::Ge => CmpOp::Ge,
    }
}

/// Joins terms with connectives, AND before OR, left-associative.
fn combine(terms: Vec<StsTerm>, conjs: &[Conj]) -> StsTerm {
    let mut groups: Vec<StsTerm> = Vec::new();
    let mut current: Option<StsTerm> = None;
    for (i, t) in terms.into_iter().enumerate() {
        current = Some(match current.take() {
            None => t,
            Some(acc) if conjs[i - 1] == Conj::And => Term::and(acc, t),
            Some(acc) => {
                groups.push(acc);
                t
            }
        });
    }
    groups.extend(current);
    groups.into_iter().reduce(Term::or).unwrap_or_else(Term::truth)
}

/// Location `j` of scenario `index`.
pub fn scenario_location(index: usize, j: usize) -> Location {
    Location(format!("s{}.l{j}", index + 1))
}

/// Translates scenario number `index` of the suite into a linear STS.
pub fn translate_scenario(sc: &Scenario, index: usize, ctx: &SuiteContext) -> Result<Sts> {
    let sig = &ctx.signature;
    let err = |reason: String| TranslateError::Guard { scenario: sc.title.clone(), reason };
    let initial_guard = match sc.given.as_ref().and_then(|g| g.guard.as_ref()) {
        Some(gb) => Some(ctx.map_guard_block(gb, Position::Given).map_err(err)?),
        None => None,
    };
    let mut switches = Vec::new();
    for (j, step) in sc.when.iter().chain(&sc.then).enumerate() {
        let direction = direction_of(step.kind);
        let gate = sig
            .gates
            .iter()
            .position(|g| g.direction == direction && g.action.as_deref() == Some(&step.action))
            .map(GateIdx)
            .ok_or_else(|| err(format!("no gate recorded for action '{}'", step.action)))?;
        let params = sig.gate(gate).params.clone();
        let step_guard = match &step.guard {
            Some(gb) => Some(ctx.map_guard_block(gb, Position::Step(&params)).map_err(err)?),
            None => None,
        };
        let guard = match (step_guard, j == 0, &initial_guard) {
            (Some(g), true, Some(ig)) => Term::and(g, ig.clone()),
            (None, true, Some(ig)) => ig.clone(),
            (Some(g), _, _) => g,
            (None, _, _) => Term::truth(),
        };
        switches.push(Switch {
            source: scenario_location(index, j),
            gate,
            assignment: params.iter().map(|&p| (p, Term::Var(StsVar::Param(p)))).collect(),
            params,
            guard,
            target: scenario_location(index, j + 1),
            origin: Some(Origin { scenario: index, step: j, text: Some(print_step(step)) }),
        });
    }
    let sts = Sts {
        signature: sig.clone(),
        locations: (0..=switches.len()).map(|j| scenario_location(index, j)).collect(),
        initial: scenario_location(index, 0),
        switches,
    };
    let violations = sts.validate();
    if let Some(v) = violations.first() {
        return Err(TranslateError::Malformed { scenario: sc.title.clone(), reason: v.to_string() });
    }
    Ok(sts)
}

pub fn translate_suite(ast: &SpecSuite) -> Result<TranslationResult> {
    let context = build_context(ast)?;
    let mut primary = Vec::new();
    let mut secondary = Vec::new();
    for (i, sc) in ast.scenarios.iter().enumerate() {
        let sts = translate_scenario(sc, i, &context)?;
        if sc.given.as_ref().is_some_and(|g| g.initial) {
            primary.push(sts);
        } else {
            secondary.push(sts);
        }
    }
    Ok(TranslationResult { primary, secondary, context })
}

/// Initial valuation of a test case: each declared variable's value.
pub fn resolve_given(ctx: &SuiteContext, defs: &[ValueDef]) -> Result<BTreeMap<VarIdx, Value>> {
    let mut out = BTreeMap::new();
    for d in defs {
        let v = ctx.resolve_value(&d.id, &d.value)?;
        out.insert(ctx.var(&d.id)?, v);
    }
    Ok(out)
}
