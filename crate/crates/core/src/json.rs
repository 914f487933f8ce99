//! JSON interchange for models, test suites, sampling plans and fixed
//! valuations. Output is canonical: fields in a fixed order, object keys of
//! values sorted, decimals written as strings.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value as Json};
use thiserror::Error;

use crate::sts::{
    CmpOp, CountCmp, Direction, Gate, Location, Origin, Signature, Sts, StsTerm, StsVar, Switch, Term, VarBinding,
    VarIdx,
};
use crate::testgen::FormalTestCase;
use crate::value::{Decimal, Domain, SamplingPlan, Type, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pointer}: {message}")]
pub struct JsonError {
    /// JSON pointer to the offending element; empty for the whole document.
    pub pointer: String,
    pub message: String,
}

fn err(pointer: impl Into<String>, message: impl Into<String>) -> JsonError {
    JsonError { pointer: pointer.into(), message: message.into() }
}

fn parse<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<T, JsonError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        use serde_path_to_error::Segment;
        let pointer = e
            .path()
            .iter()
            .filter_map(|seg| match seg {
                Segment::Seq { index } => Some(format!("/{index}")),
                Segment::Map { key } => Some(format!("/{}", escape(key))),
                Segment::Enum { .. } | Segment::Unknown => None,
            })
            .collect::<String>();
        err(pointer, e.into_inner().to_string())
    })
}

fn to_bytes<T: Serialize>(doc: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(doc).expect("documents serialize");
    out.push(b'\n');
    out
}

fn check_schema(found: u32) -> Result<(), JsonError> {
    if found != SCHEMA_VERSION {
        return Err(err("/pickles-schema", format!("unsupported schema version {found}")));
    }
    Ok(())
}

// ---- types, domains, values ----

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
enum TypeJson {
    Boolean,
    Integer,
    Decimal,
    String,
    Array(Box<TypeJson>),
    Struct(Vec<AttrType>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttrType {
    key: String,
    #[serde(rename = "type")]
    ty: TypeJson,
}

impl From<&Type> for TypeJson {
    fn from(t: &Type) -> Self {
        match t {
            Type::Boolean => TypeJson::Boolean,
            Type::Integer => TypeJson::Integer,
            Type::Decimal => TypeJson::Decimal,
            Type::String => TypeJson::String,
            Type::Array(e) => TypeJson::Array(Box::new((&**e).into())),
            Type::Struct(attrs) => {
                TypeJson::Struct(attrs.iter().map(|(k, t)| AttrType { key: k.clone(), ty: t.into() }).collect())
            }
        }
    }
}

impl From<&TypeJson> for Type {
    fn from(t: &TypeJson) -> Self {
        match t {
            TypeJson::Boolean => Type::Boolean,
            TypeJson::Integer => Type::Integer,
            TypeJson::Decimal => Type::Decimal,
            TypeJson::String => Type::String,
            TypeJson::Array(e) => Type::Array(Box::new((&**e).into())),
            TypeJson::Struct(attrs) => Type::Struct(attrs.iter().map(|a| (a.key.clone(), (&a.ty).into())).collect()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum DomainJson {
    Set {
        #[serde(rename = "type")]
        ty: TypeJson,
        values: Vec<Json>,
    },
    IntInterval {
        lo: i64,
        hi: i64,
    },
    DecInterval {
        lo: String,
        #[serde(rename = "lo-closed")]
        lo_closed: bool,
        hi: String,
        #[serde(rename = "hi-closed")]
        hi_closed: bool,
    },
    Array {
        element: Box<DomainJson>,
        min: usize,
        max: usize,
    },
    Struct {
        attrs: Vec<AttrDomain>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttrDomain {
    key: String,
    domain: DomainJson,
}

fn domain_json(d: &Domain) -> DomainJson {
    match d {
        Domain::Set { ty, values } => {
            DomainJson::Set { ty: ty.into(), values: values.iter().map(value_json).collect() }
        }
        Domain::IntInterval { lo, hi } => DomainJson::IntInterval { lo: *lo, hi: *hi },
        Domain::DecInterval { lo, lo_closed, hi, hi_closed } => DomainJson::DecInterval {
            lo: lo.to_string(),
            lo_closed: *lo_closed,
            hi: hi.to_string(),
            hi_closed: *hi_closed,
        },
        Domain::Array { element, min, max } => {
            DomainJson::Array { element: Box::new(domain_json(element)), min: *min, max: *max }
        }
        Domain::Struct(attrs) => DomainJson::Struct {
            attrs: attrs.iter().map(|(k, d)| AttrDomain { key: k.clone(), domain: domain_json(d) }).collect(),
        },
    }
}

fn decimal(text: &str, pointer: &str) -> Result<Decimal, JsonError> {
    text.parse().map_err(|e: crate::value::ValueError| err(pointer, e.to_string()))
}

fn domain_from(d: &DomainJson, pointer: &str) -> Result<Domain, JsonError> {
    let dom = match d {
        DomainJson::Set { ty, values } => {
            let ty: Type = ty.into();
            let values = values
                .iter()
                .enumerate()
                .map(|(i, v)| value_from(v, &ty, &format!("{pointer}/values/{i}")))
                .collect::<Result<_, _>>()?;
            Domain::Set { ty, values }
        }
        DomainJson::IntInterval { lo, hi } => Domain::IntInterval { lo: *lo, hi: *hi },
        DomainJson::DecInterval { lo, lo_closed, hi, hi_closed } => Domain::DecInterval {
            lo: decimal(lo, &format!("{pointer}/lo"))?,
            lo_closed: *lo_closed,
            hi: decimal(hi, &format!("{pointer}/hi"))?,
            hi_closed: *hi_closed,
        },
        DomainJson::Array { element, min, max } => Domain::Array {
            element: Box::new(domain_from(element, &format!("{pointer}/element"))?),
            min: *min,
            max: *max,
        },
        DomainJson::Struct { attrs } => Domain::Struct(
            attrs
                .iter()
                .enumerate()
                .map(|(i, a)| Ok((a.key.clone(), domain_from(&a.domain, &format!("{pointer}/attrs/{i}/domain"))?)))
                .collect::<Result<_, JsonError>>()?,
        ),
    };
    dom.validate().map_err(|e| err(pointer, e.to_string()))?;
    Ok(dom)
}

/// JSON form of a value: booleans, integers and strings as themselves,
/// decimals as strings, arrays as lists and structs as objects.
pub fn value_json(v: &Value) -> Json {
    match v {
        Value::Bool(b) => Json::Bool(*b),
        Value::Int(i) => Json::Number(Number::from(*i)),
        Value::Dec(d) => Json::String(d.to_string()),
        Value::Str(s) => Json::String(s.clone()),
        Value::Array(items) => Json::Array(items.iter().map(value_json).collect()),
        Value::Struct(attrs) => {
            Json::Object(attrs.iter().map(|(k, v)| (k.clone(), value_json(v))).collect::<Map<_, _>>())
        }
    }
}

/// Decodes a JSON value against `ty`.
pub fn value_from(j: &Json, ty: &Type, pointer: &str) -> Result<Value, JsonError> {
    let mismatch = || err(pointer, format!("expected a {ty} value, found {j}"));
    Ok(match (ty, j) {
        (Type::Boolean, Json::Bool(b)) => Value::Bool(*b),
        (Type::Integer, Json::Number(n)) => Value::Int(n.as_i64().ok_or_else(mismatch)?),
        (Type::Decimal, Json::String(s)) => Value::Dec(decimal(s, pointer)?),
        (Type::String, Json::String(s)) => Value::Str(s.clone()),
        (Type::Array(e), Json::Array(items)) => Value::Array(
            items
                .iter()
                .enumerate()
                .map(|(i, x)| value_from(x, e, &format!("{pointer}/{i}")))
                .collect::<Result<_, _>>()?,
        ),
        (Type::Struct(attrs), Json::Object(obj)) => {
            if let Some(k) = obj.keys().find(|k| ty.attribute(k).is_none()) {
                return Err(err(format!("{pointer}/{}", escape(k)), "unknown attribute"));
            }
            Value::Struct(
                attrs
                    .iter()
                    .map(|(k, t)| {
                        let p = format!("{pointer}/{}", escape(k));
                        let x = obj.get(k).ok_or_else(|| err(&p, "missing attribute"))?;
                        Ok((k.clone(), value_from(x, t, &p)?))
                    })
                    .collect::<Result<_, JsonError>>()?,
            )
        }
        _ => return Err(mismatch()),
    })
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

// ---- terms ----

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
enum CmpJson {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum CountJson {
    AtLeast,
    AtMost,
    Exactly,
    All,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
enum TermJson {
    Const {
        #[serde(rename = "type")]
        ty: TypeJson,
        value: Json,
    },
    Loc {
        var: String,
    },
    Param {
        var: String,
    },
    Elem {
        depth: u32,
    },
    Attr {
        base: Box<TermJson>,
        key: String,
    },
    Cmp {
        cmp: CmpJson,
        lhs: Box<TermJson>,
        rhs: Box<TermJson>,
    },
    InRange {
        term: Box<TermJson>,
        domain: DomainJson,
    },
    And {
        lhs: Box<TermJson>,
        rhs: Box<TermJson>,
    },
    Or {
        lhs: Box<TermJson>,
        rhs: Box<TermJson>,
    },
    CountWhere {
        array: Box<TermJson>,
        pred: Box<TermJson>,
        cmp: CountJson,
        count: u32,
    },
}

fn term_json(t: &StsTerm, sig: &Signature) -> TermJson {
    let b = |t: &StsTerm| Box::new(term_json(t, sig));
    match t {
        Term::Const(v) => TermJson::Const { ty: (&v.type_of()).into(), value: value_json(v) },
        Term::Var(StsVar::Loc(i)) => TermJson::Loc { var: sig.binding(*i).id.clone() },
        Term::Var(StsVar::Param(i)) => TermJson::Param { var: sig.binding(*i).id.clone() },
        Term::Elem(d) => TermJson::Elem { depth: *d },
        Term::Attr(base, key) => TermJson::Attr { base: b(base), key: key.clone() },
        Term::Cmp(op, l, r) => TermJson::Cmp {
            cmp: match op {
                CmpOp::Eq => CmpJson::Eq,
                CmpOp::Ne => CmpJson::Ne,
                CmpOp::Lt => CmpJson::Lt,
                CmpOp::Le => CmpJson::Le,
                CmpOp::Gt => CmpJson::Gt,
                CmpOp::Ge => CmpJson::Ge,
            },
            lhs: b(l),
            rhs: b(r),
        },
        Term::InRange(x, d) => TermJson::InRange { term: b(x), domain: domain_json(d) },
        Term::And(l, r) => TermJson::And { lhs: b(l), rhs: b(r) },
        Term::Or(l, r) => TermJson::Or { lhs: b(l), rhs: b(r) },
        Term::CountWhere { array, pred, cmp, count } => TermJson::CountWhere {
            array: b(array),
            pred: b(pred),
            cmp: match cmp {
                CountCmp::AtLeast => CountJson::AtLeast,
                CountCmp::AtMost => CountJson::AtMost,
                CountCmp::Exactly => CountJson::Exactly,
                CountCmp::All => CountJson::All,
            },
            count: *count,
        },
    }
}

fn term_from(t: &TermJson, sig: &Signature, pointer: &str) -> Result<StsTerm, JsonError> {
    let sub = |t: &TermJson, field: &str| term_from(t, sig, &format!("{pointer}/{field}"));
    let var = |id: &str| sig.var(id).ok_or_else(|| err(format!("{pointer}/var"), format!("unknown variable \"{id}\"")));
    Ok(match t {
        TermJson::Const { ty, value } => Term::Const(value_from(value, &ty.into(), &format!("{pointer}/value"))?),
        TermJson::Loc { var: id } => Term::Var(StsVar::Loc(var(id)?)),
        TermJson::Param { var: id } => Term::Var(StsVar::Param(var(id)?)),
        TermJson::Elem { depth } => Term::Elem(*depth),
        TermJson::Attr { base, key } => Term::attr(sub(base, "base")?, key.clone()),
        TermJson::Cmp { cmp, lhs, rhs } => Term::cmp(
            match cmp {
                CmpJson::Eq => CmpOp::Eq,
                CmpJson::Ne => CmpOp::Ne,
                CmpJson::Lt => CmpOp::Lt,
                CmpJson::Le => CmpOp::Le,
                CmpJson::Gt => CmpOp::Gt,
                CmpJson::Ge => CmpOp::Ge,
            },
            sub(lhs, "lhs")?,
            sub(rhs, "rhs")?,
        ),
        TermJson::InRange { term, domain } => {
            Term::InRange(Box::new(sub(term, "term")?), domain_from(domain, &format!("{pointer}/domain"))?)
        }
        TermJson::And { lhs, rhs } => Term::and(sub(lhs, "lhs")?, sub(rhs, "rhs")?),
        TermJson::Or { lhs, rhs } => Term::or(sub(lhs, "lhs")?, sub(rhs, "rhs")?),
        TermJson::CountWhere { array, pred, cmp, count } => Term::CountWhere {
            array: Box::new(sub(array, "array")?),
            pred: Box::new(sub(pred, "pred")?),
            cmp: match cmp {
                CountJson::AtLeast => CountCmp::AtLeast,
                CountJson::AtMost => CountCmp::AtMost,
                CountJson::Exactly => CountCmp::Exactly,
                CountJson::All => CountCmp::All,
            },
            count: *count,
        },
    })
}

// ---- models ----

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    #[serde(rename = "pickles-schema")]
    schema: u32,
    variables: Vec<VarJson>,
    gates: Vec<GateJson>,
    scenarios: Vec<String>,
    locations: Vec<String>,
    initial: String,
    switches: Vec<SwitchJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VarJson {
    id: String,
    #[serde(rename = "type")]
    ty: TypeJson,
    domain: DomainJson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum DirectionJson {
    Input,
    Output,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateJson {
    name: String,
    direction: DirectionJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action: Option<String>,
    params: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SwitchJson {
    id: usize,
    source: String,
    gate: String,
    params: Vec<String>,
    guard: TermJson,
    assignment: Vec<AssignJson>,
    target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    origin: Option<OriginJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssignJson {
    var: String,
    term: TermJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OriginJson {
    scenario: usize,
    step: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
}

pub fn export_sts(s: &Sts) -> Vec<u8> {
    let sig = &s.signature;
    let ids = |vs: &[VarIdx]| vs.iter().map(|v| sig.binding(*v).id.clone()).collect::<Vec<_>>();
    let doc = ModelJson {
        schema: SCHEMA_VERSION,
        variables: sig
            .vars
            .iter()
            .map(|b| VarJson { id: b.id.clone(), ty: (&b.ty).into(), domain: domain_json(&b.domain) })
            .collect(),
        gates: sig
            .gates
            .iter()
            .map(|g| GateJson {
                name: g.name.clone(),
                direction: match g.direction {
                    Direction::Input => DirectionJson::Input,
                    Direction::Output => DirectionJson::Output,
                },
                action: g.action.clone(),
                params: ids(&g.params),
            })
            .collect(),
        scenarios: sig.scenarios.clone(),
        locations: s.locations.iter().map(|l| l.0.clone()).collect(),
        initial: s.initial.0.clone(),
        switches: s
            .switches
            .iter()
            .enumerate()
            .map(|(k, sw)| SwitchJson {
                id: k,
                source: sw.source.0.clone(),
                gate: sig.gate(sw.gate).name.clone(),
                params: ids(&sw.params),
                guard: term_json(&sw.guard, sig),
                assignment: sw
                    .assignment
                    .iter()
                    .map(|(v, t)| AssignJson { var: sig.binding(*v).id.clone(), term: term_json(t, sig) })
                    .collect(),
                target: sw.target.0.clone(),
                origin: sw.origin.as_ref().map(|o| OriginJson {
                    scenario: o.scenario,
                    step: o.step,
                    text: o.text.clone(),
                }),
            })
            .collect(),
    };
    to_bytes(&doc)
}

pub fn import_sts(bytes: &[u8]) -> Result<Sts, JsonError> {
    let doc: ModelJson = parse(bytes)?;
    check_schema(doc.schema)?;
    let mut sig = Signature { scenarios: doc.scenarios.clone(), ..Default::default() };
    for (i, v) in doc.variables.iter().enumerate() {
        let p = format!("/variables/{i}");
        if sig.var(&v.id).is_some() {
            return Err(err(format!("{p}/id"), format!("duplicate variable \"{}\"", v.id)));
        }
        let domain = domain_from(&v.domain, &format!("{p}/domain"))?;
        let ty: Type = (&v.ty).into();
        if domain.ty() != ty {
            return Err(err(format!("{p}/type"), format!("type {ty} does not match its domain")));
        }
        sig.vars.push(VarBinding { id: v.id.clone(), ty, domain });
    }
    let var_list = |sig: &Signature, ids: &[String], p: &str| -> Result<Vec<VarIdx>, JsonError> {
        ids.iter()
            .enumerate()
            .map(|(i, id)| sig.var(id).ok_or_else(|| err(format!("{p}/{i}"), format!("unknown variable \"{id}\""))))
            .collect()
    };
    for (i, g) in doc.gates.iter().enumerate() {
        let p = format!("/gates/{i}");
        if sig.gate_by_name(&g.name).is_some() {
            return Err(err(format!("{p}/name"), format!("duplicate gate \"{}\"", g.name)));
        }
        let params = var_list(&sig, &g.params, &format!("{p}/params"))?;
        sig.gates.push(Gate {
            name: g.name.clone(),
            direction: match g.direction {
                DirectionJson::Input => Direction::Input,
                DirectionJson::Output => Direction::Output,
            },
            action: g.action.clone(),
            params,
        });
    }
    let locations: Vec<Location> = doc.locations.iter().map(|l| Location(l.clone())).collect();
    let known: BTreeSet<&str> = doc.locations.iter().map(String::as_str).collect();
    if known.len() != locations.len() {
        return Err(err("/locations", "a location is listed twice"));
    }
    if !known.contains(doc.initial.as_str()) {
        return Err(err("/initial", format!("unknown location \"{}\"", doc.initial)));
    }
    let mut switches = Vec::new();
    for (k, sw) in doc.switches.iter().enumerate() {
        let p = format!("/switches/{k}");
        if sw.id != k {
            return Err(err(format!("{p}/id"), format!("switch ids must be 0, 1, ... in order (found {})", sw.id)));
        }
        for (field, l) in [("source", &sw.source), ("target", &sw.target)] {
            if !known.contains(l.as_str()) {
                return Err(err(format!("{p}/{field}"), format!("unknown location \"{l}\"")));
            }
        }
        let gate = sig
            .gate_by_name(&sw.gate)
            .ok_or_else(|| err(format!("{p}/gate"), format!("unknown gate \"{}\"", sw.gate)))?;
        let params = var_list(&sig, &sw.params, &format!("{p}/params"))?;
        let guard = term_from(&sw.guard, &sig, &format!("{p}/guard"))?;
        let assignment = sw
            .assignment
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let ap = format!("{p}/assignment/{i}");
                let v = sig
                    .var(&a.var)
                    .ok_or_else(|| err(format!("{ap}/var"), format!("unknown variable \"{}\"", a.var)))?;
                Ok((v, term_from(&a.term, &sig, &format!("{ap}/term"))?))
            })
            .collect::<Result<_, JsonError>>()?;
        switches.push(Switch {
            source: Location(sw.source.clone()),
            gate,
            params,
            guard,
            assignment,
            target: Location(sw.target.clone()),
            origin: sw.origin.as_ref().map(|o| Origin { scenario: o.scenario, step: o.step, text: o.text.clone() }),
        });
    }
    let sts = Sts { signature: Arc::new(sig), locations, initial: Location(doc.initial), switches };
    if let Some(v) = sts.validate().into_iter().next() {
        use crate::sts::Violation::*;
        let pointer = match &v {
            UnknownLocation { switch, .. }
            | UnknownGate { switch }
            | UnknownVariable { switch }
            | InteractionInconsistency { switch, .. }
            | ParameterScope { switch, .. }
            | UnboundElement { switch }
            | IllTyped { switch, .. } => format!("/switches/{switch}"),
            _ => String::new(),
        };
        return Err(err(pointer, v.to_string()));
    }
    Ok(sts)
}

// ---- test suites ----

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TestsJson {
    #[serde(rename = "pickles-schema")]
    schema: u32,
    tests: Vec<TestJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TestJson {
    switches: Vec<usize>,
    ini: BTreeMap<String, Json>,
    values: Vec<Vec<Json>>,
}

pub fn export_tests(tests: &[FormalTestCase], model: &Sts) -> Vec<u8> {
    let sig = &model.signature;
    let doc = TestsJson {
        schema: SCHEMA_VERSION,
        tests: tests
            .iter()
            .map(|t| TestJson {
                switches: t.switches.clone(),
                ini: t.ini.iter().map(|(v, x)| (sig.binding(*v).id.clone(), value_json(x))).collect(),
                values: t.values.iter().map(|vs| vs.iter().map(value_json).collect()).collect(),
            })
            .collect(),
    };
    to_bytes(&doc)
}

/// Reads a test suite for `model`, checking switch references, value types
/// and declared ranges.
pub fn import_tests(bytes: &[u8], model: &Sts) -> Result<Vec<FormalTestCase>, JsonError> {
    let doc: TestsJson = parse(bytes)?;
    check_schema(doc.schema)?;
    let sig = &model.signature;
    let in_domain = |v: VarIdx, j: &Json, p: &str| -> Result<Value, JsonError> {
        let b = sig.binding(v);
        let x = value_from(j, &b.ty, p)?;
        if !b.domain.contains(&x) {
            return Err(err(p, format!("{x} lies outside the range of \"{}\"", b.id)));
        }
        Ok(x)
    };
    let mut out = Vec::new();
    for (t, test) in doc.tests.iter().enumerate() {
        let p = format!("/tests/{t}");
        let mut ini = BTreeMap::new();
        for (id, j) in &test.ini {
            let ip = format!("{p}/ini/{}", escape(id));
            let v = sig.var(id).ok_or_else(|| err(&ip, format!("unknown variable \"{id}\"")))?;
            ini.insert(v, in_domain(v, j, &ip)?);
        }
        if let Some(b) = (0..sig.vars.len()).map(VarIdx).find(|v| !ini.contains_key(v)) {
            return Err(err(format!("{p}/ini"), format!("no value for \"{}\"", sig.binding(b).id)));
        }
        if test.values.len() != test.switches.len() {
            return Err(err(format!("{p}/values"), "one value list per switch is required"));
        }
        let mut values = Vec::new();
        for (j, &k) in test.switches.iter().enumerate() {
            let sp = format!("{p}/switches/{j}");
            let sw = model.switches.get(k).ok_or_else(|| err(&sp, format!("unknown switch {k}")))?;
            let vs = &test.values[j];
            if vs.len() != sw.params.len() {
                return Err(err(
                    format!("{p}/values/{j}"),
                    format!("expected {} values, found {}", sw.params.len(), vs.len()),
                ));
            }
            values.push(
                sw.params
                    .iter()
                    .zip(vs)
                    .enumerate()
                    .map(|(i, (v, x))| in_domain(*v, x, &format!("{p}/values/{j}/{i}")))
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        out.push(FormalTestCase { switches: test.switches.clone(), ini, values });
    }
    Ok(out)
}

// ---- sampling plans and fixed valuations ----

pub fn export_plan(plan: &SamplingPlan) -> Vec<u8> {
    let doc: BTreeMap<&String, Vec<String>> =
        plan.samples.iter().map(|(k, v)| (k, v.iter().map(Decimal::to_string).collect())).collect();
    to_bytes(&doc)
}

/// Reads a sampling plan: an object mapping variable paths to lists of
/// decimal strings.
pub fn import_plan(bytes: &[u8]) -> Result<SamplingPlan, JsonError> {
    let doc: BTreeMap<String, Vec<String>> = parse(bytes)?;
    let mut plan = SamplingPlan::new();
    for (path, samples) in doc {
        let p = format!("/{}", escape(&path));
        let ds =
            samples.iter().enumerate().map(|(i, s)| decimal(s, &format!("{p}/{i}"))).collect::<Result<Vec<_>, _>>()?;
        plan.set(path, ds);
    }
    Ok(plan)
}

/// Reads an object mapping variable identifiers to values of their type.
pub fn import_valuation(bytes: &[u8], sig: &Signature) -> Result<BTreeMap<VarIdx, Value>, JsonError> {
    let doc: BTreeMap<String, Json> = parse(bytes)?;
    let mut out = BTreeMap::new();
    for (id, j) in doc {
        let p = format!("/{}", escape(&id));
        let v = sig.var(&id).ok_or_else(|| err(&p, format!("unknown variable \"{id}\"")))?;
        out.insert(v, value_from(&j, &sig.binding(v).ty, &p)?);
    }
    Ok(out)
}

pub fn export_valuation(values: &BTreeMap<VarIdx, Value>, sig: &Signature) -> Vec<u8> {
    let doc: BTreeMap<&String, Json> = values.iter().map(|(v, x)| (&sig.binding(*v).id, value_json(x))).collect();
    to_bytes(&doc)
}
