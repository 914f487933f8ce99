//! Runtime values, their sorts, and the finite domains variables range over.
//!
//! Decimals are fixed-precision scaled integers so that guard equality is
//! exact. Domains over decimals are continuous intervals; a [`SamplingPlan`]
//! turns them into finite sample sets so every domain can be enumerated.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Number of fractional digits carried by [`Decimal`].
pub const DECIMAL_PLACES: u32 = 3;
const DECIMAL_SCALE: i64 = 10i64.pow(DECIMAL_PLACES);

/// Upper bound on the number of values a single enumeration may produce.
pub const ENUMERATION_LIMIT: u128 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error("invalid decimal literal '{0}'")]
    BadDecimal(String),
    #[error("decimal '{0}' has more than {DECIMAL_PLACES} fractional digits")]
    DecimalPrecision(String),
    #[error("invalid {ty} literal '{text}'")]
    BadLiteral { ty: String, text: String },
    #[error("duplicate struct attribute '{0}'")]
    DuplicateAttribute(String),
    #[error("empty interval [{lo}, {hi}]")]
    EmptyInterval { lo: String, hi: String },
    #[error("invalid array cardinality {min}..{max}")]
    BadCardinality { min: usize, max: usize },
    #[error("value set of a {0} domain is empty")]
    EmptySet(String),
    #[error("value {value} is not a {ty}")]
    TypeMismatch { value: String, ty: String },
    #[error("no sample set for decimal domain at '{0}'")]
    MissingSamples(String),
    #[error("sample {sample} at '{path}' lies outside its domain")]
    SampleOutsideDomain { path: String, sample: String },
    #[error("domain at '{path}' has {count} values, above the enumeration limit")]
    TooLarge { path: String, count: u128 },
}

/// Exact decimal with [`DECIMAL_PLACES`] fractional digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Decimal(i64);

impl Decimal {
    /// Smallest representable positive step, used as the default boundary offset.
    pub const EPSILON: Decimal = Decimal(1);

    pub fn from_units(units: i64) -> Self {
        Decimal(units)
    }

    pub fn from_int(v: i64) -> Self {
        Decimal(v * DECIMAL_SCALE)
    }

    /// Raw scaled integer (value times 10^DECIMAL_PLACES).
    pub fn units(self) -> i64 {
        self.0
    }

    pub fn checked_add(self, other: Decimal) -> Option<Decimal> {
        self.0.checked_add(other.0).map(Decimal)
    }

    pub fn checked_sub(self, other: Decimal) -> Option<Decimal> {
        self.0.checked_sub(other.0).map(Decimal)
    }

    /// Midpoint rounded toward negative infinity at the last digit.
    pub fn midpoint(self, other: Decimal) -> Decimal {
        Decimal(((self.0 as i128 + other.0 as i128).div_euclid(2)) as i64)
    }
}

impl FromStr for Decimal {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ValueError::BadDecimal(s.to_string());
        let t = s.trim();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if !frac_part.bytes().all(|b| b.is_ascii_digit()) || (body.contains('.') && frac_part.is_empty()) {
            return Err(bad());
        }
        let trimmed = frac_part.trim_end_matches('0');
        if trimmed.len() > DECIMAL_PLACES as usize {
            return Err(ValueError::DecimalPrecision(s.to_string()));
        }
        let whole: i64 = int_part.parse().map_err(|_| bad())?;
        let mut frac: i64 = 0;
        for (i, b) in trimmed.bytes().enumerate() {
            frac += i64::from(b - b'0') * 10i64.pow(DECIMAL_PLACES - 1 - i as u32);
        }
        let units = whole.checked_mul(DECIMAL_SCALE).and_then(|w| w.checked_add(frac)).ok_or_else(bad)?;
        Ok(Decimal(if neg { -units } else { units }))
    }
}

impl fmt::Display for Decimal {
    /// Trailing zeros are trimmed but at least one fractional digit is kept:
    /// `2000` units print as `2.0`, `1001` as `1.001`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / DECIMAL_SCALE as u64;
        let frac = abs % DECIMAL_SCALE as u64;
        let digits = format!("{:0width$}", frac, width = DECIMAL_PLACES as usize);
        let digits = digits.trim_end_matches('0');
        let digits = if digits.is_empty() { "0" } else { digits };
        write!(f, "{sign}{whole}.{digits}")
    }
}

/// Sort of a variable or value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    Boolean,
    Integer,
    Decimal,
    String,
    Array(Box<Type>),
    Struct(Vec<(String, Type)>),
}

impl Type {
    pub fn is_primitive(&self) -> bool {
        !matches!(self, Type::Array(_) | Type::Struct(_))
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Type::Integer | Type::Decimal)
    }

    /// Type of the attribute `key`, if this is a struct type that has it.
    pub fn attribute(&self, key: &str) -> Option<&Type> {
        match self {
            Type::Struct(attrs) => attrs.iter().find(|(k, _)| k == key).map(|(_, t)| t),
            _ => None,
        }
    }

    /// Parses a primitive literal written in Pickles text.
    pub fn parse_literal(&self, text: &str) -> Result<Value, ValueError> {
        let text = text.trim();
        let bad = || ValueError::BadLiteral { ty: self.to_string(), text: text.to_string() };
        match self {
            Type::Boolean => match text {
                "true" => Ok(Value::Bool(true)),
                "false" => Ok(Value::Bool(false)),
                _ => Err(bad()),
            },
            Type::Integer => text.parse::<i64>().map(Value::Int).map_err(|_| bad()),
            Type::Decimal => text.parse::<Decimal>().map(Value::Dec).map_err(|_| bad()),
            Type::String if !text.is_empty() => Ok(Value::Str(text.to_string())),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Boolean => f.write_str("boolean"),
            Type::Integer => f.write_str("integer"),
            Type::Decimal => f.write_str("decimal"),
            Type::String => f.write_str("string"),
            Type::Array(e) => write!(f, "array({e})"),
            Type::Struct(attrs) => {
                f.write_str("struct(")?;
                for (i, (k, t)) in attrs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}: {t}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A runtime value. Struct attributes keep their declaration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Dec(Decimal),
    Str(String),
    Array(Vec<Value>),
    Struct(Vec<(String, Value)>),
}

impl Value {
    /// The sort of this value. Arrays take the sort of their first element;
    /// an empty array has no inferable element sort and reports `array(boolean)`.
    pub fn type_of(&self) -> Type {
        match self {
            Value::Bool(_) => Type::Boolean,
            Value::Int(_) => Type::Integer,
            Value::Dec(_) => Type::Decimal,
            Value::Str(_) => Type::String,
            Value::Array(items) => Type::Array(Box::new(items.first().map_or(Type::Boolean, Value::type_of))),
            Value::Struct(attrs) => Type::Struct(attrs.iter().map(|(k, v)| (k.clone(), v.type_of())).collect()),
        }
    }

    /// Whether this value inhabits `ty`, recursively.
    pub fn has_type(&self, ty: &Type) -> bool {
        match (self, ty) {
            (Value::Bool(_), Type::Boolean)
            | (Value::Int(_), Type::Integer)
            | (Value::Dec(_), Type::Decimal)
            | (Value::Str(_), Type::String) => true,
            (Value::Array(items), Type::Array(e)) => items.iter().all(|v| v.has_type(e)),
            (Value::Struct(vals), Type::Struct(attrs)) => {
                vals.len() == attrs.len() && vals.iter().zip(attrs).all(|((vk, v), (tk, t))| vk == tk && v.has_type(t))
            }
            _ => false,
        }
    }

    /// Value of a struct attribute.
    pub fn get(&self, key: &str) -> Option<&Value> {
        match self {
            Value::Struct(attrs) => attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Dec(d) => write!(f, "{d}"),
            Value::Str(s) => f.write_str(s),
            Value::Array(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Struct(attrs) => {
                f.write_str("{")?;
                for (i, (k, v)) in attrs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "\"{k}\": {v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// Admissible values of a variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Domain {
    /// Explicit set of primitive values of type `ty`, in declaration order.
    Set {
        ty: Type,
        values: Vec<Value>,
    },
    IntInterval {
        lo: i64,
        hi: i64,
    },
    DecInterval {
        lo: Decimal,
        lo_closed: bool,
        hi: Decimal,
        hi_closed: bool,
    },
    Array {
        element: Box<Domain>,
        min: usize,
        max: usize,
    },
    Struct(Vec<(String, Domain)>),
}

impl Domain {
    pub fn booleans() -> Domain {
        Domain::Set { ty: Type::Boolean, values: vec![Value::Bool(true), Value::Bool(false)] }
    }

    pub fn ty(&self) -> Type {
        match self {
            Domain::Set { ty, .. } => ty.clone(),
            Domain::IntInterval { .. } => Type::Integer,
            Domain::DecInterval { .. } => Type::Decimal,
            Domain::Array { element, .. } => Type::Array(Box::new(element.ty())),
            Domain::Struct(attrs) => Type::Struct(attrs.iter().map(|(k, d)| (k.clone(), d.ty())).collect()),
        }
    }

    /// Checks the structural invariants: non-empty intervals and sets,
    /// type-compatible set members, `1 <= min <= max`, distinct attribute keys.
    pub fn validate(&self) -> Result<(), ValueError> {
        match self {
            Domain::Set { ty, values } => {
                if !ty.is_primitive() || values.is_empty() {
                    return Err(ValueError::EmptySet(ty.to_string()));
                }
                if let Some(v) = values.iter().find(|v| !v.has_type(ty)) {
                    return Err(ValueError::TypeMismatch { value: v.to_string(), ty: ty.to_string() });
                }
                Ok(())
            }
            Domain::IntInterval { lo, hi } if lo > hi => {
                Err(ValueError::EmptyInterval { lo: lo.to_string(), hi: hi.to_string() })
            }
            Domain::IntInterval { .. } => Ok(()),
            Domain::DecInterval { lo, lo_closed, hi, hi_closed } => {
                let degenerate = lo > hi || (lo == hi && !(*lo_closed && *hi_closed));
                if degenerate {
                    return Err(ValueError::EmptyInterval { lo: lo.to_string(), hi: hi.to_string() });
                }
                Ok(())
            }
            Domain::Array { element, min, max } => {
                if *min < 1 || min > max {
                    return Err(ValueError::BadCardinality { min: *min, max: *max });
                }
                element.validate()
            }
            Domain::Struct(attrs) => {
                for (i, (k, d)) in attrs.iter().enumerate() {
                    if attrs[..i].iter().any(|(other, _)| other == k) {
                        return Err(ValueError::DuplicateAttribute(k.clone()));
                    }
                    d.validate()?;
                }
                Ok(())
            }
        }
    }

    /// Membership test; a type mismatch yields `false`.
    pub fn contains(&self, value: &Value) -> bool {
        match (self, value) {
            (Domain::Set { values, .. }, v) => values.contains(v),
            (Domain::IntInterval { lo, hi }, Value::Int(i)) => lo <= i && i <= hi,
            (Domain::DecInterval { lo, lo_closed, hi, hi_closed }, Value::Dec(d)) => {
                let above = if *lo_closed { d >= lo } else { d > lo };
                let below = if *hi_closed { d <= hi } else { d < hi };
                above && below
            }
            (Domain::Array { element, min, max }, Value::Array(items)) => {
                (*min..=*max).contains(&items.len()) && items.iter().all(|v| element.contains(v))
            }
            (Domain::Struct(attrs), Value::Struct(vals)) => {
                attrs.len() == vals.len() && attrs.iter().zip(vals).all(|((dk, d), (vk, v))| dk == vk && d.contains(v))
            }
            _ => false,
        }
    }

    /// Number of values [`Domain::enumerate`] yields under `plan`, without
    /// materializing them.
    pub fn cardinality(&self, plan: &SamplingPlan, path: &str) -> Result<u128, ValueError> {
        Ok(match self {
            Domain::Set { values, .. } => values.len() as u128,
            Domain::IntInterval { lo, hi } => (*hi as i128 - *lo as i128 + 1) as u128,
            Domain::DecInterval { .. } => self.decimal_samples(plan, path)?.len() as u128,
            Domain::Array { element, min, max } => {
                let n = element.cardinality(plan, path)?;
                (*min..=*max).map(|k| binomial(n, k as u128)).fold(0u128, u128::saturating_add)
            }
            Domain::Struct(attrs) => {
                let mut total: u128 = 1;
                for (k, d) in attrs {
                    total = total.saturating_mul(d.cardinality(plan, &attr_path(path, k))?);
                }
                total
            }
        })
    }

    /// All values of the finitized domain in a deterministic order.
    ///
    /// Decimal intervals contribute the plan's samples for `path`. Arrays are
    /// enumerated as sets of distinct elements with order irrelevant: by
    /// length ascending, then combinations in lexicographic index order.
    /// Struct values vary their last attribute fastest.
    pub fn enumerate(&self, plan: &SamplingPlan, path: &str) -> Result<Vec<Value>, ValueError> {
        let count = self.cardinality(plan, path)?;
        if count > ENUMERATION_LIMIT {
            return Err(ValueError::TooLarge { path: path.to_string(), count });
        }
        self.enumerate_unchecked(plan, path)
    }

    fn enumerate_unchecked(&self, plan: &SamplingPlan, path: &str) -> Result<Vec<Value>, ValueError> {
        match self {
            Domain::Set { values, .. } => Ok(values.clone()),
            Domain::IntInterval { lo, hi } => Ok((*lo..=*hi).map(Value::Int).collect()),
            Domain::DecInterval { .. } => Ok(self.decimal_samples(plan, path)?.into_iter().map(Value::Dec).collect()),
            Domain::Array { element, min, max } => {
                let elems = element.enumerate_unchecked(plan, path)?;
                let mut out = Vec::new();
                for k in *min..=(*max).min(elems.len()) {
                    for_each_combination(elems.len(), k, |idx| {
                        out.push(Value::Array(idx.iter().map(|&i| elems[i].clone()).collect()));
                    });
                }
                Ok(out)
            }
            Domain::Struct(attrs) => {
                let mut out: Vec<Vec<(String, Value)>> = vec![Vec::new()];
                for (k, d) in attrs {
                    let vals = d.enumerate_unchecked(plan, &attr_path(path, k))?;
                    out = out
                        .into_iter()
                        .flat_map(|prefix| {
                            vals.iter().map(move |v| {
                                let mut p = prefix.clone();
                                p.push((k.clone(), v.clone()));
                                p
                            })
                        })
                        .collect();
                }
                Ok(out.into_iter().map(Value::Struct).collect())
            }
        }
    }

    fn decimal_samples(&self, plan: &SamplingPlan, path: &str) -> Result<Vec<Decimal>, ValueError> {
        let samples = plan.samples.get(path).ok_or_else(|| ValueError::MissingSamples(path.to_string()))?;
        for s in samples {
            if !self.contains(&Value::Dec(*s)) {
                return Err(ValueError::SampleOutsideDomain { path: path.to_string(), sample: s.to_string() });
            }
        }
        Ok(samples.clone())
    }

    /// Every decimal-interval sub-domain with its sample-plan path.
    pub fn decimal_intervals<'a>(&'a self, path: &str, out: &mut Vec<(String, &'a Domain)>) {
        match self {
            Domain::DecInterval { .. } => out.push((path.to_string(), self)),
            Domain::Array { element, .. } => element.decimal_intervals(path, out),
            Domain::Struct(attrs) => {
                for (k, d) in attrs {
                    d.decimal_intervals(&attr_path(path, k), out);
                }
            }
            _ => {}
        }
    }
}

/// Sample-plan path of attribute `key` below `path`. Array elements are
/// transparent, so `"faulty detectors.lane"` names the lane of every element.
pub fn attr_path(path: &str, key: &str) -> String {
    format!("{path}.{key}")
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // advance the rightmost index that still has room
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Finite sample sets for decimal-interval domains, keyed by variable path.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SamplingPlan {
    pub samples: BTreeMap<String, Vec<Decimal>>,
}

impl SamplingPlan {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the samples for `path`, sorted and deduplicated.
    pub fn set(&mut self, path: impl Into<String>, mut samples: Vec<Decimal>) -> &mut Self {
        samples.sort();
        samples.dedup();
        self.samples.insert(path.into(), samples);
        self
    }

    pub fn get(&self, path: &str) -> Option<&[Decimal]> {
        self.samples.get(path).map(Vec::as_slice)
    }

    /// Boundary-analysis samples for one decimal interval: the endpoints
    /// offset inward by `epsilon` when open, the quartile points, every
    /// `constant` inside the interval, and the midpoints between consecutive
    /// anchors (endpoints and constants).
    pub fn boundary_samples(domain: &Domain, constants: &[Decimal], epsilon: Decimal) -> Vec<Decimal> {
        let Domain::DecInterval { lo, lo_closed, hi, hi_closed } = *domain else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let first = if lo_closed { Some(lo) } else { lo.checked_add(epsilon) };
        let last = if hi_closed { Some(hi) } else { hi.checked_sub(epsilon) };
        out.extend(first);
        out.extend(last);
        let width = hi.units() as i128 - lo.units() as i128;
        for q in 1..4 {
            out.push(Decimal::from_units((lo.units() as i128 + width * q / 4) as i64));
        }
        let mut anchors = vec![lo, hi];
        anchors.extend(constants.iter().copied().filter(|c| *c > lo && *c < hi));
        anchors.sort();
        anchors.dedup();
        out.extend(anchors.iter().skip(1).take(anchors.len().saturating_sub(2)));
        out.extend(anchors.windows(2).map(|w| w[0].midpoint(w[1])));
        out.retain(|d| domain.contains(&Value::Dec(*d)));
        out.sort();
        out.dedup();
        out
    }
}
