use std::borrow::Cow;
use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::value::{Domain, Type, Value};

/// Binary comparison operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn negated(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "≠",
            CmpOp::Lt => "<",
            CmpOp::Le => "≤",
            CmpOp::Gt => ">",
            CmpOp::Ge => "≥",
        }
    }

    fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

/// How the number of elements satisfying a predicate is compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CountCmp {
    AtLeast,
    AtMost,
    Exactly,
    /// Every element satisfies the predicate; the count operand is ignored.
    All,
}

/// Guard, assignment and path-condition expressions over variables of type `V`.
///
/// `Elem(d)` is the array element bound by the `d`-th enclosing
/// [`Term::CountWhere`], innermost first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term<V> {
    Const(Value),
    Var(V),
    Elem(u32),
    Attr(Box<Term<V>>, String),
    Cmp(CmpOp, Box<Term<V>>, Box<Term<V>>),
    /// Membership of a primitive in a range or value set.
    InRange(Box<Term<V>>, Domain),
    And(Box<Term<V>>, Box<Term<V>>),
    Or(Box<Term<V>>, Box<Term<V>>),
    CountWhere {
        array: Box<Term<V>>,
        pred: Box<Term<V>>,
        cmp: CountCmp,
        count: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no value for variable {0}")]
    MissingVariable(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("element reference outside of an element predicate")]
    UnboundElement,
}

impl<V> Term<V> {
    pub fn truth() -> Self {
        Term::Const(Value::Bool(true))
    }

    pub fn cmp(op: CmpOp, lhs: Term<V>, rhs: Term<V>) -> Self {
        Term::Cmp(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn and(lhs: Term<V>, rhs: Term<V>) -> Self {
        Term::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: Term<V>, rhs: Term<V>) -> Self {
        Term::Or(Box::new(lhs), Box::new(rhs))
    }

    pub fn attr(base: Term<V>, key: impl Into<String>) -> Self {
        Term::Attr(Box::new(base), key.into())
    }

    /// Left-nested conjunction; an empty iterator yields `true`.
    pub fn conjunction(terms: impl IntoIterator<Item = Term<V>>) -> Self {
        terms.into_iter().reduce(Term::and).unwrap_or_else(Term::truth)
    }

    /// Top-level conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Term<V>> {
        let mut out = Vec::new();
        fn walk<'a, V>(t: &'a Term<V>, out: &mut Vec<&'a Term<V>>) {
            match t {
                Term::And(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                other => out.push(other),
            }
        }
        walk(self, &mut out);
        out
    }

    /// Rebuilds the term with every variable replaced by `f(var)`.
    pub fn map_vars<W>(&self, f: &mut impl FnMut(&V) -> Term<W>) -> Term<W> {
        match self {
            Term::Const(v) => Term::Const(v.clone()),
            Term::Var(v) => f(v),
            Term::Elem(d) => Term::Elem(*d),
            Term::Attr(b, k) => Term::Attr(Box::new(b.map_vars(f)), k.clone()),
            Term::Cmp(op, a, b) => Term::Cmp(*op, Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Term::InRange(a, d) => Term::InRange(Box::new(a.map_vars(f)), d.clone()),
            Term::And(a, b) => Term::And(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Term::Or(a, b) => Term::Or(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Term::CountWhere { array, pred, cmp, count } => Term::CountWhere {
                array: Box::new(array.map_vars(f)),
                pred: Box::new(pred.map_vars(f)),
                cmp: *cmp,
                count: *count,
            },
        }
    }

    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a V)) {
        match self {
            Term::Const(_) | Term::Elem(_) => {}
            Term::Var(v) => f(v),
            Term::Attr(b, _) | Term::InRange(b, _) => b.for_each_var(f),
            Term::Cmp(_, a, b) | Term::And(a, b) | Term::Or(a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
            Term::CountWhere { array, pred, .. } => {
                array.for_each_var(f);
                pred.for_each_var(f);
            }
        }
    }

    /// Whether every `Elem` occurs under enough enclosing element predicates.
    pub fn elements_bound(&self) -> bool {
        fn go<V>(t: &Term<V>, depth: u32) -> bool {
            match t {
                Term::Elem(d) => *d < depth,
                Term::Const(_) | Term::Var(_) => true,
                Term::Attr(b, _) | Term::InRange(b, _) => go(b, depth),
                Term::Cmp(_, a, b) | Term::And(a, b) | Term::Or(a, b) => go(a, depth) && go(b, depth),
                Term::CountWhere { array, pred, .. } => go(array, depth) && go(pred, depth + 1),
            }
        }
        go(self, 0)
    }
}

impl<V: Ord + Clone> Term<V> {
    pub fn free_vars(&self) -> BTreeSet<V> {
        let mut out = BTreeSet::new();
        self.for_each_var(&mut |v| {
            out.insert(v.clone());
        });
        out
    }
}

impl<V: fmt::Debug> Term<V> {
    /// Evaluates the term with variables looked up in `env`.
    pub fn evaluate<'a>(&'a self, env: &impl Fn(&V) -> Option<&'a Value>) -> Result<Value, EvalError> {
        let mut elems = Vec::new();
        self.eval(env, &mut elems).map(Cow::into_owned)
    }

    /// Evaluates a boolean term.
    pub fn holds<'a>(&'a self, env: &impl Fn(&V) -> Option<&'a Value>) -> Result<bool, EvalError> {
        match self.evaluate(env)? {
            Value::Bool(b) => Ok(b),
            other => Err(EvalError::TypeMismatch(format!("expected a boolean, got {other}"))),
        }
    }

    fn eval<'a>(
        &'a self,
        env: &impl Fn(&V) -> Option<&'a Value>,
        elems: &mut Vec<Cow<'a, Value>>,
    ) -> Result<Cow<'a, Value>, EvalError> {
        match self {
            Term::Const(v) => Ok(Cow::Borrowed(v)),
            Term::Var(v) => env(v).map(Cow::Borrowed).ok_or_else(|| EvalError::MissingVariable(format!("{v:?}"))),
            Term::Elem(d) => {
                let depth = *d as usize;
                if depth >= elems.len() {
                    return Err(EvalError::UnboundElement);
                }
                Ok(elems[elems.len() - 1 - depth].clone())
            }
            Term::Attr(base, key) => {
                let missing = || EvalError::TypeMismatch(format!("no attribute '{key}'"));
                match base.eval(env, elems)? {
                    Cow::Borrowed(v) => v.get(key).map(Cow::Borrowed).ok_or_else(missing),
                    Cow::Owned(v) => v.get(key).cloned().map(Cow::Owned).ok_or_else(missing),
                }
            }
            Term::Cmp(op, a, b) => {
                let (a, b) = (a.eval(env, elems)?, b.eval(env, elems)?);
                compare(*op, &a, &b).map(|r| Cow::Owned(Value::Bool(r)))
            }
            Term::InRange(a, dom) => {
                let a = a.eval(env, elems)?;
                if !a.has_type(&dom.ty()) {
                    return Err(EvalError::TypeMismatch(format!("{a} is not a {}", dom.ty())));
                }
                Ok(Cow::Owned(Value::Bool(dom.contains(&a))))
            }
            Term::And(a, b) => {
                let l = bool_of(&*a.eval(env, elems)?)?;
                let r = bool_of(&*b.eval(env, elems)?)?;
                Ok(Cow::Owned(Value::Bool(l && r)))
            }
            Term::Or(a, b) => {
                let l = bool_of(&*a.eval(env, elems)?)?;
                let r = bool_of(&*b.eval(env, elems)?)?;
                Ok(Cow::Owned(Value::Bool(l || r)))
            }
            Term::CountWhere { array, pred, cmp, count } => {
                let arr = array.eval(env, elems)?;
                let items: Vec<Cow<'a, Value>> = match arr {
                    Cow::Borrowed(Value::Array(items)) => items.iter().map(Cow::Borrowed).collect(),
                    Cow::Owned(Value::Array(items)) => items.into_iter().map(Cow::Owned).collect(),
                    other => return Err(EvalError::TypeMismatch(format!("{} is not an array", other))),
                };
                let len = items.len();
                let mut hits = 0usize;
                for item in items {
                    elems.push(item);
                    let r = pred.eval(env, elems).and_then(|v| bool_of(&v));
                    elems.pop();
                    if r? {
                        hits += 1;
                    }
                }
                let n = *count as usize;
                let ok = match cmp {
                    CountCmp::AtLeast => hits >= n,
                    CountCmp::AtMost => hits <= n,
                    CountCmp::Exactly => hits == n,
                    CountCmp::All => hits == len,
                };
                Ok(Cow::Owned(Value::Bool(ok)))
            }
        }
    }
}

fn bool_of(v: &Value) -> Result<bool, EvalError> {
    v.as_bool().ok_or_else(|| EvalError::TypeMismatch(format!("expected a boolean, got {v}")))
}

fn compare(op: CmpOp, a: &Value, b: &Value) -> Result<bool, EvalError> {
    let ordered = matches!(op, CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge);
    let ok = match (a, b) {
        (Value::Int(_), Value::Int(_)) | (Value::Dec(_), Value::Dec(_)) => true,
        (Value::Bool(_), Value::Bool(_)) | (Value::Str(_), Value::Str(_)) => !ordered,
        (Value::Array(_), Value::Array(_)) | (Value::Struct(_), Value::Struct(_)) => {
            !ordered && a.type_of() == b.type_of()
        }
        _ => false,
    };
    if !ok {
        return Err(EvalError::TypeMismatch(format!("cannot compare {a} {} {b}", op.symbol())));
    }
    Ok(op.holds(a.cmp(b)))
}

/// Static type of a term. `var_type` resolves variables; element references
/// resolve against the element types of the enclosing `CountWhere`s.
pub fn type_of_term<V: fmt::Debug>(term: &Term<V>, var_type: &impl Fn(&V) -> Option<Type>) -> Result<Type, String> {
    fn go<V: fmt::Debug>(
        t: &Term<V>,
        var_type: &impl Fn(&V) -> Option<Type>,
        elems: &mut Vec<Type>,
    ) -> Result<Type, String> {
        match t {
            Term::Const(v) => Ok(v.type_of()),
            Term::Var(v) => var_type(v).ok_or_else(|| format!("unknown variable {v:?}")),
            Term::Elem(d) => {
                let d = *d as usize;
                if d >= elems.len() {
                    return Err("element reference outside of an element predicate".into());
                }
                Ok(elems[elems.len() - 1 - d].clone())
            }
            Term::Attr(b, key) => {
                let bt = go(b, var_type, elems)?;
                bt.attribute(key).cloned().ok_or_else(|| format!("{bt} has no attribute '{key}'"))
            }
            Term::Cmp(op, a, b) => {
                let (ta, tb) = (go(a, var_type, elems)?, go(b, var_type, elems)?);
                if ta != tb {
                    return Err(format!("cannot compare {ta} {} {tb}", op.symbol()));
                }
                let ordered = matches!(op, CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge);
                if ordered && !ta.is_numeric() {
                    return Err(format!("ordering comparison on {ta}"));
                }
                Ok(Type::Boolean)
            }
            Term::InRange(a, d) => {
                let ta = go(a, var_type, elems)?;
                if ta != d.ty() || !ta.is_primitive() {
                    return Err(format!("{ta} cannot be tested against a {} range", d.ty()));
                }
                Ok(Type::Boolean)
            }
            Term::And(a, b) | Term::Or(a, b) => {
                for side in [a, b] {
                    let ts = go(side, var_type, elems)?;
                    if ts != Type::Boolean {
                        return Err(format!("connective operand of type {ts}"));
                    }
                }
                Ok(Type::Boolean)
            }
            Term::CountWhere { array, pred, .. } => {
                let ta = go(array, var_type, elems)?;
                let Type::Array(elem) = ta else {
                    return Err(format!("element count over non-array {ta}"));
                };
                elems.push(*elem);
                let tp = go(pred, var_type, elems);
                elems.pop();
                if tp? != Type::Boolean {
                    return Err("element predicate is not boolean".into());
                }
                Ok(Type::Boolean)
            }
        }
    }
    go(term, var_type, &mut Vec::new())
}

/// Renders terms with variables printed by `name`.
pub struct TermDisplay<'a, V, F: Fn(&V) -> String> {
    pub term: &'a Term<V>,
    pub name: F,
}

impl<V, F: Fn(&V) -> String> fmt::Display for TermDisplay<'_, V, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go<V>(t: &Term<V>, name: &dyn Fn(&V) -> String, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match t {
                Term::Const(v) => write!(f, "{v}"),
                Term::Var(v) => f.write_str(&name(v)),
                Term::Elem(d) => write!(f, "e{d}"),
                Term::Attr(b, k) => {
                    write!(f, "get_{k}(")?;
                    go(b, name, f)?;
                    f.write_str(")")
                }
                Term::Cmp(op, a, b) => {
                    f.write_str("(")?;
                    go(a, name, f)?;
                    write!(f, " {} ", op.symbol())?;
                    go(b, name, f)?;
                    f.write_str(")")
                }
                Term::InRange(a, d) => {
                    f.write_str("(")?;
                    go(a, name, f)?;
                    write!(f, " ∈ {d:?})")
                }
                Term::And(a, b) | Term::Or(a, b) => {
                    let sym = if matches!(t, Term::And(..)) { "∧" } else { "∨" };
                    f.write_str("(")?;
                    go(a, name, f)?;
                    write!(f, " {sym} ")?;
                    go(b, name, f)?;
                    f.write_str(")")
                }
                Term::CountWhere { array, pred, cmp, count } => {
                    f.write_str("|{e0 ∈ ")?;
                    go(array, name, f)?;
                    f.write_str(" | ")?;
                    go(pred, name, f)?;
                    match cmp {
                        CountCmp::AtLeast => write!(f, "}}| ≥ {count}"),
                        CountCmp::AtMost => write!(f, "}}| ≤ {count}"),
                        CountCmp::Exactly => write!(f, "}}| = {count}"),
                        CountCmp::All => f.write_str("}| = length"),
                    }
                }
            }
        }
        go(self.term, &self.name, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sts::normal::normalize;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    type T = Term<&'static str>;

    fn var(n: &'static str) -> T {
        Term::Var(n)
    }

    fn int(i: i64) -> T {
        Term::Const(Value::Int(i))
    }

    fn eval(t: &T, env: &BTreeMap<&'static str, Value>) -> Result<Value, EvalError> {
        t.evaluate(&|v| env.get(v))
    }

    #[test]
    fn string_equality_against_parameter() {
        let guard = Term::cmp(CmpOp::Eq, var("p_av"), Term::Const(Value::Str("PART AV".into())));
        let env = BTreeMap::from([("p_av", Value::Str("PART AV".into()))]);
        assert_eq!(eval(&guard, &env), Ok(Value::Bool(true)));
    }

    #[test]
    fn count_at_least_two_greater_than_three() {
        let t = Term::CountWhere {
            array: Box::new(var("v_a")),
            pred: Box::new(Term::cmp(CmpOp::Gt, Term::Elem(0), int(3))),
            cmp: CountCmp::AtLeast,
            count: 2,
        };
        let env = BTreeMap::from([("v_a", Value::Array(vec![Value::Int(4), Value::Int(5), Value::Int(1)]))]);
        assert_eq!(eval(&t, &env), Ok(Value::Bool(true)));
    }

    #[test]
    fn conjunction_of_constants() {
        let t: T = Term::and(Term::truth(), Term::Const(Value::Bool(false)));
        assert_eq!(eval(&t, &BTreeMap::new()), Ok(Value::Bool(false)));
    }

    #[test]
    fn missing_variable_and_mismatch() {
        assert!(matches!(eval(&var("q"), &BTreeMap::new()), Err(EvalError::MissingVariable(_))));
        let t = Term::cmp(CmpOp::Lt, int(1), Term::Const(Value::Bool(true)));
        assert!(matches!(eval(&t, &BTreeMap::new()), Err(EvalError::TypeMismatch(_))));
        assert_eq!(eval(&Term::Elem(0), &BTreeMap::new()), Err(EvalError::UnboundElement));
    }

    #[test]
    fn normalization_orients_and_flattens() {
        let a = Term::and(Term::cmp(CmpOp::Gt, var("x"), int(1)), Term::and(var("b"), Term::truth()));
        let b = Term::and(var("b"), Term::cmp(CmpOp::Lt, int(1), var("x")));
        assert_eq!(normalize(&a), normalize(&b));
        let eq_true = Term::cmp(CmpOp::Eq, var("b"), Term::truth());
        assert_eq!(normalize(&eq_true), var("b"));
    }

    #[test]
    fn all_elements_normalizes_to_none_violating() {
        let p = Term::or(Term::cmp(CmpOp::Ne, Term::Elem(0), int(1)), Term::cmp(CmpOp::Ge, Term::Elem(0), int(5)));
        let all = Term::CountWhere { array: Box::new(var("a")), pred: Box::new(p), cmp: CountCmp::All, count: 0 };
        let none = Term::CountWhere {
            array: Box::new(var("a")),
            pred: Box::new(Term::and(
                Term::cmp(CmpOp::Eq, Term::Elem(0), int(1)),
                Term::cmp(CmpOp::Lt, Term::Elem(0), int(5)),
            )),
            cmp: CountCmp::Exactly,
            count: 0,
        };
        assert_eq!(normalize(&all), normalize(&none));
    }

    fn count(cmp: CountCmp, n: u32, threshold: i64) -> T {
        Term::CountWhere {
            array: Box::new(var("a")),
            pred: Box::new(Term::cmp(CmpOp::Gt, Term::Elem(0), int(threshold))),
            cmp,
            count: n,
        }
    }

    proptest! {
        #[test]
        fn all_matches_every_element(items in proptest::collection::vec(-5i64..5, 0..6), t in -5i64..5) {
            let env = BTreeMap::from([("a", Value::Array(items.iter().copied().map(Value::Int).collect()))]);
            let all = eval(&count(CountCmp::All, 0, t), &env).unwrap();
            prop_assert_eq!(all, Value::Bool(items.iter().all(|&x| x > t)));
            prop_assert_eq!(eval(&count(CountCmp::AtLeast, 0, t), &env).unwrap(), Value::Bool(true));
        }

        #[test]
        fn negation_flips_truth(items in proptest::collection::vec(-5i64..5, 0..6), t in -5i64..5, n in 0u32..4,
                                which in 0usize..4) {
            let cmp = [CountCmp::AtLeast, CountCmp::AtMost, CountCmp::Exactly, CountCmp::All][which];
            let term = Term::and(count(cmp, n, t), Term::cmp(CmpOp::Le, var("x"), int(t)));
            let env = BTreeMap::from([
                ("a", Value::Array(items.iter().copied().map(Value::Int).collect())),
                ("x", Value::Int(n as i64 - 2)),
            ]);
            let neg = crate::sts::normal::negate(&term).unwrap();
            prop_assert_eq!(term.holds(&|v| env.get(v)).unwrap(), !neg.holds(&|v| env.get(v)).unwrap());
            prop_assert_eq!(
                normalize(&term).holds(&|v| env.get(v)).unwrap(),
                term.holds(&|v| env.get(v)).unwrap()
            );
        }
    }
}
