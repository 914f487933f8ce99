//! Canonical form of boolean terms, used to compare guards structurally.
//!
//! The canonical form flattens and sorts conjunctions and disjunctions,
//! drops neutral constants, orients `>`/`≥` as `<`/`≤`, rewrites `x = true`
//! to `x`, and turns "all elements satisfy p" into "no element satisfies
//! not-p" whenever not-p is expressible.

use crate::value::Value;

use super::term::{CmpOp, CountCmp, Term};

pub fn normalize<V: Ord + Clone>(term: &Term<V>) -> Term<V> {
    match term {
        Term::And(..) | Term::Or(..) => {
            let is_and = matches!(term, Term::And(..));
            let mut parts = Vec::new();
            collect(term, is_and, &mut parts);
            let unit = Term::Const(Value::Bool(is_and));
            let zero = Term::Const(Value::Bool(!is_and));
            let mut parts: Vec<Term<V>> = parts.iter().map(normalize).filter(|t| *t != unit).collect();
            if parts.contains(&zero) {
                return zero;
            }
            parts.sort();
            parts.dedup();
            let join = if is_and { Term::and } else { Term::or };
            parts.into_iter().reduce(join).unwrap_or(unit)
        }
        Term::Cmp(op, a, b) => {
            let (a, b) = (normalize(a), normalize(b));
            let t = Term::Const(Value::Bool(true));
            match op {
                CmpOp::Gt => Term::cmp(CmpOp::Lt, b, a),
                CmpOp::Ge => Term::cmp(CmpOp::Le, b, a),
                CmpOp::Eq if b == t => a,
                CmpOp::Eq if a == t => b,
                CmpOp::Eq | CmpOp::Ne if b < a => Term::cmp(*op, b, a),
                _ => Term::cmp(*op, a, b),
            }
        }
        Term::CountWhere { array, pred, cmp: CountCmp::All, .. } => match negate(pred) {
            Some(neg) => Term::CountWhere {
                array: Box::new(normalize(array)),
                pred: Box::new(normalize(&neg)),
                cmp: CountCmp::Exactly,
                count: 0,
            },
            None => Term::CountWhere {
                array: Box::new(normalize(array)),
                pred: Box::new(normalize(pred)),
                cmp: CountCmp::All,
                count: 0,
            },
        },
        Term::CountWhere { array, pred, cmp, count } => Term::CountWhere {
            array: Box::new(normalize(array)),
            pred: Box::new(normalize(pred)),
            cmp: *cmp,
            count: *count,
        },
        Term::Attr(b, k) => Term::Attr(Box::new(normalize(b)), k.clone()),
        Term::InRange(b, d) => Term::InRange(Box::new(normalize(b)), d.clone()),
        Term::Const(_) | Term::Var(_) | Term::Elem(_) => term.clone(),
    }
}

fn collect<V: Clone>(t: &Term<V>, is_and: bool, out: &mut Vec<Term<V>>) {
    match (t, is_and) {
        (Term::And(a, b), true) | (Term::Or(a, b), false) => {
            collect(a, is_and, out);
            collect(b, is_and, out);
        }
        _ => out.push(t.clone()),
    }
}

/// Logical negation pushed down to atoms, or `None` when the grammar's term
/// language cannot express it without a negation node.
pub fn negate<V: Clone>(t: &Term<V>) -> Option<Term<V>> {
    Some(match t {
        Term::Const(Value::Bool(b)) => Term::Const(Value::Bool(!b)),
        Term::Cmp(op, a, b) => Term::Cmp(op.negated(), a.clone(), b.clone()),
        Term::And(a, b) => Term::or(negate(a)?, negate(b)?),
        Term::Or(a, b) => Term::and(negate(a)?, negate(b)?),
        Term::CountWhere { array, pred, cmp, count } => {
            let count_term = |cmp, count| Term::CountWhere { array: array.clone(), pred: pred.clone(), cmp, count };
            match cmp {
                CountCmp::AtLeast if *count == 0 => Term::Const(Value::Bool(false)),
                CountCmp::AtLeast => count_term(CountCmp::AtMost, count - 1),
                CountCmp::AtMost => count_term(CountCmp::AtLeast, count + 1),
                CountCmp::Exactly if *count == 0 => count_term(CountCmp::AtLeast, 1),
                CountCmp::Exactly => {
                    Term::or(count_term(CountCmp::AtMost, count - 1), count_term(CountCmp::AtLeast, count + 1))
                }
                CountCmp::All => Term::CountWhere {
                    array: array.clone(),
                    pred: Box::new(negate(pred)?),
                    cmp: CountCmp::AtLeast,
                    count: 1,
                },
            }
        }
        Term::InRange(..) | Term::Const(_) => return None,
        atom @ (Term::Var(_) | Term::Attr(..) | Term::Elem(_)) => {
            Term::cmp(CmpOp::Eq, atom.clone(), Term::Const(Value::Bool(false)))
        }
    })
}
