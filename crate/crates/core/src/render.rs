//! Back-translation of formal test cases into Pickles test-case text.

use thiserror::Error;

use crate::parser::ast::{StepKind, TestCase, TestStep, ValueAst, ValueDef};
use crate::parser::{parse_step, print_testcase, ParseError};
use crate::sts::{Direction, Sts, VarIdx};
use crate::testgen::FormalTestCase;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("gate {0} has no action text")]
    MissingAction(String),
    #[error("switch {0} has no recorded step text")]
    MissingStepText(usize),
    #[error("recorded text of switch {switch} does not parse: {source}")]
    BadStepText { switch: usize, source: ParseError },
    #[error("no initial value for \"{0}\"")]
    MissingValue(String),
    #[error("test references switch {0}, which the model does not have")]
    UnknownSwitch(usize),
    #[error("step {step} has {found} values for {expected} parameters")]
    ValueCount { step: usize, expected: usize, found: usize },
}

/// Textual form of a value: primitives as their text, arrays as 1-based
/// indexed entries, structs as key/value pairs in attribute order.
pub fn render_value(v: &Value) -> ValueAst {
    match v {
        Value::Array(items) => {
            ValueAst::Indexed(items.iter().enumerate().map(|(i, x)| (i + 1, render_value(x))).collect())
        }
        Value::Struct(attrs) => ValueAst::Keyed(attrs.iter().map(|(k, x)| (k.clone(), render_value(x))).collect()),
        scalar => ValueAst::Scalar(scalar.to_string()),
    }
}

/// The test case as a syntax tree. Output steps are recreated from the
/// recorded specification text; their observed values are not part of it.
pub fn test_case_ast(tc: &FormalTestCase, model: &Sts) -> Result<TestCase, RenderError> {
    let sig = &model.signature;
    let given = (0..sig.vars.len())
        .map(|i| {
            let id = sig.vars[i].id.clone();
            match tc.ini.get(&VarIdx(i)) {
                Some(v) => Ok(ValueDef { id, value: render_value(v) }),
                None => Err(RenderError::MissingValue(id)),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let var_ids = || sig.vars.iter().map(|b| b.id.clone());
    let mut steps = Vec::new();
    for (j, &k) in tc.switches.iter().enumerate() {
        let sw = model.switches.get(k).ok_or(RenderError::UnknownSwitch(k))?;
        let gate = sig.gate(sw.gate);
        match gate.direction {
            Direction::Input => {
                let action = gate.action.clone().ok_or_else(|| RenderError::MissingAction(gate.name.clone()))?;
                let vals = tc.values.get(j).map(Vec::as_slice).unwrap_or(&[]);
                if vals.len() != sw.params.len() {
                    return Err(RenderError::ValueCount { step: j, expected: sw.params.len(), found: vals.len() });
                }
                let params: Vec<String> = sw.params.iter().map(|p| sig.binding(*p).id.clone()).collect();
                let values = params
                    .iter()
                    .zip(vals)
                    .map(|(id, v)| ValueDef { id: id.clone(), value: render_value(v) })
                    .collect();
                steps.push(TestStep::Input { action, params, values });
            }
            Direction::Output => {
                let text = sw.origin.as_ref().and_then(|o| o.text.as_deref()).ok_or(RenderError::MissingStepText(k))?;
                let step = parse_step(text, StepKind::Output, var_ids())
                    .map_err(|source| RenderError::BadStepText { switch: k, source })?;
                steps.push(TestStep::Output(step));
            }
        }
    }
    Ok(TestCase { given, steps })
}

pub fn render_test(tc: &FormalTestCase, model: &Sts) -> Result<String, RenderError> {
    test_case_ast(tc, model).map(|ast| print_testcase(&ast))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::compose::{master, prune};
    use crate::parser::{parse_spec, parse_testcase};
    use crate::symbolic::{default_plan, Backtracking, Domains};
    use crate::testgen::path_for_scenarios;
    use crate::translate::translate_suite;
    use crate::value::Decimal;

    const CASE_STUDY: &str = include_str!("../data/case_study.pickles");
    const SAMPLE_TEST: &str = include_str!("../data/sample_test.pickles");

    fn dec(s: &str) -> Value {
        Value::Dec(s.parse::<Decimal>().unwrap())
    }

    fn detector(lane: i64, lp: &str) -> Value {
        Value::Struct(vec![("lane".into(), Value::Int(lane)), ("length position".into(), dec(lp))])
    }

    fn pruned() -> Sts {
        let r = translate_suite(&parse_spec(CASE_STUDY).unwrap()).unwrap();
        let m = master(&r.primary, &r.all(), 3).unwrap();
        let plan = default_plan(&r.context.signature, m.switches.iter().map(|s| &s.guard));
        let domains = Domains::new(r.context.signature.clone(), plan);
        prune(&m, &domains, &Backtracking, m.switches.len()).unwrap().0
    }

    fn sorted_given(mut tc: TestCase) -> TestCase {
        tc.given.sort_by(|a, b| a.id.cmp(&b.id));
        tc
    }

    #[test]
    fn values() {
        assert_eq!(render_value(&Value::Int(3)), ValueAst::Scalar("3".into()));
        assert_eq!(render_value(&dec("2.0")), ValueAst::Scalar("2.0".into()));
        assert_eq!(
            render_value(&detector(1, "1.5")),
            ValueAst::Keyed(vec![
                ("lane".into(), ValueAst::Scalar("1".into())),
                ("length position".into(), ValueAst::Scalar("1.5".into()))
            ])
        );
        let arr = render_value(&Value::Array(vec![detector(1, "1.5"); 3]));
        let ValueAst::Indexed(entries) = arr else { panic!() };
        assert_eq!(entries.iter().map(|e| e.0).collect::<Vec<_>>(), [1, 2, 3]);
    }

    #[test]
    fn solved_test_renders_as_sample() {
        let p = pruned();
        let sig = p.signature.clone();
        let v = |id: &str| sig.var(id).unwrap();
        let tc = FormalTestCase {
            switches: path_for_scenarios(&p, &[2, 3]).unwrap(),
            ini: BTreeMap::from([
                (v("availability"), Value::Str("AV".into())),
                (v("enabledness"), Value::Bool(true)),
                (v("critical section lane"), Value::Int(1)),
                (v("critical section start"), dec("2.0")),
                (v("critical section end"), dec("2.5")),
                (v("faulty detectors"), Value::Array(vec![detector(1, "1.5"); 3])),
            ]),
            values: vec![
                vec![Value::Array(vec![detector(1, "2.0"), detector(1, "2.8"), detector(1, "2.2")])],
                vec![Value::Str("NOT AV".into())],
                vec![],
                vec![Value::Bool(false)],
            ],
        };
        let text = render_test(&tc, &p).unwrap();
        assert!(text.starts_with("Given the system is initialized with values:\n  \"availability\": AV\n"));
        assert!(text.contains("\nWhen the controller access is lost\n"));
        assert!(text.contains("\"critical section start\": 2.0\n"));
        let ours = sorted_given(parse_testcase(&text).unwrap());
        let theirs = sorted_given(parse_testcase(SAMPLE_TEST).unwrap());
        assert_eq!(ours, theirs);
    }

    #[test]
    fn one_scenario_test() {
        let p = pruned();
        let path = path_for_scenarios(&p, &[3]).unwrap();
        let ini = (0..p.signature.vars.len())
            .map(|i| {
                let vals =
                    p.signature.vars[i].domain.enumerate(&default_plan(&p.signature, []), &p.signature.vars[i].id);
                (VarIdx(i), vals.unwrap()[0].clone())
            })
            .collect();
        let tc = FormalTestCase { switches: path, ini, values: vec![vec![], vec![Value::Bool(false)]] };
        let text = render_test(&tc, &p).unwrap();
        let parsed = parse_testcase(&text).unwrap();
        assert_eq!(parsed.given.len(), 6);
        assert_eq!(parsed.steps.len(), 2);
        let mut broken = tc.clone();
        broken.ini.remove(&VarIdx(0));
        assert_eq!(render_test(&broken, &p), Err(RenderError::MissingValue("availability".into())));
        let mut model = p.clone();
        let mut sig = (*model.signature).clone();
        let g = model.switches[tc.switches[0]].gate;
        sig.gates[g.0].action = None;
        model.signature = std::sync::Arc::new(sig);
        assert!(matches!(render_test(&tc, &model), Err(RenderError::MissingAction(_))));
    }
}
