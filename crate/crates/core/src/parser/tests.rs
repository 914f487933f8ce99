use proptest::prelude::*;

use super::ast::*;
use super::*;

const CASE_STUDY: &str = include_str!("../../data/case_study.pickles");
const SAMPLE_TEST: &str = include_str!("../../data/sample_test.pickles");

fn kind(text: &str) -> ParseErrorKind {
    parse_spec(text).unwrap_err().kind
}

#[test]
fn case_study_shape() {
    let suite = parse_spec(CASE_STUDY).unwrap();
    assert_eq!(suite.variables.len(), 6);
    assert_eq!(suite.scenarios.len(), 4);
    let fd = &suite.variables[2];
    assert_eq!(fd.id, "faulty detectors");
    let TypeDesc::Array { cardinality: Cardinality::AtMost(3), element } = &fd.ty else { panic!("{fd:?}") };
    let TypeDesc::Struct { header, attrs } = &**element else { panic!() };
    assert_eq!(header, &["lane", "length position"]);
    assert_eq!(attrs.len(), 2);
    for sc in &suite.scenarios {
        assert!(sc.given.as_ref().unwrap().initial);
        assert_eq!((sc.when.len(), sc.then.len()), (1, 1));
    }
    let g = suite.scenarios[0].given.as_ref().unwrap();
    assert_eq!(g.referenced, ["enabledness", "availability"]);
    assert_eq!(g.description.as_deref(), Some("the user interface displays information on"));
    assert_eq!(suite.scenarios[3].when[0].action, "the controller access is lost");
    assert!(suite.scenarios[3].when[0].params.is_empty());
    let Some(GuardBlock { clauses, .. }) = &suite.scenarios[0].when[0].guard else { panic!() };
    let Guard::Array { quantifier: Quantifier::All, element } = &clauses[0].guard else { panic!() };
    let Guard::Struct { attrs, conjs } = &**element else { panic!() };
    assert_eq!(attrs.len(), 3);
    assert_eq!(conjs, &[Conj::Or, Conj::Or]);
    assert_eq!(
        attrs[0].1,
        Guard::Compare { op: Op::Ne, rhs: Rhs::Var(VarRef { id: "critical section lane".into(), stored: false }) }
    );
}

#[test]
fn minimal_suite_without_given() {
    let text = "Variable Settings\n\"x\" is a boolean with range {true, false}\n\nScenario s\nWhen x\nThen y\n";
    let suite = parse_spec(text).unwrap();
    assert_eq!(suite.scenarios.len(), 1);
    assert!(suite.scenarios[0].given.is_none());
    assert_eq!(suite.scenarios[0].when[0].action, "x");
}

#[test]
fn then_before_when_is_a_syntax_error() {
    let text = "Variable Settings\n\"x\" is a boolean with range {true, false}\nScenario s\nThen y\nWhen x\n";
    let err = parse_spec(text).unwrap_err();
    assert_eq!((err.line, err.column), (4, 1));
    let ParseErrorKind::Syntax { expected, .. } = err.kind else { panic!() };
    assert!(expected.contains(&"When".to_string()));
}

#[test]
fn semantic_errors() {
    let head = "Variable Settings\n\"x\" is a boolean with range {true, false}\n";
    assert_eq!(
        kind(&format!("{head}Scenario s\nWhen a \"y\" equal to true\nThen b\n")),
        ParseErrorKind::UndeclaredVariable("y".into())
    );
    assert_eq!(
        kind(&format!("{head}\"x\" is an integer with range [1,2]\nScenario s\nWhen a\nThen b\n")),
        ParseErrorKind::DuplicateVariable("x".into())
    );
    assert_eq!(
        kind(&format!("{head}\"s\" is a structure with attributes \"x\" such that:\n  \"x\" is an integer with range [1,2]\nScenario s\nWhen a\nThen b\n")),
        ParseErrorKind::NameCollision("x".into())
    );
    assert_eq!(
        kind(&format!("{head}Scenario s\nWhen a\nThen b\nScenario s\nWhen c\nThen d\n")),
        ParseErrorKind::DuplicateTitle("s".into())
    );
}

#[test]
fn misspelled_attribute_list_is_rejected() {
    let typo = CASE_STUDY.replacen("\"lane\", \"length position\" such", "\"lane\", \"lenght position\" such", 1);
    assert_eq!(kind(&typo), ParseErrorKind::AttributeMismatch("length position".into()));
}

#[test]
fn one_line_form_equals_expanded_form() {
    let expanded = CASE_STUDY.replacen(
        "Then the user interface displays \"availability\" equal to AV",
        "Then the user interface displays \"availability\" such that:\n  \"availability\" is equal to AV",
        1,
    );
    assert_ne!(expanded, CASE_STUDY);
    assert_eq!(parse_spec(&expanded).unwrap(), parse_spec(CASE_STUDY).unwrap());
}

#[test]
fn sample_test_shape() {
    let tc = parse_testcase(SAMPLE_TEST).unwrap();
    assert_eq!(tc.given.len(), 6);
    assert_eq!(tc.steps.len(), 4);
    assert!(matches!(&tc.steps[0], TestStep::Input { params, values, .. } if params.len() == 1 && values.len() == 1));
    assert!(matches!(&tc.steps[2], TestStep::Input { params, .. } if params.is_empty()));
    let ValueAst::Indexed(entries) = &tc.given[5].value else { panic!() };
    assert_eq!(entries.len(), 3);
    assert_eq!(
        entries[0].1,
        ValueAst::Keyed(vec![
            ("lane".into(), ValueAst::Scalar("1".into())),
            ("length position".into(), ValueAst::Scalar("1.5".into()))
        ])
    );
    assert_eq!(tc.given[0].value, ValueAst::Scalar("AV".into()));
}

#[test]
fn testcase_needs_steps() {
    let only_given = "Given the system is initialized with values:\n  \"x\": true\n";
    assert_eq!(parse_testcase(only_given).unwrap_err().kind, ParseErrorKind::NoSteps);
}

#[test]
fn printing_round_trips_and_is_idempotent() {
    let suite = parse_spec(CASE_STUDY).unwrap();
    let once = print_spec(&suite);
    assert_eq!(parse_spec(&once).unwrap(), suite);
    assert_eq!(print_spec(&parse_spec(&once).unwrap()), once);
    assert!(once.contains("Then the user interface displays \"availability\" equal to AV\n"));

    let tc = parse_testcase(SAMPLE_TEST).unwrap();
    let once = print_testcase(&tc);
    assert_eq!(parse_testcase(&once).unwrap(), tc);
    assert_eq!(print_testcase(&parse_testcase(&once).unwrap()), once);
}

#[test]
fn operators_and_ranges() {
    let text = "Variable Settings\n\"a\" is an integer with range [1,9]\n\"b\" is a decimal with range [0.5,2.0)\n\
                Scenario s\nGiven \"a\" such that:\n  \"a\" is between 2 and 4 OR \"a\" has a value greater or equal than stored \"a\"\n\
                When go \"b\" such that:\n  \"b\" is equal to [1.0,1.5] AND \"a\" is lower than 3\nThen done\n";
    let suite = parse_spec(text).unwrap();
    let g = suite.scenarios[0].given.as_ref().unwrap().guard.as_ref().unwrap();
    assert_eq!(g.conjs, [Conj::Or]);
    assert_eq!(g.clauses[0].guard, Guard::Between { lo: Rhs::Literal("2".into()), hi: Rhs::Literal("4".into()) });
    assert_eq!(
        g.clauses[1].guard,
        Guard::Compare { op: Op::Ge, rhs: Rhs::Var(VarRef { id: "a".into(), stored: true }) }
    );
    let TypeDesc::Primitive { range, .. } = &suite.variables[1].ty else { panic!() };
    assert_eq!(range, &RangeAst::Interval { lo: "0.5".into(), lo_closed: true, hi: "2.0".into(), hi_closed: false });
    assert_eq!(parse_spec(&print_spec(&suite)).unwrap(), suite);
}

// ---- generated suites ----

const VARS: [&str; 6] = ["alpha", "beta", "gamma", "delta", "eps", "zeta"];
const ATTRS: [&str; 4] = ["lane", "pos", "k1", "k2"];

fn literal() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["1", "2.5", "AV", "PART AV", "true", "x y z", "AND so", "(paren", "OR", "a,b"])
        .prop_map(str::to_string)
}

fn var_ref() -> impl Strategy<Value = VarRef> {
    (prop::sample::select(VARS.to_vec()), any::<bool>()).prop_map(|(id, stored)| VarRef { id: id.into(), stored })
}

fn range_ast() -> impl Strategy<Value = RangeAst> {
    prop_oneof![
        prop::collection::vec(prop::sample::select(vec!["a", "b c", "1"]), 1..4)
            .prop_map(|v| RangeAst::Set(v.into_iter().map(String::from).collect())),
        (any::<bool>(), any::<bool>()).prop_map(|(l, h)| RangeAst::Interval {
            lo: "1.0".into(),
            lo_closed: l,
            hi: "3".into(),
            hi_closed: h
        }),
    ]
}

fn rhs() -> impl Strategy<Value = Rhs> {
    prop_oneof![literal().prop_map(Rhs::Literal), range_ast().prop_map(Rhs::Range), var_ref().prop_map(Rhs::Var)]
}

fn prim_guard() -> impl Strategy<Value = Guard> {
    let op = prop::sample::select(vec![Op::Eq, Op::Ne, Op::Gt, Op::Lt, Op::Le, Op::Ge]);
    let operand = prop_oneof![literal().prop_map(Rhs::Literal), var_ref().prop_map(Rhs::Var)];
    prop_oneof![
        4 => (op, rhs()).prop_map(|(op, rhs)| Guard::Compare { op, rhs }),
        1 => (operand.clone(), operand).prop_map(|(lo, hi)| Guard::Between { lo, hi }),
    ]
}

fn conj() -> impl Strategy<Value = Conj> {
    prop_oneof![Just(Conj::And), Just(Conj::Or)]
}

fn struct_guard() -> impl Strategy<Value = Guard> {
    prop::collection::vec((prop::sample::select(ATTRS.to_vec()), prim_guard(), conj()), 1..4).prop_map(|items| {
        let n = items.len();
        let conjs = items.iter().take(n - 1).map(|(_, _, c)| *c).collect();
        let attrs = items.into_iter().map(|(k, g, _)| (k.to_string(), g)).collect();
        Guard::Struct { attrs, conjs }
    })
}

fn quantifier() -> impl Strategy<Value = Quantifier> {
    prop_oneof![
        (0u32..4).prop_map(Quantifier::AtLeast),
        (0u32..4).prop_map(Quantifier::AtMost),
        (0u32..4).prop_map(Quantifier::Exactly),
        Just(Quantifier::All),
    ]
}

fn guard() -> impl Strategy<Value = Guard> {
    prop_oneof![
        3 => prim_guard(),
        1 => struct_guard(),
        1 => (quantifier(), prop_oneof![prim_guard(), struct_guard()])
            .prop_map(|(quantifier, e)| Guard::Array { quantifier, element: Box::new(e) }),
    ]
}

fn guard_block() -> impl Strategy<Value = GuardBlock> {
    prop::collection::vec((var_ref(), guard(), conj()), 1..4).prop_map(|items| {
        let n = items.len();
        let conjs = items.iter().take(n - 1).map(|(_, _, c)| *c).collect();
        let clauses = items.into_iter().map(|(var, guard, _)| GuardClause { var, guard }).collect();
        GuardBlock { clauses, conjs }
    })
}

fn step(kind: StepKind) -> impl Strategy<Value = Step> {
    let action = prop::sample::select(vec!["the user presses", "the display shows", "the access is lost"]);
    let params = prop::sample::subsequence(VARS.to_vec(), 0..3);
    (action, params, guard_block()).prop_map(move |(action, params, gb)| Step {
        kind,
        action: action.into(),
        guard: if params.is_empty() { None } else { Some(gb) },
        params: params.into_iter().map(String::from).collect(),
    })
}

fn given() -> impl Strategy<Value = Given> {
    (
        any::<bool>(),
        prop::option::of(prop::sample::select(vec!["the screen shows", "information on"])),
        prop::sample::subsequence(VARS.to_vec(), 0..3),
        prop::option::of(guard_block()),
    )
        .prop_map(|(initial, d, refs, guard)| Given {
            initial,
            description: d.map(String::from),
            referenced: refs.into_iter().map(String::from).collect(),
            guard,
        })
}

fn declarations() -> Vec<VarDecl> {
    let text = "Variable Settings\n\
        \"alpha\" is a boolean with range {true, false}\n\
        \"beta\" is an integer with range [1,3]\n\
        \"gamma\" is a string with range {AV, PART AV}\n\
        \"delta\" is a decimal with range (1.0,3.0]\n\
        \"eps\" is an array of between 1 and 2 elements where each element is a structure with attributes \"lane\", \"pos\" such that:\n\
          \"lane\" is an integer with range [1,3]\n\
          \"pos\" is a decimal with range (1.0,3.0)\n\
        \"zeta\" is a structure with attributes \"k1\", \"k2\" such that:\n\
          \"k1\" is an integer with range [1]\n\
          \"k2\" is an array of exactly 2 elements where each element is a string with range {a, b}\n\
        Scenario s\nWhen a\nThen b\n";
    parse_spec(text).unwrap().variables
}

fn suite() -> impl Strategy<Value = SpecSuite> {
    let scenario = (
        prop::option::of(given()),
        prop::collection::vec(step(StepKind::Input), 1..3),
        prop::collection::vec(step(StepKind::Output), 1..3),
    );
    prop::collection::vec(scenario, 1..4).prop_map(|scs| SpecSuite {
        variables: declarations(),
        scenarios: scs
            .into_iter()
            .enumerate()
            .map(|(i, (given, when, then))| Scenario { title: format!("{i:02}: generated"), given, when, then })
            .collect(),
    })
}

fn value_ast(depth: u32) -> BoxedStrategy<ValueAst> {
    let scalar = literal().prop_map(ValueAst::Scalar);
    if depth == 0 {
        return scalar.boxed();
    }
    prop_oneof![
        2 => scalar,
        1 => prop::collection::vec((prop::sample::select(ATTRS.to_vec()), value_ast(depth - 1)), 1..3)
            .prop_map(|kv| ValueAst::Keyed(kv.into_iter().map(|(k, v)| (k.to_string(), v)).collect())),
        1 => prop::collection::vec(value_ast(depth - 1), 1..3)
            .prop_map(|vs| ValueAst::Indexed(vs.into_iter().enumerate().map(|(i, v)| (i + 1, v)).collect())),
    ]
    .boxed()
}

fn testcase() -> impl Strategy<Value = TestCase> {
    let given = prop::collection::vec(value_ast(2), VARS.len())
        .prop_map(|vs| VARS.iter().zip(vs).map(|(id, value)| ValueDef { id: id.to_string(), value }).collect());
    let input = (prop::sample::subsequence(VARS.to_vec(), 0..3), prop::collection::vec(value_ast(2), 3)).prop_map(
        |(params, vals)| TestStep::Input {
            action: "the user presses".into(),
            values: params.iter().zip(vals).map(|(p, value)| ValueDef { id: p.to_string(), value }).collect(),
            params: params.into_iter().map(String::from).collect(),
        },
    );
    let steps = prop::collection::vec(prop_oneof![input, step(StepKind::Output).prop_map(TestStep::Output)], 1..5);
    (given, steps).prop_map(|(given, steps)| TestCase { given, steps })
}

proptest! {
    #[test]
    fn generated_suites_round_trip(s in suite()) {
        let text = print_spec(&s);
        let back = parse_spec(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &s, "{}", text);
        prop_assert_eq!(print_spec(&back), text);
    }

    #[test]
    fn generated_testcases_round_trip(t in testcase()) {
        let text = print_testcase(&t);
        let back = parse_testcase(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &t, "{}", text);
    }

    #[test]
    fn arbitrary_text_never_panics(s in "\\PC{0,200}") {
        let _ = parse_spec(&s);
        let _ = parse_testcase(&s);
    }

    #[test]
    fn mangled_case_study_never_panics(cut in 0usize..2000, len in 0usize..40, insert in "[\"a-z :{}\\[\\]\n]{0,6}") {
        let mut text: String = CASE_STUDY.to_string();
        let at = text.char_indices().map(|(i, _)| i).nth(cut % text.chars().count()).unwrap_or(0);
        let end = text[at..].char_indices().map(|(i, _)| at + i).nth(len).unwrap_or(text.len());
        text.replace_range(at..end, &insert);
        let _ = parse_spec(&text);
        let mut tc = SAMPLE_TEST.to_string();
        let at = cut % tc.len();
        if tc.is_char_boundary(at) {
            tc.insert_str(at, &insert);
        }
        let _ = parse_testcase(&tc);
    }
}
