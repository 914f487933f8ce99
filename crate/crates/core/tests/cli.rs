use std::fs;
use std::path::{Path, PathBuf};

use pickles::cli::main_with_args;

const CASE_STUDY: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/case_study.pickles");
const SAMPLE_TEST: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample_test.pickles");

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Out {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let code = main_with_args(std::iter::once("pickles").chain(args.iter().copied()), &mut stdout, &mut stderr);
    Out { code, stdout: String::from_utf8(stdout).unwrap(), stderr: String::from_utf8(stderr).unwrap() }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn translated(dir: &Path) -> PathBuf {
    let model = dir.join("master.json");
    let out = run(&["translate-spec", CASE_STUDY, "--out", s(&model)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    model
}

fn switch_starting(model: &Path, scenario: u64) -> usize {
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(model).unwrap()).unwrap();
    doc["switches"]
        .as_array()
        .unwrap()
        .iter()
        .find(|sw| sw["source"] == doc["initial"] && sw["origin"]["scenario"] == scenario)
        .unwrap()["id"]
        .as_u64()
        .unwrap() as usize
}

#[test]
fn translate_reports_pruning_and_writes_models() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("master.json");
    let per = dir.path().join("scenarios");
    let out = run(&["translate-spec", CASE_STUDY, "--out", s(&model), "--per-scenario-dir", s(&per)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("48 switches before pruning"));
    assert!(out.stdout.contains("pruning kept 28 switches and removed 20 switches"));
    assert!(out.stdout.contains("d1/s4.l2 -[i2]-> d2/s4.l1 (04: lost controller access disables the system)"));
    assert_eq!(fs::read_dir(&per).unwrap().count(), 4);
    let shallow = dir.path().join("shallow.json");
    let out = run(&["translate-spec", CASE_STUDY, "--depth", "2", "--out", s(&shallow)]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("28 switches before pruning"), "{}", out.stdout);
}

#[test]
fn undeclared_variable_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.pickles");
    let text = fs::read_to_string(CASE_STUDY)
        .unwrap()
        .replace("When the controller detects \"faulty detectors\"", "When the controller detects \"faulty sensors\"");
    fs::write(&spec, text).unwrap();
    let out = run(&["translate-spec", s(&spec), "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("faulty sensors"), "{}", out.stderr);
    assert_eq!(run(&["translate-spec", "/nonexistent/spec.pickles"]).code, 1);
    assert_eq!(run(&["frobnicate"]).code, 1);
    assert_eq!(run(&["--help"]).code, 0);
}

#[test]
fn generate_render_run_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let model = translated(dir.path());
    let tests = dir.path().join("case_study.json");
    let out = run(&["generate", s(&model), "--out", s(&tests)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("switch coverage 28/28 (100.0%) with 10 tests"), "{}", out.stdout);
    let again = dir.path().join("again.json");
    run(&["generate", s(&model), "--out", s(&again)]);
    assert_eq!(fs::read(&tests).unwrap(), fs::read(&again).unwrap());

    let rendered = dir.path().join("rendered");
    let out = run(&["render-tests", s(&model), s(&tests), "--out", s(&rendered)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let mut files: Vec<PathBuf> = fs::read_dir(&rendered).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), 10);
    assert!(rendered.join("case_study_test_1.pickles").exists());

    let mut args = vec!["run", s(&model)];
    args.extend(files.iter().map(|f| s(f)));
    let out = run(&args);
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    assert!(out.stdout.ends_with("10 of 10 tests passed\n"));
    for mutant in ["none-inside-partial", "one-inside-available", "many-inside-available", "access-lost-stays-enabled"]
    {
        let mut margs = args.clone();
        margs.extend(["--mutant", mutant]);
        assert_eq!(run(&margs).code, 1, "{mutant} survives");
    }
}

#[test]
fn empty_suite_renders_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let model = translated(dir.path());
    let tests = dir.path().join("empty.json");
    fs::write(&tests, "{\"pickles-schema\": 1, \"tests\": []}").unwrap();
    let out_dir = dir.path().join("none");
    let out = run(&["render-tests", s(&model), s(&tests), "--out", s(&out_dir)]);
    assert_eq!(out.code, 0);
    assert_eq!(fs::read_dir(&out_dir).unwrap().count(), 0);
}

#[test]
fn missing_action_names_the_gate() {
    let dir = tempfile::tempdir().unwrap();
    let model = translated(dir.path());
    let tests = dir.path().join("t.json");
    run(&["generate", s(&model), "--out", s(&tests)]);
    let mut doc: serde_json::Value = serde_json::from_slice(&fs::read(&model).unwrap()).unwrap();
    doc["gates"][0].as_object_mut().unwrap().remove("action");
    fs::write(&model, serde_json::to_vec(&doc).unwrap()).unwrap();
    let out = run(&["render-tests", s(&model), s(&tests), "--out", s(&dir.path().join("r"))]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("gate i1"), "{}", out.stderr);
}

#[test]
fn input_counts() {
    let dir = tempfile::tempdir().unwrap();
    let model = translated(dir.path());
    let fixed = dir.path().join("fixed.json");
    fs::write(
        &fixed,
        r#"{"availability": "AV", "enabledness": true, "critical section lane": 1,
            "critical section start": "1.5", "critical section end": "2.0"}"#,
    )
    .unwrap();
    let samples = dir.path().join("samples.json");
    fs::write(&samples, r#"{"faulty detectors.length position": ["1.001", "1.6", "1.9", "2.999"]}"#).unwrap();
    for (scenario, expected) in [(0, "175\n"), (1, "112\n"), (2, "11\n")] {
        let k = switch_starting(&model, scenario).to_string();
        let out = run(&["count-inputs", s(&model), "--switch", &k, "--fixed", s(&fixed), "--samples", s(&samples)]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        assert_eq!(out.stdout, expected);
    }
    let out = run(&["count-inputs", s(&model), "--switch", "1", "--fixed", s(&fixed), "--samples", s(&samples)]);
    assert_eq!(out.code, 1);
}

#[test]
fn sample_test_fails_against_reference() {
    let dir = tempfile::tempdir().unwrap();
    let model = translated(dir.path());
    let out = run(&["run", s(&model), SAMPLE_TEST]);
    assert_eq!(out.code, 1);
    assert!(out.stdout.contains("fail at step 1: observed [PART AV]"), "{}", out.stdout);
}

#[test]
fn bad_model_json_points_at_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let model = translated(dir.path());
    let mut doc: serde_json::Value = serde_json::from_slice(&fs::read(&model).unwrap()).unwrap();
    doc["switches"][3]["source"] = "nowhere".into();
    fs::write(&model, serde_json::to_vec(&doc).unwrap()).unwrap();
    let out = run(&["generate", s(&model), "--out", s(&dir.path().join("t.json"))]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("/switches/3/source"), "{}", out.stderr);
}

#[test]
fn unsatisfiable_model_gives_empty_suite() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("dead.pickles");
    fs::write(
        &spec,
        "Variable Settings\n\"n\" is an integer with range [0,10]\n\nScenario: never\nGiven the system is in its initial state\n\
         When the user sends \"n\" such that:\n  \"n\" is greater than 5 AND\n  \"n\" is lower than 3\nThen the display shows \"n\" equal to 4\n",
    )
    .unwrap();
    let model = dir.path().join("m.json");
    let out = run(&["translate-spec", s(&spec), "--out", s(&model)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("pruning kept 0 switches"), "{}", out.stdout);
    let tests = dir.path().join("t.json");
    let out = run(&["generate", s(&model), "--out", s(&tests)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.starts_with("warning: the model has no satisfiable switches"));
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(&tests).unwrap()).unwrap();
    assert_eq!(doc["tests"], serde_json::json!([]));
}
