//! Exports the pruned master and its test suite as JSON and reads them back.

use pickles::compose::{master, prune};
use pickles::json::{export_sts, export_tests, import_sts, import_tests};
use pickles::parser::parse_spec;
use pickles::symbolic::{default_plan, Backtracking, Domains};
use pickles::testgen::generate_switch_coverage;
use pickles::translate::translate_suite;

const SPEC: &str = include_str!("../data/case_study.pickles");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = translate_suite(&parse_spec(SPEC)?)?;
    let m = master(&r.primary, &r.all(), 3)?;
    let plan = default_plan(&r.context.signature, m.switches.iter().map(|s| &s.guard));
    let domains = Domains::new(r.context.signature.clone(), plan);
    let (pruned, _) = prune(&m, &domains, &Backtracking, m.switches.len())?;
    let suite = generate_switch_coverage(&pruned, &domains, &Backtracking, 3)?;

    let model_json = export_sts(&pruned);
    let model = import_sts(&model_json)?;
    let tests_json = export_tests(&suite, &model);
    let tests = import_tests(&tests_json, &model)?;
    println!("model: {} bytes, identical after re-export: {}", model_json.len(), export_sts(&model) == model_json);
    println!(
        "tests: {} bytes, identical after re-export: {}",
        tests_json.len(),
        export_tests(&tests, &model) == tests_json
    );
    let first = String::from_utf8(tests_json)?;
    println!("{}", first.lines().take(12).collect::<Vec<_>>().join("\n"));
    Ok(())
}
