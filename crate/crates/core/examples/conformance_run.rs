//! Runs the generated suite against the reference controller and each of
//! its mutants, then runs the hand-written example test.

use pickles::compose::{master, prune};
use pickles::conformance::{run_test, Mutant, ReferenceSut, DEFAULT_TIMEOUT};
use pickles::parser::parse_spec;
use pickles::render::render_test;
use pickles::symbolic::{default_plan, Backtracking, Domains};
use pickles::testgen::generate_switch_coverage;
use pickles::translate::translate_suite;

const SPEC: &str = include_str!("../data/case_study.pickles");
const EXAMPLE: &str = include_str!("../data/sample_test.pickles");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = translate_suite(&parse_spec(SPEC)?)?;
    let m = master(&r.primary, &r.all(), 3)?;
    let plan = default_plan(&r.context.signature, m.switches.iter().map(|s| &s.guard));
    let domains = Domains::new(r.context.signature.clone(), plan);
    let (pruned, _) = prune(&m, &domains, &Backtracking, m.switches.len())?;
    let texts = generate_switch_coverage(&pruned, &domains, &Backtracking, 3)?
        .iter()
        .map(|t| render_test(t, &pruned))
        .collect::<Result<Vec<_>, _>>()?;
    let sut = || ReferenceSut::new(&r.context.signature);
    let mut passed = 0;
    for text in &texts {
        passed += usize::from(run_test(text, &mut sut()?, &r.context, DEFAULT_TIMEOUT)?.verdict.passed());
    }
    println!("reference: {passed}/{} pass", texts.len());
    for mutant in Mutant::ALL {
        let mut killed = 0;
        for text in &texts {
            killed += usize::from(
                !run_test(text, &mut sut()?.mutated(mutant), &r.context, DEFAULT_TIMEOUT)?.verdict.passed(),
            );
        }
        println!("{mutant:?}: killed by {killed} tests");
    }
    let run = run_test(EXAMPLE, &mut sut()?, &r.context, DEFAULT_TIMEOUT)?;
    println!("example test: {}", run.verdict);
    Ok(())
}
