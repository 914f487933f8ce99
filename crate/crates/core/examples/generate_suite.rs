//! Generates a switch-coverage suite for the pruned case-study master.

use pickles::compose::{master, prune};
use pickles::parser::parse_spec;
use pickles::symbolic::{default_plan, Backtracking, Domains};
use pickles::testgen::{coverage_of, generate_switch_coverage};
use pickles::translate::translate_suite;

const SPEC: &str = include_str!("../data/case_study.pickles");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = translate_suite(&parse_spec(SPEC)?)?;
    let m = master(&r.primary, &r.all(), 3)?;
    let plan = default_plan(&r.context.signature, m.switches.iter().map(|s| &s.guard));
    let domains = Domains::new(r.context.signature.clone(), plan);
    let (pruned, _) = prune(&m, &domains, &Backtracking, m.switches.len())?;
    let suite = generate_switch_coverage(&pruned, &domains, &Backtracking, 3)?;
    for (i, t) in suite.iter().enumerate() {
        println!("test {}: switches {:?}", i + 1, t.switches);
    }
    print!("{}", coverage_of(&suite, &pruned)?.render());
    Ok(())
}
