//! Builds the master model of the case study and prunes it.

use pickles::compose::{master, prune};
use pickles::parser::parse_spec;
use pickles::symbolic::{default_plan, Backtracking, Domains};
use pickles::translate::translate_suite;

const SPEC: &str = include_str!("../data/case_study.pickles");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = translate_suite(&parse_spec(SPEC)?)?;
    for depth in 1..=3 {
        let m = master(&r.primary, &r.all(), depth)?;
        println!("depth {depth}: {} locations, {} switches", m.locations.len(), m.switches.len());
    }
    let m = master(&r.primary, &r.all(), 3)?;
    let plan = default_plan(&r.context.signature, m.switches.iter().map(|s| &s.guard));
    let domains = Domains::new(r.context.signature.clone(), plan);
    let (pruned, report) = prune(&m, &domains, &Backtracking, m.switches.len())?;
    print!("{}", report.render());
    println!("pruned: {} locations, {} switches", pruned.locations.len(), pruned.switches.len());
    Ok(())
}
