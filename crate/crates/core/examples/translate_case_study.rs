//! Parses the case-study specification and prints each scenario's STS.

use pickles::parser::parse_spec;
use pickles::translate::translate_suite;

const SPEC: &str = include_str!("../data/case_study.pickles");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = translate_suite(&parse_spec(SPEC)?)?;
    let sig = &r.context.signature;
    for g in &sig.gates {
        println!("gate {} ({}) {:?}", g.name, g.direction, g.action.as_deref().unwrap_or(""));
    }
    for s in r.all() {
        println!("\n{} locations, initial {}", s.locations.len(), s.initial);
        for sw in &s.switches {
            println!("  {} -[{}]-> {}  when {}", sw.source, sig.gate(sw.gate).name, sw.target, sig.show(&sw.guard));
        }
    }
    Ok(())
}
