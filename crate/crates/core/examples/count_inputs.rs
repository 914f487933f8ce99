//! Counts the detector reports each case-study scenario accepts for one
//! fixed critical section and four sampled length positions.

use std::collections::BTreeMap;

use pickles::compose::{master, prune};
use pickles::parser::parse_spec;
use pickles::symbolic::{count_satisfying_inputs, default_plan, Backtracking, Domains};
use pickles::translate::translate_suite;
use pickles::value::{SamplingPlan, Value};

const SPEC: &str = include_str!("../data/case_study.pickles");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = translate_suite(&parse_spec(SPEC)?)?;
    let sig = r.context.signature.clone();
    let mut plan = SamplingPlan::new();
    let positions = ["1.001", "1.6", "1.9", "2.999"].iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
    plan.set("faulty detectors.length position", positions);
    let domains = Domains::new(sig.clone(), plan);
    let m = master(&r.primary, &r.all(), 3)?;
    let boundaries = Domains::new(sig.clone(), default_plan(&sig, m.switches.iter().map(|s| &s.guard)));
    let (pruned, _) = prune(&m, &boundaries, &Backtracking, m.switches.len())?;
    let v = |id: &str| sig.var(id).expect("declared");
    let fixed = BTreeMap::from([
        (v("availability"), Value::Str("AV".into())),
        (v("enabledness"), Value::Bool(true)),
        (v("critical section lane"), Value::Int(1)),
        (v("critical section start"), Value::Dec("1.5".parse()?)),
        (v("critical section end"), Value::Dec("2.0".parse()?)),
    ]);
    for k in pruned.initial_switches() {
        let scenario = pruned.switches[k].origin.as_ref().map(|o| o.scenario).unwrap_or_default();
        let n = count_satisfying_inputs(&pruned, k, &fixed, &domains)?;
        println!("{}: {n}", sig.scenarios[scenario]);
    }
    Ok(())
}
