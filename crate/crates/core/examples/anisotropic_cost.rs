// The same instance under p-norm costs: separation margins and optimal
// costs change with p while the certificates keep holding.

use std::error::Error;

use lgp::instances;
use lgp::pipeline::{run, Options, Stage};
use lgp::transport::CostNorm;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for norm in [CostNorm::Euclidean, CostNorm::PNorm { p: 1.5 }, CostNorm::PNorm { p: 4.0 }] {
        let out = run(instances::example_4_6(1024)?, Options { atoms: 48, norm, stage: Stage::Solve, trials: 2000, ..Options::default() });
        let margin = out.admissibility.h4_margins.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min);
        let plan = out.plan.as_ref().ok_or("not solved")?;
        println!("{norm:>10}: margin {margin:.5}, cost {:.6}, failures {:?}", plan.cost, out.certificate_failures());
        if !out.certificate_failures().is_empty() {
            return Err(format!("{norm}: certificate failure").into());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
