// Transport density and flow on two grids: conservation, alignment with
// the potential and the weak divergence condition.

use std::error::Error;

use lgp::instances;
use lgp::pipeline::{run, Options, Stage};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let inst = instances::example_4_6(2048)?;
    let mut residuals = Vec::new();
    for h in [0.08, 0.04] {
        let out = run(inst.clone(), Options { atoms: 128, h, stage: Stage::Density, ..Options::default() });
        let d = out.density.ok_or("density stage did not run")?;
        println!("h = {h}");
        println!("  mass {:.12}, transport length {:.12}", d.total_mass, d.plan_cost);
        println!("  alignment residual {:.5}", d.alignment_residual);
        println!("  weak divergence worst ratio {:.3e} over {} functions", d.divergence.worst_ratio, d.divergence.residuals.len());
        println!("  |sigma|inf / |f|inf = {:.4}", d.linf_ratio);
        if !d.conservation_ok() || !d.divergence.passes() {
            return Err("conservation or divergence check failed".into());
        }
        residuals.push(d.alignment_residual);
    }
    if residuals[1] >= residuals[0] {
        return Err("alignment residual did not decrease under refinement".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
