// Atomize the boundary measure, solve the transport problem exactly and
// verify the plan against its optimality certificates.

use std::error::Error;

use lgp::boundary::{decompose, tangential_derivative};
use lgp::instances;
use lgp::transport::{atomize, solve, CertificateReport, CostNorm};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let inst = instances::example_4_6(2048)?;
    let dec = decompose(&inst.data, None);
    let f = tangential_derivative(&inst.data);
    let (plus, minus) = atomize(&inst.annulus, &f, &dec, 64);
    let plan = solve(&plus, &minus, CostNorm::Euclidean)?;
    let c = CertificateReport::compute(&plan, &inst.annulus, &dec, 10_000, 0);
    println!("{} sources, {} targets, {} pairs, cost {:.12}", plus.len(), minus.len(), plan.pairs.len(), plan.cost);
    println!("marginal residual     {:.3e}", c.marginal_residual);
    println!("duality gap           {:.3e}", c.duality_gap);
    println!("support residual      {:.3e}", c.support_residual);
    println!("Lipschitz violation   {:.3e}", c.lipschitz_violation);
    println!("monotonicity failures {} / {}", c.monotonicity_violations, c.monotonicity_trials);
    println!("crossing rays         {}", c.crossings);
    println!("rays outside          {}", c.rays_outside);
    let ok = c.marginal_residual <= 1e-12
        && c.duality_gap <= 1e-8
        && c.support_residual <= c.eps_dual
        && c.monotonicity_violations == 0
        && c.crossings == 0
        && c.rays_outside == 0;
    if !ok {
        return Err("a certificate failed".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
