// Reconstruct the solution for inner datum y and outer datum
// clamp(y, -1, 1) and compare with clamp(y, -1, 1). The inner datum has no
// flat part, so the checks fail and the run is forced.

use std::error::Error;

use lgp::instances;
use lgp::pipeline::{run, Options};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let inst = instances::example_2_3(2048)?;
    let out = run(inst, Options { atoms: 128, h: 0.04, force: true, ..Options::default() });
    let (Some(u), Some(grid)) = (&out.u, &out.grid) else {
        return Err(format!("no reconstruction: {:?}", out.warnings).into());
    };
    let mut l1 = 0.0;
    let mut linf: f64 = 0.0;
    for k in (0..grid.len()).filter(|&k| grid.in_domain(k)) {
        let c = grid.center(k % grid.nx, k / grid.nx);
        let e = (u.values[k] - c.y.clamp(-1.0, 1.0)).abs();
        l1 += e * grid.cell_area();
        linf = linf.max(e);
    }
    let r = out.recovery.as_ref().ok_or("no recovery report")?;
    println!("L1 error {l1:.3e}, max error {linf:.3e}");
    println!("trace errors: outer {:.4}, inner {:.4}", r.trace_l1_outer, r.trace_l1_inner);
    println!("|Du|(L1) {:.4} vs transport cost {:.4}", r.w11, out.plan.as_ref().map_or(0.0, |p| p.cost));
    if l1 > 0.05 {
        return Err("reconstruction is too far from clamp(y, -1, 1)".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
