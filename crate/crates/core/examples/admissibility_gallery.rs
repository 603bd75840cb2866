// Every built-in instance through the admissibility checker.

use std::error::Error;

use lgp::admissibility::{check_all, Verdict};
use lgp::boundary::decompose;
use lgp::instances::{self, Instance};
use lgp::transport::CostNorm;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let gallery: Vec<(Instance, Verdict)> = vec![
        (instances::example_4_6(2048)?, Verdict::Pass),
        (instances::example_4_6_adjacent(2048)?, Verdict::Fail),
        (instances::example_2_3(2048)?, Verdict::Fail),
        (instances::example_6_2(2048)?, Verdict::Fail),
        (instances::example_6_4(4096)?, Verdict::Fail),
        (instances::constant(1.5)?, Verdict::Pass),
        (instances::random_admissible(7, 2048)?, Verdict::Pass),
    ];
    for (inst, expected) in gallery {
        let dec = decompose(&inst.data, None);
        let r = check_all(&inst.annulus, &inst.data, &dec, &CostNorm::Euclidean);
        println!("{:<24} overall {:<5}", inst.name, r.overall.name());
        for c in r.gating() {
            let first = c.witnesses.first().map(String::as_str).unwrap_or("");
            println!("    {} {:<7} {first}", c.name, c.verdict.name());
        }
        if r.overall != expected {
            return Err(format!("{}: expected {}, got {}", inst.name, expected.name(), r.overall.name()).into());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
