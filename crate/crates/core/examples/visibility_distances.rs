// Arc decomposition and the separation inequality on the annulus between
// radii 1 and 2 with data clamp((y+1)/2, 0, 1) outside and clamp(y+1/2, 0, 1)
// inside.

use std::error::Error;

use lgp::admissibility::check_all;
use lgp::boundary::decompose;
use lgp::geometry::{arc_set_max_distance, arc_set_min_distance, Side};
use lgp::instances;
use lgp::transport::CostNorm;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let inst = instances::example_4_6(4096)?;
    let a = &inst.annulus;
    let dec = decompose(&inst.data, None);
    let norm = CostNorm::Euclidean;
    for f in dec.families() {
        println!(
            "{}: {} arc at s={:.4} (+{:.4}) -> {} arc at s={:.4} (+{:.4})",
            f.label(),
            f.source.side,
            f.source.start,
            f.source.length,
            f.target.side,
            f.target.start,
            f.target.length
        );
        let dm = arc_set_max_distance(a, &[f.source], &[f.target], &norm).unwrap_or(f64::NAN);
        println!("  largest distance across the family: {dm:.6}");
    }
    let arcs = |side: Side| -> Vec<_> {
        dec.families().iter().flat_map(|f| [f.source, f.target]).filter(|x| x.side == side).collect()
    };
    let (outer, inner) = (arcs(Side::Outer), arcs(Side::Inner));
    if let ([o0, o1], [i0, i1]) = (outer.as_slice(), inner.as_slice()) {
        println!("outer arcs apart by {:.6}", arc_set_min_distance(a, &[*o0], &[*o1], &norm).unwrap_or(f64::NAN));
        println!("inner arcs apart by {:.6}", arc_set_min_distance(a, &[*i0], &[*i1], &norm).unwrap_or(f64::NAN));
    }
    let report = check_all(a, &inst.data, &dec, &norm);
    for m in &report.h4_margins {
        println!("{}: {:.6} < {:.6}, margin {:.6} (sqrt 3 = {:.6})", m.family, m.lhs, m.rhs, m.margin, 3f64.sqrt());
    }
    if report.h4_margins.iter().any(|m| (m.margin - 3f64.sqrt()).abs() > 1e-3) {
        return Err("separation margin differs from sqrt 3".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
