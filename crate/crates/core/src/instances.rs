//! Built-in instances: the worked examples on concentric circles and a few
//! variants used by tests and the acceptance suite.

use crate::boundary::{BoundaryFunction, ComponentFunction};
use crate::error::Result;
use crate::geometry::{Annulus, ConvexBoundary, Point, Side};

/// A domain with its boundary datum.
#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub annulus: Annulus,
    pub data: BoundaryFunction,
}

/// `clamp(a x + b y + c, lo, hi)` on each curve.
pub type Linear = (f64, f64, f64, f64, f64);

pub fn on_annulus(name: &str, annulus: Annulus, outer: Linear, inner: Linear) -> Result<Instance> {
    let (a, b, c, lo, hi) = outer;
    let go = ComponentFunction::clamped_linear(&annulus.outer, a, b, c, lo, hi)?;
    let (a, b, c, lo, hi) = inner;
    let gi = ComponentFunction::clamped_linear(&annulus.inner, a, b, c, lo, hi)?;
    Ok(Instance { name: name.into(), data: BoundaryFunction::new(go, gi)?, annulus })
}

const INF: f64 = f64::INFINITY;

/// `B(0,2) \ B(0,1)`, outer datum `clamp((y+1)/2, 0, 1)`, inner
/// `clamp(y + 1/2, 0, 1)`.
pub fn example_4_6(n: usize) -> Result<Instance> {
    let a = Annulus::concentric_circles(Point::default(), 1.0, 2.0, n)?;
    on_annulus("example_4_6", a, (0.0, 0.5, 0.5, 0.0, 1.0), (0.0, 1.0, 0.5, 0.0, 1.0))
}

/// Example 4.6 moved by a similarity: scale, rotation by `angle`, then
/// translation. The datum is carried along with the geometry.
pub fn example_4_6_transformed(n: usize, scale: f64, angle: f64, shift: Point) -> Result<Instance> {
    let base = Annulus::concentric_circles(Point::default(), 1.0, 2.0, n)?;
    let map = |p: Point| p.rotated(angle) * scale + shift;
    let curve = |b: &ConvexBoundary| {
        ConvexBoundary::from_vertices(b.side(), b.vertices().iter().map(|&p| map(p)).collect(), b.sampling_tolerance() * scale)
    };
    let annulus = Annulus::new(curve(&base.outer)?, curve(&base.inner)?)?;
    // y in the original frame as an affine function of the new coordinates.
    let (sn, cs) = angle.sin_cos();
    let (a, b) = (-sn / scale, cs / scale);
    let c = -(a * shift.x + b * shift.y);
    on_annulus(
        "example_4_6_transformed",
        annulus,
        (0.5 * a, 0.5 * b, 0.5 * c + 0.5, 0.0, 1.0),
        (a, b, c + 0.5, 0.0, 1.0),
    )
}

/// Example 4.6 with the outer flat parts removed: the two outer families
/// touch, and the separation inequality fails.
pub fn example_4_6_adjacent(n: usize) -> Result<Instance> {
    let a = Annulus::concentric_circles(Point::default(), 1.0, 2.0, n)?;
    on_annulus("example_4_6_adjacent", a, (0.0, 0.25, 0.5, -INF, INF), (0.0, 1.0, 0.5, 0.0, 1.0))
}

/// `B(0,2) \ B(0,1)`, outer `clamp(y, -1, 1)`, inner `y`; the solution is
/// `clamp(y, -1, 1)`.
pub fn example_2_3(n: usize) -> Result<Instance> {
    let a = Annulus::concentric_circles(Point::default(), 1.0, 2.0, n)?;
    on_annulus("example_2_3", a, (0.0, 1.0, 0.0, -1.0, 1.0), (0.0, 1.0, 0.0, -INF, INF))
}

/// Outer `y`, inner `0`: no admissible pairing.
pub fn example_6_2(n: usize) -> Result<Instance> {
    let a = Annulus::concentric_circles(Point::default(), 1.0, 2.0, n)?;
    on_annulus("example_6_2", a, (0.0, 1.0, 0.0, -INF, INF), (0.0, 0.0, 0.0, -INF, INF))
}

/// Thin annulus between radii 10 and 9.9; outer `clamp(y, 0, 1)`, inner
/// `clamp(x, 0, 1)`. Paired arcs see each other only through the hole.
pub fn example_6_4(n: usize) -> Result<Instance> {
    let a = Annulus::concentric_circles(Point::default(), 9.9, 10.0, n)?;
    on_annulus("example_6_4", a, (0.0, 1.0, 0.0, 0.0, 1.0), (1.0, 0.0, 0.0, 0.0, 1.0))
}

/// Constant datum on the Example 4.6 geometry.
pub fn constant(value: f64) -> Result<Instance> {
    let annulus = Annulus::concentric_circles(Point::default(), 1.0, 2.0, 1024)?;
    let data = BoundaryFunction::constant(&annulus, value)?;
    Ok(Instance { name: "zero".into(), annulus, data })
}

/// Example 4.6 geometry with equal-valued piecewise-linear data drawn from
/// a seed: one rising and one falling ramp per curve, matched in height, so
/// that the pairing condition holds by construction.
pub fn random_paired(seed: u64, n: usize) -> Result<Instance> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let annulus = Annulus::concentric_circles(Point::default(), 1.0, 2.0, n)?;
    let height: f64 = rng.gen_range(0.2..3.0);
    let base: f64 = rng.gen_range(-2.0..2.0);
    let mut comp = |side: Side, lo_frac: (f64, f64)| -> Result<ComponentFunction> {
        let p = annulus.boundary(side).perimeter();
        // Rising on the right, falling on the left, with flat parts near the
        // poles: breakpoints in arclength fractions.
        let r0: f64 = rng.gen_range(lo_frac.0..lo_frac.1);
        let r1: f64 = rng.gen_range(0.27..0.32);
        let f0: f64 = rng.gen_range(0.55..0.60);
        let f1: f64 = rng.gen_range(0.77..0.82);
        // Intermediate breakpoint gives a non-uniform density.
        let mid: f64 = rng.gen_range(0.2..0.8);
        let midv: f64 = rng.gen_range(0.1..0.9);
        let bp = vec![
            (r0 * p, base),
            ((r0 + mid * (r1 - r0)) * p, base + midv * height),
            (r1 * p, base + height),
            (f0 * p, base + height),
            (f1 * p, base),
        ];
        ComponentFunction::from_table(side, p, &bp, &[])
    };
    let go = comp(Side::Outer, (-0.22, -0.17))?;
    let gi = comp(Side::Inner, (-0.22, -0.17))?;
    Ok(Instance { name: format!("random_{seed}"), annulus, data: BoundaryFunction::new(go, gi)? })
}

/// Example 4.6 geometry with seeded data passing the visibility and
/// separation conditions: a rising and a falling ramp per curve, each
/// within 25 degrees of a common axis, with flat parts in between.
pub fn random_admissible(seed: u64, n: usize) -> Result<Instance> {
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{PI, TAU};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let annulus = Annulus::concentric_circles(Point::default(), 1.0, 2.0, n)?;
    let height: f64 = rng.gen_range(0.2..3.0);
    let base: f64 = rng.gen_range(-2.0..2.0);
    let axis: f64 = rng.gen_range(0.0..TAU);
    let mut comp = |side: Side| -> Result<ComponentFunction> {
        let p = annulus.boundary(side).perimeter();
        let at = |theta: f64| theta.rem_euclid(TAU) / TAU * p;
        let half_up: f64 = rng.gen_range(0.15..0.44);
        let half_down: f64 = rng.gen_range(0.15..0.44);
        let mid: f64 = rng.gen_range(0.2..0.8);
        let midv: f64 = rng.gen_range(0.1..0.9);
        let up0 = axis - half_up;
        let up1 = axis + half_up;
        let down0 = axis + PI - half_down;
        let down1 = axis + PI + half_down;
        let mut bp = vec![
            (at(up0), base),
            (at(up0 + mid * (up1 - up0)), base + midv * height),
            (at(up1), base + height),
            (at(down0), base + height),
            (at(down1), base),
        ];
        // Rotate so that breakpoints increase in arclength.
        let k = (0..bp.len()).min_by(|&a, &b| bp[a].0.total_cmp(&bp[b].0)).unwrap_or(0);
        bp.rotate_left(k);
        ComponentFunction::from_table(side, p, &bp, &[])
    };
    let go = comp(Side::Outer)?;
    let gi = comp(Side::Inner)?;
    Ok(Instance { name: format!("admissible_{seed}"), annulus, data: BoundaryFunction::new(go, gi)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transformed_instance_keeps_values() {
        let base = example_4_6(256).unwrap();
        let t = example_4_6_transformed(256, 1.5, 0.4, Point::new(1.0, -2.0)).unwrap();
        for s in [0.0, 1.0, 2.5, 7.0, 11.0] {
            let r = s * 1.5;
            assert!((base.data.value(Side::Outer, s) - t.data.value(Side::Outer, r)).abs() < 1e-9);
            assert!((base.data.value(Side::Inner, s * 0.5) - t.data.value(Side::Inner, r * 0.5)).abs() < 1e-9);
        }
    }

    #[test]
    fn random_data_is_balanced() {
        for seed in 0..5 {
            let inst = random_paired(seed, 512).unwrap();
            assert!((inst.data.outer.total_variation() - inst.data.inner.total_variation()).abs() < 1e-12);
        }
    }
}
