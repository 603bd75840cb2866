//! Transport density and Beckmann flow on a Cartesian grid.
//!
//! Every plan pair deposits its mass along its segment by exact clipping
//! against the grid lines, so the deposited total equals the plan cost up
//! to rounding. Cell values are densities (measure / h^2).

use serde::Serialize;

use crate::geometry::{Annulus, Point};
use crate::transport::{extend_potential, AtomicMeasure, TransportPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellFlag {
    Exterior,
    /// Center inside the closed annulus, within `h / sqrt(2)` of its boundary.
    Band,
    Interior,
}

/// Axis-aligned grid of square cells; cell `(i, j)` has lower-left corner
/// `origin + h (i, j)` and index `j * nx + i`.
#[derive(Clone, Debug)]
pub struct Grid {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub flags: Vec<CellFlag>,
    /// Distance from each cell center to the annulus boundary (0 outside).
    pub boundary_distance: Vec<f64>,
}

impl Grid {
    /// Grid aligned to multiples of `h`, covering the outer curve with one
    /// cell of padding.
    pub fn covering(annulus: &Annulus, h: f64) -> Self {
        assert!(h > 0.0, "grid spacing must be positive");
        let vs = annulus.outer.vertices();
        let (mut lo, mut hi) = (vs[0], vs[0]);
        for v in vs {
            lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        let i0 = (lo.x / h).floor() as i64 - 1;
        let j0 = (lo.y / h).floor() as i64 - 1;
        let i1 = (hi.x / h).ceil() as i64 + 1;
        let j1 = (hi.y / h).ceil() as i64 + 1;
        let origin = Point::new(i0 as f64 * h, j0 as f64 * h);
        let (nx, ny) = ((i1 - i0) as usize, (j1 - j0) as usize);
        let mut grid = Grid::rectangular(origin, h, nx, ny);
        let band = h * std::f64::consts::FRAC_1_SQRT_2;
        for j in 0..ny {
            for i in 0..nx {
                let c = grid.center(i, j);
                let k = grid.index(i, j);
                if annulus.contains(c) {
                    let d = annulus.distance_to_boundary(c);
                    grid.boundary_distance[k] = d;
                    grid.flags[k] = if d < band { CellFlag::Band } else { CellFlag::Interior };
                } else {
                    grid.flags[k] = CellFlag::Exterior;
                    grid.boundary_distance[k] = 0.0;
                }
            }
        }
        grid
    }

    /// Plain rectangle of interior cells, no domain attached.
    pub fn rectangular(origin: Point, h: f64, nx: usize, ny: usize) -> Self {
        Grid {
            origin,
            h,
            nx,
            ny,
            flags: vec![CellFlag::Interior; nx * ny],
            boundary_distance: vec![f64::INFINITY; nx * ny],
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self, i: usize, j: usize) -> Point {
        Point::new(self.origin.x + (i as f64 + 0.5) * self.h, self.origin.y + (j as f64 + 0.5) * self.h)
    }

    pub fn centers(&self) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(self.center(i, j));
            }
        }
        out
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    /// Cell containing `p`, if inside the grid.
    pub fn locate(&self, p: Point) -> Option<(usize, usize)> {
        let fx = ((p.x - self.origin.x) / self.h).floor();
        let fy = ((p.y - self.origin.y) / self.h).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn in_domain(&self, k: usize) -> bool {
        self.flags[k] != CellFlag::Exterior
    }

    /// Parameter intervals of the segment `[a, b]` inside each grid cell it
    /// traverses: `(cell, t0, t1)`.
    pub fn clip_segment(&self, a: Point, b: Point) -> Vec<(usize, f64, f64)> {
        let d = b - a;
        let mut ts = vec![0.0, 1.0];
        for (a0, d0, o, n) in [(a.x, d.x, self.origin.x, self.nx), (a.y, d.y, self.origin.y, self.ny)] {
            if d0 == 0.0 {
                continue;
            }
            let (lo, hi) = if d0 > 0.0 { (a0, a0 + d0) } else { (a0 + d0, a0) };
            let k0 = (((lo - o) / self.h).ceil().max(0.0)) as usize;
            let k1 = (((hi - o) / self.h).floor().min(n as f64)).max(-1.0);
            if k1 < 0.0 {
                continue;
            }
            for k in k0..=(k1 as usize) {
                let line = o + k as f64 * self.h;
                let t = (line - a0) / d0;
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
        ts.sort_by(|x, y| x.total_cmp(y));
        ts.dedup();
        let mut out = Vec::with_capacity(ts.len());
        for w in ts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 <= t0 {
                continue;
            }
            let mid = a.lerp(b, 0.5 * (t0 + t1));
            if let Some((i, j)) = self.locate(mid) {
                out.push((self.index(i, j), t0, t1));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField { values: vec![0.0; grid.len()] }
    }

    /// Total measure: sum of values times cell area.
    pub fn mass(&self, grid: &Grid) -> f64 {
        self.values.iter().sum::<f64>() * grid.cell_area()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Centered-difference gradient at an interior grid index; one-sided at
    /// the grid edge.
    pub fn gradient(&self, grid: &Grid, i: usize, j: usize) -> Point {
        let v = |i: usize, j: usize| self.values[grid.index(i, j)];
        let (il, ir) = (i.saturating_sub(1), (i + 1).min(grid.nx - 1));
        let (jl, jr) = (j.saturating_sub(1), (j + 1).min(grid.ny - 1));
        let gx = if ir > il { (v(ir, j) - v(il, j)) / ((ir - il) as f64 * grid.h) } else { 0.0 };
        let gy = if jr > jl { (v(i, jr) - v(i, jl)) / ((jr - jl) as f64 * grid.h) } else { 0.0 };
        Point::new(gx, gy)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub values: Vec<Point>,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        VectorField { values: vec![Point::default(); grid.len()] }
    }
}

/// Transport density and flow of a plan in one pass.
pub fn rasterize(plan: &TransportPlan, grid: &Grid) -> (ScalarField, VectorField) {
    let mut sigma = ScalarField::zeros(grid);
    let mut w = VectorField::zeros(grid);
    let inv = 1.0 / grid.cell_area();
    for p in &plan.pairs {
        let (x, y) = plan.ray(p);
        let eu = x.dist(y);
        if eu == 0.0 {
            continue;
        }
        let dir = (y - x) * (1.0 / eu);
        // Euclidean length measure along the ray; for a non-Euclidean cost
        // the total is the plan's Euclidean transport length, not its cost.
        for (k, t0, t1) in grid.clip_segment(x, y) {
            let m = p.mass * (t1 - t0) * eu;
            sigma.values[k] += m * inv;
            w.values[k] += dir * (m * inv);
        }
    }
    (sigma, w)
}

/// `sum m |x - y|` over the pairs: the total mass of the transport density.
pub fn transport_length(plan: &TransportPlan) -> f64 {
    plan.pairs.iter().map(|p| {
        let (x, y) = plan.ray(p);
        p.mass * x.dist(y)
    }).sum()
}

pub fn rasterize_density(plan: &TransportPlan, grid: &Grid) -> ScalarField {
    rasterize(plan, grid).0
}

pub fn rasterize_flow(plan: &TransportPlan, grid: &Grid) -> VectorField {
    rasterize(plan, grid).1
}

/// Extended Kantorovich potential at cell centers; zero for the empty plan.
pub fn potential_field(plan: &TransportPlan, grid: &Grid) -> ScalarField {
    if plan.targets.is_empty() {
        return ScalarField::zeros(grid);
    }
    ScalarField { values: extend_potential(plan, &grid.centers()) }
}

/// `sum |w + sigma grad phi| / sum sigma` over domain cells.
pub fn check_flow_potential_alignment(w: &VectorField, sigma: &ScalarField, phi: &ScalarField, grid: &Grid) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.index(i, j);
            let s = sigma.values[k];
            if s == 0.0 {
                continue;
            }
            let g = phi.gradient(grid, i, j);
            num += (w.values[k] + g * s).norm();
            den += s;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Smooth test function: scaled monomial times a radial profile.
#[derive(Clone, Copy, Debug)]
pub struct TestFunction {
    pub a: u32,
    pub b: u32,
    pub profile: Profile,
    pub center: Point,
    pub scale: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Flat,
    Gaussian,
    Lorentzian,
}

impl TestFunction {
    pub fn name(&self) -> String {
        let p = match self.profile {
            Profile::Flat => "1",
            Profile::Gaussian => "exp(-r2)",
            Profile::Lorentzian => "1/(1+r2)",
        };
        format!("x^{} y^{} * {p}", self.a, self.b)
    }

    fn profile(&self, r2: f64) -> (f64, f64) {
        match self.profile {
            Profile::Flat => (1.0, 0.0),
            Profile::Gaussian => {
                let e = (-r2).exp();
                (e, -e)
            }
            Profile::Lorentzian => {
                let q = 1.0 / (1.0 + r2);
                (q, -q * q)
            }
        }
    }

    pub fn value(&self, p: Point) -> f64 {
        let z = (p - self.center) * (1.0 / self.scale);
        let (q, _) = self.profile(z.dot(z));
        z.x.powi(self.a as i32) * z.y.powi(self.b as i32) * q
    }

    pub fn gradient(&self, p: Point) -> Point {
        let z = (p - self.center) * (1.0 / self.scale);
        let (q, dq) = self.profile(z.dot(z));
        let pw = |x: f64, k: u32| if k == 0 { 1.0 } else { x.powi(k as i32) };
        let dpw = |x: f64, k: u32| if k == 0 { 0.0 } else { k as f64 * pw(x, k - 1) };
        let m = pw(z.x, self.a) * pw(z.y, self.b);
        let gm = Point::new(dpw(z.x, self.a) * pw(z.y, self.b), pw(z.x, self.a) * dpw(z.y, self.b));
        (gm * q + z * (2.0 * m * dq)) * (1.0 / self.scale)
    }
}

/// Ten monomials of degree one to four, each under three profiles,
/// centered and scaled to the domain.
pub fn test_battery(center: Point, scale: f64) -> Vec<TestFunction> {
    let monomials = [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3), (2, 2)];
    let mut out = Vec::new();
    for profile in [Profile::Flat, Profile::Gaussian, Profile::Lorentzian] {
        for &(a, b) in &monomials {
            out.push(TestFunction { a, b, profile, center, scale });
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceResidual {
    pub test: String,
    pub flux: f64,
    pub boundary: f64,
    pub residual: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DivergenceReport {
    pub residuals: Vec<DivergenceResidual>,
    pub worst_ratio: f64,
}

impl DivergenceReport {
    pub fn passes(&self) -> bool {
        self.residuals.iter().all(|r| r.residual <= r.tolerance)
    }
}

/// Weak divergence check: `int grad(psi) . w` against
/// `int psi d(mu_minus - mu_plus)` for the whole battery, where `mu_plus`
/// are the sources. Tolerance `10 max|grad psi| |f| (h + perimeter / n)`.
pub fn check_divergence(
    w: &VectorField,
    sources: &AtomicMeasure,
    targets: &AtomicMeasure,
    grid: &Grid,
    battery: &[TestFunction],
    perimeter: f64,
    n: usize,
) -> DivergenceReport {
    let abs_f = sources.total_mass() + targets.total_mass();
    let area = grid.cell_area();
    let centers = grid.centers();
    let mut rep = DivergenceReport::default();
    for tf in battery {
        let mut flux = 0.0;
        let mut gmax: f64 = 0.0;
        for (k, &c) in centers.iter().enumerate() {
            if !grid.in_domain(k) && w.values[k] == Point::default() {
                continue;
            }
            let g = tf.gradient(c);
            gmax = gmax.max(g.norm());
            flux += g.dot(w.values[k]) * area;
        }
        for a in sources.atoms.iter().chain(&targets.atoms) {
            gmax = gmax.max(tf.gradient(a.point).norm());
        }
        let boundary: f64 = targets.atoms.iter().map(|a| a.mass * tf.value(a.point)).sum::<f64>()
            - sources.atoms.iter().map(|a| a.mass * tf.value(a.point)).sum::<f64>();
        let residual = (flux - boundary).abs();
        let tolerance = 10.0 * gmax * abs_f * (grid.h + perimeter / n.max(1) as f64);
        let ratio = if tolerance > 0.0 { residual / tolerance } else if residual > 0.0 { f64::INFINITY } else { 0.0 };
        rep.worst_ratio = rep.worst_ratio.max(ratio);
        rep.residuals.push(DivergenceResidual { test: tf.name(), flux, boundary, residual, tolerance });
    }
    rep
}

/// `(sum |v|^p h^2)^(1/p)` over interior cells; `p = inf` gives the max.
pub fn lp_norm(field: &ScalarField, p: f64, grid: &Grid) -> f64 {
    assert!(p >= 1.0, "exponent must be at least 1");
    let vals = field.values.iter().zip(&grid.flags).filter(|(_, f)| **f == CellFlag::Interior).map(|(v, _)| v.abs());
    if p.is_infinite() {
        return vals.fold(0.0, f64::max);
    }
    let s: f64 = vals.map(|v| v.powf(p)).sum::<f64>() * grid.cell_area();
    s.powf(1.0 / p)
}

/// Mass of `sigma` in domain cells whose centers lie within `band` of the
/// boundary.
pub fn boundary_mass(sigma: &ScalarField, grid: &Grid, band: f64) -> f64 {
    let mut m = 0.0;
    for k in 0..grid.len() {
        if grid.in_domain(k) && grid.boundary_distance[k] < band {
            m += sigma.values[k];
        }
    }
    m * grid.cell_area()
}

/// Largest `|w| - sigma` over cells (non-positive when consistent).
pub fn max_flow_excess(w: &VectorField, sigma: &ScalarField) -> f64 {
    w.values.iter().zip(&sigma.values).map(|(v, s)| v.norm() - s).fold(f64::NEG_INFINITY, f64::max)
}

/// Summary of one rasterization.
#[derive(Clone, Debug, Default, Serialize)]
pub struct DensityReport {
    pub h: f64,
    pub cells: usize,
    pub total_mass: f64,
    pub plan_cost: f64,
    pub mass_relative_error: f64,
    pub min_sigma: f64,
    pub max_flow_excess: f64,
    pub alignment_residual: f64,
    pub divergence: DivergenceReport,
    pub sigma_l1: f64,
    pub sigma_l2: f64,
    pub sigma_linf: f64,
    pub f_linf: f64,
    pub linf_ratio: f64,
    pub band_mass_2h: f64,
    pub band_mass_4h: f64,
}

impl DensityReport {
    pub fn conservation_ok(&self) -> bool {
        self.mass_relative_error <= 1e-9 && self.min_sigma >= 0.0 && self.max_flow_excess <= 1e-12 * (1.0 + self.sigma_linf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Side;
    use crate::transport::{solve, CostNorm, PlanPair};
    use proptest::prelude::*;

    fn plan_from(rays: &[(Point, Point, f64)]) -> TransportPlan {
        let src: Vec<(Point, Side)> = rays.iter().map(|r| (r.0, Side::Outer)).collect();
        let tgt: Vec<(Point, Side)> = rays.iter().map(|r| (r.1, Side::Inner)).collect();
        let mut plan = TransportPlan::empty(CostNorm::Euclidean);
        plan.sources = AtomicMeasure::from_points(&src, 1.0);
        plan.targets = AtomicMeasure::from_points(&tgt, 1.0);
        for (k, r) in rays.iter().enumerate() {
            plan.sources.atoms[k].mass = r.2;
            plan.targets.atoms[k].mass = r.2;
            plan.pairs.push(PlanPair { source: k, target: k, mass: r.2 });
        }
        plan.cost = plan.pairs.iter().map(|p| p.mass * plan.pair_cost(p)).sum();
        plan
    }

    #[test]
    fn zero_plan_gives_zero_fields() {
        let grid = Grid::rectangular(Point::new(-1.0, -1.0), 0.25, 8, 8);
        let (s, w) = rasterize(&TransportPlan::empty(CostNorm::Euclidean), &grid);
        assert!(s.values.iter().all(|&v| v == 0.0));
        assert!(w.values.iter().all(|v| *v == Point::default()));
        let phi = ScalarField::zeros(&grid);
        assert_eq!(check_flow_potential_alignment(&w, &s, &phi, &grid), 0.0);
        assert_eq!(lp_norm(&s, 2.0, &grid), 0.0);
        let empty = AtomicMeasure::default();
        let rep = check_divergence(&w, &empty, &empty, &grid, &test_battery(Point::default(), 1.0), 1.0, 4);
        assert!(rep.residuals.iter().all(|r| r.residual == 0.0));
    }

    #[test]
    fn horizontal_segment_on_aligned_grid() {
        let grid = Grid::rectangular(Point::new(0.0, -0.5), 0.25, 4, 4);
        let plan = plan_from(&[(Point::new(0.0, 0.0), Point::new(1.0, 0.0), 1.0)]);
        let (s, w) = rasterize(&plan, &grid);
        let touched: Vec<usize> = (0..grid.len()).filter(|&k| s.values[k] > 0.0).collect();
        assert_eq!(touched.len(), 4);
        for &k in &touched {
            assert!((s.values[k] * grid.cell_area() - 0.25).abs() < 1e-15);
            assert!((w.values[k].x - s.values[k]).abs() < 1e-15 && w.values[k].y == 0.0);
        }
        assert!((s.mass(&grid) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn antiparallel_rays_cancel_flow() {
        let grid = Grid::rectangular(Point::new(-1.0, -1.0), 0.1, 20, 20);
        let plan = plan_from(&[
            (Point::new(-0.7, 0.03), Point::new(0.6, 0.03), 1.0),
            (Point::new(0.6, 0.03), Point::new(-0.7, 0.03), 1.0),
        ]);
        let (s, w) = rasterize(&plan, &grid);
        for k in 0..grid.len() {
            if s.values[k] > 0.0 {
                assert!(w.values[k].norm() < 1e-9 * s.values[k]);
            }
        }
    }

    #[test]
    fn constant_field_unit_area() {
        let grid = Grid::rectangular(Point::default(), 0.1, 10, 10);
        let f = ScalarField { values: vec![1.0; 100] };
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((lp_norm(&f, p, &grid) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_ray_alignment_and_divergence() {
        let a = Annulus::concentric_circles(Point::default(), 1.0, 2.0, 512).unwrap();
        let grid = Grid::covering(&a, 0.02);
        let s = AtomicMeasure::from_points(&[(Point::new(1.2, 1.6), Side::Outer)], 0.7);
        let t = AtomicMeasure::from_points(&[(Point::new(1.6, -1.2), Side::Outer)], 0.7);
        let plan = solve(&s, &t, CostNorm::Euclidean).unwrap();
        let (sigma, w) = rasterize(&plan, &grid);
        assert!(((sigma.mass(&grid) - plan.cost) / plan.cost).abs() < 1e-12);
        let phi = potential_field(&plan, &grid);
        assert!(check_flow_potential_alignment(&w, &sigma, &phi, &grid) <= 0.1);
        let rep = check_divergence(&w, &plan.sources, &plan.targets, &grid, &test_battery(Point::default(), 2.0), a.total_perimeter(), 1);
        assert!(rep.passes(), "{:?}", rep.residuals);
        // The fundamental theorem along the segment, directly.
        for r in &rep.residuals {
            assert!(r.residual < 1e-2, "{}: {}", r.test, r.residual);
        }
        assert_eq!(boundary_mass(&sigma, &grid, 0.0), 0.0);
    }

    #[test]
    fn interior_ray_has_no_band_mass() {
        let a = Annulus::concentric_circles(Point::default(), 1.0, 2.0, 512).unwrap();
        let grid = Grid::covering(&a, 0.02);
        let plan = plan_from(&[(Point::new(-0.5, 1.5), Point::new(0.5, 1.5), 1.0)]);
        let sigma = rasterize_density(&plan, &grid);
        assert_eq!(boundary_mass(&sigma, &grid, 2.0 * grid.h), 0.0);
    }

    #[test]
    fn test_function_gradients_match_differences() {
        let h = 1e-6;
        for tf in test_battery(Point::new(0.3, -0.2), 1.7) {
            let p = Point::new(0.41, 0.77);
            let fd = Point::new(
                (tf.value(p + Point::new(h, 0.0)) - tf.value(p - Point::new(h, 0.0))) / (2.0 * h),
                (tf.value(p + Point::new(0.0, h)) - tf.value(p - Point::new(0.0, h))) / (2.0 * h),
            );
            assert!((fd - tf.gradient(p)).norm() < 1e-7, "{}", tf.name());
        }
        assert_eq!(test_battery(Point::default(), 1.0).len(), 30);
    }

    fn arb_point() -> impl Strategy<Value = Point> {
        (-1.9..1.9f64, -1.9..1.9f64).prop_map(|(x, y)| Point::new(x, y))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn deposits_conserve_and_bound_flow(rays in prop::collection::vec((arb_point(), arb_point(), 0.01..2.0f64), 1..6)) {
            let grid = Grid::rectangular(Point::new(-2.0, -2.0), 0.13, 31, 31);
            let plan = plan_from(&rays);
            let (s, w) = rasterize(&plan, &grid);
            prop_assert!(s.min() >= 0.0);
            if plan.cost > 0.0 {
                prop_assert!(((s.mass(&grid) - plan.cost) / plan.cost).abs() < 1e-9);
            }
            prop_assert!(max_flow_excess(&w, &s) <= 1e-12 * (1.0 + s.max()));
        }

        #[test]
        fn deposits_are_additive(a in prop::collection::vec((arb_point(), arb_point(), 0.01..2.0f64), 1..4),
                                 b in prop::collection::vec((arb_point(), arb_point(), 0.01..2.0f64), 1..4)) {
            let grid = Grid::rectangular(Point::new(-2.0, -2.0), 0.1, 40, 40);
            let both: Vec<_> = a.iter().chain(&b).copied().collect();
            let (sa, _) = rasterize(&plan_from(&a), &grid);
            let (sb, _) = rasterize(&plan_from(&b), &grid);
            let (sab, _) = rasterize(&plan_from(&both), &grid);
            for k in 0..grid.len() {
                let sum = sa.values[k] + sb.values[k];
                prop_assert!((sab.values[k] - sum).abs() <= 1e-12 * sum.abs().max(1.0));
            }
        }

        #[test]
        fn quarter_turn_permutes_cells(rays in prop::collection::vec((arb_point(), arb_point(), 0.01..2.0f64), 1..5)) {
            let n = 40;
            let grid = Grid::rectangular(Point::new(-2.0, -2.0), 0.1, n, n);
            let rot = |p: Point| Point::new(-p.y, p.x);
            let turned: Vec<_> = rays.iter().map(|&(x, y, m)| (rot(x), rot(y), m)).collect();
            let (s0, _) = rasterize(&plan_from(&rays), &grid);
            let (s1, _) = rasterize(&plan_from(&turned), &grid);
            for j in 0..n {
                for i in 0..n {
                    // (i, j) maps to (n - 1 - j, i) under the quarter turn.
                    let a = s0.values[grid.index(i, j)];
                    let b = s1.values[grid.index(n - 1 - j, i)];
                    prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "cell ({}, {}) {} vs {}", i, j, a, b);
                }
            }
        }

        #[test]
        fn lp_norm_is_monotone(vals in prop::collection::vec(0.0..5.0f64, 25), bump in prop::collection::vec(0.0..1.0f64, 25), p in 1.0..6.0f64) {
            let grid = Grid::rectangular(Point::default(), 0.2, 5, 5);
            let f = ScalarField { values: vals.clone() };
            let g = ScalarField { values: vals.iter().zip(&bump).map(|(a, b)| a + b).collect() };
            prop_assert!(lp_norm(&f, p, &grid) <= lp_norm(&g, p, &grid) + 1e-12);
            prop_assert!(lp_norm(&f, f64::INFINITY, &grid) <= lp_norm(&g, f64::INFINITY, &grid));
        }
    }
}
