//! SVG figure of a run: the two curves with their arc decomposition, the
//! transport rays, a density heatmap underneath and level lines of `u`.

use std::fmt::Write;

use crate::boundary::{ArcDecomposition, FamilyKind};
use crate::density::{Grid, ScalarField};
use crate::geometry::{Annulus, BoundaryArc, ConvexBoundary, Point, Side};
use crate::recovery::RayLevel;
use crate::transport::TransportPlan;

/// Inputs to the figure; every layer except the curves is optional.
#[derive(Clone, Copy)]
pub struct Figure<'a> {
    pub annulus: &'a Annulus,
    pub decomposition: &'a ArcDecomposition,
    pub plan: Option<&'a TransportPlan>,
    pub levels: Option<&'a [RayLevel]>,
    pub grid: Option<&'a Grid>,
    pub sigma: Option<&'a ScalarField>,
    pub u: Option<&'a ScalarField>,
    pub contours: usize,
}

const WIDTH: f64 = 800.0;
const MAX_HEAT_CELLS: usize = 160;

fn family_color(kind: FamilyKind) -> &'static str {
    match kind {
        FamilyKind::Chi => "#1f77b4",
        FamilyKind::Gamma => "#d62728",
        FamilyKind::Bump => "#2ca02c",
    }
}

/// Blue to yellow through green, `t` in `[0, 1]`.
fn ramp(t: f64) -> String {
    let stops = [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (stops.len() - 1) as f64;
    let k = (x.floor() as usize).min(stops.len() - 2);
    let f = x - k as f64;
    let (a, b) = (stops[k], stops[k + 1]);
    let c = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(a.0, b.0), c(a.1, b.1), c(a.2, b.2))
}

struct View {
    min: Point,
    scale: f64,
    height: f64,
}

impl View {
    fn new(outer: &ConvexBoundary) -> Self {
        let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for v in outer.vertices() {
            lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        let pad = 0.05 * (hi.x - lo.x).max(hi.y - lo.y);
        let min = Point::new(lo.x - pad, lo.y - pad);
        let span = (hi.x - lo.x + 2.0 * pad).max(f64::MIN_POSITIVE);
        let scale = WIDTH / span;
        View { min, scale, height: (hi.y - lo.y + 2.0 * pad) * scale }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        ((p.x - self.min.x) * self.scale, self.height - (p.y - self.min.y) * self.scale)
    }
}

fn polyline(view: &View, pts: &[Point], closed: bool) -> String {
    let mut d = String::new();
    for (k, p) in pts.iter().enumerate() {
        let (x, y) = view.map(*p);
        let _ = write!(d, "{}{:.2},{:.2}", if k == 0 { "M" } else { " L" }, x, y);
    }
    if closed {
        d.push_str(" Z");
    }
    d
}

fn arc_points(boundary: &ConvexBoundary, arc: &BoundaryArc) -> Vec<Point> {
    boundary.arc_samples(arc).into_iter().map(|(_, p)| p).collect()
}

pub fn render(fig: &Figure) -> String {
    let view = View::new(&fig.annulus.outer);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#,
        w = WIDTH,
        h = view.height
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    heatmap(&mut s, &view, fig);
    contours(&mut s, &view, fig);
    rays(&mut s, &view, fig);
    curves(&mut s, &view, fig);
    s.push_str("</svg>\n");
    s
}

fn heatmap(s: &mut String, view: &View, fig: &Figure) {
    let (Some(grid), Some(sigma)) = (fig.grid, fig.sigma) else { return };
    let max = sigma.max();
    if max <= 0.0 {
        return;
    }
    let b = grid.nx.max(grid.ny).div_ceil(MAX_HEAT_CELLS).max(1);
    s.push_str("<g class=\"sigma\" stroke=\"none\">\n");
    for bj in (0..grid.ny).step_by(b) {
        for bi in (0..grid.nx).step_by(b) {
            let (mut sum, mut cnt) = (0.0, 0usize);
            for j in bj..(bj + b).min(grid.ny) {
                for i in bi..(bi + b).min(grid.nx) {
                    let k = grid.index(i, j);
                    if grid.in_domain(k) {
                        sum += sigma.values[k];
                        cnt += 1;
                    }
                }
            }
            if cnt == 0 || sum <= 0.0 {
                continue;
            }
            let t = (sum / cnt as f64 / max).sqrt();
            let corner = Point::new(grid.origin.x + (bi as f64) * grid.h, grid.origin.y + ((bj + b) as f64) * grid.h);
            let (x, y) = view.map(corner);
            let side = b as f64 * grid.h * view.scale;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{side:.2}" height="{side:.2}" fill="{}" fill-opacity="{:.3}"/>"#,
                ramp(t),
                0.15 + 0.6 * t
            );
        }
    }
    s.push_str("</g>\n");
}

fn rays(s: &mut String, view: &View, fig: &Figure) {
    let Some(plan) = fig.plan else { return };
    if plan.is_empty() {
        return;
    }
    let (lo, hi) = fig
        .levels
        .map(|l| l.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.level), b.max(r.level))))
        .unwrap_or((0.0, 0.0));
    let width = (0.6 / (plan.pairs.len() as f64).sqrt()).clamp(0.3, 2.0) * 2.0;
    s.push_str("<g class=\"rays\" fill=\"none\">\n");
    for (k, p) in plan.pairs.iter().enumerate() {
        let (a, b) = plan.ray(p);
        let color = match fig.levels.and_then(|l| l.get(k)) {
            Some(r) if hi > lo => ramp((r.level - lo) / (hi - lo)),
            Some(_) => ramp(0.5),
            None => "#555555".into(),
        };
        let (x1, y1) = view.map(a);
        let (x2, y2) = view.map(b);
        let _ = writeln!(
            s,
            r#"<line class="ray" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="{width:.2}"/>"#
        );
    }
    s.push_str("</g>\n");
}

fn curves(s: &mut String, view: &View, fig: &Figure) {
    s.push_str("<g class=\"curves\" fill=\"none\">\n");
    for side in [Side::Outer, Side::Inner] {
        let b = fig.annulus.boundary(side);
        let _ = writeln!(
            s,
            r##"<path class="curve {}" d="{}" stroke="#888888" stroke-width="1.5"/>"##,
            side.name(),
            polyline(view, b.vertices(), true)
        );
    }
    for fam in fig.decomposition.families() {
        let color = family_color(fam.kind);
        for (role, arc) in [("source", fam.source), ("target", fam.target)] {
            let pts = arc_points(fig.annulus.boundary(arc.side), &arc);
            let dash = if role == "target" { r#" stroke-dasharray="8 4""# } else { "" };
            let _ = writeln!(
                s,
                r#"<path class="arc {} {role}" d="{}" stroke="{color}" stroke-width="4"{dash}><title>{} {role}</title></path>"#,
                fam.kind.name(),
                polyline(view, &pts, false),
                fam.label()
            );
        }
    }
    s.push_str("</g>\n");
}

fn contours(s: &mut String, view: &View, fig: &Figure) {
    let (Some(grid), Some(u)) = (fig.grid, fig.u) else { return };
    if fig.contours == 0 {
        return;
    }
    let dom: Vec<f64> = (0..grid.len()).filter(|&k| grid.in_domain(k)).map(|k| u.values[k]).collect();
    let lo = dom.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = dom.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return;
    }
    s.push_str("<g class=\"contours\" fill=\"none\" stroke-width=\"1\">\n");
    for c in 1..=fig.contours {
        let t = c as f64 / (fig.contours + 1) as f64;
        let level = lo + t * (hi - lo);
        let segs = marching_squares(grid, u, level);
        if segs.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (a, b) in segs {
            let (x1, y1) = view.map(a);
            let (x2, y2) = view.map(b);
            let _ = write!(d, "M{x1:.2},{y1:.2} L{x2:.2},{y2:.2} ");
        }
        let _ = writeln!(s, r##"<path class="contour" d="{}" stroke="#222222" stroke-opacity="0.7"/>"##, d.trim_end());
    }
    s.push_str("</g>\n");
}

/// Level-`c` segments of a cell-centred field, over 2x2 blocks of domain
/// cells. Saddles are resolved by the block average.
pub fn marching_squares(grid: &Grid, u: &ScalarField, c: f64) -> Vec<(Point, Point)> {
    let mut out = Vec::new();
    if grid.nx < 2 || grid.ny < 2 {
        return out;
    }
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx - 1 {
            let ks = [grid.index(i, j), grid.index(i + 1, j), grid.index(i + 1, j + 1), grid.index(i, j + 1)];
            if !ks.iter().all(|&k| grid.in_domain(k)) {
                continue;
            }
            let p = [grid.center(i, j), grid.center(i + 1, j), grid.center(i + 1, j + 1), grid.center(i, j + 1)];
            let v = ks.map(|k| u.values[k]);
            let above = v.map(|x| x > c);
            let cross = |a: usize, b: usize| {
                let t = (c - v[a]) / (v[b] - v[a]);
                p[a].lerp(p[b], t)
            };
            let edges: Vec<Point> = (0..4).filter(|&e| above[e] != above[(e + 1) % 4]).map(|e| cross(e, (e + 1) % 4)).collect();
            match edges.len() {
                2 => out.push((edges[0], edges[1])),
                4 => {
                    let mean = v.iter().sum::<f64>() / 4.0;
                    // Edge e joins corner e to e + 1; pair edges around the
                    // corners whose side differs from the centre.
                    if (mean > c) == above[0] {
                        out.push((edges[0], edges[1]));
                        out.push((edges[2], edges[3]));
                    } else {
                        out.push((edges[3], edges[0]));
                        out.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::decompose;
    use crate::instances;

    #[test]
    fn zero_data_draws_curves_only() {
        let inst = instances::constant(0.0).unwrap();
        let dec = decompose(&inst.data, None);
        let fig = Figure { annulus: &inst.annulus, decomposition: &dec, plan: None, levels: None, grid: None, sigma: None, u: None, contours: 8 };
        let svg = render(&fig);
        assert_eq!(svg.matches("class=\"curve ").count(), 2);
        assert!(!svg.contains("class=\"ray\"") && !svg.contains("class=\"arc ") && !svg.contains("<rect x"));
    }

    #[test]
    fn toy_plan_draws_one_line_per_pair() {
        use crate::transport::{solve, AtomicMeasure, CostNorm};
        let inst = instances::constant(0.0).unwrap();
        let dec = decompose(&inst.data, None);
        let src = AtomicMeasure::from_points(&[(Point::new(-0.5, 1.2), Side::Outer), (Point::new(0.5, 1.2), Side::Outer)], 0.5);
        let tgt = AtomicMeasure::from_points(&[(Point::new(-0.5, -1.2), Side::Outer), (Point::new(0.5, -1.2), Side::Outer)], 0.5);
        let plan = solve(&src, &tgt, CostNorm::Euclidean).unwrap();
        assert_eq!(plan.pairs.len(), 2);
        let fig = Figure { annulus: &inst.annulus, decomposition: &dec, plan: Some(&plan), levels: None, grid: None, sigma: None, u: None, contours: 8 };
        assert_eq!(render(&fig).matches("class=\"ray\"").count(), 2);
    }

    #[test]
    fn contour_of_linear_field_is_straight() {
        let grid = Grid::rectangular(Point::new(0.0, 0.0), 0.1, 10, 10);
        let u = ScalarField { values: grid.centers().iter().map(|p| p.x).collect() };
        let segs = marching_squares(&grid, &u, 0.52);
        assert_eq!(segs.len(), 9);
        for (a, b) in segs {
            assert!((a.x - 0.52).abs() < 1e-12 && (b.x - 0.52).abs() < 1e-12);
        }
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.0), "#440154");
        assert_eq!(ramp(1.0), "#fde725");
    }
}
