//! Rebuilding the least gradient function from the transport rays.
//!
//! Rays are level-set boundaries: each gets the value of the anchored trace
//! at its outer endpoint, and the region swept by a family between two
//! consecutive rays is filled by interpolating their levels. Cells outside
//! every swept region sit against zero-variation arcs and take the trace
//! value found there.

use std::collections::VecDeque;

use serde::Serialize;

use crate::boundary::{ArcDecomposition, BoundaryFunction, ComponentFunction, FamilyKind};
use crate::density::{CellFlag, Grid, ScalarField, VectorField};
use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, Annulus, BoundaryArc, Point, Side, EPS_GEOM};
use crate::transport::TransportPlan;

/// Level of one plan pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RayLevel {
    pub pair: usize,
    pub family: usize,
    pub level: f64,
    /// `|outer level - inner level|`, zero when an endpoint is a jump whose
    /// range contains the other value.
    pub mismatch: f64,
}

/// `(low, high)` one-sided values of the trace at an atom.
fn value_range(g: &BoundaryFunction, side: Side, s: f64, jump: bool) -> (f64, f64) {
    if jump {
        let (a, b) = (g.value_left(side, s), g.value(side, s));
        (a.min(b), a.max(b))
    } else {
        let v = g.value(side, s);
        (v, v)
    }
}

/// Whether each arc of a family is traversed with increasing trace
/// counterclockwise: `(source, target)`.
fn increasing(kind: FamilyKind) -> (bool, bool) {
    match kind {
        FamilyKind::Chi => (true, true),
        FamilyKind::Gamma => (false, false),
        FamilyKind::Bump => (true, false),
    }
}

/// Per-ray levels. `n` is the number of atoms per monotone arc; levels of
/// the two endpoints must agree within `2 TV / n` of the family.
pub fn assign_ray_levels(plan: &TransportPlan, g: &BoundaryFunction, dec: &ArcDecomposition, n: usize) -> Result<Vec<RayLevel>> {
    let fams = dec.families();
    let mut out = Vec::with_capacity(plan.pairs.len());
    for (k, p) in plan.pairs.iter().enumerate() {
        let a = plan.sources.atoms[p.source];
        let b = plan.targets.atoms[p.target];
        let Some(fi) = a.family.filter(|&f| Some(f) == b.family) else {
            return Err(Error::LevelMismatch { ray: k, outer: f64::NAN, inner: f64::NAN, tol: 0.0 });
        };
        let fam = fams[fi];
        // The outer endpoint fixes the level; for bumps both are outer and
        // the source is used.
        let (o, i) = if fam.kind == FamilyKind::Gamma { (b, a) } else { (a, b) };
        let ro = value_range(g, o.side, o.s, o.jump);
        let ri = value_range(g, i.side, i.s, i.jump);
        let level = match (o.jump, i.jump) {
            (false, _) => ro.0,
            (true, false) => ri.0.clamp(ro.0, ro.1),
            (true, true) => 0.5 * (ro.0 + ro.1),
        };
        let mismatch = if level < ri.0 { ri.0 - level } else if level > ri.1 { level - ri.1 } else { 0.0 };
        let tv = fam.tv_source.max(fam.tv_target);
        let tol = 2.0 * tv / n.max(1) as f64 + 1e-9 * (1.0 + tv);
        if mismatch > tol {
            return Err(Error::LevelMismatch { ray: k, outer: level, inner: ri.0, tol });
        }
        out.push(RayLevel { pair: k, family: fi, level, mismatch });
    }
    Ok(out)
}

/// Whether levels are sorted along every family, in the order of the
/// source points from the low end of the source arc.
pub fn levels_monotone(plan: &TransportPlan, levels: &[RayLevel], annulus: &Annulus, dec: &ArcDecomposition) -> bool {
    let fams = dec.families();
    (0..fams.len()).all(|fi| {
        let fam = fams[fi];
        let (inc, _) = increasing(fam.kind);
        let p = annulus.boundary(fam.source.side).perimeter();
        let mut v: Vec<(f64, f64)> = levels
            .iter()
            .filter(|l| l.family == fi)
            .map(|l| {
                let s = plan.sources.atoms[plan.pairs[l.pair].source].s;
                (low_offset(&fam.source, s, p, inc), l.level)
            })
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12)
    })
}

fn low_offset(arc: &BoundaryArc, s: f64, p: f64, inc: bool) -> f64 {
    let o = arc.offset_of(s, p).min(arc.length);
    if inc {
        o
    } else {
        arc.length - o
    }
}

/// One swept cell of a family: the region between two consecutive rays.
#[derive(Clone, Debug)]
pub struct Quad {
    pub family: usize,
    pub polygon: Vec<Point>,
    pub lo: (Point, Point, f64),
    pub hi: (Point, Point, f64),
    bbox: (Point, Point),
}

impl Quad {
    fn new(family: usize, polygon: Vec<Point>, lo: (Point, Point, f64), hi: (Point, Point, f64)) -> Self {
        let mut a = polygon[0];
        let mut b = polygon[0];
        for p in &polygon {
            a = Point::new(a.x.min(p.x), a.y.min(p.y));
            b = Point::new(b.x.max(p.x), b.y.max(p.y));
        }
        Quad { family, polygon, lo, hi, bbox: (a, b) }
    }

    pub fn contains(&self, z: Point) -> bool {
        if z.x < self.bbox.0.x || z.x > self.bbox.1.x || z.y < self.bbox.0.y || z.y > self.bbox.1.y {
            return false;
        }
        point_in_polygon(z, &self.polygon)
    }

    pub fn boundary_distance(&self, z: Point) -> f64 {
        let n = self.polygon.len();
        (0..n)
            .map(|k| point_segment_distance(z, self.polygon[k], self.polygon[(k + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Level interpolated between the two bounding rays by distance.
    pub fn value(&self, z: Point) -> f64 {
        let d0 = point_segment_distance(z, self.lo.0, self.lo.1);
        let d1 = point_segment_distance(z, self.hi.0, self.hi.1);
        if d0 + d1 == 0.0 {
            return 0.5 * (self.lo.2 + self.hi.2);
        }
        let v = (self.lo.2 * d1 + self.hi.2 * d0) / (d0 + d1);
        v.clamp(self.lo.2.min(self.hi.2), self.lo.2.max(self.hi.2))
    }
}

/// Crossing-number test; points on the boundary may go either way.
pub fn point_in_polygon(z: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > z.y) != (b.y > z.y) {
            let x = a.x + (z.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if z.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Boundary vertices of `arc` strictly between offsets `o0` and `o1`,
/// ordered from `o0` to `o1`.
fn arc_vertices_between(samples: &[(f64, Point)], offsets: &[f64], o0: f64, o1: f64) -> Vec<Point> {
    let (lo, hi) = if o0 <= o1 { (o0, o1) } else { (o1, o0) };
    let a = offsets.partition_point(|&o| o <= lo);
    let b = offsets.partition_point(|&o| o < hi);
    let mut v: Vec<Point> = samples[a..b.max(a)].iter().map(|x| x.1).collect();
    if o0 > o1 {
        v.reverse();
    }
    v
}

/// Swept quads of every family, bounded by the arcs' low and high ends.
pub fn build_quads(annulus: &Annulus, plan: &TransportPlan, dec: &ArcDecomposition, levels: &[RayLevel], g: &BoundaryFunction) -> Vec<Quad> {
    let mut quads = Vec::new();
    for (fi, fam) in dec.families().iter().enumerate() {
        let (inc_s, inc_t) = increasing(fam.kind);
        let bs = annulus.boundary(fam.source.side);
        let bt = annulus.boundary(fam.target.side);
        let (ps, pt) = (bs.perimeter(), bt.perimeter());
        let ss = bs.arc_samples(&fam.source);
        let st = bt.arc_samples(&fam.target);
        let off_s: Vec<f64> = ss.iter().map(|x| low_offset(&fam.source, x.0, ps, true)).collect();
        let off_t: Vec<f64> = st.iter().map(|x| low_offset(&fam.target, x.0, pt, true)).collect();
        // Counterclockwise offsets of the arcs' low and high ends.
        let ends = |arc: &BoundaryArc, inc: bool| if inc { (0.0, arc.length) } else { (arc.length, 0.0) };
        let (s_lo, s_hi) = ends(&fam.source, inc_s);
        let (t_lo, t_hi) = ends(&fam.target, inc_t);
        let g_at = |arc: &BoundaryArc, o: f64, from_inside_right: bool| {
            let s = arc.start + o;
            if from_inside_right {
                g.value(arc.side, s)
            } else {
                g.value_left(arc.side, s)
            }
        };
        // Source-side trace at the low and high ends, one-sided into the arc.
        let lv = g_at(&fam.source, s_lo, inc_s);
        let hv = g_at(&fam.source, s_hi, !inc_s);
        // (source offset, target offset, level) along the family, ccw offsets.
        let mut rays: Vec<(f64, f64, f64)> = levels
            .iter()
            .filter(|l| l.family == fi)
            .map(|l| {
                let p = plan.pairs[l.pair];
                let a = plan.sources.atoms[p.source];
                let b = plan.targets.atoms[p.target];
                let oa = fam.source.offset_of(a.s, ps).min(fam.source.length);
                let ob = fam.target.offset_of(b.s, pt).min(fam.target.length);
                (oa, ob, l.level)
            })
            .collect();
        let key = |r: &(f64, f64, f64)| {
            (
                r.2,
                if inc_s { r.0 } else { fam.source.length - r.0 },
                if inc_t { r.1 } else { fam.target.length - r.1 },
            )
        };
        rays.sort_by(|a, b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ka.2.total_cmp(&kb.2))
        });
        rays.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        rays.insert(0, (s_lo, t_lo, lv.min(rays.first().map_or(lv, |r| r.2))));
        rays.push((s_hi, t_hi, hv.max(rays.last().map_or(hv, |r| r.2))));
        let pt_s = |o: f64| bs.point_at(fam.source.start + o);
        let pt_t = |o: f64| bt.point_at(fam.target.start + o);
        for w in rays.windows(2) {
            let (r0, r1) = (w[0], w[1]);
            let (a0, a1, b0, b1) = (pt_s(r0.0), pt_s(r1.0), pt_t(r0.1), pt_t(r1.1));
            let mut poly = vec![a0];
            poly.extend(arc_vertices_between(&ss, &off_s, r0.0, r1.0));
            poly.push(a1);
            poly.push(b1);
            poly.extend(arc_vertices_between(&st, &off_t, r1.1, r0.1));
            poly.push(b0);
            poly.dedup();
            if poly.len() < 3 {
                continue;
            }
            quads.push(Quad::new(fi, poly, (a0, b0, r0.2), (a1, b1, r1.2)));
        }
    }
    quads
}

/// The reconstruction: grid values of `u` plus the geometry it was built from.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    /// Values without the trace offset.
    pub base: ScalarField,
    pub offset: f64,
    pub quads: Vec<Quad>,
    pub swept_cells: usize,
    pub filled_cells: usize,
    pub components: usize,
}

impl Reconstruction {
    pub fn u(&self) -> ScalarField {
        ScalarField { values: self.base.values.iter().map(|v| v + self.offset).collect() }
    }

    /// Point value of the construction (not the grid sample) inside a
    /// swept region; `None` elsewhere.
    pub fn eval(&self, z: Point) -> Option<f64> {
        self.quads.iter().find(|q| q.contains(z)).map(|q| q.value(z) + self.offset)
    }
}

/// Trace value at the nearest boundary point.
fn nearest_trace(annulus: &Annulus, g: &BoundaryFunction, z: Point) -> f64 {
    let (so, dout) = annulus.outer.project(z);
    let (si, din) = annulus.inner.project(z);
    if dout <= din {
        g.value(Side::Outer, so)
    } else {
        g.value(Side::Inner, si)
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fill the grid: interpolate inside swept quads, then give each connected
/// group of remaining domain cells the median trace value at the nearest
/// boundary points of its cells.
pub fn reconstruct_u(
    annulus: &Annulus,
    plan: &TransportPlan,
    dec: &ArcDecomposition,
    levels: &[RayLevel],
    grid: &Grid,
    g: &BoundaryFunction,
) -> Result<Reconstruction> {
    let offset = g.offset;
    let g0 = g.shifted(-offset);
    let g0 = BoundaryFunction { offset: 0.0, ..g0 };
    let lv: Vec<RayLevel> = levels.iter().map(|l| RayLevel { level: l.level - offset, ..*l }).collect();
    let quads = build_quads(annulus, plan, dec, &lv, &g0);
    let n = grid.len();
    let mut base = vec![f64::NAN; n];
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let h = grid.h;
    for (qi, q) in quads.iter().enumerate() {
        let i0 = (((q.bbox.0.x - grid.origin.x) / h - 0.5).floor().max(0.0)) as usize;
        let j0 = (((q.bbox.0.y - grid.origin.y) / h - 0.5).floor().max(0.0)) as usize;
        let i1 = (((q.bbox.1.x - grid.origin.x) / h - 0.5).ceil().max(0.0) as usize).min(grid.nx - 1);
        let j1 = (((q.bbox.1.y - grid.origin.y) / h - 0.5).ceil().max(0.0) as usize).min(grid.ny - 1);
        for j in j0..=j1 {
            for i in i0..=i1 {
                let k = grid.index(i, j);
                if !grid.in_domain(k) {
                    continue;
                }
                let z = grid.center(i, j);
                if !q.contains(z) {
                    continue;
                }
                match owner[k] {
                    None => {
                        owner[k] = Some(qi);
                        base[k] = q.value(z);
                    }
                    Some(other) if quads[other].family != q.family => {
                        let margin = q.boundary_distance(z).min(quads[other].boundary_distance(z));
                        if margin > EPS_GEOM {
                            return Err(Error::UncoveredCell { i, j });
                        }
                    }
                    Some(_) => {}
                }
            }
        }
    }
    let swept = owner.iter().filter(|o| o.is_some()).count();
    // Connected groups of unswept domain cells.
    let mut comp = vec![usize::MAX; n];
    let mut ncomp = 0;
    let mut filled = 0;
    for start in 0..n {
        if !grid.in_domain(start) || owner[start].is_some() || comp[start] != usize::MAX {
            continue;
        }
        let mut members = Vec::new();
        let mut queue = VecDeque::from([start]);
        comp[start] = ncomp;
        while let Some(k) = queue.pop_front() {
            members.push(k);
            let (i, j) = (k % grid.nx, k / grid.nx);
            let mut nb = Vec::with_capacity(4);
            if i > 0 {
                nb.push(k - 1);
            }
            if i + 1 < grid.nx {
                nb.push(k + 1);
            }
            if j > 0 {
                nb.push(k - grid.nx);
            }
            if j + 1 < grid.ny {
                nb.push(k + grid.nx);
            }
            for m in nb {
                if grid.in_domain(m) && owner[m].is_none() && comp[m] == usize::MAX {
                    comp[m] = ncomp;
                    queue.push_back(m);
                }
            }
        }
        let near: Vec<usize> = members.iter().copied().filter(|&k| grid.boundary_distance[k] < 2.0 * h).collect();
        let pool = if near.is_empty() { &members } else { &near };
        let mut vals: Vec<f64> = pool
            .iter()
            .map(|&k| nearest_trace(annulus, &g0, grid.center(k % grid.nx, k / grid.nx)))
            .collect();
        let v = median(&mut vals);
        for &k in &members {
            base[k] = v;
        }
        filled += members.len();
        ncomp += 1;
    }
    for (k, v) in base.iter_mut().enumerate() {
        if !grid.in_domain(k) {
            *v = 0.0;
        }
    }
    Ok(Reconstruction {
        base: ScalarField { values: base },
        offset,
        quads,
        swept_cells: swept,
        filled_cells: filled,
        components: ncomp,
    })
}

/// Trace of a grid function: at each boundary vertex, the value of the
/// cell found `2h` along the inward normal.
pub fn extract_trace(u: &ScalarField, annulus: &Annulus, grid: &Grid) -> Result<(ComponentFunction, ComponentFunction)> {
    let mut out = Vec::with_capacity(2);
    for side in [Side::Outer, Side::Inner] {
        let b = annulus.boundary(side);
        let sign = if side == Side::Outer { -1.0 } else { 1.0 };
        let mut bps = Vec::with_capacity(b.len());
        for (k, &s) in b.cumulative_arclength().iter().enumerate() {
            let p = b.vertices()[k];
            let z = p + b.outward_normal(s) * (sign * 2.0 * grid.h);
            let v = match grid.locate(z) {
                Some((i, j)) if grid.in_domain(grid.index(i, j)) => u.values[grid.index(i, j)],
                _ => nearest_domain_value(u, grid, z),
            };
            bps.push((s, v));
        }
        out.push(ComponentFunction::from_table(side, b.perimeter(), &bps, &[])?);
    }
    let inner = out.pop().unwrap();
    let outer = out.pop().unwrap();
    Ok((outer, inner))
}

fn nearest_domain_value(u: &ScalarField, grid: &Grid, z: Point) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.index(i, j);
            if grid.in_domain(k) {
                let d = grid.center(i, j).dist(z);
                if d < best.0 {
                    best = (d, u.values[k]);
                }
            }
        }
    }
    best.1
}

/// `int |t - g| ds` over one curve, by midpoint sampling of each boundary edge
/// at `refine` points.
pub fn trace_l1_error(trace: &ComponentFunction, g: &BoundaryFunction, refine: usize) -> f64 {
    let side = trace.side();
    let p = trace.perimeter();
    let m = refine.max(1) * 4096;
    let ds = p / m as f64;
    (0..m)
        .map(|k| {
            let s = (k as f64 + 0.5) * ds;
            (trace.value(s) - g.value(side, s)).abs() * ds
        })
        .sum()
}

/// Cells used by finite-difference checks: interior cells whose stencil
/// stays in the domain and whose centers are farther than `2h` from every
/// ray endpoint.
pub fn gradient_mask(grid: &Grid, plan: &TransportPlan) -> Vec<bool> {
    let mut mask = vec![false; grid.len()];
    for j in 1..grid.ny.saturating_sub(1) {
        for i in 1..grid.nx.saturating_sub(1) {
            let k = grid.index(i, j);
            mask[k] = grid.flags[k] == CellFlag::Interior
                && [k - 1, k + 1, k - grid.nx, k + grid.nx].iter().all(|&m| grid.in_domain(m));
        }
    }
    let r = 2.0 * grid.h;
    let reach = (r / grid.h).ceil() as i64 + 1;
    let mut clear = |p: Point| {
        if let Some((ci, cj)) = grid.locate(p) {
            for dj in -reach..=reach {
                for di in -reach..=reach {
                    let (i, j) = (ci as i64 + di, cj as i64 + dj);
                    if i < 0 || j < 0 || i >= grid.nx as i64 || j >= grid.ny as i64 {
                        continue;
                    }
                    let (i, j) = (i as usize, j as usize);
                    if grid.center(i, j).dist(p) <= r {
                        mask[grid.index(i, j)] = false;
                    }
                }
            }
        }
    };
    for a in plan.sources.atoms.iter().chain(&plan.targets.atoms) {
        clear(a.point);
    }
    mask
}

/// Rotation by a quarter turn: `(a, b) -> (-b, a)`.
pub fn rotate(v: Point) -> Point {
    Point::new(-v.y, v.x)
}

/// `sum |R grad u - w| / sum sigma` over masked cells.
pub fn check_rotated_gradient(u: &ScalarField, w: &VectorField, sigma: &ScalarField, grid: &Grid, mask: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.index(i, j);
            if !mask[k] {
                continue;
            }
            num += (rotate(u.gradient(grid, i, j)) - w.values[k]).norm();
            den += sigma.values[k];
        }
    }
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// `L^p` norm of the finite-difference gradient over masked cells.
pub fn w1p_seminorm(u: &ScalarField, p: f64, grid: &Grid, mask: &[bool]) -> f64 {
    let mut acc: f64 = 0.0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.index(i, j);
            if !mask[k] {
                continue;
            }
            let g = u.gradient(grid, i, j).norm();
            if p.is_infinite() {
                acc = acc.max(g);
            } else {
                acc += g.powf(p) * grid.cell_area();
            }
        }
    }
    if p.is_infinite() {
        acc
    } else {
        acc.powf(1.0 / p)
    }
}

/// Largest spread of the construction along a single ray, sampled at
/// `samples` interior points of each ray.
pub fn ray_constancy(rec: &Reconstruction, plan: &TransportPlan, samples: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for p in &plan.pairs {
        let (x, y) = plan.ray(p);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 1..samples {
            let z = x.lerp(y, k as f64 / samples as f64);
            if let Some(v) = rec.eval(z) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if hi >= lo {
            worst = worst.max(hi - lo);
        }
    }
    worst
}

/// Summary of one reconstruction.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RecoveryReport {
    pub rays: usize,
    pub max_level_mismatch: f64,
    pub levels_monotone: bool,
    pub swept_cells: usize,
    pub filled_cells: usize,
    pub fill_components: usize,
    pub u_min: f64,
    pub u_max: f64,
    pub trace_range: (f64, f64),
    pub range_ok: bool,
    pub ray_spread: f64,
    pub trace_l1_outer: f64,
    pub trace_l1_inner: f64,
    pub rotated_gradient_residual: f64,
    pub w11: f64,
    pub w12: f64,
    pub w1inf: f64,
}
