//! Planar annulus geometry: strictly convex polylines, arclength
//! parameterization, visibility between boundary points and the max/min
//! arc distances used by the admissibility inequalities.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transport::CostNorm;

/// Absolute tolerance for point-in-region and convexity tests.
pub const EPS_GEOM: f64 = 1e-9;

/// Fewest vertices a boundary polyline may have.
pub const MIN_VERTICES: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Counterclockwise rotation by a quarter turn.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    pub fn rotated(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6})", self.x, self.y)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point {
    fn add_assign(&mut self, o: Point) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Which connected component of the annulus boundary a curve represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Outer,
    Inner,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Outer => "outer",
            Side::Inner => "inner",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed, counterclockwise, strictly convex polyline.
///
/// Arclength `s` starts at vertex 0 and increases counterclockwise.
#[derive(Clone, Debug)]
pub struct ConvexBoundary {
    side: Side,
    vertices: Vec<Point>,
    cumulative: Vec<f64>,
    perimeter: f64,
    edge_normals: Vec<Point>,
    centroid: Point,
    angles: Vec<f64>,
    sampling_tolerance: f64,
}

impl ConvexBoundary {
    /// Builds a boundary from an explicit vertex loop.
    ///
    /// `sampling_tolerance` is the largest distance between the polyline and
    /// the smooth curve it was sampled from (0 for exact polygons); points
    /// within it of the polyline are accepted as boundary points.
    pub fn from_vertices(side: Side, vertices: Vec<Point>, sampling_tolerance: f64) -> Result<Self> {
        let n = vertices.len();
        if n < MIN_VERTICES {
            return Err(Error::Geometry(format!(
                "{side} boundary has {n} vertices, at least {MIN_VERTICES} required"
            )));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Geometry(format!("{side} boundary has a non-finite vertex")));
        }
        let mut cumulative = Vec::with_capacity(n);
        let mut edge_normals = Vec::with_capacity(n);
        let mut s = 0.0;
        let mut turning = 0.0;
        for k in 0..n {
            let a = vertices[k];
            let b = vertices[(k + 1) % n];
            let c = vertices[(k + 2) % n];
            let e0 = b - a;
            let e1 = c - b;
            let len = e0.norm();
            if len <= EPS_GEOM {
                return Err(Error::Geometry(format!("{side} boundary has a degenerate edge at vertex {k}")));
            }
            let cross = e0.cross(e1);
            if cross <= EPS_GEOM {
                return Err(Error::Geometry(format!(
                    "{side} boundary is not strictly convex at vertex {}: edge cross product {cross:.3e}",
                    (k + 1) % n
                )));
            }
            turning += cross.atan2(e0.dot(e1));
            cumulative.push(s);
            s += len;
            edge_normals.push(Point::new(e0.y / len, -e0.x / len));
        }
        if (turning - 2.0 * PI).abs() > 1e-6 {
            return Err(Error::Geometry(format!(
                "{side} boundary winds {:.4} turns; expected a simple closed curve",
                turning / (2.0 * PI)
            )));
        }
        let centroid = vertices.iter().fold(Point::default(), |acc, &p| acc + p) * (1.0 / n as f64);
        let mut angles = Vec::with_capacity(n);
        let a0 = (vertices[0] - centroid).y.atan2((vertices[0] - centroid).x);
        let mut prev = a0;
        for (k, &v) in vertices.iter().enumerate() {
            let mut a = (v - centroid).y.atan2((v - centroid).x);
            while a < prev {
                a += 2.0 * PI;
            }
            if k > 0 && a <= prev {
                return Err(Error::Geometry(format!("{side} boundary is not star-shaped about its centroid")));
            }
            angles.push(a);
            prev = a;
        }
        Ok(ConvexBoundary {
            side,
            vertices,
            cumulative,
            perimeter: s,
            edge_normals,
            centroid,
            angles,
            sampling_tolerance: sampling_tolerance.max(0.0),
        })
    }

    /// Circle sampled at `n` vertices, vertex 0 at angle 0.
    pub fn circle(side: Side, center: Point, radius: f64, n: usize) -> Result<Self> {
        Self::ellipse(side, center, radius, radius, n)
    }

    /// Axis-aligned ellipse with semi-axes `a` (x) and `b` (y).
    pub fn ellipse(side: Side, center: Point, a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Geometry(format!("{side} ellipse needs positive radii, got ({a}, {b})")));
        }
        let at = |k: f64| {
            let t = 2.0 * PI * k / n as f64;
            Point::new(center.x + a * t.cos(), center.y + b * t.sin())
        };
        let vertices: Vec<Point> = (0..n).map(|k| at(k as f64)).collect();
        // Sagitta of each chord, measured at the mid-parameter point.
        let mut sag: f64 = 0.0;
        for k in 0..n {
            let p = vertices[k];
            let q = vertices[(k + 1) % n];
            let m = at(k as f64 + 0.5);
            sag = sag.max(point_segment_distance(m, p, q));
        }
        Self::from_vertices(side, vertices, sag * 1.01)
    }

    pub fn polygon(side: Side, vertices: Vec<Point>) -> Result<Self> {
        Self::from_vertices(side, vertices, 0.0)
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Arclength coordinate of every vertex.
    pub fn cumulative_arclength(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn centroid(&self) -> Point {
        self.centroid
    }

    pub fn sampling_tolerance(&self) -> f64 {
        self.sampling_tolerance
    }

    pub fn edge_normal(&self, k: usize) -> Point {
        self.edge_normals[k % self.len()]
    }

    pub fn edge(&self, k: usize) -> (Point, Point) {
        let n = self.len();
        (self.vertices[k % n], self.vertices[(k + 1) % n])
    }

    pub fn wrap(&self, s: f64) -> f64 {
        let w = s.rem_euclid(self.perimeter);
        if w >= self.perimeter {
            0.0
        } else {
            w
        }
    }

    /// Edge index and fraction along it for arclength `s`.
    pub fn locate(&self, s: f64) -> (usize, f64) {
        let s = self.wrap(s);
        let k = self.cumulative.partition_point(|&c| c <= s).saturating_sub(1);
        let start = self.cumulative[k];
        let end = if k + 1 < self.len() { self.cumulative[k + 1] } else { self.perimeter };
        let t = ((s - start) / (end - start)).clamp(0.0, 1.0);
        (k, t)
    }

    pub fn point_at(&self, s: f64) -> Point {
        let (k, t) = self.locate(s);
        let (a, b) = self.edge(k);
        a.lerp(b, t)
    }

    /// Unit normal pointing away from the region this curve encloses; at a
    /// vertex the bisector of the adjacent edge normals.
    pub fn outward_normal(&self, s: f64) -> Point {
        let (k, t) = self.locate(s);
        let (a, b) = self.edge(k);
        let len = a.dist(b);
        let n = self.len();
        let tol = 1e-12 * self.perimeter.max(1.0);
        if t * len <= tol {
            (self.edge_normals[(k + n - 1) % n] + self.edge_normals[k]).normalized()
        } else if (1.0 - t) * len <= tol {
            (self.edge_normals[k] + self.edge_normals[(k + 1) % n]).normalized()
        } else {
            self.edge_normals[k]
        }
    }

    /// Index of the edge whose angular wedge (seen from the centroid) holds `p`.
    pub fn wedge(&self, p: Point) -> usize {
        let d = p - self.centroid;
        if d.x == 0.0 && d.y == 0.0 {
            return 0;
        }
        let a0 = self.angles[0];
        let mut a = d.y.atan2(d.x);
        while a < a0 {
            a += 2.0 * PI;
        }
        while a >= a0 + 2.0 * PI {
            a -= 2.0 * PI;
        }
        self.angles.partition_point(|&v| v <= a).saturating_sub(1)
    }

    /// Signed distance from `p` to the line of edge `k`, positive outside.
    pub fn edge_offset(&self, k: usize, p: Point) -> f64 {
        let k = k % self.len();
        (p - self.vertices[k]).dot(self.edge_normals[k])
    }

    /// Signed offset of `p` from the polygon along its wedge edge: negative
    /// inside, positive outside.
    pub fn offset(&self, p: Point) -> f64 {
        self.edge_offset(self.wedge(p), p)
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.offset(p) <= tol
    }

    /// Nearest boundary point: returns (arclength, distance).
    ///
    /// Local descent from the wedge edge; exact for points whose nearest
    /// boundary point lies in a neighbouring wedge, which covers every point
    /// closer to the curve than its local radius of curvature.
    pub fn project(&self, p: Point) -> (f64, f64) {
        let n = self.len();
        let eval = |k: usize| {
            let (a, b) = self.edge(k);
            let (t, d) = point_segment_projection(p, a, b);
            (d, t)
        };
        let mut k = self.wedge(p);
        let (mut best, mut best_t) = eval(k);
        for dir in [1usize, n - 1] {
            loop {
                let j = (k + dir) % n;
                let (d, t) = eval(j);
                if d < best {
                    best = d;
                    best_t = t;
                    k = j;
                } else {
                    break;
                }
            }
        }
        let (a, b) = self.edge(k);
        let s = self.cumulative[k] + best_t * a.dist(b);
        (self.wrap(s), best)
    }

    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        self.project(p).1
    }

    /// Exact distance from an interior point to the boundary.
    fn interior_distance_exact(&self, p: Point) -> f64 {
        (0..self.len()).map(|k| -self.edge_offset(k, p)).fold(f64::INFINITY, f64::min)
    }

    /// Exact distance from an exterior point to the boundary.
    fn exterior_distance_exact(&self, p: Point) -> f64 {
        (0..self.len())
            .map(|k| {
                let (a, b) = self.edge(k);
                point_segment_distance(p, a, b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Boundary points of an arc: its two endpoints and every vertex between
    /// them, in counterclockwise order, paired with their arclength.
    pub fn arc_samples(&self, arc: &BoundaryArc) -> Vec<(f64, Point)> {
        let mut out = vec![(self.wrap(arc.start), self.point_at(arc.start))];
        if arc.length <= 0.0 {
            return out;
        }
        let n = self.len();
        let (k0, _) = self.locate(arc.start);
        for step in 1..=n {
            let k = (k0 + step) % n;
            let off = (self.cumulative[k] - arc.start).rem_euclid(self.perimeter);
            if off <= 0.0 || off >= arc.length {
                if off >= arc.length {
                    break;
                }
                continue;
            }
            out.push((self.cumulative[k], self.vertices[k]));
        }
        let end = arc.start + arc.length;
        out.push((self.wrap(end), self.point_at(end)));
        out
    }

    /// Arc as a list of polyline segments.
    pub fn arc_segments(&self, arc: &BoundaryArc) -> Vec<(Point, Point)> {
        let pts = self.arc_samples(arc);
        if pts.len() == 1 {
            return vec![(pts[0].1, pts[0].1)];
        }
        pts.windows(2).map(|w| (w[0].1, w[1].1)).collect()
    }
}

/// Arc of one boundary component: `[start, start + length]` in arclength,
/// wrapping around the perimeter. Zero length denotes a single point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryArc {
    pub side: Side,
    pub start: f64,
    pub length: f64,
}

impl BoundaryArc {
    pub fn new(side: Side, start: f64, length: f64) -> Self {
        BoundaryArc { side, start, length: length.max(0.0) }
    }

    pub fn point(side: Side, s: f64) -> Self {
        BoundaryArc { side, start: s, length: 0.0 }
    }

    pub fn end(&self) -> f64 {
        self.start + self.length
    }

    /// Counterclockwise offset of `s` from the arc start, in `[0, perimeter)`.
    pub fn offset_of(&self, s: f64, perimeter: f64) -> f64 {
        let o = (s - self.start).rem_euclid(perimeter);
        if o >= perimeter {
            0.0
        } else {
            o
        }
    }

    pub fn contains(&self, s: f64, perimeter: f64, tol: f64) -> bool {
        let o = self.offset_of(s, perimeter);
        o <= self.length + tol || perimeter - o <= tol
    }
}

/// The region between two nested strictly convex curves.
#[derive(Clone, Debug)]
pub struct Annulus {
    pub outer: ConvexBoundary,
    pub inner: ConvexBoundary,
    clearance: f64,
}

impl Annulus {
    pub fn new(outer: ConvexBoundary, inner: ConvexBoundary) -> Result<Self> {
        if outer.side() != Side::Outer || inner.side() != Side::Inner {
            return Err(Error::Geometry("annulus needs one outer and one inner boundary".into()));
        }
        let mut clearance = f64::INFINITY;
        for (k, &v) in inner.vertices().iter().enumerate() {
            if outer.offset(v) >= -EPS_GEOM {
                return Err(Error::Geometry(format!("inner vertex {k} at {v} is not strictly inside the outer curve")));
            }
            clearance = clearance.min(outer.interior_distance_exact(v));
        }
        for &v in outer.vertices() {
            clearance = clearance.min(inner.exterior_distance_exact(v));
        }
        if clearance <= EPS_GEOM {
            return Err(Error::Geometry(format!("annulus clearance {clearance:.3e} is not positive")));
        }
        Ok(Annulus { outer, inner, clearance })
    }

    /// Concentric circles, both sampled at `n` vertices.
    pub fn concentric_circles(center: Point, r_inner: f64, r_outer: f64, n: usize) -> Result<Self> {
        Annulus::new(
            ConvexBoundary::circle(Side::Outer, center, r_outer, n)?,
            ConvexBoundary::circle(Side::Inner, center, r_inner, n)?,
        )
    }

    pub fn clearance(&self) -> f64 {
        self.clearance
    }

    pub fn boundary(&self, side: Side) -> &ConvexBoundary {
        match side {
            Side::Outer => &self.outer,
            Side::Inner => &self.inner,
        }
    }

    pub fn point_at(&self, side: Side, s: f64) -> Point {
        self.boundary(side).point_at(s)
    }

    pub fn total_perimeter(&self) -> f64 {
        self.outer.perimeter() + self.inner.perimeter()
    }

    /// Tolerance for "inside the hole": absorbs the sampling error of both
    /// curves, since endpoints on either smooth curve may sit that far from
    /// the polylines.
    fn hole_tolerance(&self) -> f64 {
        EPS_GEOM + 2.0 * self.inner.sampling_tolerance() + self.outer.sampling_tolerance()
    }

    fn outer_tolerance(&self) -> f64 {
        EPS_GEOM + self.outer.sampling_tolerance()
    }

    /// Whether `p` lies in the closed annulus, up to the containment
    /// tolerances.
    pub fn contains(&self, p: Point) -> bool {
        self.outer.offset(p) <= self.outer_tolerance()
            && self.inner.offset(p) >= -(EPS_GEOM + self.inner.sampling_tolerance())
    }

    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        self.outer.distance_to_boundary(p).min(self.inner.distance_to_boundary(p))
    }

    /// Whether the closed segment `[p, q]` stays in the closed annulus.
    /// Tangency to the inner curve counts as inside.
    pub fn segment_in_closure(&self, p: Point, q: Point) -> Result<bool> {
        for z in [p, q] {
            if !self.contains(z) {
                return Err(Error::OutsideAnnulus { x: z.x, y: z.y });
            }
        }
        // Outer region is convex and holds both endpoints.
        Ok(!self.segment_enters_hole(p, q))
    }

    /// Whether `[p, q]` passes through the open inner region deeper than the
    /// hole tolerance.
    fn segment_enters_hole(&self, p: Point, q: Point) -> bool {
        let inner = &self.inner;
        let d = q - p;
        if d.norm() <= EPS_GEOM {
            return inner.offset(p) < -self.hole_tolerance();
        }
        // Exact fast path: an endpoint on the polygon whose direction leaves
        // through the local tangent cone cannot re-enter a convex region.
        for (a, dir) in [(p, d), (q, -d)] {
            let k = inner.wedge(a);
            if inner.edge_offset(k, a).abs() <= 1e-12 {
                let n = inner.len();
                let (v0, v1) = inner.edge(k);
                let mut normals = vec![inner.edge_normal(k)];
                if a.dist(v0) <= 1e-12 {
                    normals.push(inner.edge_normal(k + n - 1));
                }
                if a.dist(v1) <= 1e-12 {
                    normals.push(inner.edge_normal(k + 1));
                }
                if normals.iter().any(|nv| nv.dot(dir) >= 0.0) {
                    return false;
                }
            }
        }
        let tol = self.hole_tolerance();
        let c = inner.centroid();
        // Bounding radii about the centroid.
        let (_, near) = point_segment_projection(c, p, q);
        let r_max = inner
            .vertices()
            .iter()
            .map(|v| v.dist(c))
            .fold(0.0_f64, f64::max);
        if near >= r_max {
            return false;
        }
        // Clip against the polygon shrunk by `tol`, restricted to the edges
        // whose wedges the segment sweeps.
        let edges: Vec<usize> = self.swept_edges(p, q);
        let mut t0: f64 = 0.0;
        let mut t1: f64 = 1.0;
        for k in edges {
            let nk = inner.edge_normal(k);
            let base = inner.edge_offset(k, p) + tol;
            let rate = d.dot(nk);
            // Inside shrunk half-plane: base + rate * t < 0.
            if rate.abs() < 1e-300 {
                if base >= 0.0 {
                    return false;
                }
                continue;
            }
            let t = -base / rate;
            if rate > 0.0 {
                t1 = t1.min(t);
            } else {
                t0 = t0.max(t);
            }
            if t0 >= t1 {
                return false;
            }
        }
        t1 - t0 > 0.0
    }

    /// Edges of the inner curve whose wedges meet the segment, padded by one
    /// edge on each side. All edges when the segment passes the centroid.
    fn swept_edges(&self, p: Point, q: Point) -> Vec<usize> {
        let inner = &self.inner;
        let n = inner.len();
        let c = inner.centroid();
        let (a, b) = (p - c, q - c);
        let sweep = a.cross(b).atan2(a.dot(b));
        if sweep.abs() >= PI - 1e-9 || point_segment_distance(c, p, q) <= EPS_GEOM {
            return (0..n).collect();
        }
        let (ka, kb) = (inner.wedge(p), inner.wedge(q));
        let (from, to) = if sweep >= 0.0 { (ka, kb) } else { (kb, ka) };
        let count = (to + n - from) % n;
        (0..=count + 2).map(|j| (from + n - 1 + j) % n).collect()
    }
}

/// Projection of `p` on segment `[a, b]`: (parameter in [0,1], distance).
pub fn point_segment_projection(p: Point, a: Point, b: Point) -> (f64, f64) {
    let d = b - a;
    let l2 = d.dot(d);
    if l2 == 0.0 {
        return (0.0, p.dist(a));
    }
    let t = ((p - a).dot(d) / l2).clamp(0.0, 1.0);
    (t, p.dist(a.lerp(b, t)))
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    point_segment_projection(p, a, b).1
}

/// Proper intersection test: true when the open segments cross at a single
/// point interior to both (shared endpoints and collinear touching excluded).
pub fn segments_cross_interior(a: Point, b: Point, c: Point, d: Point, tol: f64) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    let scale1 = (b - a).norm();
    let scale2 = (d - c).norm();
    let t1 = tol * scale1;
    let t2 = tol * scale2;
    ((d1 > t1 && d2 < -t1) || (d1 < -t1 && d2 > t1)) && ((d3 > t2 && d4 < -t2) || (d3 < -t2 && d4 > t2))
}

/// Euclidean distance between segments `[a, b]` and `[c, d]`.
pub fn segment_segment_distance(a: Point, b: Point, c: Point, d: Point) -> f64 {
    if segments_cross_interior(a, b, c, d, 0.0) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Distance between segments under a general norm: nested ternary search
/// over the two (convex) segment parameters.
fn segment_segment_distance_norm(a: Point, b: Point, c: Point, d: Point, norm: &CostNorm) -> f64 {
    let inner = |p: Point| ternary_min(|t| norm.eval(p - c.lerp(d, t)));
    ternary_min(|s| inner(a.lerp(b, s)))
}

fn ternary_min(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..60 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi)).min(f(0.0)).min(f(1.0))
}

/// Maximal distance between two sets of arcs, over vertices and arc
/// endpoints. `None` when either set is empty.
pub fn arc_set_max_distance(annulus: &Annulus, a: &[BoundaryArc], b: &[BoundaryArc], norm: &CostNorm) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let pa: Vec<Point> = a.iter().flat_map(|arc| annulus.boundary(arc.side).arc_samples(arc)).map(|x| x.1).collect();
    let pb: Vec<Point> = b.iter().flat_map(|arc| annulus.boundary(arc.side).arc_samples(arc)).map(|x| x.1).collect();
    let mut best: f64 = 0.0;
    for &p in &pa {
        for &q in &pb {
            best = best.max(norm.eval(p - q));
        }
    }
    Some(best)
}

/// Minimal distance between two sets of arcs, segment to segment.
/// `None` when either set is empty.
pub fn arc_set_min_distance(annulus: &Annulus, a: &[BoundaryArc], b: &[BoundaryArc], norm: &CostNorm) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let sa: Vec<(Point, Point)> = a.iter().flat_map(|arc| annulus.boundary(arc.side).arc_segments(arc)).collect();
    let sb: Vec<(Point, Point)> = b.iter().flat_map(|arc| annulus.boundary(arc.side).arc_segments(arc)).collect();
    let mut best = f64::INFINITY;
    for &(p0, p1) in &sa {
        for &(q0, q1) in &sb {
            let d = match norm {
                CostNorm::Euclidean => segment_segment_distance(p0, p1, q0, q1),
                _ => {
                    // Triangle inequality in the same norm: tight for short
                    // segments, so few pairs reach the nested search.
                    let lb = norm.eval(p0 - q0) - norm.eval(p1 - p0) - norm.eval(q1 - q0);
                    if lb >= best {
                        continue;
                    }
                    segment_segment_distance_norm(p0, p1, q0, q1, norm)
                }
            };
            best = best.min(d);
        }
    }
    Some(best)
}

/// Maximal distance between two arcs, over vertices and endpoints.
pub fn arc_max_distance(annulus: &Annulus, a: &BoundaryArc, b: &BoundaryArc) -> f64 {
    arc_set_max_distance(annulus, std::slice::from_ref(a), std::slice::from_ref(b), &CostNorm::Euclidean)
        .unwrap_or(0.0)
}

/// Minimal distance between two arcs, exact for the polylines.
pub fn arc_min_distance(annulus: &Annulus, a: &BoundaryArc, b: &BoundaryArc) -> f64 {
    arc_set_min_distance(annulus, std::slice::from_ref(a), std::slice::from_ref(b), &CostNorm::Euclidean)
        .unwrap_or(f64::INFINITY)
}
