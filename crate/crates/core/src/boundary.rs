//! Boundary data: piecewise-linear traces with jumps, their tangential
//! derivative as a signed boundary measure, the monotone/flat arc
//! decomposition with cross-component pairing, and trace anchoring.
//!
//! Orientation: both curves are parameterized counterclockwise. On the
//! inner curve the measure is the derivative along the clockwise direction,
//! so `f = -dg/ds` there while `f = dg/ds` on the outer curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Annulus, BoundaryArc, ConvexBoundary, Side};

/// Slopes with smaller magnitude count as flat.
pub const EPS_SLOPE: f64 = 1e-12;

/// Relative tolerance for mass and total-variation equalities.
pub const MASS_REL_TOL: f64 = 1e-9;

/// One breakpoint of a piecewise-linear function with one-sided limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub s: f64,
    pub left: f64,
    pub right: f64,
}

impl Knot {
    pub fn jump(&self) -> f64 {
        self.right - self.left
    }
}

/// Linear piece between two consecutive knots: `[s0, s1]` with `s1` possibly
/// past the perimeter for the closing piece.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub s0: f64,
    pub s1: f64,
    pub v0: f64,
    pub v1: f64,
}

impl Segment {
    pub fn slope(&self) -> f64 {
        if self.s1 > self.s0 {
            (self.v1 - self.v0) / (self.s1 - self.s0)
        } else {
            0.0
        }
    }
}

/// Periodic piecewise-linear function with jumps on one boundary curve.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentFunction {
    side: Side,
    perimeter: f64,
    knots: Vec<Knot>,
}

impl ComponentFunction {
    /// Knots are wrapped into `[0, perimeter)` and sorted; coincident knots
    /// are merged keeping the outermost one-sided limits.
    pub fn from_knots(side: Side, perimeter: f64, knots: Vec<Knot>) -> Result<Self> {
        if !(perimeter > 0.0 && perimeter.is_finite()) {
            return Err(Error::BoundaryData(format!("{side} perimeter must be positive")));
        }
        if knots.is_empty() {
            return Err(Error::BoundaryData(format!("{side} data has no breakpoints")));
        }
        let mut ks: Vec<Knot> = knots
            .into_iter()
            .map(|k| {
                let mut s = k.s.rem_euclid(perimeter);
                if s >= perimeter {
                    s = 0.0;
                }
                Knot { s, ..k }
            })
            .collect();
        if ks.iter().any(|k| !k.s.is_finite() || !k.left.is_finite() || !k.right.is_finite()) {
            return Err(Error::BoundaryData(format!("{side} data has non-finite values")));
        }
        ks.sort_by(|a, b| a.s.total_cmp(&b.s));
        let merge_tol = 1e-13 * perimeter;
        let mut merged: Vec<Knot> = Vec::with_capacity(ks.len());
        for k in ks {
            match merged.last_mut() {
                Some(last) if k.s - last.s <= merge_tol => last.right = k.right,
                _ => merged.push(k),
            }
        }
        if merged.len() > 1 {
            let first = merged[0];
            let last = *merged.last().unwrap();
            if first.s + perimeter - last.s <= merge_tol {
                merged.pop();
                merged[0].left = last.left;
            }
        }
        Ok(ComponentFunction { side, perimeter, knots: merged })
    }

    pub fn constant(side: Side, perimeter: f64, value: f64) -> Result<Self> {
        Self::from_knots(side, perimeter, vec![Knot { s: 0.0, left: value, right: value }])
    }

    /// `clamp(a x + b y + c, lo, hi)` restricted to the polyline, exact on
    /// every edge: knots at vertices and at clamp crossings.
    pub fn clamped_linear(boundary: &ConvexBoundary, a: f64, b: f64, c: f64, lo: f64, hi: f64) -> Result<Self> {
        if lo > hi {
            return Err(Error::BoundaryData(format!("clamp bounds reversed: lo {lo} > hi {hi}")));
        }
        let lin = |p: crate::geometry::Point| a * p.x + b * p.y + c;
        let n = boundary.len();
        let cum = boundary.cumulative_arclength();
        let mut knots = Vec::with_capacity(n + 8);
        for k in 0..n {
            let (p, q) = boundary.edge(k);
            let (lp, lq) = (lin(p), lin(q));
            let v = lp.clamp(lo, hi);
            knots.push(Knot { s: cum[k], left: v, right: v });
            let len = p.dist(q);
            let mut cuts: Vec<(f64, f64)> = Vec::new();
            for level in [lo, hi] {
                if !level.is_finite() {
                    continue;
                }
                if (lp - level) * (lq - level) < 0.0 {
                    let t = (level - lp) / (lq - lp);
                    cuts.push((t, level));
                }
            }
            cuts.sort_by(|x, y| x.0.total_cmp(&y.0));
            for (t, level) in cuts {
                knots.push(Knot { s: cum[k] + t * len, left: level, right: level });
            }
        }
        Self::from_knots(boundary.side(), boundary.perimeter(), knots)
    }

    /// Piecewise-linear interpolant of `(s, value)` breakpoints; each jump
    /// `(s, height)` raises the right limit at `s` by `height`.
    pub fn from_table(side: Side, perimeter: f64, breakpoints: &[(f64, f64)], jumps: &[(f64, f64)]) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::BoundaryData(format!("{side} breakpoint table is empty")));
        }
        let base = Self::from_knots(
            side,
            perimeter,
            breakpoints.iter().map(|&(s, v)| Knot { s, left: v, right: v }).collect(),
        )?;
        if jumps.is_empty() {
            return Ok(base);
        }
        let mut knots = base.knots.clone();
        for &(s, h) in jumps {
            let s = s.rem_euclid(perimeter);
            let tol = 1e-13 * perimeter;
            if let Some(k) = knots.iter_mut().find(|k| (k.s - s).abs() <= tol) {
                k.right += h;
            } else {
                let v = base.value_left(s);
                knots.push(Knot { s, left: v, right: v + h });
            }
        }
        Self::from_knots(side, perimeter, knots)
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn segment(&self, k: usize) -> Segment {
        let n = self.knots.len();
        let a = self.knots[k];
        let (s1, v1) = if k + 1 < n {
            (self.knots[k + 1].s, self.knots[k + 1].left)
        } else {
            (self.knots[0].s + self.perimeter, self.knots[0].left)
        };
        Segment { s0: a.s, s1, v0: a.right, v1 }
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        (0..self.knots.len()).map(move |k| self.segment(k))
    }

    fn wrap(&self, s: f64) -> f64 {
        let w = s.rem_euclid(self.perimeter);
        if w >= self.perimeter {
            0.0
        } else {
            w
        }
    }

    /// Segment containing `s` (knot at or before it).
    fn segment_index(&self, s: f64) -> usize {
        let s = self.wrap(s);
        let k = self.knots.partition_point(|kn| kn.s <= s);
        if k == 0 {
            self.knots.len() - 1
        } else {
            k - 1
        }
    }

    fn eval_in_segment(&self, k: usize, s: f64) -> f64 {
        let seg = self.segment(k);
        let mut s = self.wrap(s);
        if s < seg.s0 {
            s += self.perimeter;
        }
        if seg.s1 <= seg.s0 {
            return seg.v0;
        }
        let t = ((s - seg.s0) / (seg.s1 - seg.s0)).clamp(0.0, 1.0);
        seg.v0 + t * (seg.v1 - seg.v0)
    }

    /// Right limit at `s`.
    pub fn value(&self, s: f64) -> f64 {
        let k = self.segment_index(s);
        let w = self.wrap(s);
        if self.knots[k].s == w {
            return self.knots[k].right;
        }
        self.eval_in_segment(k, s)
    }

    /// Left limit at `s`.
    pub fn value_left(&self, s: f64) -> f64 {
        let w = self.wrap(s);
        let k = self.segment_index(s);
        if self.knots[k].s == w {
            return self.knots[k].left;
        }
        self.eval_in_segment(k, s)
    }

    /// Closed range of one-sided limits.
    pub fn range(&self) -> (f64, f64) {
        self.knots.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| {
            (lo.min(k.left).min(k.right), hi.max(k.left).max(k.right))
        })
    }

    pub fn total_variation(&self) -> f64 {
        let slopes: f64 = self.segments().map(|g| (g.v1 - g.v0).abs()).sum();
        let jumps: f64 = self.knots.iter().map(|k| k.jump().abs()).sum();
        slopes + jumps
    }

    /// Variation over the closed arc: slope integrals plus jumps located in
    /// the arc, endpoints included.
    pub fn tv_on_arc(&self, arc: &BoundaryArc) -> f64 {
        let p = self.perimeter;
        let tol = 1e-12 * p;
        let mut tv = 0.0;
        for k in &self.knots {
            if arc.contains(k.s, p, tol) {
                tv += k.jump().abs();
            }
        }
        if arc.length <= 0.0 {
            return tv;
        }
        for seg in self.segments() {
            let slope = seg.slope().abs();
            if slope == 0.0 {
                continue;
            }
            tv += slope * overlap_length(arc.start, arc.length, seg.s0, seg.s1 - seg.s0, p);
        }
        tv
    }
}

/// Length of the overlap of two wrapping intervals on a circle of length `p`.
pub fn overlap_length(a0: f64, alen: f64, b0: f64, blen: f64, p: f64) -> f64 {
    let a0 = a0.rem_euclid(p);
    let b0 = b0.rem_euclid(p);
    let mut total = 0.0;
    for shift in [-p, 0.0, p] {
        let lo = a0.max(b0 + shift);
        let hi = (a0 + alen).min(b0 + shift + blen);
        if hi > lo {
            total += hi - lo;
        }
    }
    total.min(alen).min(blen)
}

/// Dirichlet datum on both boundary curves, plus a common additive offset.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFunction {
    pub outer: ComponentFunction,
    pub inner: ComponentFunction,
    pub offset: f64,
}

impl BoundaryFunction {
    pub fn new(outer: ComponentFunction, inner: ComponentFunction) -> Result<Self> {
        if outer.side() != Side::Outer || inner.side() != Side::Inner {
            return Err(Error::BoundaryData("components must be one outer and one inner function".into()));
        }
        Ok(BoundaryFunction { outer, inner, offset: 0.0 })
    }

    pub fn constant(annulus: &Annulus, value: f64) -> Result<Self> {
        Self::new(
            ComponentFunction::constant(Side::Outer, annulus.outer.perimeter(), value)?,
            ComponentFunction::constant(Side::Inner, annulus.inner.perimeter(), value)?,
        )
    }

    pub fn component(&self, side: Side) -> &ComponentFunction {
        match side {
            Side::Outer => &self.outer,
            Side::Inner => &self.inner,
        }
    }

    pub fn value(&self, side: Side, s: f64) -> f64 {
        self.component(side).value(s) + self.offset
    }

    pub fn value_left(&self, side: Side, s: f64) -> f64 {
        self.component(side).value_left(s) + self.offset
    }

    /// Same function plus `c` on both components.
    pub fn shifted(&self, c: f64) -> Self {
        BoundaryFunction { offset: self.offset + c, ..self.clone() }
    }

    pub fn range(&self) -> (f64, f64) {
        let (a, b) = self.outer.range();
        let (c, d) = self.inner.range();
        (a.min(c) + self.offset, b.max(d) + self.offset)
    }

    pub fn total_variation(&self, side: Side) -> f64 {
        self.component(side).total_variation()
    }

    pub fn tv_on_arc(&self, arc: &BoundaryArc) -> f64 {
        self.component(arc.side).tv_on_arc(arc)
    }
}

/// Orientation sign turning counterclockwise slopes into measure densities.
pub fn orientation_sign(side: Side) -> f64 {
    match side {
        Side::Outer => 1.0,
        Side::Inner => -1.0,
    }
}

/// Constant density on `[start, end]`, `0 <= start < end <= perimeter`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityPiece {
    pub start: f64,
    pub end: f64,
    pub density: f64,
}

impl DensityPiece {
    pub fn mass(&self) -> f64 {
        self.density * (self.end - self.start)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureAtom {
    pub s: f64,
    pub mass: f64,
}

/// Signed measure on one curve: piecewise-constant density plus atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentMeasure {
    pub side: Side,
    pub perimeter: f64,
    pub pieces: Vec<DensityPiece>,
    pub atoms: Vec<MeasureAtom>,
}

impl ComponentMeasure {
    pub fn zero(side: Side, perimeter: f64) -> Self {
        ComponentMeasure { side, perimeter, pieces: Vec::new(), atoms: Vec::new() }
    }

    pub fn total_mass(&self) -> f64 {
        self.pieces.iter().map(|p| p.mass()).sum::<f64>() + self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }

    pub fn positive_mass(&self) -> f64 {
        self.pieces.iter().map(|p| p.mass().max(0.0)).sum::<f64>()
            + self.atoms.iter().map(|a| a.mass.max(0.0)).sum::<f64>()
    }

    pub fn negative_mass(&self) -> f64 {
        self.pieces.iter().map(|p| (-p.mass()).max(0.0)).sum::<f64>()
            + self.atoms.iter().map(|a| (-a.mass).max(0.0)).sum::<f64>()
    }

    pub fn abs_mass(&self) -> f64 {
        self.positive_mass() + self.negative_mass()
    }

    /// Signed mass of the closed arc.
    pub fn mass_on_arc(&self, arc: &BoundaryArc) -> f64 {
        let p = self.perimeter;
        let tol = 1e-12 * p;
        let atoms: f64 = self.atoms.iter().filter(|a| arc.contains(a.s, p, tol)).map(|a| a.mass).sum();
        let dens: f64 = self
            .pieces
            .iter()
            .map(|pc| pc.density * overlap_length(arc.start, arc.length, pc.start, pc.end - pc.start, p))
            .sum();
        atoms + dens
    }

    pub fn abs_mass_on_arc(&self, arc: &BoundaryArc) -> f64 {
        let p = self.perimeter;
        let tol = 1e-12 * p;
        let atoms: f64 = self.atoms.iter().filter(|a| arc.contains(a.s, p, tol)).map(|a| a.mass.abs()).sum();
        let dens: f64 = self
            .pieces
            .iter()
            .map(|pc| pc.density.abs() * overlap_length(arc.start, arc.length, pc.start, pc.end - pc.start, p))
            .sum();
        atoms + dens
    }

    pub fn max_density(&self) -> f64 {
        self.pieces.iter().map(|p| p.density.abs()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.density == 0.0) && self.atoms.iter().all(|a| a.mass == 0.0)
    }
}

/// The tangential derivative `f` on both curves.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMeasure {
    pub outer: ComponentMeasure,
    pub inner: ComponentMeasure,
}

impl BoundaryMeasure {
    pub fn component(&self, side: Side) -> &ComponentMeasure {
        match side {
            Side::Outer => &self.outer,
            Side::Inner => &self.inner,
        }
    }

    pub fn abs_mass(&self) -> f64 {
        self.outer.abs_mass() + self.inner.abs_mass()
    }

    pub fn positive_mass(&self) -> f64 {
        self.outer.positive_mass() + self.inner.positive_mass()
    }

    pub fn negative_mass(&self) -> f64 {
        self.outer.negative_mass() + self.inner.negative_mass()
    }

    /// Tolerance for mass equalities, relative to the total variation.
    pub fn eps_mass(&self) -> f64 {
        MASS_REL_TOL * self.abs_mass()
    }

    pub fn is_zero(&self) -> bool {
        self.outer.is_zero() && self.inner.is_zero()
    }

    /// `sup |f|` over both curves (densities only).
    pub fn sup_density(&self) -> f64 {
        self.outer.max_density().max(self.inner.max_density())
    }
}

fn component_derivative(g: &ComponentFunction) -> ComponentMeasure {
    let sign = orientation_sign(g.side());
    let p = g.perimeter();
    let mut pieces = Vec::new();
    for seg in g.segments() {
        let d = sign * seg.slope();
        if d == 0.0 || seg.s1 <= seg.s0 {
            continue;
        }
        if seg.s1 <= p {
            pieces.push(DensityPiece { start: seg.s0, end: seg.s1, density: d });
        } else {
            if seg.s0 < p {
                pieces.push(DensityPiece { start: seg.s0, end: p, density: d });
            }
            pieces.push(DensityPiece { start: 0.0, end: seg.s1 - p, density: d });
        }
    }
    pieces.sort_by(|a, b| a.start.total_cmp(&b.start));
    let atoms = g
        .knots()
        .iter()
        .filter(|k| k.jump() != 0.0)
        .map(|k| MeasureAtom { s: k.s, mass: sign * k.jump() })
        .collect();
    ComponentMeasure { side: g.side(), perimeter: p, pieces, atoms }
}

/// `f = d_tau g` on both curves.
pub fn tangential_derivative(g: &BoundaryFunction) -> BoundaryMeasure {
    BoundaryMeasure { outer: component_derivative(&g.outer), inner: component_derivative(&g.inner) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    Increasing,
    Decreasing,
    Flat,
}

impl RunKind {
    fn from_sign(s: i8) -> Self {
        match s {
            1 => RunKind::Increasing,
            -1 => RunKind::Decreasing,
            _ => RunKind::Flat,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            RunKind::Increasing => "chi",
            RunKind::Decreasing => "gamma",
            RunKind::Flat => "flat",
        }
    }
}

/// Maximal arc on which `g` is monotone (non-strictly) or flat.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub kind: RunKind,
    pub arc: BoundaryArc,
    pub tv: f64,
}

/// Monotonicity structure of one curve.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentDecomposition {
    pub side: Side,
    pub perimeter: f64,
    /// Cyclic order, counterclockwise, covering the curve.
    pub runs: Vec<Run>,
    /// Points where an increasing and a decreasing run meet with no flat
    /// part between them.
    pub junctions: Vec<f64>,
}

impl ComponentDecomposition {
    pub fn monotone_runs(&self) -> Vec<Run> {
        self.runs.iter().copied().filter(|r| r.kind != RunKind::Flat).collect()
    }

    /// Number of changes of monotonicity going once around the curve.
    pub fn monotonicity_changes(&self) -> usize {
        let m = self.monotone_runs();
        if m.len() < 2 {
            return 0;
        }
        (0..m.len()).filter(|&i| m[i].kind != m[(i + 1) % m.len()].kind).count()
    }

    pub fn covered_length(&self) -> f64 {
        self.runs.iter().map(|r| r.arc.length).sum()
    }
}

/// Break one curve into maximal increasing / decreasing / flat runs.
///
/// A flat stretch between two runs of the same monotonicity is absorbed
/// into them, so consecutive runs always alternate.
pub fn decompose_component(g: &ComponentFunction) -> ComponentDecomposition {
    let p = g.perimeter();
    // Elements: (sign, start, length, tv)
    let mut elems: Vec<(i8, f64, f64, f64)> = Vec::new();
    let scale = g.total_variation().max(1.0);
    for (k, seg) in g.segments().enumerate() {
        let jump = g.knots()[k].jump();
        if jump.abs() > 1e-14 * scale {
            elems.push((if jump > 0.0 { 1 } else { -1 }, seg.s0, 0.0, jump.abs()));
        }
        let len = seg.s1 - seg.s0;
        if len <= 0.0 {
            continue;
        }
        let slope = seg.slope();
        let sign = if slope > EPS_SLOPE {
            1
        } else if slope < -EPS_SLOPE {
            -1
        } else {
            0
        };
        let tv = if sign == 0 { 0.0 } else { (seg.v1 - seg.v0).abs() };
        elems.push((sign, seg.s0, len, tv));
    }
    if elems.iter().all(|e| e.0 == 0) {
        let start = g.knots()[0].s;
        return ComponentDecomposition {
            side: g.side(),
            perimeter: p,
            runs: vec![Run { kind: RunKind::Flat, arc: BoundaryArc::new(g.side(), start, p), tv: 0.0 }],
            junctions: Vec::new(),
        };
    }
    // Group consecutive same-sign elements, cyclically.
    let mut groups: Vec<(i8, f64, f64, f64)> = Vec::new();
    for e in elems {
        match groups.last_mut() {
            Some(last) if last.0 == e.0 => {
                last.2 += e.2;
                last.3 += e.3;
            }
            _ => groups.push(e),
        }
    }
    let merge_wrap = |groups: &mut Vec<(i8, f64, f64, f64)>| {
        if groups.len() > 1 && groups[0].0 == groups.last().unwrap().0 {
            let last = groups.pop().unwrap();
            groups[0] = (last.0, last.1, last.2 + groups[0].2, last.3 + groups[0].3);
        }
    };
    merge_wrap(&mut groups);
    // Absorb flats between equal monotone neighbours.
    loop {
        let n = groups.len();
        if n < 3 {
            break;
        }
        let idx = (0..n).find(|&i| {
            groups[i].0 == 0 && groups[(i + n - 1) % n].0 != 0 && groups[(i + n - 1) % n].0 == groups[(i + 1) % n].0
        });
        let Some(i) = idx else { break };
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        let merged = (groups[prev].0, groups[prev].1, groups[prev].2 + groups[i].2 + groups[next].2, groups[prev].3 + groups[i].3 + groups[next].3);
        let mut rebuilt = Vec::with_capacity(n - 2);
        for (j, gr) in groups.iter().enumerate() {
            if j == prev {
                rebuilt.push(merged);
            } else if j != i && j != next {
                rebuilt.push(*gr);
            }
        }
        groups = rebuilt;
        merge_wrap(&mut groups);
    }
    let mut runs: Vec<Run> = groups
        .iter()
        .map(|&(sg, s, len, tv)| Run {
            kind: RunKind::from_sign(sg),
            arc: BoundaryArc::new(g.side(), s.rem_euclid(p), len.min(p)),
            tv,
        })
        .collect();
    runs.sort_by(|a, b| a.arc.start.total_cmp(&b.arc.start));
    let n = runs.len();
    let mut junctions = Vec::new();
    for i in 0..n {
        let a = runs[i];
        let b = runs[(i + 1) % n];
        if a.kind != RunKind::Flat && b.kind != RunKind::Flat && a.kind != b.kind {
            junctions.push(b.arc.start);
        }
    }
    ComponentDecomposition { side: g.side(), perimeter: p, runs, junctions }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Chi,
    Gamma,
    Bump,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Chi => "chi",
            FamilyKind::Gamma => "gamma",
            FamilyKind::Bump => "bump",
        }
    }
}

/// A paired source/target arc family. Sources lie in the support of the
/// positive part of `f`, targets in the negative part.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub kind: FamilyKind,
    pub index: usize,
    pub source: BoundaryArc,
    pub target: BoundaryArc,
    pub tv_source: f64,
    pub tv_target: f64,
}

impl Family {
    pub fn label(&self) -> String {
        format!("{}{}", self.kind.name(), self.index + 1)
    }
}

/// One consistent pairing of the outer monotone runs with the inner ones.
#[derive(Clone, Debug, PartialEq)]
pub struct Pairing {
    /// Cyclic shift applied to the inner run list.
    pub shift: usize,
    /// Outer run indices (into the monotone run list) grouped as bumps.
    pub bumps: Vec<(usize, usize)>,
    pub families: Vec<Family>,
}

/// Zero-net-variation arc between paired monotone runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatPart {
    pub arc: BoundaryArc,
    pub flat: bool,
}

/// Full decomposition of both curves with every consistent pairing.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcDecomposition {
    pub outer: ComponentDecomposition,
    pub inner: ComponentDecomposition,
    pub pairings: Vec<Pairing>,
    pub chosen: Option<usize>,
    /// Why no pairing exists, when none does.
    pub failure: Option<String>,
    /// Set when outer runs outnumber inner ones but no equal-variation
    /// grouping into bumps exists.
    pub ambiguity: Option<String>,
    pub tolerance: f64,
}

impl ArcDecomposition {
    pub fn pairing(&self) -> Option<&Pairing> {
        self.chosen.map(|i| &self.pairings[i])
    }

    pub fn families(&self) -> &[Family] {
        self.pairing().map(|p| p.families.as_slice()).unwrap_or(&[])
    }

    pub fn component(&self, side: Side) -> &ComponentDecomposition {
        match side {
            Side::Outer => &self.outer,
            Side::Inner => &self.inner,
        }
    }

    /// Zero-net-variation parts of one curve: the complement of the paired
    /// monotone runs. Bumps on the outer curve are non-flat parts.
    pub fn flat_parts(&self, side: Side) -> Vec<FlatPart> {
        let comp = self.component(side);
        let p = comp.perimeter;
        let paired: Vec<BoundaryArc> = self
            .families()
            .iter()
            .filter(|f| f.kind != FamilyKind::Bump)
            .flat_map(|f| [f.source, f.target])
            .filter(|a| a.side == side)
            .collect();
        let bumps: Vec<BoundaryArc> = self
            .families()
            .iter()
            .filter(|f| f.kind == FamilyKind::Bump)
            .flat_map(|f| [f.source, f.target])
            .collect();
        if paired.is_empty() {
            if comp.runs.iter().all(|r| r.kind == RunKind::Flat) || self.pairing().is_some() {
                let start = comp.runs[0].arc.start;
                return vec![FlatPart { arc: BoundaryArc::new(side, start, p), flat: bumps.is_empty() }];
            }
            return comp
                .runs
                .iter()
                .filter(|r| r.kind == RunKind::Flat)
                .map(|r| FlatPart { arc: r.arc, flat: true })
                .collect();
        }
        let mut sorted = paired.clone();
        sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
        let mut out = Vec::new();
        for i in 0..sorted.len() {
            let a = sorted[i];
            let b = sorted[(i + 1) % sorted.len()];
            let gap_start = a.end();
            let gap = (b.start - gap_start).rem_euclid(p);
            let gap = if gap > p - 1e-12 * p { 0.0 } else { gap };
            let arc = BoundaryArc::new(side, gap_start.rem_euclid(p), gap);
            let has_bump = bumps.iter().any(|bm| {
                let mid = bm.start + 0.5 * bm.length;
                arc.length > 0.0 && arc.contains(mid, p, 0.0)
            });
            out.push(FlatPart { arc, flat: !has_bump });
        }
        out
    }

    /// Warnings that do not prevent a solution: empty flat parts and
    /// pairings that disagree.
    pub fn junction_points(&self) -> Vec<(Side, f64)> {
        self.outer
            .junctions
            .iter()
            .map(|&s| (Side::Outer, s))
            .chain(self.inner.junctions.iter().map(|&s| (Side::Inner, s)))
            .collect()
    }
}

/// Short numeric formatting for witnesses: at most six decimals, trailing
/// zeros removed.
pub fn fmt_num(x: f64) -> String {
    let s = format!("{:.6}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// All ways to remove `k` disjoint cyclically adjacent pairs of opposite
/// monotonicity and equal variation from `runs`.
fn bump_groupings(runs: &[Run], k: usize, tol: f64) -> Vec<Vec<(usize, usize)>> {
    let n = runs.len();
    let mut out = Vec::new();
    fn rec(
        runs: &[Run],
        start: usize,
        used: &mut Vec<bool>,
        k: usize,
        tol: f64,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if out.len() >= 64 {
            return;
        }
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let n = runs.len();
        for i in start..n {
            let j = (i + 1) % n;
            if used[i] || used[j] || i == j {
                continue;
            }
            // Adjacent in the list of remaining runs.
            let a = runs[i];
            let b = runs[j];
            if a.kind == b.kind || !approx_eq(a.tv, b.tv, tol) {
                continue;
            }
            used[i] = true;
            used[j] = true;
            cur.push((i, j));
            rec(runs, i + 1, used, k, tol, cur, out);
            cur.pop();
            used[i] = false;
            used[j] = false;
        }
    }
    if k == 0 {
        return vec![Vec::new()];
    }
    if 2 * k > n {
        return out;
    }
    let mut used = vec![false; n];
    rec(runs, 0, &mut used, k, tol, &mut Vec::new(), &mut out);
    out
}

/// Decompose both curves and search all consistent pairings.
///
/// Pairing is by cyclic order: the `i`-th remaining outer monotone run is
/// paired with the `(i + shift)`-th inner one; every shift is tried.
/// Outer runs beyond the inner count may be grouped into adjacent
/// opposite-monotone pairs of equal variation (non-flat outer parts),
/// provided the inner curve carries at least one monotone run.
pub fn decompose(g: &BoundaryFunction, preferred_shift: Option<usize>) -> ArcDecomposition {
    let outer = decompose_component(&g.outer);
    let inner = decompose_component(&g.inner);
    let total_tv = g.outer.total_variation() + g.inner.total_variation();
    let tol = MASS_REL_TOL * total_tv.max(1e-300);
    let om = outer.monotone_runs();
    let im = inner.monotone_runs();
    let tv_o: f64 = om.iter().map(|r| r.tv).sum();
    let tv_i: f64 = im.iter().map(|r| r.tv).sum();
    let mut pairings = Vec::new();
    let mut failure = None;
    let mut ambiguity = None;
    if om.is_empty() && im.is_empty() {
        pairings.push(Pairing { shift: 0, bumps: Vec::new(), families: Vec::new() });
    } else if im.is_empty() || om.len() < im.len() || (om.len() - im.len()) % 2 == 1 {
        failure = Some(format!(
            "inner TV {} vs outer TV {}: {} inner and {} outer monotone arcs",
            fmt_num(tv_i),
            fmt_num(tv_o),
            im.len(),
            om.len()
        ));
    } else {
        let k = (om.len() - im.len()) / 2;
        let groupings = bump_groupings(&om, k, tol);
        if groupings.is_empty() {
            ambiguity = Some(format!(
                "outer curve has {} monotone arcs against {} inner ones and no adjacent pair of equal variation",
                om.len(),
                im.len()
            ));
        }
        for bumps in groupings {
            let removed: Vec<usize> = bumps.iter().flat_map(|&(a, b)| [a, b]).collect();
            let kept: Vec<Run> = (0..om.len()).filter(|i| !removed.contains(i)).map(|i| om[i]).collect();
            let m = kept.len();
            for shift in 0..m {
                let ok = (0..m).all(|i| {
                    let a = kept[i];
                    let b = im[(i + shift) % m];
                    a.kind == b.kind && approx_eq(a.tv, b.tv, tol)
                });
                if !ok {
                    continue;
                }
                let mut families = Vec::new();
                let (mut nchi, mut ngam, mut nbump) = (0, 0, 0);
                for i in 0..m {
                    let a = kept[i];
                    let b = im[(i + shift) % m];
                    let fam = match a.kind {
                        RunKind::Increasing => {
                            nchi += 1;
                            Family {
                                kind: FamilyKind::Chi,
                                index: nchi - 1,
                                source: a.arc,
                                target: b.arc,
                                tv_source: a.tv,
                                tv_target: b.tv,
                            }
                        }
                        _ => {
                            ngam += 1;
                            Family {
                                kind: FamilyKind::Gamma,
                                index: ngam - 1,
                                source: b.arc,
                                target: a.arc,
                                tv_source: b.tv,
                                tv_target: a.tv,
                            }
                        }
                    };
                    families.push(fam);
                }
                for &(x, y) in &bumps {
                    let (up, down) = if om[x].kind == RunKind::Increasing { (om[x], om[y]) } else { (om[y], om[x]) };
                    nbump += 1;
                    families.push(Family {
                        kind: FamilyKind::Bump,
                        index: nbump - 1,
                        source: up.arc,
                        target: down.arc,
                        tv_source: up.tv,
                        tv_target: down.tv,
                    });
                }
                pairings.push(Pairing { shift, bumps: bumps.clone(), families });
            }
        }
        if pairings.is_empty() && failure.is_none() {
            let msg = if !approx_eq(tv_i, tv_o, tol) {
                format!("inner TV {} vs outer TV {}", fmt_num(tv_i), fmt_num(tv_o))
            } else {
                let kinds = |v: &[Run]| v.iter().map(|r| format!("{}({})", r.kind.symbol(), fmt_num(r.tv))).collect::<Vec<_>>().join(" ");
                format!("no cyclic shift matches outer [{}] with inner [{}]", kinds(&om), kinds(&im))
            };
            failure = Some(msg);
        }
    }
    let chosen = if pairings.is_empty() {
        None
    } else {
        Some(
            preferred_shift
                .and_then(|s| pairings.iter().position(|p| p.shift == s))
                .unwrap_or(0),
        )
    };
    ArcDecomposition { outer, inner, pairings, chosen, failure, ambiguity, tolerance: tol }
}

/// Strict form: fails when non-flat outer parts cannot be grouped.
pub fn decompose_monotone(g: &BoundaryFunction) -> Result<ArcDecomposition> {
    let dec = decompose(g, None);
    if let Some(a) = &dec.ambiguity {
        return Err(Error::DecompositionAmbiguous(a.clone()));
    }
    Ok(dec)
}

/// Primitive of a measure on one curve, zero at `anchor`, as knots.
fn integrate_component(m: &ComponentMeasure, anchor: f64) -> Result<ComponentFunction> {
    let p = m.perimeter;
    let sign = orientation_sign(m.side);
    let off = |s: f64| {
        let o = (s - anchor).rem_euclid(p);
        if o >= p {
            0.0
        } else {
            o
        }
    };
    // Breakpoints in anchor-relative coordinates.
    let mut events: Vec<f64> = vec![0.0];
    for pc in &m.pieces {
        events.push(off(pc.start));
        events.push(off(pc.end));
    }
    for a in &m.atoms {
        events.push(off(a.s));
    }
    events.sort_by(|a, b| a.total_cmp(b));
    events.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * p);
    // Slope of g between events: sample the density at the midpoint.
    let density_at = |o: f64| -> f64 {
        let s = (anchor + o).rem_euclid(p);
        m.pieces.iter().filter(|pc| s > pc.start && s < pc.end).map(|pc| pc.density).sum::<f64>()
    };
    let atom_at = |o: f64| -> f64 {
        m.atoms.iter().filter(|a| (off(a.s) - o).abs() <= 1e-14 * p || (p - (off(a.s) - o).abs()) <= 1e-14 * p).map(|a| a.mass).sum()
    };
    let mut knots = Vec::with_capacity(events.len());
    let mut v = 0.0;
    let mut prev = 0.0;
    let mut first_jump = 0.0;
    for (idx, &o) in events.iter().enumerate() {
        if idx > 0 {
            v += sign * density_at(0.5 * (prev + o)) * (o - prev);
        }
        let jump = sign * atom_at(o);
        if idx == 0 {
            first_jump = jump;
            knots.push(Knot { s: anchor, left: 0.0, right: jump });
            v = jump;
        } else {
            knots.push(Knot { s: anchor + o, left: v, right: v + jump });
            v += jump;
        }
        prev = o;
    }
    v += sign * density_at(0.5 * (prev + p)) * (p - prev);
    // Closing value; equals the anchor value for balanced data.
    let _ = first_jump;
    knots[0].left = v;
    if (v.abs()) > 1e-6 * (m.abs_mass().max(1e-300)) && v.abs() > 1e-12 {
        return Err(Error::MassMismatch { plus: m.positive_mass(), minus: m.negative_mass() });
    }
    knots[0].left = 0.0;
    ComponentFunction::from_knots(m.side, p, knots)
}

/// The unique trace with derivative `f`, vanishing at the start of the
/// first paired increasing run on each curve.
pub fn anchor_trace(f: &BoundaryMeasure, dec: &ArcDecomposition) -> Result<BoundaryFunction> {
    let eps = f.eps_mass();
    let zero_outer = f.outer.is_zero();
    let zero_inner = f.inner.is_zero();
    let (po, pi) = (f.outer.perimeter, f.inner.perimeter);
    if zero_outer && zero_inner {
        return BoundaryFunction::new(
            ComponentFunction::constant(Side::Outer, po, 0.0)?,
            ComponentFunction::constant(Side::Inner, pi, 0.0)?,
        );
    }
    // Mass carried by the paired monotone runs must agree across curves.
    let paired_mass = |side: Side| -> f64 {
        dec.families()
            .iter()
            .filter(|fam| fam.kind != FamilyKind::Bump)
            .flat_map(|fam| [fam.source, fam.target])
            .filter(|a| a.side == side)
            .map(|a| f.component(side).abs_mass_on_arc(&a))
            .sum()
    };
    let (mo, mi) = if dec.pairing().is_some() {
        (paired_mass(Side::Outer), paired_mass(Side::Inner))
    } else {
        (f.outer.abs_mass(), f.inner.abs_mass())
    };
    if (mo - mi).abs() > eps.max(1e-12) {
        return Err(Error::MassMismatch { plus: mo, minus: mi });
    }
    let chi = dec.families().iter().find(|fam| fam.kind == FamilyKind::Chi).copied();
    let fallback = |side: Side| -> Option<f64> {
        dec.component(side).runs.iter().find(|r| r.kind == RunKind::Increasing).map(|r| r.arc.start)
    };
    let (ao, ai) = match chi {
        Some(fam) => (Some(fam.source.start), Some(fam.target.start)),
        None => (fallback(Side::Outer), fallback(Side::Inner)),
    };
    let outer = if zero_outer {
        ComponentFunction::constant(Side::Outer, po, 0.0)?
    } else {
        let a = ao.ok_or_else(|| Error::MissingAnchor("outer curve has no increasing arc".into()))?;
        integrate_component(&f.outer, a)?
    };
    let inner = if zero_inner {
        ComponentFunction::constant(Side::Inner, pi, 0.0)?
    } else {
        let a = ai.ok_or_else(|| Error::MissingAnchor("inner curve has no increasing arc".into()))?;
        integrate_component(&f.inner, a)?
    };
    BoundaryFunction::new(outer, inner)
}

/// Outer anchor point used by [`anchor_trace`], if any.
pub fn outer_anchor(dec: &ArcDecomposition) -> Option<f64> {
    dec.families()
        .iter()
        .find(|fam| fam.kind == FamilyKind::Chi)
        .map(|fam| fam.source.start)
        .or_else(|| dec.outer.runs.iter().find(|r| r.kind == RunKind::Increasing).map(|r| r.arc.start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use std::f64::consts::PI;

    fn ring(n: usize) -> Annulus {
        Annulus::concentric_circles(Point::default(), 1.0, 2.0, n).unwrap()
    }

    fn clamp_y(a: &Annulus, side: Side, scale: f64, offset: f64, lo: f64, hi: f64) -> ComponentFunction {
        ComponentFunction::clamped_linear(a.boundary(side), 0.0, scale, offset, lo, hi).unwrap()
    }

    fn example_4_6(n: usize) -> (Annulus, BoundaryFunction) {
        let a = ring(n);
        let g = BoundaryFunction::new(
            clamp_y(&a, Side::Outer, 0.5, 0.5, 0.0, 1.0),
            clamp_y(&a, Side::Inner, 1.0, 0.5, 0.0, 1.0),
        )
        .unwrap();
        (a, g)
    }

    /// Variation of a function of y on the smooth circle by fine sampling.
    fn quadrature_tv(r: f64, h: impl Fn(f64) -> f64, samples: usize) -> (f64, f64) {
        let mut tv = 0.0;
        let mut pos = 0.0;
        for k in 0..samples {
            let t0 = 2.0 * PI * k as f64 / samples as f64;
            let t1 = 2.0 * PI * (k + 1) as f64 / samples as f64;
            let d = h(r * t1.sin()) - h(r * t0.sin());
            tv += d.abs();
            pos += d.max(0.0);
        }
        (tv, pos)
    }

    #[test]
    fn constant_has_zero_derivative() {
        let a = ring(64);
        let g = BoundaryFunction::constant(&a, 2.5).unwrap();
        let f = tangential_derivative(&g);
        assert!(f.is_zero());
        let dec = decompose(&g, None);
        assert_eq!(dec.outer.runs.len(), 1);
        assert_eq!(dec.outer.runs[0].kind, RunKind::Flat);
        assert!((dec.outer.covered_length() - a.outer.perimeter()).abs() < 1e-9);
        let anchored = anchor_trace(&f, &dec).unwrap();
        assert_eq!(anchored.range(), (0.0, 0.0));
    }

    #[test]
    fn clamp_y_masses_match_quadrature() {
        let a = ring(4096);
        let g = clamp_y(&a, Side::Outer, 1.0, 0.0, -1.0, 1.0);
        let (tv, pos) = quadrature_tv(2.0, |y| y.clamp(-1.0, 1.0), 10_000);
        assert!((g.total_variation() - tv).abs() < 1e-6);
        let f = component_derivative(&g);
        assert!((f.positive_mass() - pos).abs() < 1e-6);
        assert!((f.positive_mass() - 2.0).abs() < 1e-9);
        assert!(f.total_mass().abs() < 1e-12);
        let gi = clamp_y(&a, Side::Inner, 1.0, 0.0, f64::NEG_INFINITY, f64::INFINITY);
        let (tv, _) = quadrature_tv(1.0, |y| y, 10_000);
        assert!((gi.total_variation() - tv).abs() < 1e-6);
        // Clockwise convention: the inner arc x > 0 carries the negative mass.
        let fi = component_derivative(&gi);
        let right = BoundaryArc::new(Side::Inner, -a.inner.perimeter() / 4.0, a.inner.perimeter() / 2.0);
        assert!((fi.mass_on_arc(&right) + 2.0).abs() < 1e-9);
        assert!((fi.positive_mass() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn example_4_6_decomposition() {
        let (_, g) = example_4_6(4096);
        let dec = decompose_monotone(&g).unwrap();
        for comp in [&dec.outer, &dec.inner] {
            let kinds: Vec<RunKind> = comp.runs.iter().map(|r| r.kind).collect();
            assert_eq!(kinds.iter().filter(|k| **k == RunKind::Increasing).count(), 1);
            assert_eq!(kinds.iter().filter(|k| **k == RunKind::Decreasing).count(), 1);
            assert_eq!(kinds.iter().filter(|k| **k == RunKind::Flat).count(), 2);
            assert!(comp.junctions.is_empty());
            assert!((comp.covered_length() - comp.perimeter).abs() < 1e-9);
        }
        assert_eq!(dec.inner.monotonicity_changes(), 2);
        let fams = dec.families();
        assert_eq!(fams.len(), 2);
        for fam in fams {
            assert!((fam.tv_source - 1.0).abs() < 1e-9);
            assert!((fam.tv_target - 1.0).abs() < 1e-9);
        }
        let chi = fams.iter().find(|f| f.kind == FamilyKind::Chi).unwrap();
        assert!((g.tv_on_arc(&chi.target) - 1.0).abs() < 1e-9);
        assert_eq!(chi.source.side, Side::Outer);
        assert_eq!(chi.target.side, Side::Inner);
    }

    #[test]
    fn sine_inner_has_empty_flat_parts() {
        let a = ring(1024);
        let gi = clamp_y(&a, Side::Inner, 1.0, 0.0, f64::NEG_INFINITY, f64::INFINITY);
        let dec = decompose_component(&gi);
        assert_eq!(dec.runs.len(), 2);
        assert_eq!(dec.junctions.len(), 2);
        let mut pts: Vec<Point> = dec.junctions.iter().map(|&s| a.inner.point_at(s)).collect();
        pts.sort_by(|p, q| p.y.total_cmp(&q.y));
        assert!(pts[0].dist(Point::new(0.0, -1.0)) < 1e-9);
        assert!(pts[1].dist(Point::new(0.0, 1.0)) < 1e-9);
        // increasing counterclockwise on x > 0
        let inc = dec.runs.iter().find(|r| r.kind == RunKind::Increasing).unwrap();
        assert!(a.inner.point_at(inc.arc.start + inc.arc.length / 2.0).x > 0.9);
    }

    #[test]
    fn anchoring_example_4_6() {
        let (_, g) = example_4_6(4096);
        let f = tangential_derivative(&g);
        let dec = decompose(&g, None);
        let anchored = anchor_trace(&f, &dec).unwrap();
        let (lo, hi) = anchored.outer.range();
        assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-9);
        let (lo, hi) = anchored.inner.range();
        assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-9);
        // Recovers g itself here.
        for k in 0..200 {
            let s = k as f64 * 0.0617;
            assert!((anchored.value(Side::Outer, s) - g.value(Side::Outer, s)).abs() < 1e-9);
            assert!((anchored.value(Side::Inner, s) - g.value(Side::Inner, s)).abs() < 1e-9);
        }
    }

    #[test]
    fn table_with_jumps() {
        let p = 10.0;
        let g = ComponentFunction::from_table(Side::Outer, p, &[(0.0, 0.0), (2.0, 1.0), (5.0, 1.0)], &[(7.0, -1.0)]).unwrap();
        // 0 -> 1 on [0,2], flat to 5, linear down to 0.6 at 7 with a jump of -1, then back to 0.
        let v7 = g.value_left(7.0);
        assert!((v7 - (1.0 - 2.0 / 5.0)).abs() < 1e-12);
        assert!((g.value(7.0) - (v7 - 1.0)).abs() < 1e-12);
        let f = component_derivative(&g);
        assert!(f.total_mass().abs() < 1e-12);
        assert!((g.total_variation() - f.abs_mass()).abs() < 1e-12);
        let arc = BoundaryArc::point(Side::Outer, 7.0);
        assert!((g.tv_on_arc(&arc) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_handles_wrap() {
        assert!((overlap_length(9.0, 2.0, 0.0, 0.5, 10.0) - 0.5).abs() < 1e-12);
        assert!((overlap_length(0.0, 10.0, 3.0, 1.0, 10.0) - 1.0).abs() < 1e-12);
        assert_eq!(overlap_length(1.0, 1.0, 5.0, 1.0, 10.0), 0.0);
    }

    #[test]
    fn example_6_2_pairing_fails() {
        let a = ring(4096);
        let g = BoundaryFunction::new(
            clamp_y(&a, Side::Outer, 1.0, 0.0, f64::NEG_INFINITY, f64::INFINITY),
            ComponentFunction::constant(Side::Inner, a.inner.perimeter(), 0.0).unwrap(),
        )
        .unwrap();
        let dec = decompose(&g, None);
        assert!(dec.pairing().is_none());
        assert!(dec.failure.as_ref().unwrap().contains("inner TV 0 vs outer TV 8"));
    }

    #[test]
    fn outer_bump_is_grouped() {
        let a = ring(2048);
        // Outer: clamp(y) with a small dip inside the top flat part.
        let po = a.outer.perimeter();
        let base = clamp_y(&a, Side::Outer, 0.5, 0.5, 0.0, 1.0);
        let s_top = po / 4.0;
        let mut knots: Vec<Knot> = base.knots().iter().copied().filter(|k| (k.s - s_top).abs() > 0.3).collect();
        knots.push(Knot { s: s_top - 0.2, left: 1.0, right: 1.0 });
        knots.push(Knot { s: s_top, left: 0.7, right: 0.7 });
        knots.push(Knot { s: s_top + 0.2, left: 1.0, right: 1.0 });
        let outer = ComponentFunction::from_knots(Side::Outer, po, knots).unwrap();
        let g = BoundaryFunction::new(outer, clamp_y(&a, Side::Inner, 1.0, 0.5, 0.0, 1.0)).unwrap();
        let dec = decompose_monotone(&g).unwrap();
        let fams = dec.families();
        assert_eq!(fams.len(), 3);
        let bump = fams.iter().find(|f| f.kind == FamilyKind::Bump).unwrap();
        assert!((bump.tv_source - 0.3).abs() < 1e-9);
        assert_eq!(dec.flat_parts(Side::Outer).iter().filter(|p| !p.flat).count(), 1);
        let f = tangential_derivative(&g);
        let anchored = anchor_trace(&f, &dec).unwrap();
        assert!((anchored.outer.range().1 - 1.0).abs() < 1e-9);
        assert!(anchored.outer.range().0.abs() < 1e-9);
    }

    #[test]
    fn unpairable_extra_runs_are_ambiguous() {
        let a = ring(2048);
        let po = a.outer.perimeter();
        let base = clamp_y(&a, Side::Outer, 0.5, 0.5, 0.0, 1.0);
        let s_top = po / 4.0;
        let mut knots: Vec<Knot> = base.knots().iter().copied().filter(|k| (k.s - s_top).abs() > 0.3).collect();
        knots.push(Knot { s: s_top - 0.2, left: 1.0, right: 1.0 });
        knots.push(Knot { s: s_top, left: 1.3, right: 1.3 });
        knots.push(Knot { s: s_top + 0.2, left: 1.1, right: 1.1 });
        knots.push(Knot { s: s_top + 0.25, left: 1.0, right: 1.0 });
        knots.push(Knot { s: s_top + 0.28, left: 1.2, right: 1.2 });
        let outer = ComponentFunction::from_knots(Side::Outer, po, knots).unwrap();
        let g = BoundaryFunction::new(outer, clamp_y(&a, Side::Inner, 1.0, 0.5, 0.0, 1.0)).unwrap();
        assert!(matches!(decompose_monotone(&g), Err(Error::DecompositionAmbiguous(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_component(side: Side, p: f64, pts: Vec<(f64, f64)>, jumps: Vec<(f64, f64)>) -> ComponentFunction {
            let bps: Vec<(f64, f64)> = pts.iter().map(|&(u, v)| (u * p, v)).collect();
            let js: Vec<(f64, f64)> = jumps.iter().map(|&(u, h)| (u * p, h)).collect();
            ComponentFunction::from_table(side, p, &bps, &js).unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn derivative_is_balanced(pts in prop::collection::vec((0.0..1.0f64, -3.0..3.0f64), 1..12),
                                      jumps in prop::collection::vec((0.0..1.0f64, -1.0..1.0f64), 0..3)) {
                let g = random_component(Side::Inner, 6.0, pts, jumps);
                let f = component_derivative(&g);
                prop_assert!(f.total_mass().abs() <= 1e-12 * (1.0 + f.abs_mass()));
                prop_assert!((f.abs_mass() - g.total_variation()).abs() <= 1e-9);
                let dec = decompose_component(&g);
                prop_assert!((dec.covered_length() - 6.0).abs() < 1e-9);
            }

            #[test]
            fn tv_is_additive(pts in prop::collection::vec((0.0..1.0f64, -3.0..3.0f64), 1..12),
                              cut in 0.01..0.99f64, start in 0.0..1.0f64) {
                let p = 5.0;
                let g = random_component(Side::Outer, p, pts, Vec::new());
                let s0 = start * p;
                let a = BoundaryArc::new(Side::Outer, s0, cut * p);
                let b = BoundaryArc::new(Side::Outer, s0 + cut * p, (1.0 - cut) * p);
                let whole = g.tv_on_arc(&a) + g.tv_on_arc(&b);
                prop_assert!((whole - g.total_variation()).abs() < 1e-9);
            }

            #[test]
            fn anchoring_round_trips(pts in prop::collection::vec((0.0..1.0f64, -3.0..3.0f64), 2..10),
                                     jumps in prop::collection::vec((0.0..1.0f64, -1.0..1.0f64), 0..3)) {
                let outer = random_component(Side::Outer, 7.0, pts.clone(), jumps.clone());
                let inner = random_component(Side::Inner, 3.0, pts, jumps);
                let g = BoundaryFunction::new(outer, inner).unwrap();
                let f = tangential_derivative(&g);
                let dec = decompose(&g, None);
                prop_assume!(dec.pairing().is_some());
                let anchored = match anchor_trace(&f, &dec) { Ok(x) => x, Err(_) => return Ok(()) };
                let back = tangential_derivative(&anchored);
                let eps = f.eps_mass().max(1e-12);
                for side in [Side::Outer, Side::Inner] {
                    for run in &dec.component(side).runs {
                        let m0 = f.component(side).mass_on_arc(&run.arc);
                        let m1 = back.component(side).mass_on_arc(&run.arc);
                        prop_assert!((m0 - m1).abs() <= eps * 10.0);
                    }
                }
            }
        }
    }
}
