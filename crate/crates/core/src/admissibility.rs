//! The admissibility conditions on a (geometry, boundary datum) instance,
//! evaluated with witnesses and margins. (H1)-(H4) gate the solver; (H5)
//! only qualifies the density bound and is reported separately.

use serde::Serialize;

use crate::boundary::{fmt_num, ArcDecomposition, BoundaryFunction, Family, FamilyKind, Pairing};
use crate::geometry::{arc_set_max_distance, arc_set_min_distance, Annulus, BoundaryArc, Point, Side, EPS_GEOM};
use crate::transport::{CostNorm, TransportPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
    /// Not evaluated because the arc pairing does not exist.
    Skipped,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Warn => "warn",
            Verdict::Fail => "fail",
            Verdict::Skipped => "skipped",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionResult {
    pub name: &'static str,
    pub verdict: Verdict,
    pub witnesses: Vec<String>,
}

impl ConditionResult {
    fn new(name: &'static str, verdict: Verdict) -> Self {
        ConditionResult { name, verdict, witnesses: Vec::new() }
    }

    fn with(mut self, w: impl Into<String>) -> Self {
        self.witnesses.push(w.into());
        self
    }
}

/// Both sides of the separation inequality for one family.
#[derive(Clone, Debug, Serialize)]
pub struct H4Margin {
    pub family: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub h1: ConditionResult,
    pub h2: ConditionResult,
    pub h3: ConditionResult,
    pub h4: ConditionResult,
    pub h5: ConditionResult,
    pub tv_outer: f64,
    pub tv_inner: f64,
    pub tv_inequality: Verdict,
    pub h4_margins: Vec<H4Margin>,
    pub h5_constant: f64,
    pub monotonicity_changes_inner: usize,
    pub special_points: Vec<Point>,
    pub pairings_found: usize,
    pub pairing_shift: Option<usize>,
    pub warnings: Vec<String>,
    pub overall: Verdict,
}

impl AdmissibilityReport {
    pub fn gating(&self) -> [&ConditionResult; 4] {
        [&self.h1, &self.h2, &self.h3, &self.h4]
    }

    pub fn passes(&self) -> bool {
        self.overall != Verdict::Fail
    }
}

/// Sanity check: the inner variation never exceeds the outer.
pub fn check_tv_inequality(g: &BoundaryFunction) -> (f64, f64, Verdict) {
    let ti = g.inner.total_variation();
    let to = g.outer.total_variation();
    let eps = 1e-9 * (ti + to);
    let v = if ti <= to + eps { Verdict::Pass } else { Verdict::Fail };
    (ti, to, v)
}

pub fn check_h1(g: &BoundaryFunction) -> ConditionResult {
    let (ti, to, _) = check_tv_inequality(g);
    if ti.is_finite() && to.is_finite() {
        ConditionResult::new("H1", Verdict::Pass).with(format!("TV outer {} inner {}", fmt_num(to), fmt_num(ti)))
    } else {
        ConditionResult::new("H1", Verdict::Fail).with("total variation is not finite")
    }
}

pub fn check_h2(dec: &ArcDecomposition) -> ConditionResult {
    let Some(pairing) = dec.pairing() else {
        let mut r = ConditionResult::new("H2", Verdict::Fail);
        if let Some(a) = &dec.ambiguity {
            r = r.with(a.clone());
        }
        if let Some(f) = &dec.failure {
            r = r.with(f.clone());
        }
        return r;
    };
    let mut r = ConditionResult::new("H2", Verdict::Pass);
    for fam in &pairing.families {
        r = r.with(format!(
            "{}: TV source {} target {}",
            fam.label(),
            fmt_num(fam.tv_source),
            fmt_num(fam.tv_target)
        ));
    }
    let junctions = dec.junction_points();
    if !junctions.is_empty() {
        r.verdict = Verdict::Warn;
        for (side, s) in junctions {
            r = r.with(format!("empty flat part between increasing and decreasing arcs on the {side} curve at s = {}", fmt_num(s)));
        }
    }
    r
}

fn samples(annulus: &Annulus, arc: &BoundaryArc) -> Vec<(f64, Point)> {
    annulus.boundary(arc.side).arc_samples(arc)
}

/// First invisible sample pair between the two arcs of a family.
pub fn family_invisible_pair(annulus: &Annulus, fam: &Family) -> Option<(Point, Point)> {
    let a = samples(annulus, &fam.source);
    let b = samples(annulus, &fam.target);
    for &(_, p) in &a {
        for &(_, q) in &b {
            match annulus.segment_in_closure(p, q) {
                Ok(true) => {}
                _ => return Some((p, q)),
            }
        }
    }
    None
}

pub fn check_h3(annulus: &Annulus, dec: &ArcDecomposition) -> ConditionResult {
    let Some(pairing) = dec.pairing() else {
        return ConditionResult::new("H3", Verdict::Skipped).with("no arc pairing");
    };
    let mut r = ConditionResult::new("H3", Verdict::Pass);
    for fam in &pairing.families {
        if let Some((p, q)) = family_invisible_pair(annulus, fam) {
            r.verdict = Verdict::Fail;
            r = r.with(format!("{}: segment {p} - {q} leaves the closed annulus", fam.label()));
        }
    }
    r
}

/// Margins of the separation inequality for every family of a pairing.
pub fn h4_margins(annulus: &Annulus, pairing: &Pairing, norm: &CostNorm) -> Vec<H4Margin> {
    let fams = &pairing.families;
    let mut out = Vec::with_capacity(fams.len());
    for (k, fam) in fams.iter().enumerate() {
        let rest_src: Vec<BoundaryArc> = fams.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, f)| f.source).collect();
        let rest_tgt: Vec<BoundaryArc> = fams.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, f)| f.target).collect();
        let d_own = arc_set_max_distance(annulus, &[fam.source], &[fam.target], norm).unwrap_or(0.0);
        let d_rest = arc_set_max_distance(annulus, &rest_src, &rest_tgt, norm).unwrap_or(0.0);
        let lhs = d_own + d_rest;
        let rhs = match (
            arc_set_min_distance(annulus, &[fam.source], &rest_tgt, norm),
            arc_set_min_distance(annulus, &[fam.target], &rest_src, norm),
        ) {
            (Some(a), Some(b)) => a + b,
            _ => f64::INFINITY,
        };
        out.push(H4Margin { family: fam.label(), lhs, rhs, margin: rhs - lhs });
    }
    out
}

pub fn check_h4(annulus: &Annulus, dec: &ArcDecomposition, norm: &CostNorm) -> (ConditionResult, Vec<H4Margin>) {
    let Some(pairing) = dec.pairing() else {
        return (ConditionResult::new("H4", Verdict::Skipped).with("no arc pairing"), Vec::new());
    };
    let margins = h4_margins(annulus, pairing, norm);
    let mut r = ConditionResult::new("H4", Verdict::Pass);
    for m in &margins {
        if m.margin > EPS_GEOM {
            r = r.with(format!("{}: {} < {} (margin {})", m.family, fmt_num(m.lhs), fmt_num(m.rhs), fmt_num(m.margin)));
        } else {
            r.verdict = Verdict::Fail;
            r = r.with(format!("{}: {} >= {} (margin {})", m.family, fmt_num(m.lhs), fmt_num(m.rhs), fmt_num(m.margin)));
        }
    }
    (r, margins)
}

/// Smallest `(y - x) . nu(x)` over sampled pairs of the monotone families,
/// with `x` on the inner arc and `nu` the inner curve's outward normal.
pub fn h5_constant(annulus: &Annulus, dec: &ArcDecomposition) -> Option<(f64, Point, Point)> {
    let mut best: Option<(f64, Point, Point)> = None;
    for fam in dec.families() {
        let (inner, outer) = match fam.kind {
            FamilyKind::Chi => (fam.target, fam.source),
            FamilyKind::Gamma => (fam.source, fam.target),
            FamilyKind::Bump => continue,
        };
        let xs = samples(annulus, &inner);
        let ys = samples(annulus, &outer);
        for &(s, x) in &xs {
            let nu = annulus.inner.outward_normal(s);
            for &(_, y) in &ys {
                let v = (y - x).dot(nu);
                if best.is_none_or(|b| v < b.0) {
                    best = Some((v, x, y));
                }
            }
        }
    }
    best
}

/// The same quantity restricted to the support of a plan: the minimum of
/// `(y - x) . nu(x)` over rays joining an inner point `x` to an outer `y`.
pub fn h5_support_constant(annulus: &Annulus, plan: &TransportPlan) -> Option<f64> {
    plan.pairs
        .iter()
        .filter_map(|p| {
            let a = &plan.sources.atoms[p.source];
            let b = &plan.targets.atoms[p.target];
            let (x, y) = match (a.side, b.side) {
                (Side::Inner, Side::Outer) => (a, b),
                (Side::Outer, Side::Inner) => (b, a),
                _ => return None,
            };
            Some((y.point - x.point).dot(annulus.inner.outward_normal(x.s)))
        })
        .reduce(f64::min)
}

pub fn check_h5(annulus: &Annulus, dec: &ArcDecomposition) -> (f64, ConditionResult) {
    if dec.pairing().is_none() {
        return (0.0, ConditionResult::new("H5", Verdict::Skipped).with("no arc pairing"));
    }
    match h5_constant(annulus, dec) {
        None => (f64::INFINITY, ConditionResult::new("H5", Verdict::Pass).with("no monotone families")),
        Some((c, x, y)) => {
            let v = if c > EPS_GEOM { Verdict::Pass } else { Verdict::Fail };
            (c, ConditionResult::new("H5", v).with(format!("c = {} attained at x = {x}, y = {y}", fmt_num(c))))
        }
    }
}

/// Monotonicity changes on the inner curve and the points where its
/// increasing and decreasing parts touch.
pub fn diagnostics(annulus: &Annulus, dec: &ArcDecomposition) -> (usize, Vec<Point>) {
    let pts = dec.inner.junctions.iter().map(|&s| annulus.inner.point_at(s)).collect();
    (dec.inner.monotonicity_changes(), pts)
}

/// Evaluate every condition; never short-circuits.
pub fn check_all(annulus: &Annulus, g: &BoundaryFunction, dec: &ArcDecomposition, norm: &CostNorm) -> AdmissibilityReport {
    let (tv_inner, tv_outer, tv_v) = check_tv_inequality(g);
    let h1 = check_h1(g);
    let h2 = check_h2(dec);
    let h3 = check_h3(annulus, dec);
    let (h4, margins) = check_h4(annulus, dec, norm);
    let (h5_constant, h5) = check_h5(annulus, dec);
    let (changes, special) = diagnostics(annulus, dec);
    let mut warnings = Vec::new();
    if dec.pairings.len() > 1 {
        let verdicts: Vec<bool> = dec
            .pairings
            .iter()
            .map(|p| h4_margins(annulus, p, norm).iter().all(|m| m.margin > EPS_GEOM))
            .collect();
        if verdicts.iter().any(|&v| v != verdicts[0]) {
            warnings.push(format!(
                "{} consistent pairings disagree on the separation inequality; solving with shift {}",
                dec.pairings.len(),
                dec.pairing().map(|p| p.shift).unwrap_or(0)
            ));
        }
    }
    let gating = [&h1, &h2, &h3, &h4];
    let overall = if gating.iter().any(|c| c.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if gating.iter().any(|c| c.verdict == Verdict::Warn) || !warnings.is_empty() {
        Verdict::Warn
    } else {
        Verdict::Pass
    };
    AdmissibilityReport {
        h1,
        h2,
        h3,
        h4,
        h5,
        tv_outer,
        tv_inner,
        tv_inequality: tv_v,
        h4_margins: margins,
        h5_constant,
        monotonicity_changes_inner: changes,
        special_points: special,
        pairings_found: dec.pairings.len(),
        pairing_shift: dec.pairing().map(|p| p.shift),
        warnings,
        overall,
    }
}

/// Side-agnostic helper used by reports: which curve an arc lies on.
pub fn arc_side_name(arc: &BoundaryArc) -> &'static str {
    match arc.side {
        Side::Outer => "outer",
        Side::Inner => "inner",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::decompose;
    use crate::instances;

    #[test]
    fn example_4_6_passes_h1_to_h4() {
        let inst = instances::example_4_6(4096).unwrap();
        let dec = decompose(&inst.data, None);
        let rep = check_all(&inst.annulus, &inst.data, &dec, &CostNorm::Euclidean);
        assert_eq!(rep.overall, Verdict::Pass, "{rep:#?}");
        assert!((rep.tv_inner - 2.0).abs() < 1e-9 && (rep.tv_outer - 2.0).abs() < 1e-9);
        let r3 = 3f64.sqrt();
        for m in &rep.h4_margins {
            assert!((m.lhs - 2.0 * r3).abs() < 1e-3);
            assert!((m.rhs - 3.0 * r3).abs() < 1e-3);
            assert!((m.margin - r3).abs() < 1e-3);
        }
        assert_eq!(rep.monotonicity_changes_inner, 2);
        assert!(rep.special_points.is_empty());
    }

    #[test]
    fn constant_data_is_vacuously_admissible() {
        let inst = instances::constant(0.0).unwrap();
        let dec = decompose(&inst.data, None);
        let rep = check_all(&inst.annulus, &inst.data, &dec, &CostNorm::Euclidean);
        assert_eq!(rep.overall, Verdict::Pass);
        assert_eq!((rep.tv_inner, rep.tv_outer), (0.0, 0.0));
        assert_eq!(rep.monotonicity_changes_inner, 0);
    }

    #[test]
    fn example_6_2_fails_h2() {
        let inst = instances::example_6_2(4096).unwrap();
        let dec = decompose(&inst.data, None);
        let rep = check_all(&inst.annulus, &inst.data, &dec, &CostNorm::Euclidean);
        assert_eq!(rep.h2.verdict, Verdict::Fail);
        assert!(rep.h2.witnesses.iter().any(|w| w.contains("inner TV 0 vs outer TV 8")));
        assert_eq!(rep.tv_inequality, Verdict::Pass);
        assert!((rep.tv_outer - 8.0).abs() < 1e-9);
        assert_eq!(rep.overall, Verdict::Fail);
    }

    #[test]
    fn example_6_4_fails_h3() {
        let inst = instances::example_6_4(2048).unwrap();
        let dec = decompose(&inst.data, None);
        let rep = check_all(&inst.annulus, &inst.data, &dec, &CostNorm::Euclidean);
        assert_ne!(rep.h2.verdict, Verdict::Fail);
        assert_eq!(rep.h3.verdict, Verdict::Fail);
        assert_eq!(rep.overall, Verdict::Fail);
    }

    #[test]
    fn example_2_3_special_points() {
        let inst = instances::example_2_3(4096).unwrap();
        let dec = decompose(&inst.data, None);
        let (changes, pts) = diagnostics(&inst.annulus, &dec);
        assert_eq!(changes, 2);
        assert_eq!(pts.len(), 2);
        assert!(pts.iter().any(|p| p.dist(Point::new(0.0, 1.0)) < 1e-9));
        assert!(pts.iter().any(|p| p.dist(Point::new(0.0, -1.0)) < 1e-9));
        assert_eq!(check_h2(&dec).verdict, Verdict::Warn);
    }

    #[test]
    fn radial_pair_has_unit_h5_value() {
        let a = Annulus::concentric_circles(Point::default(), 1.0, 2.0, 1024).unwrap();
        let x = a.inner.point_at(0.0);
        let y = a.outer.point_at(0.0);
        assert!(((y - x).dot(a.inner.outward_normal(0.0)) - 1.0).abs() < 1e-12);
        assert!(a.segment_in_closure(x, y).unwrap());
    }

    #[test]
    fn adjacent_families_break_separation() {
        let inst = instances::example_4_6_adjacent(4096).unwrap();
        let dec = decompose(&inst.data, None);
        let (r, margins) = check_h4(&inst.annulus, &dec, &CostNorm::Euclidean);
        assert_eq!(r.verdict, Verdict::Fail, "{margins:?}");
        // Independent recomputation of one inequality from raw samples.
        let fams = dec.families();
        let (a, b) = (fams[0], fams[1]);
        let pts = |arc: &BoundaryArc| inst.annulus.boundary(arc.side).arc_samples(arc);
        let dmax = |u: &BoundaryArc, v: &BoundaryArc| {
            pts(u).iter().flat_map(|p| pts(v).into_iter().map(move |q| p.1.dist(q.1))).fold(0.0, f64::max)
        };
        let lhs = dmax(&a.source, &a.target) + dmax(&b.source, &b.target);
        assert!((lhs - margins[0].lhs).abs() < 1e-9);
    }

    #[test]
    fn margins_are_rigid_and_scale() {
        let base = instances::example_4_6(1024).unwrap();
        let dec = decompose(&base.data, None);
        let m0 = h4_margins(&base.annulus, dec.pairing().unwrap(), &CostNorm::Euclidean);
        let moved = instances::example_4_6_transformed(1024, 1.0, 0.7, Point::new(3.0, -2.0)).unwrap();
        let dm = decompose(&moved.data, None);
        let m1 = h4_margins(&moved.annulus, dm.pairing().unwrap(), &CostNorm::Euclidean);
        let scaled = instances::example_4_6_transformed(1024, 2.5, 0.0, Point::default()).unwrap();
        let ds = decompose(&scaled.data, None);
        let m2 = h4_margins(&scaled.annulus, ds.pairing().unwrap(), &CostNorm::Euclidean);
        for k in 0..m0.len() {
            let j = m1.iter().position(|m| m.family == m0[k].family).unwrap();
            assert!((m0[k].margin - m1[j].margin).abs() < 1e-9);
            let j = m2.iter().position(|m| m.family == m0[k].family).unwrap();
            assert!((2.5 * m0[k].margin - m2[j].margin).abs() < 1e-9);
        }
    }
}
