//! Discrete boundary-to-boundary optimal transport: atomization of the
//! boundary measure, an exact transportation solver with dual potentials,
//! and the certificate checks run on every plan.

mod certificates;
mod solver;

pub use certificates::{
    check_cyclical_monotonicity, check_lipschitz, check_rays_inside, check_rays_noncrossing,
    check_support_equality, duality_gap, extend_potential, marginal_residuals, multi_partner_sources,
    CertificateReport, RaysInsideReport,
};
pub use solver::solve;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::boundary::{overlap_length, ArcDecomposition, BoundaryMeasure, RunKind};
use crate::error::{Error, Result};
use crate::geometry::{Annulus, BoundaryArc, Point, Side};

/// Cost norm on the plane: Euclidean or a strictly convex `p`-norm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostNorm {
    #[default]
    Euclidean,
    PNorm { p: f64 },
}

impl CostNorm {
    pub fn p_norm(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Config(format!("cost norm exponent must lie in (1, inf), got {p}")));
        }
        if p == 2.0 {
            return Ok(CostNorm::Euclidean);
        }
        Ok(CostNorm::PNorm { p })
    }

    /// Parses `euclidean` or a number `p`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("euclidean") || t == "2" {
            return Ok(CostNorm::Euclidean);
        }
        let p: f64 = t.parse().map_err(|_| Error::Config(format!("unknown cost norm '{s}'")))?;
        Self::p_norm(p)
    }

    pub fn eval(&self, v: Point) -> f64 {
        match *self {
            CostNorm::Euclidean => v.norm(),
            CostNorm::PNorm { p } => {
                let (a, b) = (v.x.abs(), v.y.abs());
                let m = a.max(b);
                if m == 0.0 {
                    return 0.0;
                }
                m * ((a / m).powf(p) + (b / m).powf(p)).powf(1.0 / p)
            }
        }
    }

    pub fn dist(&self, a: Point, b: Point) -> f64 {
        self.eval(a - b)
    }

    /// Largest `k` with `k |v|_2 <= |v|`.
    pub fn lower_bound_factor(&self) -> f64 {
        match *self {
            CostNorm::Euclidean => 1.0,
            CostNorm::PNorm { p } => 2f64.powf(1.0 / p - 0.5).min(1.0),
        }
    }
}

impl fmt::Display for CostNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostNorm::Euclidean => f.write_str("euclidean"),
            CostNorm::PNorm { p } => write!(f, "p={p}"),
        }
    }
}

/// A point mass on the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: Point,
    pub side: Side,
    pub s: f64,
    pub mass: f64,
    /// Index of the monotone run (per curve) the atom was drawn from.
    pub run: usize,
    /// Index into the chosen pairing's family list, when the atom lies on a
    /// paired arc.
    pub family: Option<usize>,
    /// Whether the atom comes from a jump of the boundary datum.
    pub jump: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Equal-mass atoms at the given points, on no particular arc.
    pub fn from_points(points: &[(Point, Side)], mass: f64) -> Self {
        AtomicMeasure {
            atoms: points
                .iter()
                .map(|&(point, side)| Atom { point, side, s: 0.0, mass, run: 0, family: None, jump: false })
                .collect(),
        }
    }
}

/// Which family (if any) of the chosen pairing claims the point `s` on
/// `side`, as a source (`as_source`) or a target.
fn family_of(dec: &ArcDecomposition, side: Side, s: f64, perimeter: f64, as_source: bool) -> Option<usize> {
    let tol = 1e-9 * perimeter;
    dec.families().iter().position(|fam| {
        let arc = if as_source { fam.source } else { fam.target };
        arc.side == side && arc.contains(s, perimeter, tol)
    })
}

/// Quantile atoms for one monotone run: `n` equal masses at the points
/// where the cumulative density mass equals `(k + 1/2) M / n`.
fn quantile_points(pieces: &[(f64, f64, f64)], n: usize) -> Vec<(f64, f64)> {
    let total: f64 = pieces.iter().map(|&(_, len, d)| len * d.abs()).sum();
    if total <= 0.0 || n == 0 {
        return Vec::new();
    }
    let m = total / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut cum = 0.0;
    let mut idx = 0;
    for k in 0..n {
        let q = (k as f64 + 0.5) * m;
        while idx < pieces.len() && cum + pieces[idx].1 * pieces[idx].2.abs() < q {
            cum += pieces[idx].1 * pieces[idx].2.abs();
            idx += 1;
        }
        let i = idx.min(pieces.len() - 1);
        let (start, len, d) = pieces[i];
        let t = ((q - cum) / d.abs()).clamp(0.0, len);
        out.push((start + t, m));
    }
    out
}

/// Split `f` into atomic positive and negative parts: `n` equal-mass atoms
/// per monotone run of the density, jump atoms passed through.
pub fn atomize(annulus: &Annulus, f: &BoundaryMeasure, dec: &ArcDecomposition, n: usize) -> (AtomicMeasure, AtomicMeasure) {
    let mut plus = AtomicMeasure::default();
    let mut minus = AtomicMeasure::default();
    if f.is_zero() || n == 0 {
        return (plus, minus);
    }
    // A jump at a run boundary belongs to the first run that claims it.
    let mut taken: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for side in [Side::Outer, Side::Inner] {
        let comp = f.component(side);
        let boundary = annulus.boundary(side);
        let p = comp.perimeter;
        for (run_idx, run) in dec.component(side).runs.iter().enumerate() {
            if run.kind == RunKind::Flat {
                continue;
            }
            // Density pieces clipped to the run, in counterclockwise order.
            let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
            for pc in &comp.pieces {
                if pc.density == 0.0 {
                    continue;
                }
                let len = overlap_length(run.arc.start, run.arc.length, pc.start, pc.end - pc.start, p);
                if len <= 0.0 {
                    continue;
                }
                let off = run.arc.offset_of(pc.start, p);
                let off = if off > run.arc.length { 0.0 } else { off };
                pieces.push((run.arc.start + off, len, pc.density));
            }
            pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
            let sign = pieces.first().map(|x| x.2.signum()).unwrap_or(0.0);
            for (s, m) in quantile_points(&pieces, n) {
                let s = s.rem_euclid(p);
                let atom = Atom {
                    point: boundary.point_at(s),
                    side,
                    s,
                    mass: m,
                    run: run_idx,
                    family: None,
                    jump: false,
                };
                if sign > 0.0 {
                    plus.atoms.push(atom);
                } else {
                    minus.atoms.push(atom);
                }
            }
            for (ai, a) in comp.atoms.iter().enumerate() {
                if a.mass == 0.0 || taken[side as usize].contains(&ai) || !run.arc.contains(a.s, p, 1e-13 * p) {
                    continue;
                }
                taken[side as usize].push(ai);
                let atom = Atom {
                    point: boundary.point_at(a.s),
                    side,
                    s: a.s,
                    mass: a.mass.abs(),
                    run: run_idx,
                    family: None,
                    jump: true,
                };
                if a.mass > 0.0 {
                    plus.atoms.push(atom);
                } else {
                    minus.atoms.push(atom);
                }
            }
        }
    }
    for a in &mut plus.atoms {
        let p = annulus.boundary(a.side).perimeter();
        a.family = family_of(dec, a.side, a.s, p, true);
    }
    for a in &mut minus.atoms {
        let p = annulus.boundary(a.side).perimeter();
        a.family = family_of(dec, a.side, a.s, p, false);
    }
    (plus, minus)
}

/// One positive-mass entry of a plan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanPair {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// Optimal plan with its dual potentials.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    pub sources: AtomicMeasure,
    pub targets: AtomicMeasure,
    /// Sorted by (source, target).
    pub pairs: Vec<PlanPair>,
    pub cost: f64,
    pub phi_source: Vec<f64>,
    pub phi_target: Vec<f64>,
    pub norm: CostNorm,
    pub eps_dual: f64,
    pub warnings: Vec<String>,
}

impl TransportPlan {
    pub fn empty(norm: CostNorm) -> Self {
        TransportPlan {
            sources: AtomicMeasure::default(),
            targets: AtomicMeasure::default(),
            pairs: Vec::new(),
            cost: 0.0,
            phi_source: Vec::new(),
            phi_target: Vec::new(),
            norm,
            eps_dual: 1e-8,
            warnings: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair_cost(&self, p: &PlanPair) -> f64 {
        self.norm.dist(self.sources.atoms[p.source].point, self.targets.atoms[p.target].point)
    }

    /// Segment endpoints of a pair.
    pub fn ray(&self, p: &PlanPair) -> (Point, Point) {
        (self.sources.atoms[p.source].point, self.targets.atoms[p.target].point)
    }

    /// Copy of the plan restricted to a subset of its pairs.
    pub fn restricted(&self, keep: impl Fn(&PlanPair) -> bool) -> Self {
        let pairs: Vec<PlanPair> = self.pairs.iter().copied().filter(|p| keep(p)).collect();
        let cost = pairs.iter().map(|p| p.mass * self.pair_cost(p)).sum();
        TransportPlan { pairs, cost, ..self.clone() }
    }
}

/// Arc on which an atom lies, for reporting.
pub fn atom_arc(a: &Atom) -> BoundaryArc {
    BoundaryArc::point(a.side, a.s)
}
