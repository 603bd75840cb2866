//! Checks run against every plan: marginals, duality, support equality,
//! Lipschitz bound, cyclical monotonicity, ray geometry.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{CostNorm, TransportPlan};
use crate::boundary::{ArcDecomposition, FamilyKind};
use crate::geometry::{segments_cross_interior, Annulus, Point};

/// Largest relative marginal error over sources and targets.
pub fn marginal_residuals(plan: &TransportPlan) -> f64 {
    if plan.pairs.is_empty() {
        return 0.0;
    }
    let mut out_s = vec![0.0; plan.sources.len()];
    let mut out_t = vec![0.0; plan.targets.len()];
    for p in &plan.pairs {
        out_s[p.source] += p.mass;
        out_t[p.target] += p.mass;
    }
    let total = plan.sources.total_mass().max(1e-300);
    let rs = plan.sources.atoms.iter().zip(&out_s).map(|(a, m)| (a.mass - m).abs()).fold(0.0, f64::max);
    let rt = plan.targets.atoms.iter().zip(&out_t).map(|(a, m)| (a.mass - m).abs()).fold(0.0, f64::max);
    rs.max(rt) / total
}

/// `|primal - dual| / primal`, zero for the empty plan.
pub fn duality_gap(plan: &TransportPlan) -> f64 {
    if plan.pairs.is_empty() {
        return 0.0;
    }
    let dual: f64 = plan.sources.atoms.iter().zip(&plan.phi_source).map(|(a, p)| a.mass * p).sum::<f64>()
        - plan.targets.atoms.iter().zip(&plan.phi_target).map(|(a, p)| a.mass * p).sum::<f64>();
    (plan.cost - dual).abs() / plan.cost.max(1e-300)
}

/// Max over support pairs of `|phi(x) - phi(y) - c(x, y)|`.
pub fn check_support_equality(plan: &TransportPlan) -> f64 {
    plan.pairs
        .iter()
        .map(|p| (plan.phi_source[p.source] - plan.phi_target[p.target] - plan.pair_cost(p)).abs())
        .fold(0.0, f64::max)
}

/// Max over all atom pairs of `phi(a) - phi(b) - c(a, b)`, clipped at 0.
pub fn check_lipschitz(plan: &TransportPlan) -> f64 {
    let pts: Vec<(Point, f64)> = plan
        .sources
        .atoms
        .iter()
        .zip(&plan.phi_source)
        .chain(plan.targets.atoms.iter().zip(&plan.phi_target))
        .map(|(a, &v)| (a.point, v))
        .collect();
    let mut worst: f64 = 0.0;
    for &(a, va) in &pts {
        for &(b, vb) in &pts {
            worst = worst.max(va - vb - plan.norm.dist(a, b));
        }
    }
    worst
}

/// Number of violated exchange inequalities over `trials` random pairs of
/// support entries, drawn with a seeded generator.
pub fn check_cyclical_monotonicity(plan: &TransportPlan, trials: usize, seed: u64) -> usize {
    let n = plan.pairs.len();
    if n < 2 {
        return 0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let c = |i: usize, j: usize| plan.norm.dist(plan.sources.atoms[i].point, plan.targets.atoms[j].point);
    for _ in 0..trials {
        let a = plan.pairs[rng.gen_range(0..n)];
        let b = plan.pairs[rng.gen_range(0..n)];
        let lhs = c(a.source, a.target) + c(b.source, b.target);
        let rhs = c(a.source, b.target) + c(b.source, a.target);
        if lhs > rhs + plan.eps_dual {
            violations += 1;
        }
    }
    violations
}

/// Pairs of support rays crossing at a point interior to both.
pub fn check_rays_noncrossing(plan: &TransportPlan) -> usize {
    let rays: Vec<(Point, Point)> = plan.pairs.iter().map(|p| plan.ray(p)).collect();
    let mut count = 0;
    for i in 0..rays.len() {
        let (a, b) = rays[i];
        let (lo_x, hi_x) = (a.x.min(b.x), a.x.max(b.x));
        let (lo_y, hi_y) = (a.y.min(b.y), a.y.max(b.y));
        for &(c, d) in &rays[i + 1..] {
            if c.x.max(d.x) < lo_x || c.x.min(d.x) > hi_x || c.y.max(d.y) < lo_y || c.y.min(d.y) > hi_y {
                continue;
            }
            if segments_cross_interior(a, b, c, d, 1e-12) {
                count += 1;
            }
        }
    }
    count
}

/// Rays leaving the closed annulus and rays whose endpoints do not belong
/// to one paired family of the expected kind.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RaysInsideReport {
    pub checked: usize,
    pub outside: Vec<usize>,
    pub misclassified: Vec<usize>,
    pub per_kind: Vec<(String, usize)>,
}

impl RaysInsideReport {
    pub fn violations(&self) -> usize {
        self.outside.len() + self.misclassified.len()
    }
}

pub fn check_rays_inside(plan: &TransportPlan, annulus: &Annulus, dec: &ArcDecomposition) -> RaysInsideReport {
    let mut rep = RaysInsideReport { checked: plan.pairs.len(), ..Default::default() };
    let fams = dec.families();
    let mut counts = [0usize; 3];
    for (k, p) in plan.pairs.iter().enumerate() {
        let (x, y) = plan.ray(p);
        match annulus.segment_in_closure(x, y) {
            Ok(true) => {}
            _ => rep.outside.push(k),
        }
        let fs = plan.sources.atoms[p.source].family;
        let ft = plan.targets.atoms[p.target].family;
        match (fs, ft) {
            (Some(a), Some(b)) if a == b => {
                let slot = match fams[a].kind {
                    FamilyKind::Chi => 0,
                    FamilyKind::Gamma => 1,
                    FamilyKind::Bump => 2,
                };
                counts[slot] += 1;
            }
            _ => rep.misclassified.push(k),
        }
    }
    rep.per_kind = vec![("chi".into(), counts[0]), ("gamma".into(), counts[1]), ("bump".into(), counts[2])];
    rep
}

/// `phi(z) = min_j c(z, y_j) + phi(y_j)` over target atoms.
pub fn extend_potential(plan: &TransportPlan, points: &[Point]) -> Vec<f64> {
    points.iter().map(|&z| extend_at(plan.norm, plan, z)).collect()
}

fn extend_at(norm: CostNorm, plan: &TransportPlan, z: Point) -> f64 {
    plan.targets
        .atoms
        .iter()
        .zip(&plan.phi_target)
        .map(|(a, &v)| norm.dist(z, a.point) + v)
        .fold(f64::INFINITY, f64::min)
}

/// Sources sending mass to more than one target.
pub fn multi_partner_sources(plan: &TransportPlan) -> usize {
    let mut count = vec![0usize; plan.sources.len()];
    for p in &plan.pairs {
        count[p.source] += 1;
    }
    count.iter().filter(|&&c| c > 1).count()
}

/// All plan certificates in one place.
#[derive(Clone, Debug, Default, Serialize)]
pub struct CertificateReport {
    pub pairs: usize,
    pub cost: f64,
    pub eps_dual: f64,
    pub marginal_residual: f64,
    pub duality_gap: f64,
    pub support_residual: f64,
    pub lipschitz_violation: f64,
    pub monotonicity_trials: usize,
    pub monotonicity_violations: usize,
    pub crossings: usize,
    pub rays_outside: usize,
    pub rays_misclassified: usize,
    pub multi_partner_sources: usize,
}

impl CertificateReport {
    pub fn compute(plan: &TransportPlan, annulus: &Annulus, dec: &ArcDecomposition, trials: usize, seed: u64) -> Self {
        let inside = check_rays_inside(plan, annulus, dec);
        CertificateReport {
            pairs: plan.pairs.len(),
            cost: plan.cost,
            eps_dual: plan.eps_dual,
            marginal_residual: marginal_residuals(plan),
            duality_gap: duality_gap(plan),
            support_residual: check_support_equality(plan),
            lipschitz_violation: check_lipschitz(plan),
            monotonicity_trials: trials,
            monotonicity_violations: check_cyclical_monotonicity(plan, trials, seed),
            crossings: check_rays_noncrossing(plan),
            rays_outside: inside.outside.len(),
            rays_misclassified: inside.misclassified.len(),
            multi_partner_sources: multi_partner_sources(plan),
        }
    }

    /// Optimality certificates (independent of admissibility).
    pub fn optimality_ok(&self) -> bool {
        self.marginal_residual <= 1e-12
            && self.duality_gap <= 1e-8
            && self.support_residual <= self.eps_dual
            && self.lipschitz_violation <= self.eps_dual
            && self.monotonicity_violations == 0
    }

    /// Ray geometry expected under the admissibility conditions.
    pub fn geometry_ok(&self) -> bool {
        self.crossings == 0 && self.rays_outside == 0 && self.rays_misclassified == 0
    }
}
