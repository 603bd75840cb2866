//! Check, solve, rasterize, reconstruct: the full run on one instance.

use std::time::Instant;

use serde::Serialize;

use crate::admissibility::{check_all, h5_support_constant, AdmissibilityReport, Verdict};
use crate::boundary::{anchor_trace, decompose, outer_anchor, tangential_derivative, ArcDecomposition, BoundaryFunction, BoundaryMeasure, ComponentFunction};
use crate::density::{
    boundary_mass, check_divergence, check_flow_potential_alignment, lp_norm, max_flow_excess, potential_field, rasterize,
    test_battery, transport_length, DensityReport, Grid, ScalarField, VectorField,
};
use crate::error::{Error, Result};
use crate::geometry::Side;
use crate::instances::Instance;
use crate::recovery::{
    assign_ray_levels, check_rotated_gradient, extract_trace, gradient_mask, levels_monotone, ray_constancy, reconstruct_u,
    trace_l1_error, w1p_seminorm, RayLevel, Reconstruction, RecoveryReport,
};
use crate::transport::{atomize, solve, CertificateReport, CostNorm, TransportPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Check,
    Solve,
    Density,
    Reconstruct,
}

#[derive(Clone, Debug)]
pub struct Options {
    pub atoms: usize,
    pub h: f64,
    pub norm: CostNorm,
    pub force: bool,
    pub seed: u64,
    pub trials: usize,
    pub stage: Stage,
}

impl Default for Options {
    fn default() -> Self {
        Options { atoms: 256, h: 0.02, norm: CostNorm::Euclidean, force: false, seed: 0, trials: 10_000, stage: Stage::Reconstruct }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub check: f64,
    pub solve: f64,
    pub density: f64,
    pub reconstruct: f64,
}

/// Everything a run produced; later stages are `None` when not reached.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub instance: Instance,
    pub options: Options,
    pub decomposition: ArcDecomposition,
    pub admissibility: AdmissibilityReport,
    pub derivative: BoundaryMeasure,
    pub anchored: Option<BoundaryFunction>,
    pub plan: Option<TransportPlan>,
    pub certificates: Option<CertificateReport>,
    /// Visibility constant measured on the rays of the plan.
    pub h5_support: Option<f64>,
    pub grid: Option<Grid>,
    pub sigma: Option<ScalarField>,
    pub flow: Option<VectorField>,
    pub potential: Option<ScalarField>,
    pub density: Option<DensityReport>,
    pub levels: Option<Vec<RayLevel>>,
    pub reconstruction: Option<Reconstruction>,
    pub u: Option<ScalarField>,
    pub traces: Option<(ComponentFunction, ComponentFunction)>,
    pub recovery: Option<RecoveryReport>,
    /// Stage failures (solver or reconstruction errors).
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
    pub stopped_at_check: bool,
    pub timings: Timings,
}

impl Outcome {
    /// Failed certificate names; geometry certificates only count when the
    /// admissibility conditions hold.
    pub fn certificate_failures(&self) -> Vec<String> {
        let mut out = self.failures.clone();
        let admissible = self.admissibility.overall != Verdict::Fail;
        if let Some(c) = &self.certificates {
            if c.marginal_residual > 1e-12 {
                out.push(format!("marginal residual {:.3e}", c.marginal_residual));
            }
            if c.duality_gap > 1e-8 {
                out.push(format!("duality gap {:.3e}", c.duality_gap));
            }
            if c.support_residual > c.eps_dual {
                out.push(format!("support equality residual {:.3e}", c.support_residual));
            }
            if c.lipschitz_violation > c.eps_dual {
                out.push(format!("Lipschitz violation {:.3e}", c.lipschitz_violation));
            }
            if c.monotonicity_violations > 0 {
                out.push(format!("{} cyclical monotonicity violations", c.monotonicity_violations));
            }
            if admissible && c.crossings > 0 {
                out.push(format!("{} crossing ray pairs", c.crossings));
            }
            if admissible && (c.rays_outside > 0 || c.rays_misclassified > 0) {
                out.push(format!("{} rays outside the annulus, {} misclassified", c.rays_outside, c.rays_misclassified));
            }
        }
        if let Some(d) = &self.density {
            if !d.conservation_ok() {
                out.push(format!("density conservation: relative mass error {:.3e}, excess {:.3e}", d.mass_relative_error, d.max_flow_excess));
            }
            if !d.divergence.passes() {
                out.push(format!("weak divergence residual ratio {:.3}", d.divergence.worst_ratio));
            }
        }
        if let Some(r) = &self.recovery {
            if !r.range_ok {
                out.push("reconstruction leaves the trace range".into());
            }
            if !r.levels_monotone {
                out.push("ray levels are not monotone along a family".into());
            }
        }
        out
    }

    /// 0 pass, 2 admissibility failure, 3 warnings only, 4 certificate failure.
    pub fn exit_code(&self) -> i32 {
        if !self.certificate_failures().is_empty() {
            4
        } else if self.admissibility.overall == Verdict::Fail {
            2
        } else if self.admissibility.overall == Verdict::Warn || !self.warnings.is_empty() {
            3
        } else {
            0
        }
    }
}

/// Anchored trace, shifted to agree with the datum at the outer anchor.
pub fn matched_trace(f: &BoundaryMeasure, dec: &ArcDecomposition, data: &BoundaryFunction) -> Result<BoundaryFunction> {
    let g = anchor_trace(f, dec)?;
    let s0 = outer_anchor(dec).unwrap_or(0.0);
    let c = data.value(Side::Outer, s0) - g.value(Side::Outer, s0);
    Ok(g.shifted(c))
}

pub fn run(instance: Instance, options: Options) -> Outcome {
    let t0 = Instant::now();
    let data = &instance.data;
    let annulus = &instance.annulus;
    let dec = decompose(data, None);
    let adm = check_all(annulus, data, &dec, &options.norm);
    let f = tangential_derivative(data);
    let mut out = Outcome {
        warnings: adm.warnings.clone(),
        instance: instance.clone(),
        options: options.clone(),
        decomposition: dec.clone(),
        admissibility: adm,
        derivative: f.clone(),
        anchored: None,
        plan: None,
        certificates: None,
        h5_support: None,
        grid: None,
        sigma: None,
        flow: None,
        potential: None,
        density: None,
        levels: None,
        reconstruction: None,
        u: None,
        traces: None,
        recovery: None,
        failures: Vec::new(),
        stopped_at_check: false,
        timings: Timings::default(),
    };
    out.timings.check = t0.elapsed().as_secs_f64();
    let blocked = out.admissibility.overall == Verdict::Fail && !options.force;
    if options.stage == Stage::Check || blocked {
        out.stopped_at_check = blocked;
        return out;
    }
    if options.force && out.admissibility.overall == Verdict::Fail {
        out.warnings.push("admissibility failed; continuing because of --force".into());
    }

    let t1 = Instant::now();
    let anchored = match matched_trace(&f, &dec, data) {
        Ok(g) => Some(g),
        Err(e) => {
            out.warnings.push(format!("trace anchoring: {e}"));
            None
        }
    };
    let (plus, minus) = atomize(annulus, &f, &dec, options.atoms);
    let plan = match solve(&plus, &minus, options.norm) {
        Ok(p) => p,
        Err(e) => {
            out.failures.push(format!("solver: {e}"));
            return out;
        }
    };
    out.warnings.extend(plan.warnings.iter().cloned());
    out.certificates = Some(CertificateReport::compute(&plan, annulus, &dec, options.trials, options.seed));
    out.anchored = anchored;
    out.h5_support = h5_support_constant(annulus, &plan);
    out.plan = Some(plan);
    out.timings.solve = t1.elapsed().as_secs_f64();
    if options.stage == Stage::Solve {
        return out;
    }

    let t2 = Instant::now();
    let plan = out.plan.as_ref().unwrap();
    let grid = Grid::covering(annulus, options.h);
    let (sigma, w) = rasterize(plan, &grid);
    let phi = potential_field(plan, &grid);
    let total = sigma.mass(&grid);
    let length = transport_length(plan);
    let center = annulus.outer.centroid();
    let radius = annulus.outer.vertices().iter().map(|v| v.dist(center)).fold(0.0, f64::max);
    let divergence = check_divergence(&w, &plan.sources, &plan.targets, &grid, &test_battery(center, radius), annulus.total_perimeter(), options.atoms);
    let sigma_linf = lp_norm(&sigma, f64::INFINITY, &grid);
    let f_linf = f.sup_density();
    let density = DensityReport {
        h: options.h,
        cells: grid.len(),
        total_mass: total,
        plan_cost: length,
        mass_relative_error: if length > 0.0 { (total - length).abs() / length } else { total.abs() },
        min_sigma: sigma.min(),
        max_flow_excess: max_flow_excess(&w, &sigma).max(0.0),
        alignment_residual: check_flow_potential_alignment(&w, &sigma, &phi, &grid),
        divergence,
        sigma_l1: lp_norm(&sigma, 1.0, &grid),
        sigma_l2: lp_norm(&sigma, 2.0, &grid),
        sigma_linf,
        f_linf,
        linf_ratio: if f_linf > 0.0 { sigma_linf / f_linf } else { 0.0 },
        band_mass_2h: boundary_mass(&sigma, &grid, 2.0 * options.h),
        band_mass_4h: boundary_mass(&sigma, &grid, 4.0 * options.h),
    };
    out.density = Some(density);
    out.grid = Some(grid);
    out.sigma = Some(sigma);
    out.flow = Some(w);
    out.potential = Some(phi);
    out.timings.density = t2.elapsed().as_secs_f64();
    if options.stage == Stage::Density {
        return out;
    }

    let t3 = Instant::now();
    if let Err(e) = reconstruct(&mut out) {
        match e {
            Error::LevelMismatch { .. } | Error::UncoveredCell { .. } if out.admissibility.overall != Verdict::Fail => {
                out.failures.push(format!("reconstruction: {e}"))
            }
            other => out.warnings.push(format!("reconstruction skipped: {other}")),
        }
    }
    out.timings.reconstruct = t3.elapsed().as_secs_f64();
    out
}

fn reconstruct(out: &mut Outcome) -> Result<()> {
    let g = out.anchored.clone().ok_or_else(|| Error::MissingAnchor("no anchored trace".into()))?;
    if out.decomposition.pairing().is_none() {
        return Err(Error::MissingAnchor("no arc pairing".into()));
    }
    let annulus = &out.instance.annulus;
    let plan = out.plan.as_ref().unwrap();
    let grid = out.grid.as_ref().unwrap();
    // Build from the offset-free trace and add the offset last, so that
    // shifting the datum shifts u by exactly the same constant.
    let core = BoundaryFunction { offset: 0.0, ..g.clone() };
    let core_levels = assign_ray_levels(plan, &core, &out.decomposition, out.options.atoms)?;
    let mut rec = reconstruct_u(annulus, plan, &out.decomposition, &core_levels, grid, &core)?;
    rec.offset = g.offset;
    let levels: Vec<RayLevel> = core_levels.iter().map(|l| RayLevel { level: l.level + g.offset, ..*l }).collect();
    let u = rec.u();
    let (to, ti) = extract_trace(&u, annulus, grid)?;
    let mask = gradient_mask(grid, plan);
    let (lo, hi) = g.range();
    let dom: Vec<f64> = (0..grid.len()).filter(|&k| grid.in_domain(k)).map(|k| u.values[k]).collect();
    let u_min = dom.iter().copied().fold(f64::INFINITY, f64::min);
    let u_max = dom.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    let report = RecoveryReport {
        rays: levels.len(),
        max_level_mismatch: levels.iter().map(|l| l.mismatch).fold(0.0, f64::max),
        levels_monotone: levels_monotone(plan, &levels, annulus, &out.decomposition),
        swept_cells: rec.swept_cells,
        filled_cells: rec.filled_cells,
        fill_components: rec.components,
        u_min,
        u_max,
        trace_range: (lo, hi),
        range_ok: dom.is_empty() || (u_min >= lo - tol && u_max <= hi + tol),
        ray_spread: ray_constancy(&rec, plan, 32),
        trace_l1_outer: trace_l1_error(&to, &g, 1),
        trace_l1_inner: trace_l1_error(&ti, &g, 1),
        rotated_gradient_residual: check_rotated_gradient(&u, out.flow.as_ref().unwrap(), out.sigma.as_ref().unwrap(), grid, &mask),
        w11: w1p_seminorm(&u, 1.0, grid, &mask),
        w12: w1p_seminorm(&u, 2.0, grid, &mask),
        w1inf: w1p_seminorm(&u, f64::INFINITY, grid, &mask),
    };
    out.levels = Some(levels);
    out.reconstruction = Some(rec);
    out.u = Some(u);
    out.traces = Some((to, ti));
    out.recovery = Some(report);
    Ok(())
}
