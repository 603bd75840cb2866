//! Run artifacts: the text and JSON summaries, CSV dumps and the figure.
//! Every file is written to a temporary sibling and renamed into place.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::admissibility::ConditionResult;
use crate::boundary::fmt_num;
use crate::density::{Grid, ScalarField, VectorField};
use crate::error::Result;
use crate::pipeline::Outcome;
use crate::svg::{render, Figure};
use crate::transport::TransportPlan;

pub const CONTOURS: usize = 12;

/// Write `contents` to `dir/name` through a temporary file in `dir`.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::Builder::new().prefix(&format!(".{name}.")).tempfile_in(dir)?;
    tmp.write_all(contents)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.as_file().sync_all()?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| e.error)?;
    Ok(path)
}

/// One row per plan pair with both endpoints, the mass and the pair cost.
pub fn plan_csv(plan: &TransportPlan) -> String {
    let mut s = String::from("pair,source_x,source_y,source_side,source_s,target_x,target_y,target_side,target_s,mass,cost\n");
    for (k, p) in plan.pairs.iter().enumerate() {
        let a = &plan.sources.atoms[p.source];
        let b = &plan.targets.atoms[p.target];
        let _ = writeln!(
            s,
            "{k},{},{},{},{},{},{},{},{},{},{}",
            a.point.x,
            a.point.y,
            a.side.name(),
            a.s,
            b.point.x,
            b.point.y,
            b.side.name(),
            b.s,
            p.mass,
            plan.pair_cost(p)
        );
    }
    s
}

/// Dual potentials at every atom: `role,index,x,y,side,s,mass,phi`.
pub fn potential_csv(plan: &TransportPlan) -> String {
    let mut s = String::from("role,index,x,y,side,s,mass,phi\n");
    for (role, atoms, phi) in [("source", &plan.sources.atoms, &plan.phi_source), ("target", &plan.targets.atoms, &plan.phi_target)] {
        for (k, (a, v)) in atoms.iter().zip(phi.iter()).enumerate() {
            let _ = writeln!(s, "{role},{k},{},{},{},{},{},{v}", a.point.x, a.point.y, a.side.name(), a.s, a.mass);
        }
    }
    s
}

/// Domain cells of a scalar field: `i,j,x,y,value`.
pub fn scalar_csv(grid: &Grid, field: &ScalarField, column: &str) -> String {
    let mut s = format!("i,j,x,y,{column}\n");
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.index(i, j);
            if grid.in_domain(k) {
                let c = grid.center(i, j);
                let _ = writeln!(s, "{i},{j},{},{},{}", c.x, c.y, field.values[k]);
            }
        }
    }
    s
}

/// Domain cells of the flow: `i,j,x,y,wx,wy`.
pub fn flow_csv(grid: &Grid, w: &VectorField) -> String {
    let mut s = String::from("i,j,x,y,wx,wy\n");
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.index(i, j);
            if grid.in_domain(k) {
                let c = grid.center(i, j);
                let v = w.values[k];
                let _ = writeln!(s, "{i},{j},{},{},{},{}", c.x, c.y, v.x, v.y);
            }
        }
    }
    s
}

pub fn figure(out: &Outcome) -> Option<String> {
    let plan = out.plan.as_ref()?;
    let fig = Figure {
        annulus: &out.instance.annulus,
        decomposition: &out.decomposition,
        plan: Some(plan),
        levels: out.levels.as_deref(),
        grid: out.grid.as_ref(),
        sigma: out.sigma.as_ref(),
        u: out.u.as_ref(),
        contours: CONTOURS,
    };
    Some(render(&fig))
}

fn condition_json(c: &ConditionResult) -> Value {
    json!({ "verdict": c.verdict, "witnesses": c.witnesses })
}

/// Machine-readable summary of every stage that ran.
pub fn summary_json(out: &Outcome) -> Value {
    let adm = &out.admissibility;
    let families: Vec<Value> = out
        .decomposition
        .families()
        .iter()
        .map(|f| {
            json!({
                "label": f.label(),
                "kind": f.kind,
                "source": f.source,
                "target": f.target,
                "tv_source": f.tv_source,
                "tv_target": f.tv_target,
            })
        })
        .collect();
    let plan = out.plan.as_ref().map(|p| {
        json!({
            "pairs": p.pairs.len(),
            "sources": p.sources.atoms.len(),
            "targets": p.targets.atoms.len(),
            "cost": p.cost,
            "norm": p.norm.to_string(),
            "eps_dual": p.eps_dual,
        })
    });
    json!({
        "instance": out.instance.name,
        "force": out.options.force,
        "stage": out.options.stage,
        "options": {
            "atoms": out.options.atoms,
            "grid_h": out.options.h,
            "norm": out.options.norm.to_string(),
            "seed": out.options.seed,
            "monotonicity_trials": out.options.trials,
        },
        "exit_code": out.exit_code(),
        "stopped_at_check": out.stopped_at_check,
        "admissibility": {
            "overall": adm.overall,
            "h1": condition_json(&adm.h1),
            "h2": condition_json(&adm.h2),
            "h3": condition_json(&adm.h3),
            "h4": condition_json(&adm.h4),
            "h5": condition_json(&adm.h5),
            "tv_outer": adm.tv_outer,
            "tv_inner": adm.tv_inner,
            "tv_inequality": adm.tv_inequality,
            "h4_margins": adm.h4_margins,
            "h5_constant": adm.h5_constant,
            "h5_support_constant": out.h5_support,
            "monotonicity_changes_inner": adm.monotonicity_changes_inner,
            "special_points": adm.special_points,
            "pairings_found": adm.pairings_found,
            "pairing_shift": adm.pairing_shift,
        },
        "families": families,
        "plan": plan,
        "certificates": out.certificates,
        "density": out.density,
        "recovery": out.recovery,
        "certificate_failures": out.certificate_failures(),
        "warnings": out.warnings,
        "timings_s": out.timings,
    })
}

fn yes(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

/// Human-readable summary.
pub fn summary_text(out: &Outcome) -> String {
    let mut s = String::new();
    let o = &out.options;
    let _ = writeln!(s, "instance: {}", out.instance.name);
    let _ = writeln!(s, "stage: {:?}  force: {}", o.stage, o.force);
    let _ = writeln!(s, "atoms: {}  grid h: {}  norm: {}  seed: {}", o.atoms, o.h, o.norm, o.seed);
    let _ = writeln!(s, "exit code: {}", out.exit_code());
    s.push('\n');

    let adm = &out.admissibility;
    let _ = writeln!(s, "[admissibility] overall {}", adm.overall.name());
    for c in [&adm.h1, &adm.h2, &adm.h3, &adm.h4, &adm.h5] {
        let _ = writeln!(s, "  {}: {}", c.name, c.verdict.name());
        for w in &c.witnesses {
            let _ = writeln!(s, "    - {w}");
        }
    }
    let _ = writeln!(
        s,
        "  total variation: outer {} inner {} (inner <= outer: {})",
        fmt_num(adm.tv_outer),
        fmt_num(adm.tv_inner),
        adm.tv_inequality.name()
    );
    for m in &adm.h4_margins {
        let _ = writeln!(s, "  separation {}: {:.6} < {:.6}, margin {:.6}", m.family, m.lhs, m.rhs, m.margin);
    }
    let _ = writeln!(s, "  visibility constant (all pairs): {:.6}", adm.h5_constant);
    if let Some(c) = out.h5_support {
        let _ = writeln!(s, "  visibility constant (plan rays): {c:.6}");
    }
    let _ = writeln!(s, "  inner monotonicity changes: {}", adm.monotonicity_changes_inner);
    for p in &adm.special_points {
        let _ = writeln!(s, "  special point: ({:.6}, {:.6})", p.x, p.y);
    }
    let _ = writeln!(s, "  consistent pairings: {}", adm.pairings_found);
    for f in out.decomposition.families() {
        let _ = writeln!(
            s,
            "  {}: {} [{:.6}, +{:.6}] -> {} [{:.6}, +{:.6}], variation {}",
            f.label(),
            f.source.side.name(),
            f.source.start,
            f.source.length,
            f.target.side.name(),
            f.target.start,
            f.target.length,
            fmt_num(f.tv_source)
        );
    }

    if let (Some(p), Some(c)) = (&out.plan, &out.certificates) {
        s.push('\n');
        let _ = writeln!(s, "[transport] {} pairs, {} sources, {} targets, cost {:.12}", p.pairs.len(), p.sources.atoms.len(), p.targets.atoms.len(), p.cost);
        let _ = writeln!(s, "  marginal residual: {:.3e}", c.marginal_residual);
        let _ = writeln!(s, "  duality gap: {:.3e}", c.duality_gap);
        let _ = writeln!(s, "  support residual: {:.3e} (eps {:.3e})", c.support_residual, c.eps_dual);
        let _ = writeln!(s, "  Lipschitz violation: {:.3e}", c.lipschitz_violation);
        let _ = writeln!(s, "  cyclical monotonicity: {} violations in {} trials", c.monotonicity_violations, c.monotonicity_trials);
        let _ = writeln!(s, "  crossing ray pairs: {}", c.crossings);
        let _ = writeln!(s, "  rays outside: {}, misclassified: {}", c.rays_outside, c.rays_misclassified);
        let _ = writeln!(s, "  sources with several partners: {}", c.multi_partner_sources);
    }

    if let Some(d) = &out.density {
        s.push('\n');
        let _ = writeln!(s, "[density] h {} over {} cells", d.h, d.cells);
        let _ = writeln!(s, "  mass {:.12} vs transport length {:.12}, relative error {:.3e} ({})", d.total_mass, d.plan_cost, d.mass_relative_error, yes(d.conservation_ok()));
        let _ = writeln!(s, "  min sigma {:.3e}, max |w| - sigma {:.3e}", d.min_sigma, d.max_flow_excess);
        let _ = writeln!(s, "  alignment residual |w + sigma grad phi|: {:.6}", d.alignment_residual);
        let _ = writeln!(s, "  weak divergence: worst ratio {:.3e} over {} test functions ({})", d.divergence.worst_ratio, d.divergence.residuals.len(), yes(d.divergence.passes()));
        let _ = writeln!(s, "  norms: L1 {:.6} L2 {:.6} Linf {:.6}; |f|inf {:.6}, ratio {:.6}", d.sigma_l1, d.sigma_l2, d.sigma_linf, d.f_linf, d.linf_ratio);
        let _ = writeln!(s, "  boundary band mass: 2h {:.6e}, 4h {:.6e}", d.band_mass_2h, d.band_mass_4h);
    }

    if let Some(r) = &out.recovery {
        s.push('\n');
        let _ = writeln!(s, "[reconstruction] {} rays, max level mismatch {:.3e}, monotone levels {}", r.rays, r.max_level_mismatch, yes(r.levels_monotone));
        let _ = writeln!(s, "  swept cells {}, filled cells {} in {} components", r.swept_cells, r.filled_cells, r.fill_components);
        let _ = writeln!(s, "  u in [{:.6}, {:.6}], trace range [{:.6}, {:.6}] ({})", r.u_min, r.u_max, r.trace_range.0, r.trace_range.1, yes(r.range_ok));
        let _ = writeln!(s, "  spread of u along rays: {:.3e}", r.ray_spread);
        let _ = writeln!(s, "  trace L1 error: outer {:.6} inner {:.6}", r.trace_l1_outer, r.trace_l1_inner);
        let _ = writeln!(s, "  rotated gradient residual: {:.6}", r.rotated_gradient_residual);
        let _ = writeln!(s, "  |Du| norms: L1 {:.6} L2 {:.6} Linf {:.6}", r.w11, r.w12, r.w1inf);
    }

    let failures = out.certificate_failures();
    if !failures.is_empty() || !out.warnings.is_empty() {
        s.push('\n');
    }
    for f in &failures {
        let _ = writeln!(s, "failure: {f}");
    }
    for w in &out.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    let t = &out.timings;
    let _ = writeln!(s, "\ntimings (s): check {:.3} solve {:.3} density {:.3} reconstruct {:.3}", t.check, t.solve, t.density, t.reconstruct);
    s
}

/// Every artifact the run can provide, as `(file name, contents)`.
/// Later-stage files are only present when their stage ran.
pub fn artifacts(out: &Outcome) -> Vec<(&'static str, String)> {
    let mut files = vec![
        ("report.txt", summary_text(out)),
        ("report.json", serde_json::to_string_pretty(&summary_json(out)).expect("summary serializes") + "\n"),
    ];
    if let Some(plan) = &out.plan {
        files.push(("plan.csv", plan_csv(plan)));
        files.push(("potential.csv", potential_csv(plan)));
    }
    if let (Some(grid), Some(sigma), Some(w)) = (&out.grid, &out.sigma, &out.flow) {
        files.push(("sigma.csv", scalar_csv(grid, sigma, "sigma")));
        files.push(("flow.csv", flow_csv(grid, w)));
    }
    if let (Some(grid), Some(u)) = (&out.grid, &out.u) {
        files.push(("u.csv", scalar_csv(grid, u, "u")));
    }
    if let Some(svg) = figure(out) {
        files.push(("figure.svg", svg));
    }
    files
}

pub fn write_artifacts(out: &Outcome, dir: &Path) -> Result<Vec<PathBuf>> {
    artifacts(out).into_iter().map(|(name, text)| write_atomic(dir, name, text.as_bytes())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::pipeline::{run, Options, Stage};

    #[test]
    fn check_stage_writes_reports_only() {
        let out = run(instances::example_4_6(512).unwrap(), Options { stage: Stage::Check, ..Options::default() });
        let names: Vec<&str> = artifacts(&out).iter().map(|a| a.0).collect();
        assert_eq!(names, ["report.txt", "report.json"]);
        let text = summary_text(&out);
        assert!(text.contains("force: false"));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "a.txt", b"one").unwrap();
        write_atomic(dir.path(), "a.txt", b"two").unwrap();
        assert_eq!(std::fs::read_to_string(dir.path().join("a.txt")).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn csv_rows_cover_domain_cells() {
        let out = run(instances::example_4_6(512).unwrap(), Options { atoms: 16, h: 0.1, trials: 100, ..Options::default() });
        let grid = out.grid.as_ref().unwrap();
        let cells = (0..grid.len()).filter(|&k| grid.in_domain(k)).count();
        let sigma = scalar_csv(grid, out.sigma.as_ref().unwrap(), "sigma");
        assert_eq!(sigma.lines().count(), cells + 1);
        let plan = plan_csv(out.plan.as_ref().unwrap());
        assert_eq!(plan.lines().count(), out.plan.as_ref().unwrap().pairs.len() + 1);
        let json = summary_json(&out);
        assert_eq!(json["exit_code"], out.exit_code());
    }
}
