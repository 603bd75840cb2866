use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lgp::config::RunConfig;
use lgp::pipeline::{run, Options, Stage};
use lgp::report::{artifacts, write_atomic};
use lgp::transport::CostNorm;

#[derive(Parser)]
#[command(name = "lgp", version, about = "Least gradient problems on planar annuli via optimal transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the admissibility conditions.
    Check(RunArgs),
    /// Check, then solve the transport problem.
    Solve(RunArgs),
    /// Solve and rasterize the transport density and flow.
    Density(RunArgs),
    /// Solve, rasterize and reconstruct the solution.
    Reconstruct(RunArgs),
    /// Run every stage and write the reports and figure only.
    Report(RunArgs),
    /// Run every stage and write every artifact.
    All(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Instance configuration (TOML).
    config: PathBuf,
    /// Atoms per monotone arc.
    #[arg(long)]
    atoms: Option<usize>,
    /// Grid spacing.
    #[arg(long = "grid-h", allow_negative_numbers = true)]
    grid_h: Option<f64>,
    /// Cost norm: "euclidean" or an exponent p > 1.
    #[arg(long)]
    norm: Option<String>,
    /// Continue past a failed admissibility check.
    #[arg(long)]
    force: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn options(cfg: &RunConfig, args: &RunArgs, stage: Stage) -> Result<Options, String> {
    let atoms = args.atoms.unwrap_or(cfg.solver.atoms);
    if atoms < 2 {
        return Err(format!("--atoms must be at least 2, got {atoms}"));
    }
    let h = args.grid_h.unwrap_or(cfg.grid.h);
    if !(h > 0.0 && h.is_finite()) {
        return Err(format!("--grid-h must be positive, got {h}"));
    }
    let norm = match &args.norm {
        Some(n) => CostNorm::parse(n).map_err(|e| e.to_string())?,
        None => cfg.norm().map_err(|e| e.to_string())?,
    };
    Ok(Options { atoms, h, norm, force: args.force, seed: cfg.solver.seed, trials: cfg.solver.monotonicity_trials, stage })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (args, stage, reports_only) = match &cli.command {
        Command::Check(a) => (a, Stage::Check, false),
        Command::Solve(a) => (a, Stage::Solve, false),
        Command::Density(a) => (a, Stage::Density, false),
        Command::Reconstruct(a) => (a, Stage::Reconstruct, false),
        Command::Report(a) => (a, Stage::Reconstruct, true),
        Command::All(a) => (a, Stage::Reconstruct, false),
    };
    let fail = |msg: String| {
        eprintln!("lgp: {msg}");
        ExitCode::from(1)
    };
    let cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(e.to_string()),
    };
    let opts = match options(&cfg, args, stage) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let instance = match cfg.build_instance() {
        Ok(i) => i,
        Err(e) => return fail(e.to_string()),
    };
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));

    let outcome = run(instance, opts);
    let mut files = artifacts(&outcome);
    if reports_only {
        files.retain(|(name, _)| matches!(*name, "report.txt" | "report.json" | "figure.svg"));
    }
    for (name, text) in &files {
        if let Err(e) = write_atomic(&dir, name, text.as_bytes()) {
            return fail(format!("writing {}: {e}", dir.join(name).display()));
        }
    }
    print!("{}", files[0].1);
    println!("artifacts: {}", dir.display());
    ExitCode::from(outcome.exit_code() as u8)
}
