// Run a configuration file end to end and write every artifact.
//
// `cargo run --example pipeline_run -- configs/example_4_6.toml out/`

use std::error::Error;
use std::path::{Path, PathBuf};

use lgp::config::RunConfig;
use lgp::pipeline::{run, Options};
use lgp::report::write_artifacts;

pub fn run_config(config: &Path, out_dir: &Path, atoms: Option<usize>, h: Option<f64>) -> Result<i32, Box<dyn Error>> {
    let cfg = RunConfig::load(config)?;
    let opts = Options {
        atoms: atoms.unwrap_or(cfg.solver.atoms),
        h: h.unwrap_or(cfg.grid.h),
        norm: cfg.norm()?,
        seed: cfg.solver.seed,
        trials: cfg.solver.monotonicity_trials,
        ..Options::default()
    };
    let out = run(cfg.build_instance()?, opts);
    for path in write_artifacts(&out, out_dir)? {
        println!("wrote {}", path.display());
    }
    Ok(out.exit_code())
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/example_4_6.toml");
    let dir = tempfile::tempdir()?;
    let code = run_config(&config, dir.path(), Some(64), Some(0.05))?;
    if code != 0 {
        return Err(format!("exit code {code}").into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.as_slice() {
        [config, out] => {
            let code = run_config(Path::new(config), &PathBuf::from(out), None, None)?;
            std::process::exit(code)
        }
        [] => run_example(),
        _ => Err("usage: pipeline_run [CONFIG OUT_DIR]".into()),
    }
}
