//! Load a shipped experiment config and run it end to end into a scratch
//! directory. Pass another config path as the first argument to run that.

use kuznecov_weyl::config::ExperimentConfig;
use kuznecov_weyl::pipeline::run;
use std::path::PathBuf;

fn main() -> kuznecov_weyl::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/c06-subcritical-ratio.toml"));
    let scratch = tempfile::tempdir()?;
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.output_dir = Some(scratch.path().join("out"));
    cfg.cache_dir = Some(scratch.path().join("cache"));
    let report = run(&cfg)?;
    print!("{}", report.summary());
    for a in &report.artifacts {
        println!("wrote {a}");
    }
    Ok(())
}
