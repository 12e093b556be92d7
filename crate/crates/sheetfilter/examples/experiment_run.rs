//! Config handling and a full run from code: validation messages, then
//! `filter-curve` with a zero sensor into a temporary directory.
//!
//! ```bash
//! cargo run --release --example experiment_run
//! ```

use sheetfilter::harness::checks::CheckLevel;
use sheetfilter::harness::config::ExperimentConfig;
use sheetfilter::harness::io::field_from_binary;
use sheetfilter::harness::run::{execute, RunOptions, Subcommand};
use sheetfilter::model::Func;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut bad = ExperimentConfig::default();
    bad.hurst.alpha = 0.4;
    bad.grid.n1 = 1;
    if let Err(e) = bad.validate() {
        println!("{e}");
    }

    let dir = std::env::temp_dir().join("sheetfilter-example");
    let mut cfg = ExperimentConfig::default();
    cfg.sensor.g = Func::Zero;
    cfg.filter.particles = 2000;
    let path = dir.join("config.json");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(&path, cfg.to_json())?;

    let opts = RunOptions { config: Some(path), out: Some(dir.join("curve")), level: CheckLevel::Fast, ..RunOptions::default() };
    let outcome = execute(Subcommand::FilterCurve, &opts)?;
    print!("{}", outcome.report.human());

    let opts = RunOptions { out: Some(dir.join("sim")), ..opts };
    execute(Subcommand::Simulate, &opts)?;
    let signal = field_from_binary(&std::fs::read(dir.join("sim/signal.fbsf"))?)?;
    println!("signal field read back: {}x{} cells", signal.grid.n1, signal.grid.n2);
    Ok(())
}
