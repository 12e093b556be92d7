//! The unnormalized filter marched along staircase paths by the curve
//! equation, next to the Bayes formula at the same nodes.
//!
//! ```bash
//! cargo run --release --example zakai_curve
//! ```

use sheetfilter::filter::{bayes_filter_at, zakai_curve_integrate, MonotonePath};
use sheetfilter::harness::checks::build_ensemble;
use sheetfilter::harness::config::ExperimentConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::default();
    let (_, ens) = build_ensemble(&cfg, 5000)?;
    let model = cfg.signal_model();
    let f = cfg.filter.test_functions[0];
    let grid = cfg.grid();
    for (name, path) in [("lower L", MonotonePath::lower_l(grid)), ("upper L", MonotonePath::upper_l(grid)), ("diagonal", MonotonePath::diagonal(grid))] {
        let trace = zakai_curve_integrate(&ens, &model.drift, &model.diffusion, &f, &path)?;
        let mut worst = 0.0f64;
        for r in trace.rows.iter().skip(1) {
            let b = bayes_filter_at(&ens, &f, r.a, r.b)?;
            worst = worst.max((r.sigma - b.sigma).abs() / (r.sigma_se.powi(2) + b.sigma_se.powi(2)).sqrt());
        }
        let last = trace.rows.last().unwrap();
        println!("{name:<9} pi_T = {:.4} ± {:.4}, largest gap to Bayes {worst:.2} SE", last.pi, last.se);
    }
    Ok(())
}
