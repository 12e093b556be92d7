//! Particle estimate of the filter `π_z(F) = E[F(X_z) | Y]` from the Bayes
//! formula, along the diagonal of the grid.
//!
//! ```bash
//! cargo run --release --example bayes_filter
//! ```

use sheetfilter::filter::{bayes_filter_at, ParticleEnsemble};
use sheetfilter::gaussfield::{FbsCholesky, KernelCache};
use sheetfilter::harness::config::ExperimentConfig;
use sheetfilter::harness::rng::stream;
use sheetfilter::model::{simulate_observation, Func};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::default();
    let (grid, hurst, model) = (cfg.grid(), cfg.hurst(), cfg.signal_model());
    let g = cfg.sensor.g;
    let obs = simulate_observation(&model, &g, &KernelCache::new(grid, hurst), &FbsCholesky::new(grid, hurst)?, &mut stream(11, 1), &mut stream(11, 2))?;
    let ens = ParticleEnsemble::simulate(&model, &g, hurst, &obs.wy, 5000, 11, 3)?;

    let f = Func::identity();
    println!("{:>6} {:>6} {:>9} {:>9} {:>8} {:>8}", "z1", "z2", "truth", "pi", "se", "n_eff");
    for a in (0..=grid.n1).step_by(4) {
        let e = bayes_filter_at(&ens, &f, a, a)?;
        let z = grid.corner(a, a);
        println!("{:6.3} {:6.3} {:9.4} {:9.4} {:8.4} {:8.1}", z.z1, z.z2, obs.signal.at(a, a), e.pi, e.se, e.n_eff);
    }
    Ok(())
}
