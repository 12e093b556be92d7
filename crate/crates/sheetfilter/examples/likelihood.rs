//! A signal sheet, its sensor transform δ and the likelihood ratio of the
//! observation. Under the signal-free measure `E[V_T] = 1`.
//!
//! ```bash
//! cargo run --release --example likelihood
//! ```

use sheetfilter::gaussfield::{FbsCholesky, HurstPair, KernelCache};
use sheetfilter::harness::rng::stream;
use sheetfilter::lattice::Grid2D;
use sheetfilter::model::{delta_2d, likelihood, likelihood_noise_form, simulate_observation, Func, SignalModel, X0Law};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid2D::unit(8);
    let hurst = HurstPair::new(0.75, 0.55)?;
    let model = SignalModel { drift: Func::sin(-0.5, 1.0), diffusion: Func::Const { c: 0.4 }, x0: X0Law::Normal { mean: 0.5, sd: 0.5 } };
    let g = Func::sin(0.5, 1.0);
    let cache = KernelCache::new(grid, hurst);
    let fbs = FbsCholesky::new(grid, hurst)?;

    let obs = simulate_observation(&model, &g, &cache, &fbs, &mut stream(1, 1), &mut stream(1, 2))?;
    let delta = delta_2d(&obs.signal.node_values(), &g, &hurst, 0.25)?;
    println!("X_T = {:.4}, |δ|_L2 = {:.4}, warnings: {:?}", obs.signal.at(8, 8), delta.l2_norm, delta.warnings);
    let lik = likelihood(&delta.values, &obs.wy)?;
    println!("log V_T^-1 from the observation: {:.4}", lik.log_v_inv_at(8, 8));

    // noise form: V_T as a functional of the whitened noise alone
    let n = 20_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    for k in 0..n {
        let o = simulate_observation(&model, &g, &cache, &fbs, &mut stream(2, 100 + 2 * k), &mut stream(2, 101 + 2 * k))?;
        let d = delta_2d(&o.signal.node_values(), &g, &hurst, 0.25)?;
        let v = likelihood_noise_form(&d.values, &o.wb)?.log_v_at(8, 8).exp();
        s1 += v;
        s2 += v * v;
    }
    let m = s1 / n as f64;
    let se = ((s2 / n as f64 - m * m) / n as f64).sqrt();
    println!("E[V_T] ≈ {m:.4} ± {se:.4} over {n} draws");
    Ok(())
}
