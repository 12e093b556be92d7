//! Riemann-Liouville integrals and derivatives of power functions against
//! the Beta-integral closed forms, over a halving study.
//!
//! ```bash
//! cargo run --release --example fractional_calculus
//! ```

use sheetfilter::fraccalc::{relative_sup_error, rl_derivative_left, rl_integral_left, tensor_apply, Grid1D, SampledFn1D};
use sheetfilter::lattice::{Field2D, Grid2D};
use statrs::function::gamma::gamma;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // I^α t^μ = Γ(μ+1)/Γ(μ+α+1) t^{μ+α}
    let (alpha, mu) = (0.3, 0.5);
    println!("I^{alpha} t^{mu}");
    for n in [128, 256, 512, 1024] {
        let grid = Grid1D::new(0.0, 1.0, n);
        let phi = SampledFn1D::from_fn(grid, |t| t.powf(mu));
        let approx = rl_integral_left(&phi, alpha)?;
        let c = gamma(mu + 1.0) / gamma(mu + alpha + 1.0);
        let exact: Vec<f64> = grid.nodes().iter().map(|t| c * t.powf(mu + alpha)).collect();
        println!("  n = {n:5}  relative sup-error {:.3e}", relative_sup_error(&approx.values, &exact));
    }

    // D^α t^μ = Γ(μ+1)/Γ(μ−α+1) t^{μ−α}
    let (alpha, mu) = (0.3, 0.8);
    println!("D^{alpha} t^{mu}");
    for n in [128, 256, 512, 1024] {
        let grid = Grid1D::new(0.0, 1.0, n);
        let d = rl_derivative_left(&SampledFn1D::from_fn(grid, |t| t.powf(mu)), alpha)?;
        let c = gamma(mu + 1.0) / gamma(mu - alpha + 1.0);
        let exact: Vec<f64> = grid.nodes().iter().map(|t| c * t.powf(mu - alpha)).collect();
        println!(
            "  n = {n:5}  relative sup-error {:.3e}  refinement gap {:.3e}",
            relative_sup_error(&d.values.values, &exact),
            d.refinement_gap.unwrap_or(f64::NAN)
        );
    }

    // semigroup: I^a I^b φ = I^{a+b} φ
    let grid = Grid1D::new(0.0, 1.0, 512);
    let phi = SampledFn1D::from_fn(grid, f64::sin);
    let lhs = rl_integral_left(&rl_integral_left(&phi, 0.4)?, 0.3)?;
    let rhs = rl_integral_left(&phi, 0.7)?;
    println!("semigroup gap at n = 512: {:.3e}", relative_sup_error(&lhs.values, &rhs.values));

    // tensor products act axis by axis on fields
    let g2 = Grid2D::new(1.0, 1.0, 64, 64)?;
    let f = Field2D::from_nodes(g2, |z| z.z1 * z.z2);
    let op = |s: &SampledFn1D| rl_integral_left(s, 0.5);
    let ii = tensor_apply(&op, &op, &f)?;
    let c = gamma(2.0) / gamma(2.5);
    let z = g2.node(63, 63);
    println!("(I^0.5 ⊗ I^0.5)(z1 z2) at {z:?}: {:.6} (exact {:.6})", ii.get(63, 63), c * c * (z.z1 * z.z2).powf(1.5));
    Ok(())
}
