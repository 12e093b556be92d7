//! Nonlinear filtering of two-parameter signals observed in fractional
//! Brownian sheet noise.
//!
//! A signal `X` solves a planar SDE driven by a Wiener sheet; it is seen
//! through `Y = ∫ g(X) + B^{α,β}` with `B^{α,β}` a fractional Brownian sheet
//! of Hurst indices `α, β ∈ (½, 1)`. Whitening `Y` with the Molchan kernel
//! turns the likelihood into a Girsanov density, which a weighted particle
//! ensemble uses to estimate `π_z(F) = E[F(X_z) | Y on R_z]`.
//!
//! | module | contents |
//! |---|---|
//! | [`lattice`] | points, rectangles, grids, fields, discrete double integrals |
//! | [`fraccalc`] | Riemann-Liouville integrals and derivatives on grids |
//! | [`gaussfield`] | Wiener and fractional sheets, kernels, whitening |
//! | [`model`] | the signal SDE, the sensor transform `δ`, likelihoods |
//! | [`filter`] | Bayes filter, curve march, evolution-equation residual |
//! | [`harness`] | configs, RNG streams, check suites, artifacts, subcommands |
//! | [`quad`] | adaptive Gauss-Kronrod quadrature used as an oracle |
//!
//! Every capability has a runnable program in `examples/`:
//!
//! ```bash
//! cargo run --release --example fractional_calculus
//! cargo run --release --example fbs_simulation
//! cargo run --release --example likelihood
//! cargo run --release --example bayes_filter
//! cargo run --release --example zakai_curve
//! cargo run --release --example dmz_residual
//! cargo run --release --example conditional_mean_lemma
//! cargo run --release --example experiment_run
//! ```

pub mod filter;
pub mod fraccalc;
pub mod gaussfield;
pub mod harness;
pub mod lattice;
pub mod model;
pub mod quad;
