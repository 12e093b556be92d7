//! Wiener sheet and fractional Brownian sheet simulation, the kernels `K_H`
//! and `K_H^{-1}`, and the coloring and whitening maps between the two
//! sheets.
//!
//! Discrete kernels are cell averages: the weight of cell `[lo, hi]` for the
//! evaluation point `t` is `(1/h)∫_lo^hi K(t, s) ds`, computed in closed form
//! from the self-similar shape `K(t, rt) = t^{H−½} κ(r)` and incomplete Beta
//! functions. A cumulative field at corner `t` only involves cells below `t`.

use crate::fraccalc::{rl_derivative_right, rl_integral_right, Grid1D, SampledFn1D};
use crate::lattice::{cumulative_from_increments, increments_from_cumulative, Field2D, Grid2D, Placement};
use crate::quad;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::beta::{beta, beta_reg};
use statrs::function::gamma::gamma;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussError {
    #[error("Hurst index {0} is outside (0.5, 1)")]
    Hurst(f64),
    #[error("kernel argument outside 0 < s < t: t={t}, s={s}")]
    Domain { t: f64, s: f64 },
    #[error("covariance factorization failed after jitter retry (axis of {0} points)")]
    Factorization(usize),
    #[error("grid mismatch: {0}")]
    Shape(String),
}

/// Hurst indices `(α, β)` of the two axes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HurstPair {
    pub alpha: f64,
    pub beta: f64,
}

impl HurstPair {
    /// Persistent regime only: both indices in `(½, 1)`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self, GaussError> {
        for h in [alpha, beta] {
            if !(h > 0.5 && h < 1.0) {
                return Err(GaussError::Hurst(h));
            }
        }
        Ok(HurstPair { alpha, beta })
    }

    /// Also admits the boundary value `½`, where every kernel is `1`.
    pub fn formal(alpha: f64, beta: f64) -> Result<Self, GaussError> {
        for h in [alpha, beta] {
            if !(h >= 0.5 && h < 1.0) {
                return Err(GaussError::Hurst(h));
            }
        }
        Ok(HurstPair { alpha, beta })
    }
}

const GAMMA_ZERO: f64 = 1e-14;

/// `c_H = sqrt(2H Γ(3/2−H) / (Γ(H+½) Γ(2−2H)))`.
pub fn c_h(h: f64) -> f64 {
    (2.0 * h * gamma(1.5 - h) / (gamma(h + 0.5) * gamma(2.0 - 2.0 * h))).sqrt()
}

/// `c_H^* = c_H Γ(H+½)`.
pub fn c_star(h: f64) -> f64 {
    c_h(h) * gamma(h + 0.5)
}

/// `c_H' = Γ(3/2−H)^{-1} sqrt(Γ(2−2H) / (2H Γ(3/2−H) Γ(H+½)))`.
pub fn c_prime(h: f64) -> f64 {
    (gamma(2.0 - 2.0 * h) / (2.0 * h * gamma(1.5 - h) * gamma(h + 0.5))).sqrt() / gamma(1.5 - h)
}

/// `γ_H(s, t) = ½(s^{2H} + t^{2H} − |t−s|^{2H})`.
pub fn fbm_cov(h: f64, s: f64, t: f64) -> f64 {
    0.5 * (s.abs().powf(2.0 * h) + t.abs().powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
}

fn check_args(t: f64, s: f64) -> Result<(), GaussError> {
    if s > 0.0 && s < t && t.is_finite() {
        Ok(())
    } else {
        Err(GaussError::Domain { t, s })
    }
}

/// `K_H(t, s)` from its defining formula with the inner integral by
/// adaptive quadrature.
pub fn kernel_k(h: f64, t: f64, s: f64) -> Result<f64, GaussError> {
    check_args(t, s)?;
    let g = h - 0.5;
    if g.abs() < GAMMA_ZERO {
        return Ok(1.0);
    }
    let inner = quad::integrate(|u| u.powf(g - 1.0) * (u - s).powf(g), s, t, 1e-15, 1e-13).value;
    Ok(c_h(h) * ((t / s).powf(g) * (t - s).powf(g) - g * s.powf(-g) * inner))
}

/// `K_H^{-1}(t, s)` from its defining formula. The inner integrand is
/// singular at `u = s`; the substitution `v = (u−s)^{1−γ}` removes it.
pub fn kernel_k_inv(h: f64, t: f64, s: f64) -> Result<f64, GaussError> {
    check_args(t, s)?;
    let g = h - 0.5;
    if g.abs() < GAMMA_ZERO {
        return Ok(1.0);
    }
    let p = 1.0 / (1.0 - g);
    let vmax = (t - s).powf(1.0 - g);
    let inner = quad::integrate(|v| (s + v.powf(p)).powf(g - 1.0) * p, 0.0, vmax, 1e-15, 1e-13).value;
    Ok(c_prime(h) * ((t / s).powf(g) * (t - s).powf(-g) - g * s.powf(-g) * inner))
}

/// Grid on `[s − h/2, t]` with `n` cells whose first node is `s`.
fn grid_from(s: f64, t: f64, n: usize) -> Grid1D {
    let h = (t - s) / (n as f64 - 0.5);
    Grid1D::new(s - 0.5 * h, t, n)
}

/// `K_H(t, s) = c_H^* s^{½−H} (I^{H−½}_{t−} u^{H−½})(s)` with the fractional
/// integral discretized on `n` cells.
pub fn kernel_k_fractional(h: f64, t: f64, s: f64, n: usize) -> Result<f64, GaussError> {
    check_args(t, s)?;
    let g = h - 0.5;
    if g.abs() < GAMMA_ZERO {
        return Ok(1.0);
    }
    let f = SampledFn1D::from_fn(grid_from(s, t, n), |u| u.powf(g));
    let i = rl_integral_right(&f, g).map_err(|e| GaussError::Shape(e.to_string()))?;
    Ok(c_star(h) * s.powf(-g) * i.values[0])
}

/// `K_H^{-1}(t, s) = (c_H^*)^{-1} s^{½−H} (D^{H−½}_{t−} u^{H−½})(s)` with the
/// fractional derivative discretized on `n` cells.
pub fn kernel_k_inv_fractional(h: f64, t: f64, s: f64, n: usize) -> Result<f64, GaussError> {
    check_args(t, s)?;
    let g = h - 0.5;
    if g.abs() < GAMMA_ZERO {
        return Ok(1.0);
    }
    let f = SampledFn1D::from_fn(grid_from(s, t, n), |u| u.powf(g));
    let d = rl_derivative_right(&f, g).map_err(|e| GaussError::Shape(e.to_string()))?;
    Ok(s.powf(-g) * d.values.values[0] / c_star(h))
}

fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        beta(a, b)
    } else {
        beta_reg(a, b, x) * beta(a, b)
    }
}

/// `k(r) = ∫_r^1 y^{−1−2γ}(1−y)^γ dy`, integrated in `x = ln y`.
fn k_aux(g: f64, r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    quad::integrate(|x| (-2.0 * g * x).exp() * (-x.exp_m1()).powf(g), r.ln(), 0.0, 1e-15, 1e-13).value
}

/// `m(r) = ∫_r^1 y^{−1}(1−y)^{−γ} dy`
/// `     = ln(1/r) + p ∫_0^{(1−r)^{1−γ}} (1 − v^{p−1})/(1 − v^p) dv`, `p = 1/(1−γ)`.
fn m_aux(g: f64, r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let p = 1.0 / (1.0 - g);
    let vmax = (1.0 - r).powf(1.0 - g);
    let integrand = |v: f64| {
        if v <= 0.0 {
            return p;
        }
        let lv = v.ln();
        p * (-((p - 1.0) * lv).exp_m1()) / (-(p * lv).exp_m1())
    };
    -r.ln() + quad::integrate(integrand, 0.0, vmax, 1e-15, 1e-13).value
}

/// Antiderivative of `κ(r) = K_H(1, r)` vanishing at `0`.
fn phi_k(g: f64, r: f64, c: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let r = r.min(1.0);
    c / (1.0 + g) * (inc_beta(1.0 - g, 1.0 + g, r) - g * r.powf(1.0 + g) * k_aux(g, r))
}

/// Antiderivative of `K_H^{-1}(1, r)` vanishing at `0`.
fn phi_k_inv(g: f64, r: f64, c: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let r = r.min(1.0);
    c / (1.0 - g) * ((1.0 - 2.0 * g) * inc_beta(1.0 - g, 1.0 - g, r) - g * r.powf(1.0 - g) * m_aux(g, r))
}

/// `∫_lo^hi K_H(t, s) ds` for `0 ≤ lo ≤ hi ≤ t`.
pub fn cell_integral_k(h: f64, t: f64, lo: f64, hi: f64) -> f64 {
    let g = h - 0.5;
    if g.abs() < GAMMA_ZERO {
        return hi - lo;
    }
    let c = c_h(h);
    t.powf(1.0 + g) * (phi_k(g, hi / t, c) - phi_k(g, lo / t, c))
}

/// `∫_lo^hi K_H^{-1}(t, s) ds` for `0 ≤ lo ≤ hi ≤ t`.
pub fn cell_integral_k_inv(h: f64, t: f64, lo: f64, hi: f64) -> f64 {
    let g = h - 0.5;
    if g.abs() < GAMMA_ZERO {
        return hi - lo;
    }
    let c = c_prime(h);
    t.powf(1.0 - g) * (phi_k_inv(g, hi / t, c) - phi_k_inv(g, lo / t, c))
}

/// Cell-averaged kernel matrices of one axis: row `m` holds the weights of
/// corner `t_{m+1} = (m+1)h`, column `c` the cell `[ch, (c+1)h]`, `c ≤ m`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisKernels {
    pub hurst: f64,
    pub n: usize,
    pub h: f64,
    pub k: DMatrix<f64>,
    pub k_inv: DMatrix<f64>,
}

impl AxisKernels {
    pub fn new(hurst: f64, extent: f64, n: usize) -> Self {
        let h = extent / n as f64;
        let mut k = DMatrix::zeros(n, n);
        let mut k_inv = DMatrix::zeros(n, n);
        // Self-similarity: the weights of corner m depend only on the ratios
        // c/(m+1), so each row costs one antiderivative per cell edge.
        for m in 0..n {
            let t = (m + 1) as f64 * h;
            let mut prev_k = 0.0;
            let mut prev_ki = 0.0;
            for c in 0..=m {
                let hi = (c + 1) as f64 * h;
                let fk = cell_integral_k(hurst, t, 0.0, hi);
                let fki = cell_integral_k_inv(hurst, t, 0.0, hi);
                k[(m, c)] = (fk - prev_k) / h;
                k_inv[(m, c)] = (fki - prev_ki) / h;
                prev_k = fk;
                prev_ki = fki;
            }
        }
        AxisKernels { hurst, n, h, k, k_inv }
    }
}

/// Kernel matrices for both axes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCache {
    pub grid: Grid2D,
    pub hurst: HurstPair,
    pub axis1: AxisKernels,
    pub axis2: AxisKernels,
}

impl KernelCache {
    pub fn new(grid: Grid2D, hurst: HurstPair) -> Self {
        let axis1 = AxisKernels::new(hurst.alpha, grid.t1, grid.n1);
        let axis2 = if grid.n2 == grid.n1 && grid.t2 == grid.t1 && hurst.beta == hurst.alpha {
            axis1.clone()
        } else {
            AxisKernels::new(hurst.beta, grid.t2, grid.n2)
        };
        KernelCache { grid, hurst, axis1, axis2 }
    }
}

/// Cumulative and per-cell increment representations of one field.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFieldSample {
    pub grid: Grid2D,
    pub cumulative: Field2D,
    pub increments: Field2D,
}

impl GaussianFieldSample {
    pub fn from_increments(increments: Field2D) -> Self {
        let cumulative = cumulative_from_increments(&increments);
        GaussianFieldSample { grid: increments.grid, cumulative, increments }
    }

    pub fn from_cumulative(cumulative: Field2D) -> Self {
        let increments = increments_from_cumulative(&cumulative);
        GaussianFieldSample { grid: cumulative.grid, cumulative, increments }
    }

    /// The same realization on the grid with `factor` times fewer cells per
    /// axis: corners are subsampled, increments recomputed.
    pub fn coarsen(&self, factor: usize) -> GaussianFieldSample {
        let g = self.grid;
        assert!(g.n1 % factor == 0 && g.n2 % factor == 0, "grid not divisible by {factor}");
        let cg = Grid2D { t1: g.t1, t2: g.t2, n1: g.n1 / factor, n2: g.n2 / factor };
        let cum = Field2D::from_fn(cg, Placement::Corner, |i, j| {
            self.cumulative.get((i + 1) * factor - 1, (j + 1) * factor - 1)
        });
        GaussianFieldSample::from_cumulative(cum)
    }
}

fn normal_matrix<R: Rng + ?Sized>(rng: &mut R, n1: usize, n2: usize, scale: f64) -> DMatrix<f64> {
    // Fill order is row-major in (i, j) so that samples do not depend on the
    // matrix storage layout.
    let mut m = DMatrix::zeros(n1, n2);
    for i in 0..n1 {
        for j in 0..n2 {
            let z: f64 = rng.sample(StandardNormal);
            m[(i, j)] = scale * z;
        }
    }
    m
}

fn field_from_matrix(grid: Grid2D, placement: Placement, m: &DMatrix<f64>) -> Field2D {
    Field2D::from_fn(grid, placement, |i, j| m[(i, j)])
}

fn matrix_from_field(f: &Field2D) -> DMatrix<f64> {
    DMatrix::from_fn(f.grid.n1, f.grid.n2, |i, j| f.get(i, j))
}

/// Standard Wiener sheet: i.i.d. `N(0, h1·h2)` cell increments.
pub fn simulate_wiener_sheet<R: Rng + ?Sized>(grid: Grid2D, rng: &mut R) -> GaussianFieldSample {
    let inc = normal_matrix(rng, grid.n1, grid.n2, grid.cell_area().sqrt());
    GaussianFieldSample::from_increments(field_from_matrix(grid, Placement::Node, &inc))
}

/// `γ_H` at the corners `t_1, …, t_n` of one axis.
pub fn fbm_covariance_matrix(hurst: f64, extent: f64, n: usize) -> DMatrix<f64> {
    let h = extent / n as f64;
    DMatrix::from_fn(n, n, |a, b| fbm_cov(hurst, (a + 1) as f64 * h, (b + 1) as f64 * h))
}

/// Lower Cholesky factor with one jitter retry of `1e−12·trace/n`.
pub fn cholesky_with_jitter(cov: DMatrix<f64>) -> Result<DMatrix<f64>, GaussError> {
    let n = cov.nrows();
    if let Some(c) = cov.clone().cholesky() {
        return Ok(c.l());
    }
    let jitter = 1e-12 * cov.trace() / n as f64;
    let mut cov = cov;
    for d in 0..n {
        cov[(d, d)] += jitter;
    }
    cov.cholesky().map(|c| c.l()).ok_or(GaussError::Factorization(n))
}

/// Exact-in-law fractional Brownian sheet sampler from the Kronecker
/// factorization `Γ_α ⊗ Γ_β = (L_α ⊗ L_β)(L_α ⊗ L_β)ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FbsCholesky {
    pub grid: Grid2D,
    pub hurst: HurstPair,
    pub l1: DMatrix<f64>,
    pub l2: DMatrix<f64>,
}

impl FbsCholesky {
    pub fn new(grid: Grid2D, hurst: HurstPair) -> Result<Self, GaussError> {
        let l1 = cholesky_with_jitter(fbm_covariance_matrix(hurst.alpha, grid.t1, grid.n1))?;
        let l2 = cholesky_with_jitter(fbm_covariance_matrix(hurst.beta, grid.t2, grid.n2))?;
        Ok(FbsCholesky { grid, hurst, l1, l2 })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GaussianFieldSample {
        let z = normal_matrix(rng, self.grid.n1, self.grid.n2, 1.0);
        let b = &self.l1 * z * self.l2.transpose();
        GaussianFieldSample::from_cumulative(field_from_matrix(self.grid, Placement::Corner, &b))
    }
}

pub fn simulate_fbs_cholesky<R: Rng + ?Sized>(
    grid: Grid2D,
    hurst: HurstPair,
    rng: &mut R,
) -> Result<GaussianFieldSample, GaussError> {
    Ok(FbsCholesky::new(grid, hurst)?.sample(rng))
}

fn check_grid(cache: &KernelCache, grid: &Grid2D) -> Result<(), GaussError> {
    if cache.grid != *grid {
        return Err(GaussError::Shape(format!("kernels for {:?}, field on {:?}", cache.grid, grid)));
    }
    Ok(())
}

/// `B_z = Σ_cells K_α(z1, cell) K_β(z2, cell) ΔW(cell)` over the cells of `R_z`.
pub fn simulate_fbs_kernel(wiener: &GaussianFieldSample, cache: &KernelCache) -> Result<GaussianFieldSample, GaussError> {
    check_grid(cache, &wiener.grid)?;
    let dw = matrix_from_field(&wiener.increments);
    let b = &cache.axis1.k * dw * cache.axis2.k.transpose();
    Ok(GaussianFieldSample::from_cumulative(field_from_matrix(wiener.grid, Placement::Corner, &b)))
}

/// `W^Y_z = Σ_cells K_α^{-1}(z1, cell) K_β^{-1}(z2, cell) ΔY(cell)` over the
/// cells of `R_z`, from a cumulative field `Y`.
pub fn whiten(cumulative: &Field2D, cache: &KernelCache) -> Result<GaussianFieldSample, GaussError> {
    check_grid(cache, &cumulative.grid)?;
    let dy = matrix_from_field(&increments_from_cumulative(cumulative));
    let w = &cache.axis1.k_inv * dy * cache.axis2.k_inv.transpose();
    Ok(GaussianFieldSample::from_cumulative(field_from_matrix(cumulative.grid, Placement::Corner, &w)))
}

/// Covariance of the one-axis fBm cell increments on `n` cells.
pub fn fbm_increment_covariance(hurst: f64, extent: f64, n: usize) -> DMatrix<f64> {
    let h = extent / n as f64;
    let p = |x: f64| x.abs().powf(2.0 * hurst);
    DMatrix::from_fn(n, n, |c, d| {
        let (c, d) = (c as f64, d as f64);
        0.5 * h.powf(2.0 * hurst) * (p(c + 1.0 - d) + p(c - d - 1.0) - 2.0 * p(c - d))
    })
}

/// Exact covariance, at the corners of one axis, of the whitened fBm
/// produced by the discrete [`whiten`] map.
pub fn whitened_covariance_axis(axis: &AxisKernels) -> DMatrix<f64> {
    let s = fbm_increment_covariance(axis.hurst, axis.h * axis.n as f64, axis.n);
    &axis.k_inv * s * axis.k_inv.transpose()
}

/// Exact covariance, at the corners of one axis, of the discrete
/// kernel-route fBm of [`simulate_fbs_kernel`].
pub fn kernel_route_covariance_axis(axis: &AxisKernels) -> DMatrix<f64> {
    &axis.k * axis.k.transpose() * axis.h
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constants_match_closed_forms() {
        for h in [0.55, 0.6, 0.7, 0.8, 0.95] {
            let direct = (gamma(2.0 - 2.0 * h) / (2.0 * h * gamma(1.5 - h) * gamma(h + 0.5))).sqrt() / gamma(1.5 - h);
            assert!((c_prime(h) - direct).abs() < 1e-14);
            assert!((c_prime(h) * c_star(h) * gamma(1.5 - h) - 1.0).abs() < 1e-12);
        }
        assert!((c_h(0.5) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn half_kernels_are_one() {
        for (t, s) in [(1.0, 0.5), (2.0, 0.1), (0.3, 0.29)] {
            assert_eq!(kernel_k(0.5, t, s).unwrap(), 1.0);
            assert_eq!(kernel_k_inv(0.5, t, s).unwrap(), 1.0);
        }
    }

    #[test]
    fn kernel_domain_errors() {
        assert!(kernel_k(0.7, 1.0, 1.0).is_err());
        assert!(kernel_k(0.7, 1.0, 0.0).is_err());
        assert!(kernel_k_inv(0.7, 0.5, 0.6).is_err());
    }

    #[test]
    fn kernel_two_representations_agree() {
        let direct = kernel_k(0.7, 1.0, 0.5).unwrap();
        let frac = kernel_k_fractional(0.7, 1.0, 0.5, 4001).unwrap();
        assert!((direct - frac).abs() / direct < 2e-3, "{direct} {frac}");
        for &h in &[0.6, 0.8] {
            for &s in &[0.2, 0.5, 0.9] {
                let d = kernel_k_inv(h, 1.0, s).unwrap();
                let f = kernel_k_inv_fractional(h, 1.0, s, 4001).unwrap();
                assert!((d - f).abs() < 5e-3 * d.abs().max(1.0), "H={h} s={s}: {d} vs {f}");
            }
        }
    }

    #[test]
    fn kernel_increasing_in_t() {
        let s = 0.2;
        let mut prev = 0.0;
        for k in 1..60 {
            let t = s + 0.02 * k as f64;
            let v = kernel_k(0.7, t, s).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn inverse_kernel_finite_and_sign() {
        // Near the origin the logarithmic term dominates and the inverse
        // kernel changes sign; it is positive for s ≥ t/10.
        for k in 1..200 {
            let s = k as f64 / 200.0;
            let v = kernel_k_inv(0.8, 1.0, s).unwrap();
            assert!(v.is_finite());
            if s >= 0.1 {
                assert!(v > 0.0, "s={s} v={v}");
            }
        }
        assert!(kernel_k_inv(0.8, 1.0, 1e-3).unwrap() < 0.0);
    }

    #[test]
    fn cell_integrals_match_quadrature() {
        for &h in &[0.6, 0.75, 0.9] {
            for &(t, lo, hi) in &[(1.0, 0.0, 0.1), (1.0, 0.3, 0.4), (0.7, 0.6, 0.7), (2.0, 0.05, 1.9)] {
                let clamp = |s: f64| s.clamp(1e-300, t * (1.0 - 1e-15));
                let qk = quad::integrate(|s| kernel_k(h, t, clamp(s)).unwrap(), lo, hi, 1e-12, 1e-10).value;
                let qi = quad::integrate(|s| kernel_k_inv(h, t, clamp(s)).unwrap(), lo, hi, 1e-12, 1e-10).value;
                let ck = cell_integral_k(h, t, lo, hi);
                let ci = cell_integral_k_inv(h, t, lo, hi);
                assert!((ck - qk).abs() < 1e-7, "K H={h} ({t},{lo},{hi}): {ck} vs {qk}");
                assert!((ci - qi).abs() < 1e-7, "Kinv H={h} ({t},{lo},{hi}): {ci} vs {qi}");
            }
        }
    }

    #[test]
    fn kernel_reproduces_fbm_variance() {
        // ∫_0^t K_H(t, s)^2 ds = t^{2H}: checked through fine cell averages.
        let axis = AxisKernels::new(0.7, 1.0, 400);
        let var: f64 = (0..400).map(|c| axis.k[(399, c)].powi(2)).sum::<f64>() * axis.h;
        assert!((var - 1.0).abs() < 2e-2, "{var}");
    }

    #[test]
    fn fbm_covariance_examples() {
        assert!((fbm_cov(0.7, 1.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((fbm_cov(0.7, 1.0, 2.0) - 0.5 * 2f64.powf(1.4)).abs() < 1e-14);
    }

    #[test]
    fn wiener_cell_variance() {
        let g = Grid2D::new(1.0, 2.0, 4, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 4000;
        let mut acc = 0.0;
        for _ in 0..n {
            let w = simulate_wiener_sheet(g, &mut rng);
            acc += w.increments.values.iter().map(|v| v * v).sum::<f64>();
        }
        let var = acc / (n * g.cells()) as f64;
        let area = g.cell_area();
        assert!((var - area).abs() < 5.0 * area * (2.0 / (n * g.cells()) as f64).sqrt());
    }

    #[test]
    fn half_hurst_kernel_route_is_identity() {
        let g = Grid2D::unit(6);
        let cache = KernelCache::new(g, HurstPair::formal(0.5, 0.5).unwrap());
        let w = simulate_wiener_sheet(g, &mut ChaCha8Rng::seed_from_u64(1));
        let b = simulate_fbs_kernel(&w, &cache).unwrap();
        assert!(b.cumulative.max_abs_diff(&w.cumulative) < 1e-13);
        let back = whiten(&w.cumulative, &cache).unwrap();
        assert!(back.cumulative.max_abs_diff(&w.cumulative) < 1e-13);
    }

    #[test]
    fn zero_noise_gives_zero_field() {
        let g = Grid2D::unit(5);
        let cache = KernelCache::new(g, HurstPair::new(0.7, 0.6).unwrap());
        let zero = GaussianFieldSample::from_increments(Field2D::zeros(g, Placement::Node));
        let b = simulate_fbs_kernel(&zero, &cache).unwrap();
        assert!(b.cumulative.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn color_then_whiten_converges() {
        let mut errs = Vec::new();
        for n in [8, 16, 32] {
            let g = Grid2D::unit(n);
            let cache = KernelCache::new(g, HurstPair::new(0.6, 0.6).unwrap());
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let mut e = 0.0;
            let reps = 40;
            for _ in 0..reps {
                let w = simulate_wiener_sheet(g, &mut rng);
                let b = simulate_fbs_kernel(&w, &cache).unwrap();
                let back = whiten(&b.cumulative, &cache).unwrap();
                e += back.cumulative.max_abs_diff(&w.cumulative);
            }
            errs.push(e / reps as f64);
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn deterministic_samples() {
        let g = Grid2D::unit(6);
        let s = FbsCholesky::new(g, HurstPair::new(0.7, 0.8).unwrap()).unwrap();
        let a = s.sample(&mut ChaCha8Rng::seed_from_u64(9));
        let b = s.sample(&mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn coarsen_sums_blocks() {
        let g = Grid2D::unit(4);
        let w = simulate_wiener_sheet(g, &mut ChaCha8Rng::seed_from_u64(2));
        let c = w.coarsen(2);
        let blk = w.increments.get(2, 0) + w.increments.get(3, 0) + w.increments.get(2, 1) + w.increments.get(3, 1);
        assert!((c.increments.get(1, 0) - blk).abs() < 1e-14);
    }

    #[test]
    fn whitened_covariance_close_to_wiener() {
        let axis = AxisKernels::new(0.6, 1.0, 32);
        let c = whitened_covariance_axis(&axis);
        for a in 0..32 {
            for b in 0..32 {
                let want = ((a.min(b) + 1) as f64) * axis.h;
                assert!((c[(a, b)] - want).abs() < 5e-3, "({a},{b}) {} vs {want}", c[(a, b)]);
            }
        }
    }
}
