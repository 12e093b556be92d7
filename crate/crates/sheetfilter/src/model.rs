//! Signal SDE on the plane, the observation field, the δ-transform and the
//! likelihood ratio `V_z`.
//!
//! The signal lives on the corner lattice. "X at a node" means the value at
//! the low corner of that node's cell, which is what the Euler sweep uses.

use crate::fraccalc::{derivative_weights, rl_derivative_left, tensor_apply, FracError, Grid1D, SampledFn1D};
use crate::gaussfield::{c_star, simulate_wiener_sheet, whiten, FbsCholesky, GaussError, GaussianFieldSample, HurstPair, KernelCache};
use crate::lattice::{Field2D, Grid2D, LatticeError, Placement};
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("signal blew up at cell ({i}, {j})")]
    BlowUp { i: usize, j: usize },
    #[error("sensor Hölder order λ={lambda} violates λ > 2·max(α,β) − 1 = {bound}")]
    HolderCondition { lambda: f64, bound: f64 },
    #[error(transparent)]
    Frac(#[from] FracError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error("non-finite δ value at node ({0}, {1})")]
    NonFiniteDelta(usize, usize),
}

/// Named scalar functions with analytic derivatives up to order four.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Func {
    Zero,
    Const { c: f64 },
    Linear { slope: f64, intercept: f64 },
    Sin { amp: f64, freq: f64, phase: f64 },
    Cos { amp: f64, freq: f64, phase: f64 },
}

impl Func {
    pub fn identity() -> Func {
        Func::Linear { slope: 1.0, intercept: 0.0 }
    }

    pub fn sin(amp: f64, freq: f64) -> Func {
        Func::Sin { amp, freq, phase: 0.0 }
    }

    pub fn cos(amp: f64, freq: f64) -> Func {
        Func::Cos { amp, freq, phase: 0.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.deriv(0, x)
    }

    /// Derivative of order `k` (`k = 0` is the value).
    pub fn deriv(&self, k: usize, x: f64) -> f64 {
        match *self {
            Func::Zero => 0.0,
            Func::Const { c } => {
                if k == 0 {
                    c
                } else {
                    0.0
                }
            }
            Func::Linear { slope, intercept } => match k {
                0 => slope * x + intercept,
                1 => slope,
                _ => 0.0,
            },
            Func::Sin { amp, freq, phase } => trig(amp, freq, phase, k, x),
            Func::Cos { amp, freq, phase } => trig(amp, freq, phase + std::f64::consts::FRAC_PI_2, k, x),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Func::Zero => true,
            Func::Const { c } => c == 0.0,
            Func::Linear { slope, intercept } => slope == 0.0 && intercept == 0.0,
            Func::Sin { amp, .. } | Func::Cos { amp, .. } => amp == 0.0,
        }
    }

    /// Largest difference quotient over a dense sample of `[lo, hi]`.
    pub fn lipschitz_estimate(&self, lo: f64, hi: f64, samples: usize) -> f64 {
        let h = (hi - lo) / samples as f64;
        (0..samples)
            .map(|k| {
                let x = lo + k as f64 * h;
                ((self.eval(x + h) - self.eval(x)) / h).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|F^{(k)}|`, `k ≤ 4`, over a dense sample of `[lo, hi]`.
    pub fn derivative_bound(&self, lo: f64, hi: f64, samples: usize) -> f64 {
        let h = (hi - lo) / samples as f64;
        (0..=samples)
            .flat_map(|s| (0..=4).map(move |k| (k, lo + s as f64 * h)))
            .map(|(k, x)| self.deriv(k, x).abs())
            .fold(0.0, f64::max)
    }
}

fn trig(amp: f64, freq: f64, phase: f64, k: usize, x: f64) -> f64 {
    // d^k/dx^k sin(ωx+φ) = ω^k sin(ωx + φ + kπ/2)
    amp * freq.powi(k as i32) * (freq * x + phase + k as f64 * std::f64::consts::FRAC_PI_2).sin()
}

/// Drift `𝔞`, diffusion `𝔟` and a realized initial value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeCoefficients {
    pub drift: Func,
    pub diffusion: Func,
    pub x0: f64,
}

impl SdeCoefficients {
    /// Sup of the Lipschitz quotients of `𝔞` and `𝔟` on `[lo, hi]`.
    pub fn lipschitz_constant(&self, lo: f64, hi: f64) -> f64 {
        self.drift.lipschitz_estimate(lo, hi, 2000) + self.diffusion.lipschitz_estimate(lo, hi, 2000)
    }
}

/// Law of the initial value `x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum X0Law {
    Fixed { value: f64 },
    Normal { mean: f64, sd: f64 },
}

impl X0Law {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            X0Law::Fixed { value } => value,
            X0Law::Normal { mean, sd } => {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                mean + sd * z
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            X0Law::Fixed { value } => value,
            X0Law::Normal { mean, .. } => mean,
        }
    }

    pub fn sd(&self) -> f64 {
        match *self {
            X0Law::Fixed { .. } => 0.0,
            X0Law::Normal { sd, .. } => sd,
        }
    }
}

/// Drift, diffusion and initial law of the signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalModel {
    pub drift: Func,
    pub diffusion: Func,
    pub x0: X0Law,
}

impl SignalModel {
    pub fn coefficients(&self, x0: f64) -> SdeCoefficients {
        SdeCoefficients { drift: self.drift, diffusion: self.diffusion, x0 }
    }

    /// One signal path: `x0` is drawn first, then the driving sheet.
    pub fn sample<R: Rng + ?Sized>(&self, grid: Grid2D, rng: &mut R) -> Result<(SignalField, GaussianFieldSample), ModelError> {
        let x0 = self.x0.draw(rng);
        let w = simulate_wiener_sheet(grid, rng);
        Ok((simulate_signal(&self.coefficients(x0), &w)?, w))
    }
}

/// Sensor `g` with its declared Hölder order `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFunction {
    pub g: Func,
    pub holder_order: f64,
}

impl SensorFunction {
    /// Enforces `λ > 2·max(α, β) − 1`.
    pub fn new(g: Func, holder_order: f64, hurst: &HurstPair) -> Result<Self, ModelError> {
        let bound = 2.0 * hurst.alpha.max(hurst.beta) - 1.0;
        if !(holder_order > bound) {
            return Err(ModelError::HolderCondition { lambda: holder_order, bound });
        }
        Ok(SensorFunction { g, holder_order })
    }

    /// Largest `|g(x)−g(y)|/|x−y|^λ` over `pairs` random pairs in `[lo, hi]`.
    pub fn holder_quotient<R: Rng + ?Sized>(&self, lo: f64, hi: f64, pairs: usize, rng: &mut R) -> f64 {
        (0..pairs)
            .map(|_| {
                let x = rng.random_range(lo..hi);
                let y = rng.random_range(lo..hi);
                if x == y {
                    0.0
                } else {
                    (self.g.eval(x) - self.g.eval(y)).abs() / (x - y).abs().powf(self.holder_order)
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Signal values on the `(n1+1) × (n2+1)` corner lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalField {
    pub grid: Grid2D,
    pub corners: Vec<f64>,
}

impl SignalField {
    pub fn constant(grid: Grid2D, x0: f64) -> Self {
        SignalField { grid, corners: vec![x0; (grid.n1 + 1) * (grid.n2 + 1)] }
    }

    #[inline]
    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.corners[a * (self.grid.n2 + 1) + b]
    }

    /// `X` at every node, i.e. at the low corner of each cell.
    pub fn node_values(&self) -> Field2D {
        Field2D::from_fn(self.grid, Placement::Node, |i, j| self.at(i, j))
    }

    /// `X` at the upper-right corner of each cell, as a corner-placed field.
    pub fn corner_values(&self) -> Field2D {
        Field2D::from_fn(self.grid, Placement::Corner, |i, j| self.at(i + 1, j + 1))
    }

    /// Subsampled lattice of a grid with `factor` times fewer cells.
    pub fn coarsen(&self, factor: usize) -> SignalField {
        let g = self.grid;
        let cg = Grid2D { t1: g.t1, t2: g.t2, n1: g.n1 / factor, n2: g.n2 / factor };
        let mut corners = Vec::with_capacity((cg.n1 + 1) * (cg.n2 + 1));
        for a in 0..=cg.n1 {
            for b in 0..=cg.n2 {
                corners.push(self.at(a * factor, b * factor));
            }
        }
        SignalField { grid: cg, corners }
    }
}

/// Explicit Euler sweep in lexicographic order:
/// `X(a+1,b+1) = X(a+1,b) + X(a,b+1) − X(a,b) + 𝔞(X(a,b))·area + 𝔟(X(a,b))·ΔW(a,b)`,
/// with `X = x0` on both axes.
pub fn simulate_signal(coeffs: &SdeCoefficients, wiener: &GaussianFieldSample) -> Result<SignalField, ModelError> {
    let g = wiener.grid;
    let area = g.cell_area();
    let mut x = SignalField::constant(g, coeffs.x0);
    if coeffs.drift.is_zero() && coeffs.diffusion.is_zero() {
        return Ok(x);
    }
    let stride = g.n2 + 1;
    for i in 0..g.n1 {
        for j in 0..g.n2 {
            let low = x.corners[i * stride + j];
            let u = coeffs.drift.eval(low) * area + coeffs.diffusion.eval(low) * wiener.increments.get(i, j);
            let v = x.corners[(i + 1) * stride + j] + x.corners[i * stride + j + 1] - low + u;
            if !v.is_finite() {
                return Err(ModelError::BlowUp { i, j });
            }
            x.corners[(i + 1) * stride + j + 1] = v;
        }
    }
    Ok(x)
}

/// `g*_z = z1^{½−α} z2^{½−β} g(X_z)` at every node.
pub fn g_star(x_nodes: &Field2D, g: &Func, hurst: &HurstPair) -> Field2D {
    let grid = x_nodes.grid;
    Field2D::from_fn(grid, Placement::Node, |i, j| {
        let z = grid.node(i, j);
        z.z1.powf(0.5 - hurst.alpha) * z.z2.powf(0.5 - hurst.beta) * g.eval(x_nodes.get(i, j))
    })
}

/// δ values at the nodes with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaField {
    pub values: Field2D,
    /// Discrete `L²` norm `(Σ δ²·area)^{1/2}`.
    pub l2_norm: f64,
    pub warnings: Vec<String>,
}

fn delta_axis_op(order: f64, stability_tol: f64, warn: &std::cell::RefCell<Vec<String>>) -> impl Fn(&SampledFn1D) -> Result<SampledFn1D, FracError> + '_ {
    move |f: &SampledFn1D| {
        if order.abs() < 1e-14 {
            return Ok(f.clone());
        }
        let d = rl_derivative_left(f, order)?;
        if !d.is_stable(stability_tol) {
            warn.borrow_mut().push(format!(
                "fractional derivative of order {order} unstable under refinement (gap {:?})",
                d.refinement_gap
            ));
        }
        Ok(d.values)
    }
}

/// `δ_z = (c_α^* c_β^*)^{-1} z1^{α−½} z2^{β−½} (D^{α−½} ⊗ D^{β−½} g*)(z)`.
///
/// Derivative instabilities larger than `stability_tol` are reported in
/// [`DeltaField::warnings`].
pub fn delta_2d(x_nodes: &Field2D, g: &Func, hurst: &HurstPair, stability_tol: f64) -> Result<DeltaField, ModelError> {
    let grid = x_nodes.grid;
    let gs = g_star(x_nodes, g, hurst);
    let warn = std::cell::RefCell::new(Vec::new());
    let op1 = delta_axis_op(hurst.alpha - 0.5, stability_tol, &warn);
    let op2 = delta_axis_op(hurst.beta - 0.5, stability_tol, &warn);
    let dd = tensor_apply(&op1, &op2, &gs)?;
    drop((op1, op2));
    let scale = 1.0 / (c_star(hurst.alpha) * c_star(hurst.beta));
    let values = Field2D::from_fn(grid, Placement::Node, |i, j| {
        let z = grid.node(i, j);
        scale * z.z1.powf(hurst.alpha - 0.5) * z.z2.powf(hurst.beta - 0.5) * dd.get(i, j)
    });
    finish_delta(values, warn.into_inner())
}

fn finish_delta(values: Field2D, mut warnings: Vec<String>) -> Result<DeltaField, ModelError> {
    let g = values.grid;
    for i in 0..g.n1 {
        for j in 0..g.n2 {
            if !values.get(i, j).is_finite() {
                return Err(ModelError::NonFiniteDelta(i, j));
            }
        }
    }
    warnings.dedup();
    let l2_norm = (values.values.iter().map(|v| v * v).sum::<f64>() * g.cell_area()).sqrt();
    Ok(DeltaField { values, l2_norm, warnings })
}

/// 1D δ-transform `δ_h(s) = (c_H^*)^{-1} s^{H−½} (D^{H−½} v^{½−H} h(v))(s)`.
pub fn delta_1d(h: &SampledFn1D, hurst: f64) -> Result<SampledFn1D, ModelError> {
    let g = hurst - 0.5;
    let nodes = h.grid.nodes();
    if g.abs() < 1e-14 {
        return Ok(h.clone());
    }
    let star = SampledFn1D::new(h.grid, nodes.iter().zip(&h.values).map(|(s, v)| s.powf(-g) * v).collect());
    let d = rl_derivative_left(&star, g)?;
    let c = c_star(hurst);
    Ok(SampledFn1D::new(h.grid, nodes.iter().zip(&d.values.values).map(|(s, v)| s.powf(g) * v / c).collect()))
}

/// Precomputed linear map `g(X) ↦ δ` for repeated evaluation:
/// `δ = A_1 G A_2ᵀ` with `A[i][k] = (c^*)^{-1} s_i^{γ} c_{i−k} s_k^{−γ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTransform {
    pub grid: Grid2D,
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
}

fn delta_axis_matrix(axis: Grid1D, hurst: f64) -> DMatrix<f64> {
    let g = hurst - 0.5;
    let n = axis.n;
    if g.abs() < 1e-14 {
        return DMatrix::identity(n, n);
    }
    let w = derivative_weights(&axis, g);
    let c = c_star(hurst);
    DMatrix::from_fn(n, n, |i, k| if k <= i { axis.node(i).powf(g) * w[i - k] * axis.node(k).powf(-g) / c } else { 0.0 })
}

impl DeltaTransform {
    pub fn new(grid: Grid2D, hurst: &HurstPair) -> Self {
        DeltaTransform { grid, a1: delta_axis_matrix(grid.axis1(), hurst.alpha), a2: delta_axis_matrix(grid.axis2(), hurst.beta) }
    }

    /// δ for a node field `X` and sensor `g`.
    pub fn apply(&self, x_nodes: &Field2D, g: &Func) -> Field2D {
        let grid = self.grid;
        let gm = DMatrix::from_fn(grid.n1, grid.n2, |i, j| g.eval(x_nodes.get(i, j)));
        let d = &self.a1 * gm * self.a2.transpose();
        Field2D::from_fn(grid, Placement::Node, |i, j| d[(i, j)])
    }
}

/// `Y_z = Σ_{cells of R_z} g(X at node)·area + B_z`.
pub fn make_observation(x_nodes: &Field2D, g: &Func, noise: &GaussianFieldSample) -> Result<GaussianFieldSample, ModelError> {
    x_nodes.same_grid(&noise.increments)?;
    let area = x_nodes.grid.cell_area();
    let inc = Field2D::from_fn(x_nodes.grid, Placement::Node, |i, j| {
        g.eval(x_nodes.get(i, j)) * area + noise.increments.get(i, j)
    });
    Ok(GaussianFieldSample::from_increments(inc))
}

/// One realization of the truth and of what is observed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedObservation {
    pub signal: SignalField,
    pub wiener: GaussianFieldSample,
    /// Fractional sheet noise `B`.
    pub noise: GaussianFieldSample,
    pub y: GaussianFieldSample,
    /// Whitened observation `W^Y = ∫ K^{-1} dY`.
    pub wy: GaussianFieldSample,
    /// Whitened noise `W^B`.
    pub wb: GaussianFieldSample,
}

/// Signal from `signal_rng`, fractional noise from `noise_rng`.
pub fn simulate_observation<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    model: &SignalModel,
    g: &Func,
    cache: &KernelCache,
    fbs: &FbsCholesky,
    signal_rng: &mut R1,
    noise_rng: &mut R2,
) -> Result<SimulatedObservation, ModelError> {
    let (signal, wiener) = model.sample(cache.grid, signal_rng)?;
    let noise = fbs.sample(noise_rng);
    let y = make_observation(&signal.node_values(), g, &noise)?;
    let wy = whiten(&y.cumulative, cache)?;
    let wb = whiten(&noise.cumulative, cache)?;
    Ok(SimulatedObservation { signal, wiener, noise, y, wy, wb })
}

/// `log V_z` at every corner.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodState {
    pub log_v: Field2D,
}

impl LikelihoodState {
    pub fn log_v_at(&self, a: usize, b: usize) -> f64 {
        self.log_v.at_corner(a, b)
    }

    /// `log V_z^{-1}` at corner `(a, b)`.
    pub fn log_v_inv_at(&self, a: usize, b: usize) -> f64 {
        -self.log_v.at_corner(a, b)
    }
}

fn accumulate_log_v(delta: &Field2D, dw: &Field2D, sign_quadratic: f64) -> LikelihoodState {
    let area = delta.grid.cell_area();
    let cell = Field2D::from_fn(delta.grid, Placement::Node, |i, j| {
        let d = delta.get(i, j);
        -d * dw.get(i, j) + sign_quadratic * 0.5 * d * d * area
    });
    LikelihoodState { log_v: crate::lattice::cumulative_from_increments(&cell) }
}

/// Observation form: `log V_z = −Σ δ ΔW^Y + ½ Σ δ²·area` over `R_z`.
pub fn likelihood(delta: &Field2D, wy: &GaussianFieldSample) -> Result<LikelihoodState, ModelError> {
    delta.same_grid(&wy.increments)?;
    Ok(accumulate_log_v(delta, &wy.increments, 1.0))
}

/// Noise form: `log V_z = −Σ δ ΔW^B − ½ Σ δ²·area` over `R_z`.
pub fn likelihood_noise_form(delta: &Field2D, wb: &GaussianFieldSample) -> Result<LikelihoodState, ModelError> {
    delta.same_grid(&wb.increments)?;
    Ok(accumulate_log_v(delta, &wb.increments, -1.0))
}
