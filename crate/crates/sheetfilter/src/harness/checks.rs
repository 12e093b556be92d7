//! The property and convergence suite. Each check is self-calibrating:
//! statistical parts compare against `k` standard errors (`k` from the
//! config), deterministic parts against fixed error targets.

use super::config::ExperimentConfig;
use super::rng::stream;
use crate::filter::{
    bayes_filter_at, cond_exp_identities_check, dmz_2d_residual, zakai_curve_integrate, DmzResidual, FilterError, ParticleEnsemble,
};
use crate::fraccalc::{relative_sup_error, rl_derivative_left, rl_integral_left, rl_integral_right, FracError, Grid1D, SampledFn1D};
use crate::gaussfield::{
    cell_integral_k, fbm_cov, kernel_route_covariance_axis, simulate_fbs_kernel, simulate_wiener_sheet, whiten, whitened_covariance_axis,
    FbsCholesky, GaussError, GaussianFieldSample, HurstPair, KernelCache,
};
use crate::lattice::{Field2D, Grid2D, Placement};
use crate::model::{delta_1d, simulate_observation, DeltaTransform, Func, ModelError, SignalModel, X0Law};
use serde::Serialize;
use serde_json::{json, Value};
use statrs::function::gamma::gamma;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckLevel {
    Fast,
    Full,
}

impl CheckLevel {
    /// Monte Carlo sample size for a check whose full size is `n`.
    pub fn samples(self, n: usize) -> usize {
        match self {
            CheckLevel::Full => n,
            CheckLevel::Fast => (n / 4).max(10),
        }
    }
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Frac(#[from] FracError),
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// One sub-assertion: `value ≤ bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckPart {
    pub label: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    /// Largest `value / bound` over the parts.
    pub statistic: f64,
    pub threshold: f64,
    pub parts: Vec<CheckPart>,
    pub details: Value,
}

impl CheckResult {
    fn new(id: u32, name: &str, parts: Vec<CheckPart>, details: Value) -> Self {
        let passed = !parts.is_empty() && parts.iter().all(|p| p.passed);
        let statistic = parts.iter().map(|p| if p.bound > 0.0 { p.value / p.bound } else if p.value <= 0.0 { 0.0 } else { f64::INFINITY }).fold(0.0, f64::max);
        CheckResult { id, name: name.into(), passed, statistic, threshold: 1.0, parts, details }
    }

    pub fn summary_line(&self) -> String {
        let worst = self.parts.iter().filter(|p| !p.passed).map(|p| p.label.as_str()).next().unwrap_or("-");
        format!(
            "[{}] {:>2} {:<34} worst value/bound = {:.3} ({} parts{})",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.statistic,
            self.parts.len(),
            if self.passed { String::new() } else { format!(", first failing: {worst}") }
        )
    }
}

fn part(label: impl Into<String>, value: f64, bound: f64) -> CheckPart {
    CheckPart { label: label.into(), value, bound, passed: value <= bound }
}

/// `value` must strictly decrease along `errs`.
fn decreasing(label: &str, errs: &[f64]) -> CheckPart {
    let worst = errs.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    CheckPart { label: format!("{label}: max error ratio under refinement"), value: worst, bound: 1.0, passed: worst < 1.0 }
}

/// Smallest `log2(e_n / e_{2n})`.
fn min_order(errs: &[f64]) -> f64 {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min)
}

pub struct CheckContext<'a> {
    pub config: &'a ExperimentConfig,
    pub level: CheckLevel,
}

impl CheckContext<'_> {
    fn k(&self) -> f64 {
        self.config.tolerances.sigma_multiplier
    }

    fn seed(&self) -> u64 {
        self.config.seeds.master
    }

    fn levels(&self) -> &[usize] {
        &self.config.tolerances.refinement_levels
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn se(v: &[f64]) -> f64 {
    let m = mean(v);
    let n = v.len() as f64;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0) / n).sqrt()
}

// ---------------------------------------------------------------- criterion 1

/// Power-function identities `I^α t^μ`, `I^α_{1−} (1−t)^μ` and `D^α t^μ`
/// against the Beta oracle. Derivative cases keep `μ − α ≥ ½`; the
/// borderline `μ = α`, where the first cell carries an error that does not
/// shrink with `h`, is reported as a diagnostic only.
pub fn check_power_oracles(ctx: &CheckContext) -> Result<CheckResult, CheckError> {
    #[derive(Clone, Copy)]
    enum Op {
        Left,
        Right,
        Deriv,
    }
    let levels = ctx.levels().to_vec();
    let run = |op: Op, alpha: f64, mu: f64| -> Result<(String, Vec<f64>), CheckError> {
        let label = match op {
            Op::Left => format!("I^{alpha} t^{mu}"),
            Op::Right => format!("I_(1-)^{alpha} (1-t)^{mu}"),
            Op::Deriv => format!("D^{alpha} t^{mu}"),
        };
        let mut errs = Vec::new();
        for &n in &levels {
            let grid = Grid1D::new(0.0, 1.0, n);
            let nodes = grid.nodes();
            let (approx, exact): (Vec<f64>, Vec<f64>) = match op {
                Op::Left => {
                    let c = gamma(mu + 1.0) / gamma(mu + alpha + 1.0);
                    let f = SampledFn1D::from_fn(grid, |t| t.powf(mu));
                    (rl_integral_left(&f, alpha)?.values, nodes.iter().map(|t| c * t.powf(mu + alpha)).collect())
                }
                Op::Right => {
                    let c = gamma(mu + 1.0) / gamma(mu + alpha + 1.0);
                    let f = SampledFn1D::from_fn(grid, |t| (1.0 - t).powf(mu));
                    (rl_integral_right(&f, alpha)?.values, nodes.iter().map(|t| c * (1.0 - t).powf(mu + alpha)).collect())
                }
                Op::Deriv => {
                    let c = gamma(mu + 1.0) / gamma(mu - alpha + 1.0);
                    let f = SampledFn1D::from_fn(grid, |t| t.powf(mu));
                    (rl_derivative_left(&f, alpha)?.values.values, nodes.iter().map(|t| c * t.powf(mu - alpha)).collect())
                }
            };
            errs.push(relative_sup_error(&approx, &exact));
        }
        Ok((label, errs))
    };
    let cases = [
        (Op::Left, 0.3, 0.5),
        (Op::Left, 0.7, 1.0),
        (Op::Left, 0.5, 2.0),
        (Op::Right, 0.3, 0.5),
        (Op::Right, 0.6, 1.0),
        (Op::Deriv, 0.3, 0.8),
        (Op::Deriv, 0.6, 2.0),
        (Op::Deriv, 0.5, 1.5),
        (Op::Deriv, 0.2, 1.0),
    ];
    let mut parts = Vec::new();
    let mut table = Vec::new();
    for (op, alpha, mu) in cases {
        let (label, errs) = run(op, alpha, mu)?;
        parts.push(part(format!("{label}: relative sup-error at n={}", levels[levels.len() - 1]), *errs.last().unwrap(), 1e-2));
        parts.push(decreasing(&label, &errs));
        table.push(json!({"case": label, "n": levels, "error": errs}));
    }
    let (label, errs) = run(Op::Deriv, 0.5, 0.5)?;
    let diagnostic = json!({"case": label, "n": levels, "error": errs});
    Ok(CheckResult::new(1, "fractional power-function oracles", parts, json!({ "table": table, "borderline_diagnostic": diagnostic })))
}

// ---------------------------------------------------------------- criterion 2

/// Semigroup and integration-by-parts laws in a halving study.
pub fn check_algebraic_laws(ctx: &CheckContext) -> Result<CheckResult, CheckError> {
    let levels = ctx.levels().to_vec();
    let top = levels[levels.len() - 1];
    let mut parts = Vec::new();
    let mut table = Vec::new();
    for (a, b) in [(0.2, 0.2), (0.3, 0.4), (0.5, 0.5), (0.7, 0.2)] {
        // φ = sin t, both sides discretized on the same grid
        let mut law = Vec::new();
        for &n in &levels {
            let grid = Grid1D::new(0.0, 1.0, n);
            let s = SampledFn1D::from_fn(grid, f64::sin);
            let comp = rl_integral_left(&rl_integral_left(&s, b)?, a)?;
            let direct = rl_integral_left(&s, a + b)?;
            law.push(relative_sup_error(&comp.values, &direct.values));
        }
        let label = format!("I^{a} I^{b} sin = I^{:.1} sin", a + b);
        parts.push(part(format!("{label}: relative sup-error at n={top}"), *law.last().unwrap(), 1e-2));
        parts.push(part(format!("{label}: 0.8 / min convergence order"), 0.8 / min_order(&law).max(1e-300), 1.0));
        table.push(json!({"law": label, "n": levels, "error": law, "order": min_order(&law)}));
    }
    {
        // diagnostic: with φ(0) ≠ 0 the first cell limits the rate to about α+β
        let mut law = Vec::new();
        for &n in &levels {
            let grid = Grid1D::new(0.0, 1.0, n);
            let s = SampledFn1D::from_fn(grid, |t| 1.0 + t);
            let comp = rl_integral_left(&rl_integral_left(&s, 0.4)?, 0.3)?;
            law.push(relative_sup_error(&comp.values, &rl_integral_left(&s, 0.7)?.values));
        }
        table.push(json!({"law": "diagnostic: I^0.3 I^0.4 (1+t)", "n": levels, "error": law, "order": min_order(&law)}));
    }
    for alpha in [0.3, 0.6, 0.9] {
        // ∫ φ I^α_{0+} ψ = ∫ ψ I^α_{1−} φ with φ = 1, ψ = t; both equal 1/Γ(α+3)
        let exact = 1.0 / gamma(alpha + 3.0);
        let mut el = Vec::new();
        let mut er = Vec::new();
        for &n in &levels {
            let grid = Grid1D::new(0.0, 1.0, n);
            let phi = SampledFn1D::from_fn(grid, |_| 1.0);
            let psi = SampledFn1D::from_fn(grid, |t| t);
            el.push((phi.dot(&rl_integral_left(&psi, alpha)?) - exact).abs() / exact);
            er.push((psi.dot(&rl_integral_right(&phi, alpha)?) - exact).abs() / exact);
        }
        let label = format!("integration by parts, α={alpha}");
        parts.push(part(format!("{label}: left side, 0.8 / min convergence order"), 0.8 / min_order(&el).max(1e-300), 1.0));
        parts.push(part(format!("{label}: right side, 0.8 / min convergence order"), 0.8 / min_order(&er).max(1e-300), 1.0));
        let gap = el.iter().zip(&er).map(|(l, r)| (l - r).abs()).fold(0.0, f64::max);
        parts.push(part(format!("{label}: gap between the two sides"), gap, 1e-10));
        table.push(json!({"law": label, "n": levels, "left_error": el, "right_error": er, "left_order": min_order(&el), "right_order": min_order(&er)}));
    }
    Ok(CheckResult::new(2, "semigroup and integration by parts", parts, json!({ "table": table })))
}

// ---------------------------------------------------------------- criterion 3

/// `∫_0^t K_H(t,s) δ_h(s) ds = ∫_0^t h(s) ds`.
pub fn check_kernel_delta_identity(ctx: &CheckContext) -> Result<CheckResult, CheckError> {
    let levels: Vec<usize> = ctx.levels().iter().map(|n| n / 2).collect();
    let mut parts = Vec::new();
    let mut table = Vec::new();
    for hurst in [0.6, 0.75, 0.9] {
        for (name, p) in [("s", 1.0), ("s^0.9", 0.9)] {
            let exact = 1.0 / (p + 1.0);
            let mut errs = Vec::new();
            for &n in &levels {
                let grid = Grid1D::new(0.0, 1.0, n);
                let d = delta_1d(&SampledFn1D::from_fn(grid, |s| s.powf(p)), hurst)?;
                let h = grid.h();
                let v: f64 = (0..n).map(|c| cell_integral_k(hurst, 1.0, c as f64 * h, (c + 1) as f64 * h) * d.values[c]).sum();
                errs.push((v - exact).abs() / exact);
            }
            let label = format!("H={hurst}, h={name}");
            parts.push(part(format!("{label}: relative error at n={}", levels[levels.len() - 1]), *errs.last().unwrap(), 2e-2));
            parts.push(decreasing(&label, &errs));
            table.push(json!({"case": label, "n": levels, "error": errs}));
        }
    }
    Ok(CheckResult::new(3, "kernel / delta-transform identity", parts, json!({ "table": table })))
}

// ---------------------------------------------------------------- criterion 4

const PROBES: [((usize, usize), (usize, usize)); 6] = [((8, 8), (8, 8)), ((4, 4), (8, 8)), ((2, 6), (6, 2)), ((8, 1), (1, 8)), ((3, 5), (3, 5)), ((5, 7), (7, 3))];

fn probe_moments(samples: &[GaussianFieldSample]) -> Vec<(f64, f64)> {
    PROBES
        .iter()
        .map(|&((a, b), (c, d))| {
            let v: Vec<f64> = samples.iter().map(|s| s.cumulative.at_corner(a, b) * s.cumulative.at_corner(c, d)).collect();
            (mean(&v), se(&v))
        })
        .collect()
}

/// Cholesky law against the product covariance; kernel route against
/// Cholesky with its exact discretization bias as allowance.
pub fn check_fbs_law(ctx: &CheckContext) -> Result<CheckResult, CheckError> {
    let n = ctx.level.samples(20000);
    let hp = HurstPair::new(0.7, 0.6)?;
    let grid = Grid2D::unit(8);
    let chol = FbsCholesky::new(grid, hp)?;
    let cache = KernelCache::new(grid, hp);
    let mut rc = stream(ctx.seed(), 40);
    let mut rk = stream(ctx.seed(), 41);
    let cs: Vec<_> = (0..n).map(|_| chol.sample(&mut rc)).collect();
    let ks = (0..n).map(|_| simulate_fbs_kernel(&simulate_wiener_sheet(grid, &mut rk), &cache)).collect::<Result<Vec<_>, _>>()?;
    let mc = probe_moments(&cs);
    let mk = probe_moments(&ks);
    let exact = |a: usize, b: usize, c: usize, d: usize, g: &Grid2D| {
        fbm_cov(hp.alpha, a as f64 * g.h1(), c as f64 * g.h1()) * fbm_cov(hp.beta, b as f64 * g.h2(), d as f64 * g.h2())
    };
    let route_bias = |g: Grid2D, f: usize| {
        let kc = KernelCache::new(g, hp);
        let (c1, c2) = (kernel_route_covariance_axis(&kc.axis1), kernel_route_covariance_axis(&kc.axis2));
        PROBES
            .iter()
            .map(|&((a, b), (c, d))| {
                let (a, b, c, d) = (a * f, b * f, c * f, d * f);
                (c1[(a - 1, c - 1)] * c2[(b - 1, d - 1)] - exact(a, b, c, d, &g)).abs()
            })
            .collect::<Vec<f64>>()
    };
    let bias8 = route_bias(grid, 1);
    let bias16 = route_bias(Grid2D::unit(16), 2);
    let k = ctx.k();
    let mut parts = Vec::new();
    let mut rows = Vec::new();
    for (p, &((a, b), (c, d))) in PROBES.iter().enumerate() {
        let ex = exact(a, b, c, d, &grid);
        parts.push(part(format!("cholesky cov {:?}-{:?}: |emp − exact| vs {k} SE", (a, b), (c, d)), (mc[p].0 - ex).abs(), k * mc[p].1));
        let comb = (mc[p].1.powi(2) + mk[p].1.powi(2)).sqrt();
        parts.push(part(format!("kernel vs cholesky {:?}-{:?}: |Δ| vs {k} SE + bias", (a, b), (c, d)), (mk[p].0 - mc[p].0).abs(), k * comb + bias8[p]));
        rows.push(json!({"pair": [[a, b], [c, d]], "exact": ex, "cholesky": mc[p].0, "cholesky_se": mc[p].1, "kernel": mk[p].0, "kernel_se": mk[p].1, "kernel_bias_8": bias8[p], "kernel_bias_16": bias16[p]}));
    }
    let b8 = bias8.iter().copied().fold(0.0, f64::max);
    let b16 = bias16.iter().copied().fold(0.0, f64::max);
    parts.push(CheckPart { label: "kernel-route bias ratio 16×16 / 8×8".into(), value: b16 / b8, bound: 1.0, passed: b16 < b8 });
    Ok(CheckResult::new(4, "fractional Brownian sheet law", parts, json!({"samples": n, "hurst": [hp.alpha, hp.beta], "probes": rows})))
}

// ---------------------------------------------------------------- criterion 5

/// `whiten(fBs)` has the Wiener-sheet covariance `min·min`.
pub fn check_whitening(ctx: &CheckContext) -> Result<CheckResult, CheckError> {
    let n = ctx.level.samples(20000);
    let hp = HurstPair::new(0.7, 0.6)?;
    let grid = Grid2D::unit(8);
    let chol = FbsCholesky::new(grid, hp)?;
    let cache = KernelCache::new(grid, hp);
    let mut r = stream(ctx.seed(), 50);
    let ws = (0..n).map(|_| whiten(&chol.sample(&mut r).cumulative, &cache)).collect::<Result<Vec<_>, _>>()?;
    let m = probe_moments(&ws);
    let (c1, c2) = (whitened_covariance_axis(&cache.axis1), whitened_covariance_axis(&cache.axis2));
    let k = ctx.k();
    let mut parts = Vec::new();
    let mut rows = Vec::new();
    for (p, &((a, b), (c, d))) in PROBES.iter().enumerate() {
        let ex = (a.min(c) as f64 * grid.h1()) * (b.min(d) as f64 * grid.h2());
        let bias = (c1[(a - 1, c - 1)] * c2[(b - 1, d - 1)] - ex).abs();
        parts.push(part(format!("whitened cov {:?}-{:?}: |emp − min·min| vs {k} SE + bias", (a, b), (c, d)), (m[p].0 - ex).abs(), k * m[p].1 + bias));
        rows.push(json!({"pair": [[a, b], [c, d]], "exact": ex, "empirical": m[p].0, "se": m[p].1, "discretization_bias": bias}));
    }
    Ok(CheckResult::new(5, "whitening to a Wiener sheet", parts, json!({"samples": n, "probes": rows})))
}

// ---------------------------------------------------------------- criterion 6

/// `E[V_T] = 1` for the noise-form likelihood ratio.
pub fn check_likelihood_normalization(ctx: &CheckContext) -> Result<CheckResult, CheckError> {
    let n = ctx.level.samples(20000);
    let grid = Grid2D::unit(8);
    let model = SignalModel { drift: Func::Sin { amp: -0.5, freq: 1.0, phase: 0.0 }, diffusion: Func::Const { c: 0.4 }, x0: X0Law::Normal { mean: 0.5, sd: 0.5 } };
    let g = Func::sin(1.0, 1.0);
    let k = ctx.k();
    let mut parts = Vec::new();
    let mut rows = Vec::new();
    for (idx, (a, b)) in [(0.6, 0.6), (0.75, 0.55)].into_iter().enumerate() {
        let hp = HurstPair::new(a, b)?;
        let cache = KernelCache::new(grid, hp);
        let fbs = FbsCholesky::new(grid, hp)?;
        let tr = DeltaTransform::new(grid, &hp);
        let mut rs = stream(ctx.seed(), 60 + 2 * idx as u64);
        let mut rn = stream(ctx.seed(), 61 + 2 * idx as u64);
        let area = grid.cell_area();
        let mut v1 = Vec::with_capacity(n);
        let mut v2 = Vec::with_capacity(n);
        for _ in 0..n {
            let obs = simulate_observation(&model, &g, &cache, &fbs, &mut rs, &mut rn)?;
            let d = tr.apply(&obs.signal.node_values(), &g);
            let (mut l1, mut l2) = (0.0, 0.0);
            for (c, dv) in d.values.iter().enumerate() {
                l1 += -dv * obs.wb.increments.values[c] - 0.5 * dv * dv * area;
                l2 += -dv * obs.wy.increments.values[c] + 0.5 * dv * dv * area;
            }
            v1.push(l1.exp());
            v2.push(l2.exp());
        }
        let (m1, s1) = (mean(&v1), se(&v1));
        parts.push(part(format!("H=({a},{b}): |E[V_T] − 1| vs {k} SE"), (m1 - 1.0).abs(), k * s1));
        rows.push(json!({"hurst": [a, b], "mean_v": m1, "se": s1, "observation_form_mean_v": mean(&v2), "observation_form_se": se(&v2)}));
    }
    Ok(CheckResult::new(6, "likelihood normalization E[V_T] = 1", parts, json!({"samples": n, "cases": rows})))
}

// ---------------------------------------------------------------- criterion 7

/// Observation and particle ensemble for a config.
pub fn build_ensemble(cfg: &ExperimentConfig, particles: usize) -> Result<(crate::model::SimulatedObservation, ParticleEnsemble), CheckError> {
    let grid = cfg.grid();
    let hp = cfg.hurst();
    let cache = KernelCache::new(grid, hp);
    let fbs = FbsCholesky::new(grid, hp)?;
    let model = cfg.signal_model();
    let s = &cfg.seeds;
    let obs = simulate_observation(&model, &cfg.sensor.g, &cache, &fbs, &mut stream(s.master, s.signal_stream), &mut stream(s.master, s.noise_stream))?;
    let ens = ParticleEnsemble::simulate(&model, &cfg.sensor.g, hp, &obs.wy, particles, s.master, s.particle_stream_base)?;
    Ok((obs, ens))
}

/// Curve march against the Bayes formula at every node of every path.
pub fn check_filter_consistency(ctx: &CheckContext) -> Result<CheckResult, CheckError> {
    let cfg = ctx.config;
    let n = ctx.level.samples(cfg.filter.particles);
    let (_, ens) = build_ensemble(cfg, n)?;
    let f = cfg.filter.test_functions[0];
    let model = cfg.signal_model();
    let k = ctx.k();
    let mut parts = Vec::new();
    let mut paths = Vec::new();
    for spec in &cfg.filter.paths {
        let path = spec.build(cfg.grid()).map_err(FilterError::from)?;
        let tr = zakai_curve_integrate(&ens, &model.drift, &model.diffusion, &f, &path)?;
        let mut worst: (f64, f64, (usize, usize)) = (0.0, 1.0, (0, 0));
        let mut rows = Vec::new();
        for r in &tr.rows {
            let b = bayes_filter_at(&ens, &f, r.a, r.b)?;
            let diff = (r.sigma - b.sigma).abs();
            let bound = k * (r.sigma_se.powi(2) + b.sigma_se.powi(2)).sqrt();
            if r.a + r.b > 0 && diff / bound > worst.0 / worst.1 {
                worst = (diff, bound, (r.a, r.b));
            }
            rows.push(json!({"node": [r.a, r.b], "zakai": r.sigma, "bayes": b.sigma, "zakai_se": r.sigma_se, "bayes_se": b.sigma_se}));
        }
        for r in tr.rows.iter().filter(|r| r.a + r.b > 0) {
            let b = bayes_filter_at(&ens, &f, r.a, r.b)?;
            let bound = k * (r.sigma_se.powi(2) + b.sigma_se.powi(2)).sqrt();
            parts.push(part(format!("{} node ({},{}): |σ_curve − σ_bayes| vs {k} combined SE", spec.name(), r.a, r.b), (r.sigma - b.sigma).abs(), bound));
        }
        paths.push(json!({"path": spec.name(), "worst_node": [worst.2 .0, worst.2 .1], "worst_ratio": worst.0 / worst.1, "rows": rows}));
    }
    // degenerate model: every integrand vanishes, equality is exact
    let mut dcfg = cfg.clone();
    dcfg.sensor.g = Func::Zero;
    dcfg.sde.drift = Func::Zero;
    dcfg.sde.diffusion = Func::Zero;
    let (_, dens) = build_ensemble(&dcfg, n.min(1000))?;
    let mut mismatches = 0usize;
    let mut nodes = 0usize;
    for spec in &cfg.filter.paths {
        let path = spec.build(cfg.grid()).map_err(FilterError::from)?;
        let tr = zakai_curve_integrate(&dens, &Func::Zero, &Func::Zero, &f, &path)?;
        for r in &tr.rows {
            let b = bayes_filter_at(&dens, &f, r.a, r.b)?;
            nodes += 1;
            if r.sigma.to_bits() != b.sigma.to_bits() || r.pi.to_bits() != b.pi.to_bits() {
                mismatches += 1;
            }
        }
    }
    parts.push(CheckPart { label: "degenerate model: nodes where curve and Bayes differ bitwise".into(), value: mismatches as f64, bound: 0.0, passed: mismatches == 0 });
    Ok(CheckResult::new(7, "curve evolution vs Bayes formula", parts, json!({"particles": n, "paths": paths, "degenerate_nodes_checked": nodes})))
}

// ---------------------------------------------------------------- criterion 8

/// Random constant signal, linear sensor: Gaussian posterior in closed form.
pub fn check_conjugate(ctx: &CheckContext) -> Result<CheckResult, CheckError> {
    let n = ctx.level.samples(5000);
    let grid = Grid2D::unit(8);
    let hp = HurstPair::new(0.7, 0.6)?;
    let (m0, s0) = (0.5, 1.0);
    let model = SignalModel { drift: Func::Zero, diffusion: Func::Zero, x0: X0Law::Normal { mean: m0, sd: s0 } };
    let g = Func::identity();
    let cache = KernelCache::new(grid, hp);
    let fbs = FbsCholesky::new(grid, hp)?;
    let k = ctx.k();
    let mut parts = Vec::new();
    let mut rows = Vec::new();
    let tr = DeltaTransform::new(grid, &hp);
    let d1 = tr.apply(&Field2D::zeros(grid, Placement::Node), &Func::Const { c: 1.0 });
    for rep in 0..3u64 {
        let obs = simulate_observation(&model, &g, &cache, &fbs, &mut stream(ctx.seed(), 80 + rep), &mut stream(ctx.seed(), 90 + rep))?;
        let ens = ParticleEnsemble::simulate(&model, &g, hp, &obs.wy, n, ctx.seed() ^ (rep + 1), 3)?;
        let est = bayes_filter_at(&ens, &Func::identity(), grid.n1, grid.n2)?;
        let area = grid.cell_area();
        let prec = 1.0 / (s0 * s0) + d1.values.iter().map(|d| d * d * area).sum::<f64>();
        let score: f64 = d1.values.iter().zip(&obs.wy.increments.values).map(|(d, w)| d * w).sum();
        let post_mean = (m0 / (s0 * s0) + score) / prec;
        parts.push(part(format!("observation {rep}: |π_T(x) − posterior mean| vs {k} SE"), (est.pi - post_mean).abs(), k * est.se));
        rows.push(json!({"truth_x0": obs.signal.at(0, 0), "pi": est.pi, "se": est.se, "posterior_mean": post_mean, "posterior_sd": prec.powf(-0.5), "n_eff": est.n_eff}));
    }
    Ok(CheckResult::new(8, "conjugate Gaussian posterior", parts, json!({"particles": n, "cases": rows})))
}

// ---------------------------------------------------------------- criterion 9

pub struct DmzCase {
    pub coarse: DmzResidual,
    pub fine: Option<DmzResidual>,
    pub allowance: f64,
}

/// Residual at `T` on `cfg.grid()`; with `refine`, the same draws are also
/// simulated on the grid with twice as many cells per axis and the change
/// of the residual serves as discretization allowance.
pub fn dmz_case(cfg: &ExperimentConfig, f: &Func, particles: usize, refine: bool) -> Result<DmzCase, CheckError> {
    let model = cfg.signal_model();
    let top = |g: Grid2D| g.top_right();
    if !refine {
        let (_, ens) = build_ensemble(cfg, particles)?;
        let r = dmz_2d_residual(&ens, &model.drift, &model.diffusion, f, &top(cfg.grid()))?;
        return Ok(DmzCase { coarse: r, fine: None, allowance: 0.0 });
    }
    let mut fcfg = cfg.clone();
    fcfg.grid.n1 *= 2;
    fcfg.grid.n2 *= 2;
    let (obs, fine) = build_ensemble(&fcfg, particles)?;
    let cgrid = cfg.grid();
    let y8 = obs.y.coarsen(2);
    let wy8 = whiten(&y8.cumulative, &KernelCache::new(cgrid, cfg.hurst()))?;
    let coarse = fine.coarsen(2, &wy8)?;
    let rf = dmz_2d_residual(&fine, &model.drift, &model.diffusion, f, &top(fcfg.grid()))?;
    let rc = dmz_2d_residual(&coarse, &model.drift, &model.diffusion, f, &top(cgrid))?;
    Ok(DmzCase { coarse: rc, fine: Some(rf), allowance: (rc.residual - rf.residual).abs() })
}

fn dmz_json(r: &DmzResidual) -> Value {
    json!({"lhs": r.lhs, "rhs_terms": r.rhs_terms, "residual": r.residual, "se": r.se})
}

pub fn dmz_configs(base: &ExperimentConfig) -> (ExperimentConfig, ExperimentConfig) {
    let mut c = base.clone();
    c.grid = super::config::GridConfig { t1: 1.0, t2: 1.0, n1: 8, n2: 8 };
    c.hurst = super::config::HurstConfig { alpha: 0.6, beta: 0.55 };
    c.sde.drift = Func::Sin { amp: -0.3, freq: 1.0, phase: 0.0 };
    c.sde.diffusion = Func::Const { c: 0.5 };
    c.sde.x0 = X0Law::Normal { mean: 0.5, sd: 0.3 };
    let mut reduced = c.clone();
    reduced.sensor.g = Func::Zero;
    let mut full = c;
    full.sensor.g = Func::Sin { amp: 0.5, freq: 1.0, phase: 0.0 };
    full.sensor.holder_order = 1.0;
    (reduced, full)
}

/// Planar evolution equation residual: reduced (`g ≡ 0`) and full model.
pub fn check_dmz(ctx: &CheckContext) -> Result<CheckResult, CheckError> {
    let n = ctx.level.samples(5000);
    let (reduced, full) = dmz_configs(ctx.config);
    let f = Func::sin(1.0, 1.0);
    let k = ctx.k();
    let red = dmz_case(&reduced, &f, n, false)?;
    let ful = dmz_case(&full, &f, n, true)?;
    // diagnostic only: the reduced case on the same refinement ladder
    let red_ref = dmz_case(&reduced, &f, n, true)?;
    let parts = vec![
        part(format!("reduced case: |residual| vs {k} SE"), red.coarse.residual.abs(), k * red.coarse.se),
        part(format!("full case: |residual| vs {k} SE + refinement allowance"), ful.coarse.residual.abs(), k * ful.coarse.se + ful.allowance),
    ];
    Ok(CheckResult::new(
        9,
        "planar evolution equation residual",
        parts,
        json!({"particles": n, "reduced": dmz_json(&red.coarse), "full": dmz_json(&ful.coarse), "full_refined": ful.fine.as_ref().map(dmz_json), "allowance": ful.allowance,
               "reduced_ladder": {"coarse": dmz_json(&red_ref.coarse), "fine": red_ref.fine.as_ref().map(dmz_json)}}),
    ))
}

// ---------------------------------------------------------------- criterion 10

pub fn check_lemma(ctx: &CheckContext) -> Result<CheckResult, CheckError> {
    let n = ctx.level.samples(20000);
    let r = cond_exp_identities_check(ctx.seed(), Grid2D::unit(4), n);
    let mut parts: Vec<CheckPart> = r.statistics.iter().map(|s| part(format!("{}: max standardized cross-moment vs 5/√N", s.name), s.max_standardized, s.threshold)).collect();
    parts.push(part("tower identity, exhaustive 2×2", r.tower_max_diff, r.exact_tolerance));
    parts.push(part("exact conditional means of dW statistics, exhaustive 2×2", r.exact_max_cond_mean, r.exact_tolerance));
    Ok(CheckResult::new(10, "conditional-mean identities", parts, serde_json::to_value(&r).expect("report serializes")))
}

/// Grid-refinement studies.
pub fn convergence_suite(ctx: &CheckContext) -> Result<Vec<CheckResult>, CheckError> {
    Ok(vec![check_power_oracles(ctx)?, check_algebraic_laws(ctx)?, check_kernel_delta_identity(ctx)?])
}

/// Statistical invariants.
pub fn property_suite(ctx: &CheckContext) -> Result<Vec<CheckResult>, CheckError> {
    Ok(vec![
        check_fbs_law(ctx)?,
        check_whitening(ctx)?,
        check_likelihood_normalization(ctx)?,
        check_filter_consistency(ctx)?,
        check_conjugate(ctx)?,
        check_dmz(ctx)?,
        check_lemma(ctx)?,
    ])
}
