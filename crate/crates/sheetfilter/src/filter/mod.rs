//! Particle representation of the unnormalized filter
//! `σ_z(F) = Ẽ[F(X_z) V_z^{-1} | F_z^Y]` and the computations built on it.
//!
//! Evaluation points are grid corners `(a, b)`, i.e. the point
//! `(a·h1, b·h2)`; `R_z` then covers the cells `i < a`, `j < b`.

mod dmz;
mod lemma;
mod path;
mod zakai;

pub use dmz::{dmz_2d_residual, DmzResidual};
pub use lemma::{cond_exp_identities_check, LemmaReport, LemmaStatistic};
pub use path::{MonotonePath, PathError};
pub use zakai::{zakai_curve_integrate, CurveTrace, TraceRow};

use crate::gaussfield::{GaussianFieldSample, HurstPair};
use crate::harness::rng::particle_stream;
use crate::lattice::{cumulative_from_increments, Field2D, Grid2D, LatticeError, Placement, Point2};
use crate::model::{DeltaTransform, Func, ModelError, SignalField, SignalModel};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("all particle weights underflow at {0:?}; increase the number of particles or shrink the domain")]
    Degenerate(Point2),
    #[error("ensemble needs at least 2 particles, got {0}")]
    TooFewParticles(usize),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// One signal draw with its δ field and log-weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub signal: SignalField,
    pub delta: Field2D,
    /// `ℓ = log V^{-1}` at every corner (zero on the axes).
    pub log_weight: Field2D,
}

impl Particle {
    pub fn x0(&self) -> f64 {
        self.signal.at(0, 0)
    }

    #[inline]
    pub fn log_weight_at(&self, a: usize, b: usize) -> f64 {
        self.log_weight.at_corner(a, b)
    }
}

/// Particles drawn from the signal law, independent of the observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub grid: Grid2D,
    pub hurst: HurstPair,
    pub sensor: Func,
    pub wy: GaussianFieldSample,
    pub particles: Vec<Particle>,
}

/// `ℓ = Σ_{R_z} (δ ΔW^Y − ½ δ² area)`.
pub fn log_weight_field(delta: &Field2D, wy: &GaussianFieldSample) -> Field2D {
    let area = delta.grid.cell_area();
    let cell = Field2D::from_fn(delta.grid, Placement::Node, |i, j| {
        let d = delta.get(i, j);
        d * wy.increments.get(i, j) - 0.5 * d * d * area
    });
    cumulative_from_increments(&cell)
}

impl ParticleEnsemble {
    /// Draws `n` particles; particle `i` uses random stream `stream_base + i`.
    pub fn simulate(
        model: &SignalModel,
        sensor: &Func,
        hurst: HurstPair,
        wy: &GaussianFieldSample,
        n: usize,
        seed: u64,
        stream_base: u64,
    ) -> Result<Self, FilterError> {
        let grid = wy.grid;
        let signals = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = particle_stream(seed, stream_base, i);
                model.sample(grid, &mut rng).map(|(x, _)| x)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_signals(signals, sensor, hurst, wy)
    }

    /// Builds the ensemble from given signal draws.
    pub fn from_signals(signals: Vec<SignalField>, sensor: &Func, hurst: HurstPair, wy: &GaussianFieldSample) -> Result<Self, FilterError> {
        if signals.len() < 2 {
            return Err(FilterError::TooFewParticles(signals.len()));
        }
        let grid = wy.grid;
        let transform = DeltaTransform::new(grid, &hurst);
        let particles = signals
            .into_par_iter()
            .map(|signal| {
                if signal.grid != grid {
                    return Err(FilterError::Lattice(LatticeError::Shape(format!(
                        "signal grid {:?} differs from observation grid {:?}",
                        signal.grid, grid
                    ))));
                }
                let delta = transform.apply(&signal.node_values(), sensor);
                if !delta.is_finite() {
                    return Err(FilterError::Model(ModelError::NonFiniteDelta(0, 0)));
                }
                let log_weight = log_weight_field(&delta, wy);
                Ok(Particle { signal, delta, log_weight })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ParticleEnsemble { grid, hurst, sensor: *sensor, wy: wy.clone(), particles })
    }

    /// The same draws on a grid `factor` times coarser, against `wy_coarse`.
    pub fn coarsen(&self, factor: usize, wy_coarse: &GaussianFieldSample) -> Result<Self, FilterError> {
        let signals = self.particles.iter().map(|p| p.signal.coarsen(factor)).collect();
        Self::from_signals(signals, &self.sensor, self.hurst, wy_coarse)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Effective sample size of the weights at corner `(a, b)`.
    pub fn n_eff(&self, a: usize, b: usize) -> f64 {
        let l: Vec<f64> = self.particles.iter().map(|p| p.log_weight_at(a, b)).collect();
        effective_sample_size(&l)
    }
}

/// `(Σ w)² / Σ w²` for `w = e^ℓ`.
pub fn effective_sample_size(log_w: &[f64]) -> f64 {
    let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (s, s2) = log_w.iter().fold((0.0, 0.0), |(s, s2), l| {
        let w = (l - m).exp();
        (s + w, s2 + w * w)
    });
    s * s / s2
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `sd / √N` with the `N−1` variance; equals the jackknife SE of a mean.
pub(crate) fn se_of_mean(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// Jackknife SE of `Σ num / Σ den`.
pub(crate) fn jackknife_ratio_se(num: &[f64], den: &[f64]) -> f64 {
    let n = num.len() as f64;
    let sn: f64 = num.iter().sum();
    let sd: f64 = den.iter().sum();
    let loo: Vec<f64> = num.iter().zip(den).map(|(a, b)| (sn - a) / (sd - b)).collect();
    let m = mean(&loo);
    ((n - 1.0) / n * loo.iter().map(|x| (x - m) * (x - m)).sum::<f64>()).sqrt()
}

/// Filter estimates at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterEstimate {
    /// Unnormalized filter `σ_z(F)`.
    pub sigma: f64,
    /// Normalized filter `π_z(F)`.
    pub pi: f64,
    /// Jackknife SE of `π`.
    pub se: f64,
    /// Jackknife SE of `σ`.
    pub sigma_se: f64,
    pub n_eff: f64,
}

/// Weighted estimates from values `f_i` and log-weights `ℓ_i`.
pub fn weighted_estimate(f: &[f64], log_w: &[f64], at: Point2) -> Result<FilterEstimate, FilterError> {
    let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(FilterError::Degenerate(at));
    }
    let w: Vec<f64> = log_w.iter().map(|l| (l - m).exp()).collect();
    let fw: Vec<f64> = f.iter().zip(&w).map(|(a, b)| a * b).collect();
    let sw: f64 = w.iter().sum();
    let sfw: f64 = fw.iter().sum();
    let scale = m.exp();
    if !(sw > 0.0) || !scale.is_finite() {
        return Err(FilterError::Degenerate(at));
    }
    Ok(FilterEstimate {
        sigma: scale * mean(&fw),
        pi: sfw / sw,
        se: jackknife_ratio_se(&fw, &w),
        sigma_se: scale * se_of_mean(&fw),
        n_eff: sw * sw / w.iter().map(|x| x * x).sum::<f64>(),
    })
}

/// `σ_z(F)`, `π_z(F)` at the corner nearest `z`.
pub fn bayes_filter(ensemble: &ParticleEnsemble, f: &Func, z: &Point2) -> Result<FilterEstimate, FilterError> {
    let (a, b) = ensemble.grid.snap(z)?;
    bayes_filter_at(ensemble, f, a, b)
}

pub fn bayes_filter_at(ensemble: &ParticleEnsemble, f: &Func, a: usize, b: usize) -> Result<FilterEstimate, FilterError> {
    let fx: Vec<f64> = ensemble.particles.iter().map(|p| f.eval(p.signal.at(a, b))).collect();
    let lw: Vec<f64> = ensemble.particles.iter().map(|p| p.log_weight_at(a, b)).collect();
    weighted_estimate(&fx, &lw, ensemble.grid.corner(a, b))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::gaussfield::{simulate_wiener_sheet, FbsCholesky, KernelCache};
    use crate::harness::rng::stream;
    use crate::model::{simulate_observation, X0Law};

    pub(crate) fn setup(n: usize, model: SignalModel, g: Func, particles: usize) -> ParticleEnsemble {
        let grid = Grid2D::unit(n);
        let hp = HurstPair::new(0.6, 0.6).unwrap();
        let cache = KernelCache::new(grid, hp);
        let fbs = FbsCholesky::new(grid, hp).unwrap();
        let obs = simulate_observation(&model, &g, &cache, &fbs, &mut stream(5, 1), &mut stream(5, 2)).unwrap();
        ParticleEnsemble::simulate(&model, &g, hp, &obs.wy, particles, 5, 3).unwrap()
    }

    #[test]
    fn zero_sensor_gives_prior_mean() {
        let model = SignalModel { drift: Func::Const { c: 0.3 }, diffusion: Func::Const { c: 0.5 }, x0: X0Law::Normal { mean: 0.0, sd: 1.0 } };
        let ens = setup(6, model, Func::Zero, 200);
        let f = Func::sin(1.0, 1.0);
        let est = bayes_filter_at(&ens, &f, 4, 5).unwrap();
        let direct = mean(&ens.particles.iter().map(|p| f.eval(p.signal.at(4, 5))).collect::<Vec<_>>());
        assert_eq!(est.pi, direct);
        assert_eq!(est.sigma, direct);
        assert!((est.n_eff - 200.0).abs() < 1e-9);
    }

    #[test]
    fn unit_test_function_normalizes() {
        let model = SignalModel { drift: Func::Zero, diffusion: Func::Const { c: 0.5 }, x0: X0Law::Normal { mean: 0.0, sd: 1.0 } };
        let ens = setup(6, model, Func::identity(), 100);
        for (a, b) in [(1, 1), (3, 6), (6, 6)] {
            let est = bayes_filter_at(&ens, &Func::Const { c: 1.0 }, a, b).unwrap();
            assert!((est.pi - 1.0).abs() < 1e-14);
            assert!(est.se < 1e-12);
        }
    }

    #[test]
    fn weights_depend_only_on_own_rectangle() {
        let model = SignalModel { drift: Func::Zero, diffusion: Func::Const { c: 0.5 }, x0: X0Law::Normal { mean: 0.0, sd: 1.0 } };
        let ens = setup(6, model, Func::identity(), 50);
        // altering the observation outside R_(3,2) leaves σ_(3,2) untouched
        let mut inc = ens.wy.increments.clone();
        for i in 0..6 {
            for j in 0..6 {
                if i >= 3 || j >= 2 {
                    inc.set(i, j, inc.get(i, j) + 1.0);
                }
            }
        }
        let wy2 = GaussianFieldSample::from_increments(inc);
        let ens2 = ParticleEnsemble::from_signals(ens.particles.iter().map(|p| p.signal.clone()).collect(), &ens.sensor, ens.hurst, &wy2).unwrap();
        let f = Func::identity();
        assert_eq!(bayes_filter_at(&ens, &f, 3, 2).unwrap(), bayes_filter_at(&ens2, &f, 3, 2).unwrap());
        assert_ne!(bayes_filter_at(&ens, &f, 4, 2).unwrap(), bayes_filter_at(&ens2, &f, 4, 2).unwrap());
    }

    #[test]
    fn degenerate_weights_are_an_error() {
        let f = [1.0, 2.0];
        assert!(matches!(weighted_estimate(&f, &[f64::NEG_INFINITY; 2], Point2::new(1.0, 1.0).unwrap()), Err(FilterError::Degenerate(_))));
    }

    #[test]
    fn jackknife_of_equal_weights_is_se_of_mean() {
        let f: Vec<f64> = (0..50).map(|k| (k as f64 * 0.37).sin()).collect();
        let est = weighted_estimate(&f, &vec![0.0; 50], Point2::new(1.0, 1.0).unwrap()).unwrap();
        assert!((est.se - se_of_mean(&f)).abs() < 1e-12);
    }

    #[test]
    fn ensemble_is_deterministic() {
        let grid = Grid2D::unit(4);
        let wy = simulate_wiener_sheet(grid, &mut stream(1, 2));
        let model = SignalModel { drift: Func::Zero, diffusion: Func::Const { c: 1.0 }, x0: X0Law::Fixed { value: 0.0 } };
        let hp = HurstPair::new(0.7, 0.6).unwrap();
        let a = ParticleEnsemble::simulate(&model, &Func::identity(), hp, &wy, 20, 9, 3).unwrap();
        let b = ParticleEnsemble::simulate(&model, &Func::identity(), hp, &wy, 20, 9, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.particles[0], a.particles[1]);
    }
}
