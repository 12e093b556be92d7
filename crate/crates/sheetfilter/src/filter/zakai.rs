use super::{jackknife_ratio_se, mean, se_of_mean, FilterError, MonotonePath, ParticleEnsemble};
use crate::lattice::LatticeError;
use crate::model::Func;
use rayon::prelude::*;
use serde::Serialize;

/// Filter values at one path node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub a: usize,
    pub b: usize,
    pub z1: f64,
    pub z2: f64,
    pub sigma: f64,
    pub pi: f64,
    /// Jackknife SE of `pi`.
    pub se: f64,
    /// Jackknife SE of `sigma`.
    pub sigma_se: f64,
    pub n_eff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveTrace {
    pub path: MonotonePath,
    pub rows: Vec<TraceRow>,
}

/// Euler march of the curve equation along `path`.
///
/// Each step `p → p′` adds, for the cells `c` entering the rectangle,
/// `e^{ℓ_p}[Σ_c (F′(X_p)𝔞(X_c) + ½F″(X_p)𝔟²(X_c))·area + F(X_p) Σ_c δ_c ΔW^Y_c]`
/// to the per-particle value of `σ(F)`, with weights frozen at `p`. The
/// same march for `F ≡ 1` gives `σ(1)` and `π = σ(F)/σ(1)`.
pub fn zakai_curve_integrate(
    ensemble: &ParticleEnsemble,
    drift: &Func,
    diffusion: &Func,
    f: &Func,
    path: &MonotonePath,
) -> Result<CurveTrace, FilterError> {
    if path.grid != ensemble.grid {
        return Err(FilterError::Lattice(LatticeError::Shape("path grid differs from ensemble grid".into())));
    }
    MonotonePath::new(path.grid, path.points.clone())?;
    let area = ensemble.grid.cell_area();
    let wy = &ensemble.wy.increments;
    let steps = path.points.len();
    // per particle: (σ(F), σ(1)) at every path node
    let per_particle: Vec<Vec<(f64, f64)>> = ensemble
        .particles
        .par_iter()
        .map(|p| {
            let x = &p.signal;
            let mut zf = f.eval(x.at(0, 0));
            let mut z1 = 1.0;
            let mut out = Vec::with_capacity(steps);
            out.push((zf, z1));
            for k in 0..steps - 1 {
                let (a, b) = path.points[k];
                let e = p.log_weight_at(a, b).exp();
                let xp = x.at(a, b);
                let (f0, f1, f2) = (f.eval(xp), f.deriv(1, xp), f.deriv(2, xp));
                let mut drift_sum = 0.0;
                let mut noise = 0.0;
                for (i, j) in path.new_cells(k) {
                    let xc = x.at(i, j);
                    let bc = diffusion.eval(xc);
                    drift_sum += f1 * drift.eval(xc) + 0.5 * f2 * bc * bc;
                    noise += p.delta.get(i, j) * wy.get(i, j);
                }
                zf += e * (drift_sum * area + f0 * noise);
                z1 += e * noise;
                out.push((zf, z1));
            }
            out
        })
        .collect();
    let mut rows = Vec::with_capacity(steps);
    for (k, &(a, b)) in path.points.iter().enumerate() {
        let zf: Vec<f64> = per_particle.iter().map(|v| v[k].0).collect();
        let z1: Vec<f64> = per_particle.iter().map(|v| v[k].1).collect();
        let pt = ensemble.grid.corner(a, b);
        rows.push(TraceRow {
            a,
            b,
            z1: pt.z1,
            z2: pt.z2,
            sigma: mean(&zf),
            pi: zf.iter().sum::<f64>() / z1.iter().sum::<f64>(),
            se: jackknife_ratio_se(&zf, &z1),
            sigma_se: se_of_mean(&zf),
            n_eff: ensemble.n_eff(a, b),
        });
    }
    Ok(CurveTrace { path: path.clone(), rows })
}

#[cfg(test)]
mod tests {
    use super::super::tests::setup;
    use super::super::{bayes_filter_at, MonotonePath};
    use super::*;
    use crate::model::{SignalModel, X0Law};

    #[test]
    fn trivial_model_keeps_sigma_constant() {
        let model = SignalModel { drift: Func::Zero, diffusion: Func::Zero, x0: X0Law::Normal { mean: 0.2, sd: 0.5 } };
        let ens = setup(5, model, Func::Zero, 64);
        let f = Func::sin(1.0, 2.0);
        let path = MonotonePath::diagonal(ens.grid);
        let tr = zakai_curve_integrate(&ens, &model.drift, &model.diffusion, &f, &path).unwrap();
        for r in &tr.rows {
            let bayes = bayes_filter_at(&ens, &f, r.a, r.b).unwrap();
            assert_eq!(r.sigma.to_bits(), bayes.sigma.to_bits());
            assert_eq!(r.sigma, tr.rows[0].sigma);
        }
    }

    #[test]
    fn unit_drift_is_deterministic_transport() {
        let model = SignalModel { drift: Func::Const { c: 1.0 }, diffusion: Func::Zero, x0: X0Law::Fixed { value: 0.3 } };
        let ens = setup(6, model, Func::Zero, 10);
        for path in [MonotonePath::lower_l(ens.grid), MonotonePath::upper_l(ens.grid), MonotonePath::diagonal(ens.grid)] {
            let tr = zakai_curve_integrate(&ens, &model.drift, &model.diffusion, &Func::identity(), &path).unwrap();
            for r in &tr.rows {
                assert!((r.sigma - (0.3 + r.z1 * r.z2)).abs() < 1e-12);
                assert!((r.pi - r.sigma).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_foreign_path() {
        let model = SignalModel { drift: Func::Zero, diffusion: Func::Zero, x0: X0Law::Fixed { value: 0.0 } };
        let ens = setup(4, model, Func::Zero, 4);
        let bad = MonotonePath { grid: ens.grid, points: vec![(0, 0), (1, 1), (4, 4)] };
        assert!(zakai_curve_integrate(&ens, &Func::Zero, &Func::Zero, &Func::identity(), &bad).is_err());
    }
}
