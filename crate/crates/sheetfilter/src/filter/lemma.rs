//! Monte Carlo and exhaustive checks of the conditional-mean identities for
//! planar double integrals driven by two independent Wiener sheets `W`, `W^Y`.

use crate::gaussfield::simulate_wiener_sheet;
use crate::harness::rng::stream;
use crate::lattice::{double_integral_cells, Field2D, Grid2D, Placement};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaStatistic {
    pub name: String,
    /// Largest `|mean(Sφ)| / rms(Sφ)` over the feature dictionary.
    pub max_standardized: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub samples: usize,
    pub features: usize,
    pub statistics: Vec<LemmaStatistic>,
    /// Largest gap between the two sides of the tower identity.
    pub tower_max_diff: f64,
    /// Largest exact conditional mean of a `dW`-driven statistic.
    pub exact_max_cond_mean: f64,
    pub exact_tolerance: f64,
    pub passed: bool,
}

pub const STATISTIC_NAMES: [&str; 5] = ["dW dW'", "dW dz'", "dz dW'", "dW dWY'", "dWY dW'"];

/// The five statistics `∬ψ dA dB` for a given `ψ` at the `⋏` corner.
fn statistics(psi: &dyn Fn(usize, usize) -> f64, dw: &Field2D, dwy: &Field2D, na: usize, nb: usize) -> [f64; 5] {
    let area = Field2D::from_fn(dw.grid, Placement::Node, |_, _| dw.grid.cell_area());
    let p = |_: usize, j: usize, k: usize, _: usize| psi(k, j);
    [
        double_integral_cells(p, dw, dw, na, nb),
        double_integral_cells(p, dw, &area, na, nb),
        double_integral_cells(p, &area, dw, na, nb),
        double_integral_cells(p, dw, dwy, na, nb),
        double_integral_cells(p, dwy, dw, na, nb),
    ]
}

/// Feature dictionary of `W^Y`: values at 8 probe corners, 4 rectangle
/// increments and a constant.
fn features(wy_cum: &Field2D) -> Vec<f64> {
    let g = wy_cum.grid;
    let (n1, n2) = (g.n1, g.n2);
    let c = |a: usize, b: usize| wy_cum.at_corner(a, b);
    let rect = |a0: usize, b0: usize, a1: usize, b1: usize| c(a1, b1) - c(a0, b1) - c(a1, b0) + c(a0, b0);
    let (h1, h2) = (n1 / 2, n2 / 2);
    vec![
        c(1, 1),
        c(n1, n2),
        c(h1, h2),
        c(n1, 1),
        c(1, n2),
        c(h1, n2),
        c(n1, h2),
        c(n1 - 1, n2 - 1),
        rect(h1, h2, n1, n2),
        rect(0, h2, h1, n2),
        rect(h1, 0, n1, h2),
        rect(1, 1, n1 - 1, n2 - 1),
        1.0,
    ]
}

/// Part (i): sampled statistics against the dictionary. Part (ii): exact
/// enumeration on a 2×2-cell grid with Rademacher increments of `W`.
pub fn cond_exp_identities_check(seed: u64, grid: Grid2D, samples: usize) -> LemmaReport {
    let (na, nb) = (grid.n1, grid.n2);
    let mut rw = stream(seed, 1);
    let mut ry = stream(seed, 2);
    let nf = 13;
    let threshold = 5.0 / (samples as f64).sqrt();
    // running Σ Sφ and Σ (Sφ)²
    let mut s1 = vec![[0.0; 5]; nf];
    let mut s2 = vec![[0.0; 5]; nf];
    for _ in 0..samples {
        let w = simulate_wiener_sheet(grid, &mut rw);
        let wy = simulate_wiener_sheet(grid, &mut ry);
        let psi = |a: usize, b: usize| 1.0 + w.cumulative.at_corner(a, b).sin() + 0.5 * wy.cumulative.at_corner(a, b);
        let st = statistics(&psi, &w.increments, &wy.increments, na, nb);
        for (m, phi) in features(&wy.cumulative).into_iter().enumerate() {
            for k in 0..5 {
                let v = st[k] * phi;
                s1[m][k] += v;
                s2[m][k] += v * v;
            }
        }
    }
    let statistics_out: Vec<LemmaStatistic> = (0..5)
        .map(|k| {
            let worst = (0..nf)
                .filter(|&m| s2[m][k] > 0.0)
                .map(|m| (s1[m][k] / samples as f64).abs() / (s2[m][k] / samples as f64).sqrt())
                .fold(0.0, f64::max);
            LemmaStatistic { name: STATISTIC_NAMES[k].to_string(), max_standardized: worst, threshold, passed: worst <= threshold }
        })
        .collect();

    let (tower_max_diff, exact_max_cond_mean) = exhaustive_part(seed);
    let exact_tolerance = 1e-13;
    let passed = statistics_out.iter().all(|s| s.passed) && tower_max_diff <= exact_tolerance && exact_max_cond_mean <= exact_tolerance;
    LemmaReport { samples, features: nf, statistics: statistics_out, tower_max_diff, exact_max_cond_mean, exact_tolerance, passed }
}

/// On 2×2 cells the only `⋏` pair is `ζ=(0,1)`, `ζ′=(1,0)` with corner
/// `(1,1)`. `W` has Rademacher cell increments `±√area`, enumerated exactly;
/// `α` depends on the coin of cell `(0,0)` and on `W^Y`.
fn exhaustive_part(seed: u64) -> (f64, f64) {
    let grid = Grid2D::unit(2);
    let s = grid.cell_area().sqrt();
    let mut ry = stream(seed, 3);
    let mut tower = 0.0f64;
    let mut cond = 0.0f64;
    for _ in 0..50 {
        let wy = simulate_wiener_sheet(grid, &mut ry);
        let y00 = wy.increments.get(0, 0);
        let alpha = |eps: f64| if eps > 0.0 { 1.0 + y00 } else { 2.0 };
        let mut lhs = 0.0;
        let mut e_alpha = 0.0;
        let mut cm = [0.0; 5];
        for code in 0..16u32 {
            let coins: Vec<f64> = (0..4).map(|b| if code >> b & 1 == 1 { s } else { -s }).collect();
            let dw = Field2D::from_fn(grid, Placement::Node, |i, j| coins[i * 2 + j]);
            let a = alpha(coins[0]);
            let psi = |_: usize, _: usize| a;
            lhs += double_integral_cells(|_, _, _, _| a, &wy.increments, &wy.increments, 2, 2) / 16.0;
            e_alpha += a / 16.0;
            let st = statistics(&psi, &dw, &wy.increments, 2, 2);
            for k in 0..5 {
                cm[k] += st[k] / 16.0;
            }
        }
        let rhs = double_integral_cells(|_, _, _, _| e_alpha, &wy.increments, &wy.increments, 2, 2);
        tower = tower.max((lhs - rhs).abs());
        // ψ ≡ 1 both sides coincide
        let one = double_integral_cells(|_, _, _, _| 1.0, &wy.increments, &wy.increments, 2, 2);
        tower = tower.max((one - wy.increments.get(0, 1) * wy.increments.get(1, 0)).abs());
        cond = cm.iter().fold(cond, |m, v| m.max(v.abs()));
    }
    (tower, cond)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_identities_hold() {
        let (t, c) = exhaustive_part(1);
        assert!(t < 1e-13, "{t}");
        assert!(c < 1e-13, "{c}");
    }

    #[test]
    fn dictionary_size() {
        let g = Grid2D::unit(4);
        let wy = simulate_wiener_sheet(g, &mut stream(0, 9));
        assert_eq!(features(&wy.cumulative).len(), 13);
    }

    #[test]
    fn a_biased_statistic_is_detected() {
        // ∬ dWY dWY' against its own square is not mean zero: the check must see it
        let grid = Grid2D::unit(3);
        let mut r = stream(4, 2);
        let n = 2000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let wy = simulate_wiener_sheet(grid, &mut r);
            let v = double_integral_cells(|_, _, _, _| 1.0, &wy.increments, &wy.increments, 3, 3).powi(2);
            s1 += v;
            s2 += v * v;
        }
        let stat = (s1 / n as f64) / (s2 / n as f64).sqrt();
        assert!(stat > 5.0 / (n as f64).sqrt());
    }

    #[test]
    fn small_run_passes() {
        let r = cond_exp_identities_check(3, Grid2D::unit(3), 2000);
        assert_eq!(r.statistics.len(), 5);
        assert!(r.passed, "{r:?}");
    }
}
