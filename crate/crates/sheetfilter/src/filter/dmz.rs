use super::{mean, se_of_mean, FilterError, Particle, ParticleEnsemble};
#[cfg(test)]
use crate::lattice::double_integral_cells;
use crate::lattice::{Field2D, Placement, Point2};
use crate::model::Func;
use rayon::prelude::*;
use serde::Serialize;

/// Both sides of the planar evolution equation at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DmzResidual {
    /// `σ_z(F) − σ_0(F)`.
    pub lhs: f64,
    /// Particle means of the six right-hand terms, in order:
    /// `σ(𝔞F′+½𝔟²F″)dζ`, `σ(Fδ)dW^Y`, `σ(F; δ⊗δ)dW^Y dW^Y`,
    /// `dζ dW^Y`, `dW^Y dζ′`, and the Lebesgue double term.
    pub rhs_terms: [f64; 6],
    pub residual: f64,
    /// Jackknife SE of `residual`.
    pub se: f64,
}

/// Residual of the planar evolution equation at the corner nearest `z`.
///
/// Single integrals are cell sums with integrands at the low corner of
/// each cell. Double integrals run over cell pairs `ζ=(i,j)`, `ζ′=(k,ℓ)`
/// with `i<k`, `ℓ<j`; their integrands are evaluated at `ζ∨ζ′`, the low
/// corner of cell `(k,j)`, where the weights are taken as well.
pub fn dmz_2d_residual(
    ensemble: &ParticleEnsemble,
    drift: &Func,
    diffusion: &Func,
    f: &Func,
    z: &Point2,
) -> Result<DmzResidual, FilterError> {
    let grid = ensemble.grid;
    let (na, nb) = grid.snap(z)?;
    let area = grid.cell_area();
    let wy = &ensemble.wy.increments;
    let per: Vec<[f64; 7]> = ensemble
        .particles
        .par_iter()
        .map(|p| {
            let pt = ParticleTerms::new(p, wy, drift, diffusion, f);
            pt.terms(na, nb, area)
        })
        .collect();
    let col = |k: usize| per.iter().map(|v| v[k]).collect::<Vec<f64>>();
    let lhs = mean(&col(0));
    let mut rhs_terms = [0.0; 6];
    for (k, t) in rhs_terms.iter_mut().enumerate() {
        *t = mean(&col(k + 1));
    }
    let r: Vec<f64> = per.iter().map(|v| v[0] - v[1..].iter().sum::<f64>()).collect();
    Ok(DmzResidual { lhs, rhs_terms, residual: mean(&r), se: se_of_mean(&r) })
}

/// Per-particle corner and cell values entering the residual.
struct ParticleTerms {
    stride: usize,
    /// `e^{ℓ}` and `F^{(k)}(X)`, `k = 0..4`, at corners.
    ew: Vec<f64>,
    fd: Vec<[f64; 5]>,
    /// `δΔW^Y`, `𝔞(X)`, `𝔟²(X)` at cells.
    dw: Field2D,
    av: Field2D,
    bv2: Field2D,
}

impl ParticleTerms {
    fn new(p: &Particle, wy: &Field2D, drift: &Func, diffusion: &Func, f: &Func) -> Self {
        let x = &p.signal;
        let grid = x.grid;
        let stride = grid.n2 + 1;
        let ew = (0..=grid.n1).flat_map(|a| (0..=grid.n2).map(move |b| (a, b))).map(|(a, b)| p.log_weight_at(a, b).exp()).collect();
        let fd = x.corners.iter().map(|&v| [0, 1, 2, 3, 4].map(|k| f.deriv(k, v))).collect();
        ParticleTerms {
            stride,
            ew,
            fd,
            dw: Field2D::from_fn(grid, Placement::Node, |i, j| p.delta.get(i, j) * wy.get(i, j)),
            av: Field2D::from_fn(grid, Placement::Node, |i, j| drift.eval(x.at(i, j))),
            bv2: Field2D::from_fn(grid, Placement::Node, |i, j| diffusion.eval(x.at(i, j)).powi(2)),
        }
    }

    fn e(&self, a: usize, b: usize) -> f64 {
        self.ew[a * self.stride + b]
    }

    fn d(&self, k: usize, a: usize, b: usize) -> f64 {
        self.fd[a * self.stride + b][k]
    }

    /// `[lhs, T1..T6]`. Every double-integral integrand is a product of a
    /// factor at `(i,j)`, a factor at `(k,ℓ)` and a factor at the corner
    /// `(k,j)`, so each term reduces to prefix sums along the two arms of
    /// the cone: `Σ_{i<k}` down column `j` and `Σ_{ℓ<j}` along row `k`.
    fn terms(&self, na: usize, nb: usize, area: f64) -> [f64; 7] {
        let lhs = self.e(na, nb) * self.d(0, na, nb) - self.d(0, 0, 0);
        let (mut t1, mut t2, mut t3, mut t4, mut t5, mut t6) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..na {
            for j in 0..nb {
                let w = self.e(i, j);
                t1 += w * (self.d(1, i, j) * self.av.get(i, j) + 0.5 * self.d(2, i, j) * self.bv2.get(i, j)) * area;
                t2 += w * self.d(0, i, j) * self.dw.get(i, j);
            }
        }
        // column sums over i < k, carried down each column j
        let mut col = vec![[0.0f64; 3]; nb];
        for k in 0..na {
            let mut row = [0.0f64; 3];
            for j in 0..nb {
                let (cw, ca, cb) = (col[j][0], col[j][1] * area, col[j][2] * area);
                let (rw, ra, rb) = (row[0], row[1] * area, row[2] * area);
                let w = self.e(k, j);
                let (d0, d1, d2, d3, d4) = (self.d(0, k, j), self.d(1, k, j), self.d(2, k, j), self.d(3, k, j), self.d(4, k, j));
                t3 += w * d0 * cw * rw;
                t4 += w * (d1 * ca + 0.5 * d2 * cb) * rw;
                t5 += w * cw * (d1 * ra + 0.5 * d2 * rb);
                t6 += w * (d2 * ca * ra + 0.5 * d3 * (cb * ra + ca * rb) + 0.25 * d4 * cb * rb);
                row[0] += self.dw.get(k, j);
                row[1] += self.av.get(k, j);
                row[2] += self.bv2.get(k, j);
            }
            for (j, c) in col.iter_mut().enumerate() {
                c[0] += self.dw.get(k, j);
                c[1] += self.av.get(k, j);
                c[2] += self.bv2.get(k, j);
            }
        }
        [lhs, t1, t2, t3, t4, t5, t6]
    }

    /// Direct cone sums, `O(n⁴)`.
    #[cfg(test)]
    fn terms_direct(&self, na: usize, nb: usize, area: f64) -> [f64; 7] {
        let grid = self.dw.grid;
        let ones = Field2D::from_fn(grid, Placement::Node, |_, _| 1.0);
        let (e, d, av, bv2, dw) = (|a, b| self.e(a, b), |k, a, b| self.d(k, a, b), &self.av, &self.bv2, &self.dw);
        let fast = self.terms(na, nb, area);
        let t3 = double_integral_cells(|_, j, k, _| e(k, j) * d(0, k, j), dw, dw, na, nb);
        let t4 = double_integral_cells(|i, j, k, _| e(k, j) * (d(1, k, j) * av.get(i, j) + 0.5 * d(2, k, j) * bv2.get(i, j)) * area, &ones, dw, na, nb);
        let t5 = double_integral_cells(|_, j, k, l| e(k, j) * (d(1, k, j) * av.get(k, l) + 0.5 * d(2, k, j) * bv2.get(k, l)) * area, dw, &ones, na, nb);
        let t6 = double_integral_cells(
            |i, j, k, l| {
                let (a1, a2, b1, b2) = (av.get(i, j), av.get(k, l), bv2.get(i, j), bv2.get(k, l));
                e(k, j) * (d(2, k, j) * a1 * a2 + 0.5 * d(3, k, j) * (b1 * a2 + a1 * b2) + 0.25 * d(4, k, j) * b1 * b2) * area * area
            },
            &ones,
            &ones,
            na,
            nb,
        );
        [fast[0], fast[1], fast[2], t3, t4, t5, t6]
    }
}
