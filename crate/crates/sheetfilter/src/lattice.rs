//! Planar partial order, uniform staggered grids, rectangle increments and
//! the discrete double stochastic integral.
//!
//! Two placements are used throughout the crate:
//!
//! * **nodes**: cell midpoints `((i+½)h1, (j+½)h2)`, where integrands,
//!   sensor values and δ fields live;
//! * **corners**: lattice points `(a·h1, b·h2)`, where cumulative fields
//!   (`W_z`, `B_z`, `Y_z`, `log V_z`) live.
//!
//! A cumulative [`Field2D`] stores corner `(a, b)` at index `(a-1, b-1)`;
//! corners on either axis are implicitly zero.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("point ({0}, {1}) is outside the positive quadrant")]
    NegativeCoordinate(f64, f64),
    #[error("rectangle corners are not ordered: lo=({0}, {1}) hi=({2}, {3})")]
    Unordered(f64, f64, f64, f64),
    #[error("point ({0}, {1}) lies outside the grid domain")]
    OutsideDomain(f64, f64),
    #[error("grid mismatch: {0}")]
    Shape(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// A point of the positive quadrant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub z1: f64,
    pub z2: f64,
}

impl Point2 {
    pub fn new(z1: f64, z2: f64) -> Result<Self, LatticeError> {
        if !(z1 >= 0.0 && z2 >= 0.0) {
            return Err(LatticeError::NegativeCoordinate(z1, z2));
        }
        Ok(Point2 { z1, z2 })
    }

    /// `self ≺ other`: componentwise `≤`.
    pub fn prec(&self, other: &Point2) -> bool {
        self.z1 <= other.z1 && self.z2 <= other.z2
    }

    /// `self ≺≺ other`: componentwise `<`.
    pub fn prec_strict(&self, other: &Point2) -> bool {
        self.z1 < other.z1 && self.z2 < other.z2
    }

    /// `self ⋏ other`: `z1 ≤ z1'` and `z2 ≥ z2'`.
    pub fn curly(&self, other: &Point2) -> bool {
        self.z1 <= other.z1 && self.z2 >= other.z2
    }

    pub fn meet(&self, other: &Point2) -> Point2 {
        Point2 { z1: self.z1.min(other.z1), z2: self.z2.min(other.z2) }
    }

    pub fn join(&self, other: &Point2) -> Point2 {
        Point2 { z1: self.z1.max(other.z1), z2: self.z2.max(other.z2) }
    }

    /// `self ⊙ other = (self.z1, other.z2)`.
    pub fn odot(&self, other: &Point2) -> Point2 {
        Point2 { z1: self.z1, z2: other.z2 }
    }
}

/// All relations between two points at once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderRelations {
    pub prec: bool,
    pub prec_strict: bool,
    pub curly: bool,
    pub meet: Point2,
    pub join: Point2,
    pub odot: Point2,
}

pub fn partial_order_ops(a: &Point2, b: &Point2) -> OrderRelations {
    OrderRelations {
        prec: a.prec(b),
        prec_strict: a.prec_strict(b),
        curly: a.curly(b),
        meet: a.meet(b),
        join: a.join(b),
        odot: a.odot(b),
    }
}

/// Half-open rectangle `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect2 {
    pub lo: Point2,
    pub hi: Point2,
}

impl Rect2 {
    pub fn new(lo: Point2, hi: Point2) -> Result<Self, LatticeError> {
        if !lo.prec(&hi) {
            return Err(LatticeError::Unordered(lo.z1, lo.z2, hi.z1, hi.z2));
        }
        Ok(Rect2 { lo, hi })
    }

    /// `R_z = (0, z]`.
    pub fn from_origin(z: Point2) -> Self {
        Rect2 { lo: Point2 { z1: 0.0, z2: 0.0 }, hi: z }
    }
}

/// Uniform grid on `[0,T1]×[0,T2]` with `n1×n2` cells.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid2D {
    pub t1: f64,
    pub t2: f64,
    pub n1: usize,
    pub n2: usize,
}

impl Grid2D {
    pub fn new(t1: f64, t2: f64, n1: usize, n2: usize) -> Result<Self, LatticeError> {
        if !(t1 > 0.0 && t2 > 0.0 && t1.is_finite() && t2.is_finite()) {
            return Err(LatticeError::InvalidGrid(format!("extents must be positive, got ({t1}, {t2})")));
        }
        if n1 == 0 || n2 == 0 {
            return Err(LatticeError::InvalidGrid("cell counts must be positive".into()));
        }
        Ok(Grid2D { t1, t2, n1, n2 })
    }

    pub fn unit(n: usize) -> Self {
        Grid2D { t1: 1.0, t2: 1.0, n1: n, n2: n }
    }

    pub fn h1(&self) -> f64 {
        self.t1 / self.n1 as f64
    }

    pub fn h2(&self) -> f64 {
        self.t2 / self.n2 as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.h1() * self.h2()
    }

    pub fn cells(&self) -> usize {
        self.n1 * self.n2
    }

    /// Midpoint of cell `(i, j)`.
    pub fn node(&self, i: usize, j: usize) -> Point2 {
        Point2 { z1: (i as f64 + 0.5) * self.h1(), z2: (j as f64 + 0.5) * self.h2() }
    }

    /// Lattice point `(a·h1, b·h2)`, `0 ≤ a ≤ n1`, `0 ≤ b ≤ n2`.
    pub fn corner(&self, a: usize, b: usize) -> Point2 {
        Point2 { z1: a as f64 * self.h1(), z2: b as f64 * self.h2() }
    }

    pub fn top_right(&self) -> Point2 {
        Point2 { z1: self.t1, z2: self.t2 }
    }

    /// Nearest corner index of a point, within tolerance `h/2` of the domain.
    pub fn snap(&self, z: &Point2) -> Result<(usize, usize), LatticeError> {
        let a = (z.z1 / self.h1()).round();
        let b = (z.z2 / self.h2()).round();
        if !(z.z1 >= 0.0 && z.z2 >= 0.0) || a > self.n1 as f64 || b > self.n2 as f64 {
            return Err(LatticeError::OutsideDomain(z.z1, z.z2));
        }
        Ok((a as usize, b as usize))
    }

    /// Axis-1 one-dimensional grid `[0, T1]` with `n1` cells.
    pub fn axis1(&self) -> crate::fraccalc::Grid1D {
        crate::fraccalc::Grid1D { a: 0.0, b: self.t1, n: self.n1 }
    }

    pub fn axis2(&self) -> crate::fraccalc::Grid1D {
        crate::fraccalc::Grid1D { a: 0.0, b: self.t2, n: self.n2 }
    }

    /// The same domain with every cell split in `factor × factor`.
    pub fn refine(&self, factor: usize) -> Grid2D {
        Grid2D { t1: self.t1, t2: self.t2, n1: self.n1 * factor, n2: self.n2 * factor }
    }
}

/// Where the entries of a field are located on its grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Placement {
    /// Entry `(i, j)` sits at the midpoint of cell `(i, j)`.
    Node,
    /// Entry `(i, j)` sits at the corner `((i+1)h1, (j+1)h2)`.
    Corner,
}

/// Real field with `n1 × n2` entries, row-major in `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub grid: Grid2D,
    pub placement: Placement,
    pub values: Vec<f64>,
}

impl Field2D {
    pub fn zeros(grid: Grid2D, placement: Placement) -> Self {
        Field2D { grid, placement, values: vec![0.0; grid.cells()] }
    }

    pub fn from_fn(grid: Grid2D, placement: Placement, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.cells());
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                values.push(f(i, j));
            }
        }
        Field2D { grid, placement, values }
    }

    /// Node field sampled from a function of the midpoint coordinates.
    pub fn from_nodes(grid: Grid2D, f: impl Fn(Point2) -> f64) -> Self {
        Self::from_fn(grid, Placement::Node, |i, j| f(grid.node(i, j)))
    }

    /// Cumulative field sampled from a function of the corner coordinates.
    pub fn from_corners(grid: Grid2D, f: impl Fn(Point2) -> f64) -> Self {
        Self::from_fn(grid, Placement::Corner, |i, j| f(grid.corner(i + 1, j + 1)))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n2 + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let n2 = self.grid.n2;
        self.values[i * n2 + j] = v;
    }

    /// Value of a cumulative field at corner `(a, b)`; zero on the axes.
    #[inline]
    pub fn at_corner(&self, a: usize, b: usize) -> f64 {
        if a == 0 || b == 0 {
            0.0
        } else {
            self.get(a - 1, b - 1)
        }
    }

    /// Position of entry `(i, j)` according to the placement.
    pub fn position(&self, i: usize, j: usize) -> Point2 {
        match self.placement {
            Placement::Node => self.grid.node(i, j),
            Placement::Corner => self.grid.corner(i + 1, j + 1),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field2D {
        Field2D { grid: self.grid, placement: self.placement, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn same_grid(&self, other: &Field2D) -> Result<(), LatticeError> {
        if self.grid != other.grid {
            return Err(LatticeError::Shape(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    /// Row `i` (fixed first index) as a vector over `j`.
    pub fn row(&self, i: usize) -> &[f64] {
        let n2 = self.grid.n2;
        &self.values[i * n2..(i + 1) * n2]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.grid.n1).map(|i| self.get(i, j)).collect()
    }

    pub fn max_abs_diff(&self, other: &Field2D) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Cumulative field `F(a, b) = Σ_{i<a, j<b} inc(i, j)`.
pub fn cumulative_from_increments(inc: &Field2D) -> Field2D {
    let g = inc.grid;
    let mut out = Field2D::zeros(g, Placement::Corner);
    for i in 0..g.n1 {
        let mut row_sum = 0.0;
        for j in 0..g.n2 {
            row_sum += inc.get(i, j);
            let below = if i > 0 { out.get(i - 1, j) } else { 0.0 };
            out.set(i, j, below + row_sum);
        }
    }
    out
}

/// Per-cell four-corner increments of a cumulative field.
pub fn increments_from_cumulative(cum: &Field2D) -> Field2D {
    let g = cum.grid;
    Field2D::from_fn(g, Placement::Node, |i, j| {
        cum.at_corner(i + 1, j + 1) - cum.at_corner(i, j + 1) - cum.at_corner(i + 1, j) + cum.at_corner(i, j)
    })
}

/// `X_{z'} − X_{z⊙z'} − X_{z'⊙z} + X_z` for `r = (z, z']`, corners snapped
/// to the nearest lattice point.
pub fn rect_increment(cum: &Field2D, r: &Rect2) -> Result<f64, LatticeError> {
    let (a0, b0) = cum.grid.snap(&r.lo)?;
    let (a1, b1) = cum.grid.snap(&r.hi)?;
    Ok(cum.at_corner(a1, b1) - cum.at_corner(a0, b1) - cum.at_corner(a1, b0) + cum.at_corner(a0, b0))
}

/// Sum over cell pairs `ζ=(i,j)`, `ζ'=(k,ℓ)` with `i<k`, `ℓ<j`, both inside
/// the first `na × nb` cells, of `ψ(i,j,k,ℓ)·A(i,j)·B(k,ℓ)`.
pub fn double_integral_cells(
    psi: impl Fn(usize, usize, usize, usize) -> f64,
    a: &Field2D,
    b: &Field2D,
    na: usize,
    nb: usize,
) -> f64 {
    let mut total = 0.0;
    for i in 0..na {
        for j in 0..nb {
            let ai = a.get(i, j);
            if ai == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for k in (i + 1)..na {
                for l in 0..j {
                    inner += psi(i, j, k, l) * b.get(k, l);
                }
            }
            total += ai * inner;
        }
    }
    total
}

/// Discrete double integral `∬_{R_z×R_z} ψ(ζ,ζ') A(dζ) B(dζ')` over the open
/// `⋏` cone, with `ψ` evaluated at cell midpoints.
pub fn double_integral_discrete(
    psi: impl Fn(Point2, Point2) -> f64,
    a: &Field2D,
    b: &Field2D,
    z: &Point2,
) -> Result<f64, LatticeError> {
    a.same_grid(b)?;
    let g = a.grid;
    let (na, nb) = g.snap(z)?;
    Ok(double_integral_cells(|i, j, k, l| psi(g.node(i, j), g.node(k, l)), a, b, na, nb))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(z1: f64, z2: f64) -> Point2 {
        Point2::new(z1, z2).unwrap()
    }

    #[test]
    fn order_examples() {
        let r = partial_order_ops(&p(1.0, 2.0), &p(2.0, 1.0));
        assert!(r.curly);
        assert_eq!(r.meet, p(1.0, 1.0));
        assert_eq!(r.join, p(2.0, 2.0));
        assert_eq!(r.odot, p(1.0, 1.0));

        let r = partial_order_ops(&p(0.0, 0.0), &p(3.0, 4.0));
        assert!(r.prec);
        let same = partial_order_ops(&p(3.0, 4.0), &p(3.0, 4.0));
        assert!(same.prec && !same.prec_strict);

        let r = partial_order_ops(&p(2.0, 5.0), &p(3.0, 7.0));
        assert!(r.prec && r.prec_strict && !r.curly);
        assert_eq!(r.odot, p(2.0, 7.0));
    }

    #[test]
    fn negative_point_rejected() {
        assert!(Point2::new(-1.0, 0.0).is_err());
        assert!(Point2::new(0.0, f64::NAN).is_err());
    }

    #[test]
    fn rect_increment_of_product() {
        let g = Grid2D::new(4.0, 4.0, 4, 4).unwrap();
        let f = Field2D::from_corners(g, |z| z.z1 * z.z2);
        let r = Rect2::new(p(1.0, 1.0), p(2.0, 3.0)).unwrap();
        assert!((rect_increment(&f, &r).unwrap() - 2.0).abs() < 1e-12);
        let d = Rect2::new(p(2.0, 3.0), p(2.0, 3.0)).unwrap();
        assert_eq!(rect_increment(&f, &d).unwrap(), 0.0);
    }

    #[test]
    fn single_cell_of_ones() {
        let g = Grid2D::new(1.0, 2.0, 4, 5).unwrap();
        let area = g.cell_area();
        let inc = Field2D::from_fn(g, Placement::Node, |_, _| area);
        let cum = cumulative_from_increments(&inc);
        let r = Rect2::new(g.corner(2, 3), g.corner(3, 4)).unwrap();
        assert!((rect_increment(&cum, &r).unwrap() - area).abs() < 1e-15);
    }

    #[test]
    fn rect_outside_domain() {
        let g = Grid2D::unit(4);
        let f = Field2D::zeros(g, Placement::Corner);
        let r = Rect2::new(p(0.0, 0.0), p(1.5, 1.0)).unwrap();
        assert!(matches!(rect_increment(&f, &r), Err(LatticeError::OutsideDomain(..))));
    }

    #[test]
    fn increments_round_trip() {
        let g = Grid2D::new(1.0, 1.0, 3, 5).unwrap();
        let inc = Field2D::from_fn(g, Placement::Node, |i, j| (i * 7 + j * 3) as f64 - 4.0);
        let back = increments_from_cumulative(&cumulative_from_increments(&inc));
        assert!(back.max_abs_diff(&inc) < 1e-12);
    }

    #[test]
    fn double_integral_examples() {
        let g = Grid2D::unit(2);
        let mut a = Field2D::zeros(g, Placement::Node);
        a.set(1, 1, 1.0);
        let z = g.top_right();
        assert_eq!(double_integral_discrete(|_, _| 1.0, &a, &a, &z).unwrap(), 0.0);

        let mut a = Field2D::zeros(g, Placement::Node);
        let mut b = Field2D::zeros(g, Placement::Node);
        a.set(0, 1, 1.0);
        b.set(1, 0, 1.0);
        assert_eq!(double_integral_discrete(|_, _| 1.0, &a, &b, &z).unwrap(), 1.0);

        let ones = Field2D::from_fn(g, Placement::Node, |_, _| 1.0);
        assert_eq!(double_integral_discrete(|_, _| 1.0, &ones, &ones, &z).unwrap(), 1.0);
    }

    #[test]
    fn double_integral_brute_force() {
        let g = Grid2D::new(1.0, 1.0, 4, 3).unwrap();
        let a = Field2D::from_fn(g, Placement::Node, |i, j| ((i + 2 * j) % 5) as f64 - 1.5);
        let b = Field2D::from_fn(g, Placement::Node, |i, j| (i as f64 - j as f64) * 0.3 + 0.1);
        let psi = |x: Point2, y: Point2| x.z1 + 2.0 * y.z2 - x.z2 * y.z1;
        let z = g.corner(3, 3);
        let got = double_integral_discrete(psi, &a, &b, &z).unwrap();
        let mut want = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let (zi, zk) = (g.node(i, j), g.node(k, l));
                        if i < k && l < j {
                            assert!(zi.curly(&zk));
                            want += psi(zi, zk) * a.get(i, j) * b.get(k, l);
                        }
                    }
                }
            }
        }
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn double_integral_shape_error() {
        let a = Field2D::zeros(Grid2D::unit(2), Placement::Node);
        let b = Field2D::zeros(Grid2D::unit(3), Placement::Node);
        assert!(double_integral_discrete(|_, _| 1.0, &a, &b, &p(1.0, 1.0)).is_err());
    }
}
