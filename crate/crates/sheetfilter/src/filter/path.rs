use crate::lattice::{Grid2D, Point2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("path must start at corner (0, 0), starts at {0:?}")]
    Start((usize, usize)),
    #[error("path must end at corner ({0}, {1})")]
    End(usize, usize),
    #[error("step {0} from {1:?} to {2:?} is not a single grid step in z1 or z2")]
    NotStaircase(usize, (usize, usize), (usize, usize)),
    #[error("point {0:?} lies outside the path's domain")]
    Outside(Point2),
}

/// Nondecreasing staircase of grid corners from `(0, 0)` to `(n1, n2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonePath {
    pub grid: Grid2D,
    pub points: Vec<(usize, usize)>,
}

impl MonotonePath {
    pub fn new(grid: Grid2D, points: Vec<(usize, usize)>) -> Result<Self, PathError> {
        let first = *points.first().ok_or(PathError::Start((usize::MAX, usize::MAX)))?;
        if first != (0, 0) {
            return Err(PathError::Start(first));
        }
        if *points.last().unwrap() != (grid.n1, grid.n2) {
            return Err(PathError::End(grid.n1, grid.n2));
        }
        for (k, w) in points.windows(2).enumerate() {
            let (p, q) = (w[0], w[1]);
            let ok = (q.0 == p.0 + 1 && q.1 == p.1) || (q.0 == p.0 && q.1 == p.1 + 1);
            if !ok {
                return Err(PathError::NotStaircase(k, p, q));
            }
        }
        Ok(MonotonePath { grid, points })
    }

    /// Along the z1 axis first, then up.
    pub fn lower_l(grid: Grid2D) -> Self {
        let mut pts: Vec<_> = (0..=grid.n1).map(|a| (a, 0)).collect();
        pts.extend((1..=grid.n2).map(|b| (grid.n1, b)));
        MonotonePath { grid, points: pts }
    }

    /// Along the z2 axis first, then right.
    pub fn upper_l(grid: Grid2D) -> Self {
        let mut pts: Vec<_> = (0..=grid.n2).map(|b| (0, b)).collect();
        pts.extend((1..=grid.n1).map(|a| (a, grid.n2)));
        MonotonePath { grid, points: pts }
    }

    /// Staircase that stays closest to the straight line from the origin to `T`.
    pub fn diagonal(grid: Grid2D) -> Self {
        let (n1, n2) = (grid.n1, grid.n2);
        let mut pts = vec![(0, 0)];
        let (mut a, mut b) = (0, 0);
        while (a, b) != (n1, n2) {
            // step in z1 when (a+1)/n1 is no further ahead than (b+1)/n2
            if b == n2 || (a < n1 && (a + 1) * n2 <= (b + 1) * n1) {
                a += 1;
            } else {
                b += 1;
            }
            pts.push((a, b));
        }
        MonotonePath { grid, points: pts }
    }

    pub fn corner_point(&self, k: usize) -> Point2 {
        let (a, b) = self.points[k];
        self.grid.corner(a, b)
    }

    /// Index of the smallest path point dominating `z`.
    pub fn projection_index(&self, z: &Point2) -> Result<usize, PathError> {
        let tol = 1e-12 * (self.grid.t1 + self.grid.t2);
        if z.z1 > self.grid.t1 + tol || z.z2 > self.grid.t2 + tol {
            return Err(PathError::Outside(*z));
        }
        Ok(self
            .points
            .iter()
            .position(|&(a, b)| {
                let p = self.grid.corner(a, b);
                z.z1 <= p.z1 + tol && z.z2 <= p.z2 + tol
            })
            .expect("the end point dominates the domain"))
    }

    /// `z_Δ`.
    pub fn projection(&self, z: &Point2) -> Result<Point2, PathError> {
        Ok(self.corner_point(self.projection_index(z)?))
    }

    /// Cells added to the rectangle by step `k → k+1`.
    pub fn new_cells(&self, k: usize) -> Vec<(usize, usize)> {
        let (a, b) = self.points[k];
        let (a2, _) = self.points[k + 1];
        if a2 == a + 1 {
            (0..b).map(|j| (a, j)).collect()
        } else {
            (0..a).map(|i| (i, b)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64) -> Point2 {
        Point2::new(a, b).unwrap()
    }

    #[test]
    fn builtin_paths_are_staircases() {
        for g in [Grid2D::unit(4), Grid2D::new(1.0, 2.0, 5, 3).unwrap(), Grid2D::new(1.0, 1.0, 2, 7).unwrap()] {
            for path in [MonotonePath::lower_l(g), MonotonePath::upper_l(g), MonotonePath::diagonal(g)] {
                assert_eq!(path.points.len(), g.n1 + g.n2 + 1);
                MonotonePath::new(g, path.points.clone()).unwrap();
            }
        }
    }

    #[test]
    fn diagonal_on_square_alternates() {
        let d = MonotonePath::diagonal(Grid2D::unit(3));
        assert_eq!(d.points, vec![(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (3, 2), (3, 3)]);
    }

    #[test]
    fn rejects_bad_paths() {
        let g = Grid2D::unit(2);
        assert!(matches!(MonotonePath::new(g, vec![(0, 0), (1, 1), (2, 2)]), Err(PathError::NotStaircase(0, _, _))));
        assert!(matches!(MonotonePath::new(g, vec![(0, 1), (1, 1)]), Err(PathError::Start(_))));
        assert!(matches!(MonotonePath::new(g, vec![(0, 0), (1, 0)]), Err(PathError::End(2, 2))));
    }

    #[test]
    fn projection_examples() {
        let g = Grid2D::unit(4);
        let d = MonotonePath::diagonal(g);
        // a point on the path projects to itself
        assert_eq!(d.projection(&p(0.5, 0.25)).unwrap(), p(0.5, 0.25));
        assert_eq!(d.projection(&p(1.0, 1.0)).unwrap(), p(1.0, 1.0));
        // brute force: minimal dominating path node
        let z = p(0.2, 0.7);
        let dominating: Vec<Point2> = d.points.iter().map(|&(a, b)| g.corner(a, b)).filter(|q| z.prec(q)).collect();
        let minimal = dominating.iter().find(|q| dominating.iter().all(|r| q.prec(r))).unwrap();
        assert_eq!(d.projection(&z).unwrap(), *minimal);
        assert_eq!(*minimal, p(0.75, 0.75));
        assert!(d.projection(&p(1.5, 0.2)).is_err());
    }

    #[test]
    fn new_cells_tile_the_domain() {
        let g = Grid2D::new(1.0, 1.0, 4, 3).unwrap();
        for path in [MonotonePath::lower_l(g), MonotonePath::upper_l(g), MonotonePath::diagonal(g)] {
            let mut seen = vec![0; 12];
            for k in 0..path.points.len() - 1 {
                for (i, j) in path.new_cells(k) {
                    seen[i * 3 + j] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1));
        }
    }
}
