//! The feasible region `S` and its Euclidean projection.

use crate::error::{check_dim, Error, Result};
use crate::geometry::{dykstra_halfspaces, recession_direction, Vector};

pub const DYKSTRA_SWEEPS: usize = 500;
pub const DYKSTRA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintKind {
    WholeSpace,
    Box {
        lo: Vector,
        hi: Vector,
    },
    EuclideanBall {
        center: Vector,
        radius: f64,
    },
    HalfSpace {
        normal: Vector,
        offset: f64,
    },
    HPolytope {
        rows: Vec<Vector>,
        offsets: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    kind: ConstraintKind,
    dim: usize,
    compact: bool,
}

impl ConstraintSet {
    pub fn whole_space(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSet("dimension must be positive".into()));
        }
        Ok(ConstraintSet {
            kind: ConstraintKind::WholeSpace,
            dim,
            compact: false,
        })
    }

    pub fn boxed(lo: Vector, hi: Vector) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(Error::InvalidSet("dimension must be positive".into()));
        }
        if lo
            .iter()
            .zip(hi.iter())
            .any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b))
        {
            return Err(Error::InvalidSet("box needs finite lo <= hi".into()));
        }
        let dim = lo.len();
        Ok(ConstraintSet {
            kind: ConstraintKind::Box { lo, hi },
            dim,
            compact: true,
        })
    }

    pub fn euclidean_ball(center: Vector, radius: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSet(
                "ball center must be finite and nonempty".into(),
            ));
        }
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::InvalidSet(format!(
                "ball radius must be >= 0, got {radius}"
            )));
        }
        let dim = center.len();
        Ok(ConstraintSet {
            kind: ConstraintKind::EuclideanBall { center, radius },
            dim,
            compact: true,
        })
    }

    pub fn halfspace(normal: Vector, offset: f64) -> Result<Self> {
        if normal.is_empty() || !(normal.norm() > 0.0) || !normal.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidSet(
                "half-space needs a finite nonzero normal".into(),
            ));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidSet("half-space offset must be finite".into()));
        }
        let dim = normal.len();
        Ok(ConstraintSet {
            kind: ConstraintKind::HalfSpace { normal, offset },
            dim,
            compact: false,
        })
    }

    pub fn hpolytope(rows: Vec<Vector>, offsets: Vec<f64>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidSet("polytope needs at least one row".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidSet("dimension must be positive".into()));
        }
        if rows.len() != offsets.len() {
            return Err(Error::InvalidSet(format!(
                "{} rows but {} offsets",
                rows.len(),
                offsets.len()
            )));
        }
        for a in &rows {
            check_dim(dim, a.len())?;
            if !(a.norm() > 0.0) || !a.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidSet(
                    "polytope rows must be finite and nonzero".into(),
                ));
            }
        }
        if offsets.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidSet("polytope offsets must be finite".into()));
        }
        let p = dykstra_halfspaces(
            &rows,
            &offsets,
            &Vector::zeros(dim),
            4 * DYKSTRA_SWEEPS,
            1e-12,
        );
        let worst = rows
            .iter()
            .zip(&offsets)
            .map(|(a, b)| (a.dot(&p) - b) / a.norm())
            .fold(f64::NEG_INFINITY, f64::max);
        if worst > 1e-7 {
            return Err(Error::InvalidSet("constraint polytope is empty".into()));
        }
        let compact = recession_direction(&rows, dim)?.is_none();
        Ok(ConstraintSet {
            kind: ConstraintKind::HPolytope { rows, offsets },
            dim,
            compact,
        })
    }

    pub fn kind(&self) -> &ConstraintKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_compact(&self) -> bool {
        self.compact
    }

    /// Euclidean projection onto `S`. Closed forms except for H-polytopes,
    /// which use Dykstra's alternating projections.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        Ok(self.project_of(x))
    }

    pub(crate) fn project_of(&self, x: &Vector) -> Vector {
        match &self.kind {
            ConstraintKind::WholeSpace => x.clone(),
            ConstraintKind::Box { lo, hi } => {
                Vector::from_iterator(self.dim, (0..self.dim).map(|i| x[i].clamp(lo[i], hi[i])))
            }
            ConstraintKind::EuclideanBall { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if n <= *radius {
                    x.clone()
                } else {
                    center + d * (radius / n)
                }
            }
            ConstraintKind::HalfSpace { normal, offset } => {
                let e = normal.dot(x) - offset;
                if e <= 0.0 {
                    x.clone()
                } else {
                    x - normal * (e / normal.norm_squared())
                }
            }
            ConstraintKind::HPolytope { rows, offsets } => {
                dykstra_halfspaces(rows, offsets, x, DYKSTRA_SWEEPS, DYKSTRA_TOL)
            }
        }
    }

    /// Whether `x` is within Euclidean distance `tol` of `S` (per-row
    /// test for the linear kinds).
    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        Ok(match &self.kind {
            ConstraintKind::WholeSpace => true,
            ConstraintKind::Box { lo, hi } => {
                (0..self.dim).all(|i| x[i] >= lo[i] - tol && x[i] <= hi[i] + tol)
            }
            ConstraintKind::EuclideanBall { center, radius } => (x - center).norm() <= radius + tol,
            ConstraintKind::HalfSpace { normal, offset } => {
                normal.dot(x) - offset <= tol * normal.norm()
            }
            ConstraintKind::HPolytope { rows, offsets } => rows
                .iter()
                .zip(offsets)
                .all(|(a, b)| a.dot(x) - b <= tol * a.norm()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn box_clamps() {
        let s = ConstraintSet::boxed(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        assert_eq!(s.project(&v(&[2.0, -1.0])).unwrap(), v(&[1.0, 0.0]));
        assert!(s.is_compact());
    }

    #[test]
    fn ball_projection() {
        let s = ConstraintSet::euclidean_ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert_relative_eq!(
            s.project(&v(&[3.0, 4.0])).unwrap(),
            v(&[0.6, 0.8]),
            epsilon = 1e-15
        );
    }

    #[test]
    fn triangle_projection_matches_grid() {
        let s = ConstraintSet::hpolytope(
            vec![v(&[-1.0, 0.0]), v(&[0.0, -1.0]), v(&[1.0, 1.0])],
            vec![0.0, 0.0, 1.0],
        )
        .unwrap();
        assert!(s.is_compact());
        let x = v(&[1.0, 1.0]);
        let p = s.project(&x).unwrap();
        assert_relative_eq!(p, v(&[0.5, 0.5]), epsilon = 1e-9);
        // brute force over a grid of the triangle
        let n = 400;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let q = v(&[i as f64 / n as f64, j as f64 / n as f64]);
                best = best.min((&q - &x).norm());
            }
        }
        assert!(((&p - &x).norm() - best).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_sets() {
        assert!(ConstraintSet::boxed(v(&[1.0]), v(&[0.0])).is_err());
        assert!(ConstraintSet::halfspace(v(&[0.0, 0.0]), 1.0).is_err());
        assert!(ConstraintSet::hpolytope(vec![v(&[1.0]), v(&[-1.0])], vec![-1.0, -1.0]).is_err());
    }

    #[test]
    fn halfspace_is_not_compact() {
        let s = ConstraintSet::halfspace(v(&[1.0, 0.0]), 0.0).unwrap();
        assert!(!s.is_compact());
        assert_eq!(s.project(&v(&[2.0, 3.0])).unwrap(), v(&[0.0, 3.0]));
        assert!(s.contains(&v(&[0.0, 3.0]), 0.0).unwrap());
    }
}
