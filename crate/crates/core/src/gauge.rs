//! Dynamics sets `F` and their Minkowski gauge `ρ_F(x) = inf{t ≥ 0 : x ∈ tF}`.
//!
//! Every kind is a closed, bounded, convex body with the origin in its
//! interior. Construction validates that and records bounding radii
//! `r_F ≤ R_F` with `B(0,r_F) ⊆ F ⊆ B(0,R_F)`, so that
//! `‖x‖/R_F ≤ ρ_F(x) ≤ ‖x‖/r_F`.

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::geometry::{enumerate_vertices, recession_direction, Vector};

/// Relative slack used to decide which faces are active at a kink.
pub const ACTIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum DynamicsKind {
    /// `{x : ‖x‖₂ ≤ radius}`
    Euclidean { radius: f64 },
    /// `{x : ‖x‖_p ≤ radius}` with `1 < p < ∞`
    Lp { p: f64, radius: f64 },
    /// `{x : ‖x‖_∞ ≤ radius}`
    SupBox { radius: f64 },
    /// `{x : xᵀAx ≤ 1}` with `A` symmetric positive definite
    Ellipsoid { shape: DMatrix<f64> },
    /// `{x : ⟨a_k,x⟩ ≤ b_k}` with every `b_k > 0`, bounded
    HPolytope {
        rows: Vec<Vector>,
        offsets: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Cache {
    None,
    EllipsoidInverse(DMatrix<f64>),
    Vertices(Vec<Vector>),
}

/// The unit ball of the dynamics; immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSet {
    kind: DynamicsKind,
    dim: usize,
    inner_radius: f64,
    outer_radius: f64,
    symmetric: bool,
    cache: Cache,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSet(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

fn positive_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::InvalidSet("dimension must be positive".into()))
    } else {
        Ok(())
    }
}

/// `‖x‖_p` computed with max-scaling to avoid overflow.
fn lp_norm(x: &Vector, p: f64) -> f64 {
    let m = x.amax();
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = x.iter().map(|v| (v.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl DynamicsSet {
    pub fn euclidean(dim: usize, radius: f64) -> Result<Self> {
        positive_dim(dim)?;
        positive("radius", radius)?;
        Ok(Self::build(
            DynamicsKind::Euclidean { radius },
            dim,
            radius,
            radius,
            true,
            Cache::None,
        ))
    }

    pub fn lp(dim: usize, p: f64, radius: f64) -> Result<Self> {
        positive_dim(dim)?;
        positive("radius", radius)?;
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidSet(format!(
                "lp ball needs 1 < p < inf, got {p}"
            )));
        }
        // ‖x‖_2 and ‖x‖_p differ by at most n^{|1/p-1/2|}
        let factor = (dim as f64).powf((1.0 / p - 0.5).abs());
        let (inner, outer) = if p <= 2.0 {
            (radius / factor, radius)
        } else {
            (radius, radius * factor)
        };
        Ok(Self::build(
            DynamicsKind::Lp { p, radius },
            dim,
            inner,
            outer,
            true,
            Cache::None,
        ))
    }

    pub fn sup_box(dim: usize, radius: f64) -> Result<Self> {
        positive_dim(dim)?;
        positive("radius", radius)?;
        let outer = radius * (dim as f64).sqrt();
        Ok(Self::build(
            DynamicsKind::SupBox { radius },
            dim,
            radius,
            outer,
            true,
            Cache::None,
        ))
    }

    /// `{x : xᵀAx ≤ 1}`; `shape` must be symmetric positive definite.
    pub fn ellipsoid(shape: DMatrix<f64>) -> Result<Self> {
        let dim = shape.nrows();
        positive_dim(dim)?;
        if shape.ncols() != dim {
            return Err(Error::InvalidSet("ellipsoid matrix must be square".into()));
        }
        let scale = shape.amax().max(f64::MIN_POSITIVE);
        if (&shape - shape.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidSet(
                "ellipsoid matrix must be symmetric".into(),
            ));
        }
        let Some(chol) = shape.clone().cholesky() else {
            return Err(Error::InvalidSet(
                "ellipsoid matrix must be positive definite".into(),
            ));
        };
        let eig = shape.clone().symmetric_eigen();
        let lmin = eig.eigenvalues.min();
        let lmax = eig.eigenvalues.max();
        if !(lmin > 0.0) || !lmax.is_finite() {
            return Err(Error::InvalidSet(
                "ellipsoid matrix must be positive definite".into(),
            ));
        }
        let inverse = chol.inverse();
        Ok(Self::build(
            DynamicsKind::Ellipsoid { shape },
            dim,
            1.0 / lmax.sqrt(),
            1.0 / lmin.sqrt(),
            true,
            Cache::EllipsoidInverse(inverse),
        ))
    }

    /// `{x : ⟨a_k,x⟩ ≤ b_k}`. Requires `b_k > 0` (origin interior) and a
    /// bounded polytope; rows may be asymmetric.
    pub fn hpolytope(rows: Vec<Vector>, offsets: Vec<f64>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidSet("polytope needs at least one row".into()));
        };
        let dim = first.len();
        positive_dim(dim)?;
        if rows.len() != offsets.len() {
            return Err(Error::InvalidSet(format!(
                "{} rows but {} offsets",
                rows.len(),
                offsets.len()
            )));
        }
        for (a, &b) in rows.iter().zip(&offsets) {
            check_dim(dim, a.len())?;
            positive("polytope offset", b)?;
            if !(a.norm() > 0.0) || a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSet(
                    "polytope rows must be finite and nonzero".into(),
                ));
            }
        }
        if recession_direction(&rows, dim)?.is_some() {
            return Err(Error::InvalidSet(
                "polytope dynamics set is unbounded".into(),
            ));
        }
        let vertices = enumerate_vertices(&rows, &offsets, dim)?;
        let inner = rows
            .iter()
            .zip(&offsets)
            .map(|(a, b)| b / a.norm())
            .fold(f64::INFINITY, f64::min);
        let outer = vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let symmetric = rows.iter().zip(&offsets).all(|(a, &b)| {
            let u = a / b;
            rows.iter()
                .zip(&offsets)
                .any(|(c, &d)| (&u + c / d).norm() <= 1e-12 * u.norm())
        });
        Ok(Self::build(
            DynamicsKind::HPolytope { rows, offsets },
            dim,
            inner,
            outer,
            symmetric,
            Cache::Vertices(vertices),
        ))
    }

    fn build(
        kind: DynamicsKind,
        dim: usize,
        inner: f64,
        outer: f64,
        symmetric: bool,
        cache: Cache,
    ) -> Self {
        DynamicsSet {
            kind,
            dim,
            inner_radius: inner,
            outer_radius: outer,
            symmetric,
            cache,
        }
    }

    pub fn kind(&self) -> &DynamicsKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `r_F`: radius of a Euclidean ball around 0 contained in `F`.
    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    /// `R_F`: radius of a Euclidean ball around 0 containing `F`.
    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    /// True for the Euclidean, `ℓ_p` and ellipsoidal kinds.
    pub fn is_strictly_convex(&self) -> bool {
        matches!(
            self.kind,
            DynamicsKind::Euclidean { .. }
                | DynamicsKind::Lp { .. }
                | DynamicsKind::Ellipsoid { .. }
        )
    }

    /// True when `F = -F`.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Vertices of a polyhedral dynamics set (`None` for smooth kinds;
    /// box vertices are not materialized).
    pub fn vertices(&self) -> Option<&[Vector]> {
        match &self.cache {
            Cache::Vertices(v) => Some(v),
            _ => None,
        }
    }

    pub fn gauge(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.gauge_of(x))
    }

    pub(crate) fn gauge_of(&self, x: &Vector) -> f64 {
        match &self.kind {
            DynamicsKind::Euclidean { radius } => x.norm() / radius,
            DynamicsKind::Lp { p, radius } => lp_norm(x, *p) / radius,
            DynamicsKind::SupBox { radius } => x.amax() / radius,
            DynamicsKind::Ellipsoid { shape } => x.dot(&(shape * x)).max(0.0).sqrt(),
            DynamicsKind::HPolytope { rows, offsets } => rows
                .iter()
                .zip(offsets)
                .map(|(a, b)| a.dot(x) / b)
                .fold(0.0, f64::max),
        }
    }

    /// An element of `∂ρ_F(x)`. Polyhedral kinds return the row of the
    /// first active face in stored order; `x = 0` yields the zero vector.
    pub fn subgradient(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        Ok(self.subgradient_of(x))
    }

    pub(crate) fn subgradient_of(&self, x: &Vector) -> Vector {
        let n = self.dim;
        if x.iter().all(|&v| v == 0.0) {
            return Vector::zeros(n);
        }
        match &self.kind {
            DynamicsKind::Euclidean { radius } => x / (radius * x.norm()),
            DynamicsKind::Lp { p, radius } => {
                let norm = lp_norm(x, *p);
                x.map(|v| sign(v) * (v.abs() / norm).powf(p - 1.0) / radius)
            }
            DynamicsKind::SupBox { radius } => {
                // stored row order is +e_1, -e_1, +e_2, -e_2, ...
                let m = x.amax();
                let tol = ACTIVE_TOL * m.max(1.0);
                let i = x.iter().position(|v| v.abs() >= m - tol).unwrap_or(0);
                let mut g = Vector::zeros(n);
                g[i] = sign(x[i]) / radius;
                g
            }
            DynamicsKind::Ellipsoid { shape } => {
                let ax = shape * x;
                let q = x.dot(&ax).max(0.0).sqrt();
                ax / q
            }
            DynamicsKind::HPolytope { rows, offsets } => {
                let vals: Vec<f64> = rows
                    .iter()
                    .zip(offsets)
                    .map(|(a, b)| a.dot(x) / b)
                    .collect();
                let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let tol = ACTIVE_TOL * m.abs().max(1.0);
                let k = vals.iter().position(|&v| v >= m - tol).unwrap_or(0);
                &rows[k] / offsets[k]
            }
        }
    }

    /// Whether `ρ_F(x) ≤ 1 + tol`.
    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        Ok(self.gauge(x)? <= 1.0 + tol)
    }

    /// Support function `σ_F(w) = max{⟨w,f⟩ : f ∈ F}`.
    pub fn support(&self, w: &Vector) -> f64 {
        match &self.kind {
            DynamicsKind::Euclidean { radius } => radius * w.norm(),
            DynamicsKind::Lp { p, radius } => radius * lp_norm(w, p / (p - 1.0)),
            DynamicsKind::SupBox { radius } => radius * w.lp_norm(1),
            DynamicsKind::Ellipsoid { .. } => match &self.cache {
                Cache::EllipsoidInverse(inv) => w.dot(&(inv * w)).max(0.0).sqrt(),
                _ => unreachable!("ellipsoid always caches its inverse"),
            },
            DynamicsKind::HPolytope { .. } => self
                .vertices()
                .map(|vs| {
                    vs.iter()
                        .map(|v| v.dot(w))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .unwrap_or(0.0),
        }
    }

    /// A point of `F` attaining `σ_F(w)`; the origin when `w = 0`.
    pub fn support_point(&self, w: &Vector) -> Vector {
        let n = self.dim;
        if w.iter().all(|&v| v == 0.0) {
            return Vector::zeros(n);
        }
        match &self.kind {
            DynamicsKind::Euclidean { radius } => w * (radius / w.norm()),
            DynamicsKind::Lp { p, radius } => {
                let q = p / (p - 1.0);
                let norm = lp_norm(w, q);
                w.map(|v| radius * sign(v) * (v.abs() / norm).powf(q - 1.0))
            }
            DynamicsKind::SupBox { radius } => w.map(|v| radius * sign(v)),
            DynamicsKind::Ellipsoid { .. } => match &self.cache {
                Cache::EllipsoidInverse(inv) => {
                    let iw = inv * w;
                    let s = w.dot(&iw).max(0.0).sqrt();
                    iw / s
                }
                _ => unreachable!("ellipsoid always caches its inverse"),
            },
            DynamicsKind::HPolytope { .. } => {
                let vs = self.vertices().expect("polytope vertices are cached");
                let mut best = 0;
                let mut val = vs[0].dot(w);
                for (i, v) in vs.iter().enumerate().skip(1) {
                    let d = v.dot(w);
                    if d > val + 1e-12 * val.abs().max(1.0) {
                        val = d;
                        best = i;
                    }
                }
                vs[best].clone()
            }
        }
    }

    /// `d / ρ_F(d)`, the boundary point of `F` in direction `d ≠ 0`.
    pub fn boundary_point(&self, d: &Vector) -> Vector {
        let g = self.gauge_of(d);
        if g > 0.0 {
            d / g
        } else {
            Vector::zeros(self.dim)
        }
    }

    /// Boundary point in direction `e_1`; used where any boundary point will do.
    pub fn canonical_boundary_point(&self) -> Vector {
        let mut e = Vector::zeros(self.dim);
        e[0] = 1.0;
        self.boundary_point(&e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    pub(crate) fn diamond() -> DynamicsSet {
        let rows = vec![
            v(&[1.0, 1.0]),
            v(&[1.0, -1.0]),
            v(&[-1.0, 1.0]),
            v(&[-1.0, -1.0]),
        ];
        DynamicsSet::hpolytope(rows, vec![2.0; 4]).unwrap()
    }

    /// Smallest t with x ∈ tF by bisection on the raw row inequalities.
    fn bisect_polytope_gauge(rows: &[Vector], offsets: &[f64], x: &Vector) -> f64 {
        let inside = |t: f64| rows.iter().zip(offsets).all(|(a, &b)| a.dot(x) <= t * b);
        let (mut lo, mut hi) = (0.0, 1.0);
        while !inside(hi) {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if inside(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    #[test]
    fn euclidean_gauge_is_norm() {
        let f = DynamicsSet::euclidean(2, 1.0).unwrap();
        assert_eq!(f.gauge(&v(&[3.0, 4.0])).unwrap(), 5.0);
    }

    #[test]
    fn sup_box_gauge() {
        let f = DynamicsSet::sup_box(2, 1.0).unwrap();
        assert_eq!(f.gauge(&v(&[3.0, -2.0])).unwrap(), 3.0);
    }

    #[test]
    fn diamond_gauge_matches_bisection() {
        let rows = vec![
            v(&[1.0, 1.0]),
            v(&[1.0, -1.0]),
            v(&[-1.0, 1.0]),
            v(&[-1.0, -1.0]),
        ];
        let oracle = bisect_polytope_gauge(&rows, &[2.0; 4], &v(&[1.0, 1.0]));
        assert_relative_eq!(oracle, 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            diamond().gauge(&v(&[1.0, 1.0])).unwrap(),
            oracle,
            epsilon = 1e-12
        );
    }

    #[test]
    fn subgradient_examples() {
        let f = DynamicsSet::euclidean(2, 1.0).unwrap();
        let g = f.subgradient(&v(&[3.0, 4.0])).unwrap();
        assert_relative_eq!(g, v(&[0.6, 0.8]), epsilon = 1e-15);
        let b = DynamicsSet::sup_box(2, 1.0).unwrap();
        assert_eq!(b.subgradient(&v(&[3.0, -2.0])).unwrap(), v(&[1.0, 0.0]));
    }

    #[test]
    fn ellipsoid_subgradient_matches_finite_differences() {
        let f = DynamicsSet::ellipsoid(DMatrix::from_diagonal(&v(&[4.0, 1.0]))).unwrap();
        let x = v(&[1.0, 0.0]);
        assert_relative_eq!(f.gauge(&x).unwrap(), 2.0, epsilon = 1e-15);
        let h = 1e-6;
        let mut fd = Vector::zeros(2);
        for i in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            fd[i] = (f.gauge(&xp).unwrap() - f.gauge(&xm).unwrap()) / (2.0 * h);
        }
        assert_relative_eq!(fd, v(&[2.0, 0.0]), epsilon = 1e-5);
        assert_relative_eq!(f.subgradient(&x).unwrap(), fd, epsilon = 1e-5);
    }

    #[test]
    fn contains_examples() {
        let f = DynamicsSet::euclidean(2, 1.0).unwrap();
        assert!(f.contains(&v(&[1.0, 0.0]), 0.0).unwrap());
        let b = DynamicsSet::sup_box(2, 1.0).unwrap();
        assert!(!b.contains(&v(&[1.001, 0.0]), 0.0).unwrap());
        assert!(diamond().contains(&v(&[2.0000005, 0.0]), 1e-6).unwrap());
    }

    #[test]
    fn zero_subgradient_at_origin() {
        assert_eq!(
            diamond().subgradient(&v(&[0.0, 0.0])).unwrap(),
            v(&[0.0, 0.0])
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let f = DynamicsSet::euclidean(2, 1.0).unwrap();
        assert!(matches!(
            f.gauge(&v(&[1.0, 2.0, 3.0])),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
        assert!(f.subgradient(&v(&[1.0])).is_err());
    }

    #[test]
    fn rejects_bad_sets() {
        assert!(DynamicsSet::euclidean(2, 0.0).is_err());
        assert!(DynamicsSet::lp(2, 1.0, 1.0).is_err());
        assert!(
            DynamicsSet::ellipsoid(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).is_err()
        );
        assert!(
            DynamicsSet::ellipsoid(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])).is_err()
        );
        // strip: passes a per-coordinate support test but is unbounded
        let strip = vec![v(&[1.0, 1.0]), v(&[-1.0, -1.0])];
        assert!(DynamicsSet::hpolytope(strip, vec![1.0, 1.0]).is_err());
        // origin on the boundary
        let tri = vec![v(&[-1.0, 0.0]), v(&[0.0, -1.0]), v(&[1.0, 1.0])];
        assert!(DynamicsSet::hpolytope(tri, vec![0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn polytope_radii_and_symmetry() {
        let d = diamond();
        assert_relative_eq!(d.inner_radius(), 2.0 / 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(d.outer_radius(), 2.0, epsilon = 1e-12);
        assert!(d.is_symmetric());
        let tri = vec![v(&[-1.0, 0.0]), v(&[0.0, -1.0]), v(&[1.0, 1.0])];
        let t = DynamicsSet::hpolytope(tri, vec![1.0, 1.0, 1.0]).unwrap();
        assert!(!t.is_symmetric());
        assert!(!t.is_strictly_convex());
        assert_eq!(t.vertices().unwrap().len(), 3);
    }

    #[test]
    fn support_function_matches_support_point() {
        let sets = vec![
            DynamicsSet::euclidean(2, 2.0).unwrap(),
            DynamicsSet::lp(2, 3.0, 1.5).unwrap(),
            DynamicsSet::sup_box(2, 0.5).unwrap(),
            DynamicsSet::ellipsoid(DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0])).unwrap(),
            diamond(),
        ];
        let w = v(&[0.7, -1.3]);
        for f in sets {
            let p = f.support_point(&w);
            assert!(f.gauge(&p).unwrap() <= 1.0 + 1e-12);
            assert_relative_eq!(p.dot(&w), f.support(&w), epsilon = 1e-12);
        }
    }
}
