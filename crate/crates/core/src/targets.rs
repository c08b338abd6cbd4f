//! Target sets and their farthest/nearest points under a gauge.
//!
//! For a dynamics set `F`, a target `Q` and a point `x`:
//! the farthest projection maximizes `ρ_F(q − x)` over `q ∈ Q` and the
//! nearest projection minimizes it. They realize the maximal and minimal
//! time functions.
//!
//! Nearest points are exact wherever a closed form or a finite dual
//! enumeration exists (every kind in dimension ≤ 2 except unbounded
//! H-polytopes). Otherwise an iterative projected-subgradient routine is
//! used and its final step length is reported as the achieved tolerance.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::gauge::{DynamicsKind, DynamicsSet};
use crate::geometry::{
    dykstra_halfspaces, enumerate_vertices, golden_section, hull_2d, nearest_on_hull_2d,
    project_hull, project_simplex, recession_direction, Vector,
};

/// Relative tie window for argmax/argmin over point lists.
pub const TIE_TOL: f64 = 1e-12;
/// Iteration budget of the generic nearest-point routine.
pub const GENERIC_MAX_ITERS: usize = 2000;
/// Step length below which the generic routine stops.
pub const GENERIC_MIN_STEP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum TargetKind {
    /// Finite point set (not convex unless it has one point).
    Points(Vec<Vector>),
    /// Convex hull of the listed vertices.
    VPolytope(Vec<Vector>),
    /// `center + scale·F` for the dynamics set it was built with.
    ExtendedBall {
        center: Vector,
        scale: f64,
        dynamics: DynamicsSet,
    },
    EuclideanBall {
        center: Vector,
        radius: f64,
    },
    /// `{x : ⟨normal,x⟩ ≤ offset}`
    HalfSpace {
        normal: Vector,
        offset: f64,
    },
    /// `{x : ⟨a_k,x⟩ ≤ b_k}`; may be unbounded or have empty interior.
    HPolytope {
        rows: Vec<Vector>,
        offsets: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    kind: TargetKind,
    dim: usize,
    bounded: bool,
    /// Vertex description for bounded polyhedral kinds.
    vertices: Option<Vec<Vector>>,
    /// Planar hull of `vertices` (dimension 2 only).
    hull: Option<Vec<[f64; 2]>>,
}

/// A farthest or nearest point together with the gauge value it attains.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: Vector,
    pub value: f64,
    /// An element `g ∈ ∂ρ_F(point − x)` chosen so that `−g` is a
    /// subgradient of the corresponding time function at `x`.
    pub gauge_subgradient: Vector,
    /// Zero for exact routines; otherwise the last step length of the
    /// iterative routine or the primal-dual gap of a dual enumeration.
    pub tolerance: f64,
}

fn finite_vec(v: &Vector, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidSet(format!(
            "{what} has non-finite coordinates"
        )))
    }
}

fn point_list(points: &[Vector], what: &str) -> Result<usize> {
    let Some(first) = points.first() else {
        return Err(Error::InvalidSet(format!("{what} must be nonempty")));
    };
    let dim = first.len();
    if dim == 0 {
        return Err(Error::InvalidSet("dimension must be positive".into()));
    }
    for p in points {
        check_dim(dim, p.len())?;
        finite_vec(p, what)?;
    }
    Ok(dim)
}

fn planar_hull(vertices: &[Vector]) -> Option<Vec<[f64; 2]>> {
    if vertices.first()?.len() != 2 {
        return None;
    }
    let pts: Vec<[f64; 2]> = vertices.iter().map(|v| [v[0], v[1]]).collect();
    Some(hull_2d(&pts))
}

fn v2(p: [f64; 2]) -> Vector {
    Vector::from_column_slice(&p)
}

/// Index of the extreme value, ties resolved to the first index within
/// [`TIE_TOL`] (relative) of the extreme.
fn extreme_index(vals: &[f64], largest: bool) -> usize {
    let ext = if largest {
        vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    } else {
        vals.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let tol = TIE_TOL * ext.abs().max(1.0);
    vals.iter()
        .position(|&v| (v - ext).abs() <= tol)
        .unwrap_or(0)
}

fn is_euclidean(f: &DynamicsSet) -> Option<f64> {
    match f.kind() {
        DynamicsKind::Euclidean { radius } => Some(*radius),
        _ => None,
    }
}

impl TargetSet {
    pub fn points(points: Vec<Vector>) -> Result<Self> {
        let dim = point_list(&points, "point set")?;
        Ok(TargetSet {
            kind: TargetKind::Points(points),
            dim,
            bounded: true,
            vertices: None,
            hull: None,
        })
    }

    pub fn vpolytope(vertices: Vec<Vector>) -> Result<Self> {
        let dim = point_list(&vertices, "vertex list")?;
        let hull = planar_hull(&vertices);
        Ok(TargetSet {
            kind: TargetKind::VPolytope(vertices.clone()),
            dim,
            bounded: true,
            vertices: Some(vertices),
            hull,
        })
    }

    /// `center + scale·F`, carrying its own copy of `F`.
    pub fn extended_ball(center: Vector, scale: f64, dynamics: &DynamicsSet) -> Result<Self> {
        check_dim(dynamics.dim(), center.len())?;
        finite_vec(&center, "ball center")?;
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::InvalidSet(format!(
                "extended ball scale must be >= 0, got {scale}"
            )));
        }
        let dim = center.len();
        // asymmetric polyhedral balls have no closed-form nearest point
        let vertices = if !dynamics.is_symmetric() && scale > 0.0 {
            dynamics
                .vertices()
                .map(|vs| vs.iter().map(|v| &center + v * scale).collect::<Vec<_>>())
        } else {
            None
        };
        let hull = vertices.as_deref().and_then(planar_hull);
        Ok(TargetSet {
            kind: TargetKind::ExtendedBall {
                center,
                scale,
                dynamics: dynamics.clone(),
            },
            dim,
            bounded: true,
            vertices,
            hull,
        })
    }

    pub fn euclidean_ball(center: Vector, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidSet("dimension must be positive".into()));
        }
        finite_vec(&center, "ball center")?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidSet(format!(
                "ball radius must be > 0, got {radius}"
            )));
        }
        let dim = center.len();
        Ok(TargetSet {
            kind: TargetKind::EuclideanBall { center, radius },
            dim,
            bounded: true,
            vertices: None,
            hull: None,
        })
    }

    pub fn halfspace(normal: Vector, offset: f64) -> Result<Self> {
        if normal.is_empty() {
            return Err(Error::InvalidSet("dimension must be positive".into()));
        }
        finite_vec(&normal, "half-space normal")?;
        if !(normal.norm() > 0.0) || !offset.is_finite() {
            return Err(Error::InvalidSet(
                "half-space needs a nonzero normal and finite offset".into(),
            ));
        }
        let dim = normal.len();
        Ok(TargetSet {
            kind: TargetKind::HalfSpace { normal, offset },
            dim,
            bounded: false,
            vertices: None,
            hull: None,
        })
    }

    pub fn hpolytope(rows: Vec<Vector>, offsets: Vec<f64>) -> Result<Self> {
        let dim = point_list(&rows, "polytope rows")?;
        if rows.len() != offsets.len() {
            return Err(Error::InvalidSet(format!(
                "{} rows but {} offsets",
                rows.len(),
                offsets.len()
            )));
        }
        if rows.iter().any(|a| !(a.norm() > 0.0)) || offsets.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidSet(
                "polytope rows must be nonzero with finite offsets".into(),
            ));
        }
        let bounded = recession_direction(&rows, dim)?.is_none();
        let vertices = if bounded {
            let vs = enumerate_vertices(&rows, &offsets, dim)?;
            if vs.is_empty() {
                return Err(Error::InvalidSet("polytope is empty".into()));
            }
            Some(vs)
        } else {
            let p = dykstra_halfspaces(&rows, &offsets, &Vector::zeros(dim), 2000, 1e-12);
            let worst = rows
                .iter()
                .zip(&offsets)
                .map(|(a, b)| (a.dot(&p) - b) / a.norm())
                .fold(f64::NEG_INFINITY, f64::max);
            if worst > 1e-7 {
                return Err(Error::InvalidSet("polytope is empty".into()));
            }
            None
        };
        let hull = vertices.as_deref().and_then(planar_hull);
        Ok(TargetSet {
            kind: TargetKind::HPolytope { rows, offsets },
            dim,
            bounded,
            vertices,
            hull,
        })
    }

    pub fn kind(&self) -> &TargetKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_bounded(&self) -> bool {
        self.bounded
    }

    /// The single point of a singleton target, if it is one.
    pub fn singleton(&self) -> Option<&Vector> {
        match &self.kind {
            TargetKind::Points(ps) | TargetKind::VPolytope(ps) => {
                let first = &ps[0];
                ps.iter().all(|p| p == first).then_some(first)
            }
            TargetKind::ExtendedBall { center, scale, .. } if *scale == 0.0 => Some(center),
            _ => None,
        }
    }

    pub fn is_convex(&self) -> bool {
        match &self.kind {
            TargetKind::Points(_) => self.singleton().is_some(),
            _ => true,
        }
    }

    /// Euclidean balls, extended balls of strictly convex dynamics, and
    /// singletons (for which the chord condition is vacuous).
    pub fn is_strictly_convex(&self) -> bool {
        if self.singleton().is_some() {
            return true;
        }
        match &self.kind {
            TargetKind::EuclideanBall { .. } => true,
            TargetKind::ExtendedBall { dynamics, .. } => dynamics.is_strictly_convex(),
            _ => false,
        }
    }

    /// Vertex description of bounded polyhedral targets.
    pub fn vertices(&self) -> Option<&[Vector]> {
        self.vertices.as_deref()
    }

    /// The same set shifted by `v`.
    pub fn translated(&self, v: &Vector) -> Result<Self> {
        check_dim(self.dim, v.len())?;
        match &self.kind {
            TargetKind::Points(ps) => Self::points(ps.iter().map(|p| p + v).collect()),
            TargetKind::VPolytope(ps) => Self::vpolytope(ps.iter().map(|p| p + v).collect()),
            TargetKind::ExtendedBall {
                center,
                scale,
                dynamics,
            } => Self::extended_ball(center + v, *scale, dynamics),
            TargetKind::EuclideanBall { center, radius } => {
                Self::euclidean_ball(center + v, *radius)
            }
            TargetKind::HalfSpace { normal, offset } => {
                Self::halfspace(normal.clone(), offset + normal.dot(v))
            }
            TargetKind::HPolytope { rows, offsets } => Self::hpolytope(
                rows.clone(),
                rows.iter()
                    .zip(offsets)
                    .map(|(a, b)| b + a.dot(v))
                    .collect(),
            ),
        }
    }

    fn check_args(&self, f: &DynamicsSet, x: &Vector) -> Result<()> {
        check_dim(self.dim, f.dim())?;
        check_dim(self.dim, x.len())?;
        if let TargetKind::ExtendedBall { dynamics, .. } = &self.kind {
            if dynamics != f {
                return Err(Error::Unsupported(
                    "extended ball was built for a different dynamics set".into(),
                ));
            }
        }
        Ok(())
    }

    /// Whether `x` lies within Euclidean distance `tol` of the set. Linear
    /// kinds use the per-row test `⟨a,x⟩ − b ≤ tol·‖a‖`; extended balls use
    /// the sufficient test `ρ_F(x − c) ≤ s + tol/R_F`.
    pub fn membership(&self, x: &Vector, tol: f64) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        Ok(match &self.kind {
            TargetKind::Points(ps) => ps.iter().any(|p| (p - x).norm() <= tol),
            TargetKind::VPolytope(_) => self.hull_distance(x) <= tol,
            TargetKind::ExtendedBall {
                center,
                scale,
                dynamics,
            } => dynamics.gauge_of(&(x - center)) <= scale + tol / dynamics.outer_radius(),
            TargetKind::EuclideanBall { center, radius } => (x - center).norm() <= radius + tol,
            TargetKind::HalfSpace { normal, offset } => {
                normal.dot(x) - offset <= tol * normal.norm()
            }
            TargetKind::HPolytope { rows, offsets } => rows
                .iter()
                .zip(offsets)
                .all(|(a, b)| a.dot(x) - b <= tol * a.norm()),
        })
    }

    fn hull_distance(&self, x: &Vector) -> f64 {
        let verts = self.vertices.as_deref().expect("polytope has vertices");
        if let Some(hull) = &self.hull {
            return nearest_on_hull_2d(hull, [x[0], x[1]]).1;
        }
        if self.dim == 1 {
            let (lo, hi) = interval(verts);
            return (lo - x[0]).max(x[0] - hi).max(0.0);
        }
        let p = project_hull(verts, x, 20_000);
        let d = (p - x).norm();
        // accelerated projection leaves ~1e-10 residue on interior points
        if d <= 1e-9 {
            0.0
        } else {
            d
        }
    }

    /// A maximizer of `ρ_F(q − x)` over the set (exact).
    pub fn farthest_projection(&self, f: &DynamicsSet, x: &Vector) -> Result<ProjectionResult> {
        self.check_args(f, x)?;
        if !self.bounded {
            return Err(Error::Unbounded(
                "farthest projection needs a bounded target".into(),
            ));
        }
        let (point, value) = match &self.kind {
            TargetKind::Points(ps) | TargetKind::VPolytope(ps) => argext(f, ps, x, true),
            TargetKind::HPolytope { .. } => argext(f, self.vertices.as_deref().unwrap(), x, true),
            TargetKind::ExtendedBall { center, scale, .. } => {
                let d = center - x;
                let g = f.gauge_of(&d);
                if g > 0.0 {
                    (center + &d * (scale / g), g + scale)
                } else {
                    (center + f.canonical_boundary_point() * *scale, *scale)
                }
            }
            TargetKind::EuclideanBall { center, radius } => {
                let Some(rf) = is_euclidean(f) else {
                    return Err(Error::Unsupported(
                        "farthest point of a Euclidean ball under a non-Euclidean gauge".into(),
                    ));
                };
                let d = center - x;
                let n = d.norm();
                let dir = if n > 0.0 {
                    d / n
                } else {
                    let mut e = Vector::zeros(self.dim);
                    e[0] = 1.0;
                    e
                };
                (center + dir * *radius, (n + radius) / rf)
            }
            TargetKind::HalfSpace { .. } => unreachable!("half-spaces are unbounded"),
        };
        let gauge_subgradient = f.subgradient_of(&(&point - x));
        Ok(ProjectionResult {
            point,
            value,
            gauge_subgradient,
            tolerance: 0.0,
        })
    }

    /// A minimizer of `ρ_F(q − x)` over the set; `x` itself when `x`
    /// belongs to the set.
    pub fn nearest_projection(&self, f: &DynamicsSet, x: &Vector) -> Result<ProjectionResult> {
        self.check_args(f, x)?;
        let inside = || ProjectionResult {
            point: x.clone(),
            value: 0.0,
            gauge_subgradient: Vector::zeros(self.dim),
            tolerance: 0.0,
        };
        match &self.kind {
            TargetKind::Points(ps) => {
                let (point, value) = argext(f, ps, x, false);
                let gauge_subgradient = f.subgradient_of(&(&point - x));
                return Ok(ProjectionResult {
                    point,
                    value,
                    gauge_subgradient,
                    tolerance: 0.0,
                });
            }
            TargetKind::HalfSpace { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess <= 0.0 {
                    return Ok(inside());
                }
                let dir = -normal;
                let sigma = f.support(&dir);
                let value = excess / sigma;
                let point = x + f.support_point(&dir) * value;
                return Ok(ProjectionResult {
                    point,
                    value,
                    gauge_subgradient: -normal / sigma,
                    tolerance: 0.0,
                });
            }
            TargetKind::ExtendedBall { center, scale, .. } if f.is_symmetric() || *scale == 0.0 => {
                let d = center - x;
                let g = f.gauge_of(&d);
                if g <= *scale {
                    return Ok(inside());
                }
                return Ok(ProjectionResult {
                    point: center - &d * (scale / g),
                    value: g - scale,
                    gauge_subgradient: f.subgradient_of(&d),
                    tolerance: 0.0,
                });
            }
            TargetKind::EuclideanBall { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if n <= *radius {
                    return Ok(inside());
                }
                if let Some(rf) = is_euclidean(f) {
                    let point = center + &d * (radius / n);
                    let gauge_subgradient = f.subgradient_of(&(&point - x));
                    return Ok(ProjectionResult {
                        point,
                        value: (n - radius) / rf,
                        gauge_subgradient,
                        tolerance: 0.0,
                    });
                }
                if self.dim == 1 {
                    return Ok(self.nearest_interval(f, x, center[0] - radius, center[0] + radius));
                }
                if let DynamicsKind::Ellipsoid { shape } = f.kind() {
                    return Ok(nearest_ball_ellipsoid(shape, center, *radius, x));
                }
                if self.dim == 2 {
                    return Ok(nearest_ball_2d(f, center, *radius, x));
                }
            }
            TargetKind::HPolytope { .. } if !self.bounded => {
                if self.membership(x, 0.0)? {
                    return Ok(inside());
                }
                return Ok(self.generic_nearest(f, x, None));
            }
            _ => {}
        }
        // bounded polyhedral targets
        if let Some(verts) = self.vertices.as_deref() {
            if self.dim == 1 {
                let (lo, hi) = interval(verts);
                return Ok(self.nearest_interval(f, x, lo, hi));
            }
            if let Some(hull) = &self.hull {
                return Ok(nearest_polygon(f, verts, hull, x));
            }
            if self.hull_distance(x) == 0.0 {
                return Ok(inside());
            }
        }
        Ok(self.generic_nearest(f, x, None))
    }

    fn nearest_interval(&self, f: &DynamicsSet, x: &Vector, lo: f64, hi: f64) -> ProjectionResult {
        let u = x[0].clamp(lo, hi);
        let point = Vector::from_element(1, u);
        let d = &point - x;
        ProjectionResult {
            value: f.gauge_of(&d),
            gauge_subgradient: f.subgradient_of(&d),
            point,
            tolerance: 0.0,
        }
    }

    /// Iterative minimization of `q ↦ ρ_F(q − x)` over a convex target by
    /// projected subgradient steps (restarted from the best iterate with
    /// halved step scale every 100 iterations), starting from `start` or
    /// the Euclidean projection of `x`.
    ///
    /// Polytopes given by vertices are searched in barycentric weights.
    pub fn generic_nearest(
        &self,
        f: &DynamicsSet,
        x: &Vector,
        start: Option<&Vector>,
    ) -> ProjectionResult {
        if let Some(verts) = self.vertices.as_deref() {
            let m = verts.len();
            let to_point = |w: &Vector| {
                let mut p = Vector::zeros(self.dim);
                for (v, &wi) in verts.iter().zip(w.iter()) {
                    p.axpy(wi, v, 1.0);
                }
                p
            };
            // gradient in weight space, restricted to the simplex's affine hull
            let pullback = |g: &Vector| {
                let gw = Vector::from_iterator(m, verts.iter().map(|v| v.dot(g)));
                let mean = gw.mean();
                gw.add_scalar(-mean)
            };
            let project = |w: &Vector| {
                let mut s: Vec<f64> = w.iter().cloned().collect();
                project_simplex(&mut s);
                Vector::from_vec(s)
            };
            let w0 = match start {
                Some(s) => barycentric_guess(verts, s),
                None => barycentric_guess(verts, x),
            };
            let (w, value, step) = descend(f, x, w0, &to_point, &pullback, &project, 0.5);
            let point = to_point(&w);
            let gauge_subgradient = f.subgradient_of(&(&point - x));
            return ProjectionResult {
                point,
                value,
                gauge_subgradient,
                tolerance: step,
            };
        }
        let project = |q: &Vector| self.euclidean_projection(q);
        let q0 = match start {
            Some(s) => project(s),
            None => project(x),
        };
        let scale = 0.5 * (x - &q0).norm().max(1e-6);
        let ident = |q: &Vector| q.clone();
        let (point, value, step) = descend(f, x, q0, &ident, &ident, &project, scale);
        let gauge_subgradient = match &self.kind {
            TargetKind::EuclideanBall { center, .. } if value > 0.0 => {
                // outward normal of the ball at the witness
                let nu = &point - center;
                -&nu / f.support(&-&nu)
            }
            _ => f.subgradient_of(&(&point - x)),
        };
        ProjectionResult {
            point,
            value,
            gauge_subgradient,
            tolerance: step,
        }
    }

    /// Euclidean projection onto the set (convex kinds).
    pub(crate) fn euclidean_projection(&self, q: &Vector) -> Vector {
        match &self.kind {
            TargetKind::EuclideanBall { center, radius } => {
                let d = q - center;
                let n = d.norm();
                if n <= *radius {
                    q.clone()
                } else {
                    center + d * (radius / n)
                }
            }
            TargetKind::HalfSpace { normal, offset } => {
                let e = normal.dot(q) - offset;
                if e <= 0.0 {
                    q.clone()
                } else {
                    q - normal * (e / normal.norm_squared())
                }
            }
            TargetKind::HPolytope { rows, offsets } => {
                dykstra_halfspaces(rows, offsets, q, 500, 1e-10)
            }
            TargetKind::Points(ps) => ps
                .iter()
                .min_by(|a, b| (*a - q).norm().total_cmp(&(*b - q).norm()))
                .cloned()
                .unwrap(),
            TargetKind::VPolytope(ps) => project_hull(ps, q, 5000),
            TargetKind::ExtendedBall {
                center,
                scale,
                dynamics,
            } => {
                // exact only for Euclidean dynamics; otherwise a point on the
                // segment from the center, which is all the callers need
                let d = q - center;
                let g = dynamics.gauge_of(&d);
                if g <= *scale {
                    q.clone()
                } else {
                    center + d * (scale / g)
                }
            }
        }
    }
}

fn interval(verts: &[Vector]) -> (f64, f64) {
    verts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v[0]), hi.max(v[0]))
        })
}

fn argext(f: &DynamicsSet, ps: &[Vector], x: &Vector, largest: bool) -> (Vector, f64) {
    let vals: Vec<f64> = ps.iter().map(|p| f.gauge_of(&(p - x))).collect();
    let i = extreme_index(&vals, largest);
    (ps[i].clone(), vals[i])
}

fn barycentric_guess(verts: &[Vector], y: &Vector) -> Vector {
    // weight the vertex closest to y
    let m = verts.len();
    let mut w = Vector::from_element(m, 0.0);
    let i = verts
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - y).norm().total_cmp(&(b.1 - y).norm()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    w[i] = 1.0;
    w
}

/// Restarted normalized projected subgradient descent on
/// `z ↦ ρ_F(to_point(z) − x)`; returns the best iterate, its value and the
/// final step length.
fn descend(
    f: &DynamicsSet,
    x: &Vector,
    z0: Vector,
    to_point: &dyn Fn(&Vector) -> Vector,
    pullback: &dyn Fn(&Vector) -> Vector,
    project: &dyn Fn(&Vector) -> Vector,
    scale: f64,
) -> (Vector, f64, f64) {
    const STAGE: usize = 100;
    let mut best = z0.clone();
    let mut best_val = f.gauge_of(&(to_point(&z0) - x));
    let mut z = z0;
    let mut stage_scale = scale;
    let mut step = scale;
    let mut k = 0;
    for it in 0..GENERIC_MAX_ITERS {
        if it > 0 && it % STAGE == 0 {
            z = best.clone();
            stage_scale *= 0.5;
            k = 0;
        }
        k += 1;
        step = stage_scale / (k as f64).sqrt();
        if step < GENERIC_MIN_STEP || best_val == 0.0 {
            break;
        }
        let d = to_point(&z) - x;
        let g = pullback(&f.subgradient_of(&d));
        let gn = g.norm();
        if gn == 0.0 {
            break;
        }
        z = project(&(&z - g * (step / gn)));
        let val = f.gauge_of(&(to_point(&z) - x));
        if val < best_val {
            best_val = val;
            best = z.clone();
        }
    }
    (best, best_val, step)
}

/// Exact nearest point of a planar polygon.
///
/// Primal: when `x` is outside, the minimizer lies on a hull edge, where
/// the gauge is convex in the edge parameter. Dual: the minimal time equals
/// `max_w (⟨w,x⟩ − σ_Θ(w)) / σ_F(−w)`, and in the plane the maximum is
/// attained at an edge normal, at `−∂ρ_F(v − x)` for a vertex `v`, or at a
/// negated facet normal of a polyhedral `F`. The maximizing `w` yields the
/// subgradient.
fn nearest_polygon(
    f: &DynamicsSet,
    verts: &[Vector],
    hull: &[[f64; 2]],
    x: &Vector,
) -> ProjectionResult {
    let p = [x[0], x[1]];
    if nearest_on_hull_2d(hull, p).1 == 0.0 {
        return ProjectionResult {
            point: x.clone(),
            value: 0.0,
            gauge_subgradient: Vector::zeros(2),
            tolerance: 0.0,
        };
    }
    let edges: Vec<([f64; 2], [f64; 2])> = match hull.len() {
        1 => vec![(hull[0], hull[0])],
        2 => vec![(hull[0], hull[1])],
        n => (0..n).map(|i| (hull[i], hull[(i + 1) % n])).collect(),
    };
    let mut best_point = v2(hull[0]);
    let mut best_val = f64::INFINITY;
    for (a, b) in &edges {
        let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        let (t, val) = golden_section(|t| f.gauge_of(&(v2(at(t)) - x)), 0.0, 1.0, 1e-13);
        if val < best_val {
            best_val = val;
            best_point = v2(at(t));
        }
    }

    let mut cands: Vec<Vector> = Vec::new();
    match hull.len() {
        1 => {}
        2 => {
            let d = [hull[1][0] - hull[0][0], hull[1][1] - hull[0][1]];
            cands.push(v2([d[1], -d[0]]));
            cands.push(v2([-d[1], d[0]]));
            cands.push(v2(d));
            cands.push(v2([-d[0], -d[1]]));
        }
        _ => {
            for (a, b) in &edges {
                cands.push(v2([b[1] - a[1], a[0] - b[0]]));
            }
        }
    }
    for h in hull {
        cands.push(-f.subgradient_of(&(v2(*h) - x)));
    }
    match f.kind() {
        DynamicsKind::HPolytope { rows, .. } => cands.extend(rows.iter().map(|a| -a)),
        DynamicsKind::SupBox { .. } => {
            for i in 0..2 {
                let mut e = Vector::zeros(2);
                e[i] = 1.0;
                cands.push(e.clone());
                cands.push(-e);
            }
        }
        _ => {}
    }
    let support = |w: &Vector| {
        verts
            .iter()
            .map(|v| v.dot(w))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut best_w: Option<(Vector, f64)> = None;
    for w in cands {
        if w.norm() == 0.0 {
            continue;
        }
        let ratio = (w.dot(x) - support(&w)) / f.support(&-&w);
        if best_w.as_ref().is_none_or(|(_, r)| ratio > *r) {
            best_w = Some((w, ratio));
        }
    }
    let (gauge_subgradient, lower) = match best_w {
        Some((w, r)) if r > 0.0 => (-&w / f.support(&-&w), r),
        _ => (f.subgradient_of(&(&best_point - x)), 0.0),
    };
    ProjectionResult {
        point: best_point,
        value: best_val,
        gauge_subgradient,
        tolerance: (best_val - lower).max(0.0),
    }
}

/// Nearest point of a Euclidean ball under the gauge `sqrt(vᵀAv)`: with
/// `d = x − c` and `A = V·diag(λ)·Vᵀ`, the minimizer of `(y−d)ᵀA(y−d)` over
/// `‖y‖ ≤ R` is `y = (A + μI)⁻¹Ad` for the `μ > 0` giving `‖y‖ = R`, found
/// by bisection (`‖y(μ)‖` decreases in `μ`). `x` must lie outside the ball.
fn nearest_ball_ellipsoid(
    shape: &DMatrix<f64>,
    center: &Vector,
    radius: f64,
    x: &Vector,
) -> ProjectionResult {
    let eig = shape.clone().symmetric_eigen();
    let d = x - center;
    let e = eig.eigenvectors.transpose() * &d;
    let lam = &eig.eigenvalues;
    let y_of = |mu: f64| Vector::from_fn(e.len(), |i, _| lam[i] * e[i] / (lam[i] + mu));
    let lmax = lam.iter().cloned().fold(0.0, f64::max);
    let (mut lo, mut hi) = (0.0, lmax * d.norm() / radius);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if y_of(mid).norm() > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = y_of(hi);
    let point = center + &eig.eigenvectors * y;
    let v = &point - x;
    let av = shape * &v;
    let value = v.dot(&av).max(0.0).sqrt();
    let gauge_subgradient = if value > 0.0 {
        av / value
    } else {
        Vector::zeros(x.len())
    };
    ProjectionResult {
        point,
        value,
        gauge_subgradient,
        tolerance: 0.0,
    }
}

/// Exact nearest point of a planar Euclidean ball under an arbitrary gauge,
/// by maximizing the dual ratio over the arc of strictly separating
/// directions, where it is unimodal. `x` must lie outside the ball.
fn nearest_ball_2d(f: &DynamicsSet, center: &Vector, radius: f64, x: &Vector) -> ProjectionResult {
    let delta = x - center;
    let dist = delta.norm();
    let theta0 = delta[1].atan2(delta[0]);
    let half = (radius / dist).clamp(-1.0, 1.0).acos();
    let dir = |t: f64| v2([t.cos(), t.sin()]);
    let ratio = |t: f64| {
        let w = dir(t);
        (w.dot(&delta) - radius) / f.support(&-&w)
    };
    let (t, neg) = golden_section(|t| -ratio(t), theta0 - half, theta0 + half, 1e-12);
    debug_assert!(half <= PI / 2.0);
    let w = dir(t);
    let point = center + &w * radius;
    let value = f.gauge_of(&(&point - x));
    ProjectionResult {
        gauge_subgradient: -&w / f.support(&-&w),
        point,
        value,
        tolerance: (value + neg).max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn euclid() -> DynamicsSet {
        DynamicsSet::euclidean(2, 1.0).unwrap()
    }

    fn unit_box() -> DynamicsSet {
        DynamicsSet::sup_box(2, 1.0).unwrap()
    }

    #[test]
    fn farthest_point_set_first_maximizer() {
        let t = TargetSet::points(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        let r = t.farthest_projection(&euclid(), &v(&[0.0, 0.0])).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.point, v(&[1.0, 0.0]));
    }

    #[test]
    fn farthest_extended_ball_matches_boundary_sampling() {
        let f = euclid();
        let t = TargetSet::extended_ball(v(&[3.0, 0.0]), 1.0, &f).unwrap();
        let x = v(&[0.0, 0.0]);
        let sampled = (0..10_000)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / 10_000.0;
                f.gauge(&(v(&[3.0 + a.cos(), a.sin()]) - &x)).unwrap()
            })
            .fold(0.0, f64::max);
        let r = t.farthest_projection(&f, &x).unwrap();
        assert!((sampled - 4.0).abs() < 1e-3);
        assert_relative_eq!(r.value, 4.0, epsilon = 1e-12);
        assert_relative_eq!(r.point, v(&[4.0, 0.0]), epsilon = 1e-12);
    }

    #[test]
    fn farthest_vpolytope_under_box() {
        let t = TargetSet::vpolytope(vec![v(&[2.0, 1.0]), v(&[-1.0, 3.0])]).unwrap();
        let r = t.farthest_projection(&unit_box(), &v(&[0.0, 0.0])).unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.point, v(&[-1.0, 3.0]));
    }

    #[test]
    fn farthest_rejects_unbounded_and_unsupported() {
        let h = TargetSet::halfspace(v(&[0.0, 1.0]), 0.0).unwrap();
        assert!(matches!(
            h.farthest_projection(&euclid(), &v(&[0.0, 0.0])),
            Err(Error::Unbounded(_))
        ));
        let b = TargetSet::euclidean_ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert!(matches!(
            b.farthest_projection(&unit_box(), &v(&[3.0, 0.0])),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn nearest_halfspace_euclidean() {
        let h = TargetSet::halfspace(v(&[0.0, 1.0]), 0.0).unwrap();
        let r = h.nearest_projection(&euclid(), &v(&[0.0, 2.0])).unwrap();
        assert_relative_eq!(r.value, 2.0);
        assert_relative_eq!(r.point, v(&[0.0, 0.0]));
    }

    #[test]
    fn nearest_of_member_is_itself() {
        let x = v(&[0.2, -0.1]);
        let targets = vec![
            TargetSet::halfspace(v(&[0.0, 1.0]), 0.0).unwrap(),
            TargetSet::euclidean_ball(v(&[0.0, 0.0]), 1.0).unwrap(),
            TargetSet::vpolytope(vec![v(&[-1.0, -1.0]), v(&[1.0, -1.0]), v(&[0.0, 1.0])]).unwrap(),
            TargetSet::extended_ball(v(&[0.0, 0.0]), 0.5, &unit_box()).unwrap(),
        ];
        for t in targets {
            let r = t.nearest_projection(&unit_box(), &x).unwrap();
            assert_eq!(r.value, 0.0);
            assert_eq!(r.point, x);
        }
    }

    #[test]
    fn nearest_extended_ball_matches_grid() {
        let f = euclid();
        let t = TargetSet::extended_ball(v(&[3.0, 0.0]), 1.0, &f).unwrap();
        let x = v(&[0.0, 0.0]);
        let mut grid_best = f64::INFINITY;
        let steps = 2000;
        for i in 0..=steps {
            for j in 0..=steps {
                let q = v(&[
                    2.0 + 2.0 * i as f64 / steps as f64,
                    -1.0 + 2.0 * j as f64 / steps as f64,
                ]);
                if (&q - v(&[3.0, 0.0])).norm() <= 1.0 {
                    grid_best = grid_best.min(f.gauge(&(&q - &x)).unwrap());
                }
            }
        }
        assert!((grid_best - 2.0).abs() <= 1e-3);
        let r = t.nearest_projection(&f, &x).unwrap();
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-12);
        assert_relative_eq!(r.point, v(&[2.0, 0.0]), epsilon = 1e-12);
    }

    #[test]
    fn membership_examples() {
        let h = TargetSet::halfspace(v(&[1.0, 0.0]), 1.0).unwrap();
        assert!(h.membership(&v(&[1.0, 0.0]), 0.0).unwrap());
        let p = TargetSet::points(vec![v(&[0.0, 0.0])]).unwrap();
        assert!(p.membership(&v(&[1e-8, 0.0]), 1e-7).unwrap());
        let tri =
            TargetSet::vpolytope(vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        assert!(tri.membership(&v(&[0.25, 0.25]), 0.0).unwrap());
        assert!(!tri.membership(&v(&[0.6, 0.6]), 0.0).unwrap());
    }

    #[test]
    fn polygon_nearest_under_box_is_exact() {
        // min ρ_∞(q − x) over the segment [(2,-1),(2,3)] from the origin is 2
        let f = unit_box();
        let t =
            TargetSet::vpolytope(vec![v(&[2.0, -1.0]), v(&[2.0, 3.0]), v(&[4.0, 1.0])]).unwrap();
        let r = t.nearest_projection(&f, &v(&[0.0, 0.0])).unwrap();
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-12);
        assert!(r.tolerance < 1e-12);
        // subgradient of T at 0 is -e_1
        assert_relative_eq!(-&r.gauge_subgradient, v(&[-1.0, 0.0]), epsilon = 1e-12);
    }

    #[test]
    fn ball_nearest_under_box_is_exact() {
        // unit disc at (3,0): nearest box-gauge distance from the origin is 2
        let t = TargetSet::euclidean_ball(v(&[3.0, 0.0]), 1.0).unwrap();
        let r = t.nearest_projection(&unit_box(), &v(&[0.0, 0.0])).unwrap();
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-9);
        // along the diagonal the box gauge gains: from (0,3) the disc at
        // (3,0) is reached at t with (3 - t)^2 + (3 - t)^2 ... checked by sampling
        let x = v(&[0.0, 3.0]);
        let r = t.nearest_projection(&unit_box(), &x).unwrap();
        let sampled = (0..200_000)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / 200_000.0;
                unit_box()
                    .gauge(&(v(&[3.0 + a.cos(), a.sin()]) - &x))
                    .unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((r.value - sampled).abs() < 1e-6);
    }

    #[test]
    fn asymmetric_extended_ball_goes_through_vertices() {
        let tri = DynamicsSet::hpolytope(
            vec![v(&[-1.0, 0.0]), v(&[0.0, -1.0]), v(&[1.0, 1.0])],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        let t = TargetSet::extended_ball(v(&[5.0, 0.0]), 1.0, &tri).unwrap();
        assert!(t.vertices().is_some());
        let x = v(&[0.0, 0.0]);
        let r = t.nearest_projection(&tri, &x).unwrap();
        // brute force over a fine grid of the triangle c + F
        let mut best = f64::INFINITY;
        let n = 600;
        for i in 0..=n {
            for j in 0..=n {
                let q = v(&[
                    4.0 + 3.0 * i as f64 / n as f64,
                    -1.0 + 3.0 * j as f64 / n as f64,
                ]);
                if tri.gauge(&(&q - v(&[5.0, 0.0]))).unwrap() <= 1.0 {
                    best = best.min(tri.gauge(&(&q - &x)).unwrap());
                }
            }
        }
        assert!(r.value <= best + 1e-12);
        assert!(best - r.value < 1e-2);
    }

    #[test]
    fn generic_routine_agrees_with_closed_form_in_3d() {
        let f = DynamicsSet::ellipsoid(DMatrix::from_diagonal(&v(&[1.0, 2.0, 3.0]))).unwrap();
        let t = TargetSet::vpolytope(vec![
            v(&[2.0, 0.0, 0.0]),
            v(&[2.0, 1.0, 0.0]),
            v(&[2.0, 0.0, 1.0]),
            v(&[3.0, 0.0, 0.0]),
        ])
        .unwrap();
        let x = v(&[0.0, 0.3, 0.2]);
        let r = t.nearest_projection(&f, &x).unwrap();
        // the face x₁ = 2 is closest; on it the ellipsoid gauge is minimized at (2, 0.3, 0.2)
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-5);
    }

    #[test]
    fn ellipsoid_gauge_to_euclidean_ball() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5]);
        let f = DynamicsSet::ellipsoid(a).unwrap();
        let t = TargetSet::euclidean_ball(v(&[3.0, 3.0, 0.0]), 0.5).unwrap();
        for x in [
            v(&[0.0, 0.0, 0.0]),
            v(&[1.0, -2.0, 0.5]),
            v(&[3.0, 3.0, 2.0]),
        ] {
            let r = t.nearest_projection(&f, &x).unwrap();
            assert_relative_eq!(
                (&r.point - v(&[3.0, 3.0, 0.0])).norm(),
                0.5,
                epsilon = 1e-12
            );
            assert_relative_eq!(f.gauge(&(&r.point - &x)).unwrap(), r.value, epsilon = 1e-12);
            // sampled sphere points never beat it
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for _ in 0..20_000 {
                let d = v(&[
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]);
                let q = v(&[3.0, 3.0, 0.0]) + d.normalize() * 0.5;
                assert!(f.gauge(&(&q - &x)).unwrap() >= r.value - 1e-12);
            }
            let g = t.generic_nearest(&f, &x, None);
            assert!((g.value - r.value).abs() < 1e-6);
        }
    }

    #[test]
    fn unbounded_hpolytope_and_emptiness() {
        let wedge = TargetSet::hpolytope(vec![v(&[-1.0, 0.5]), v(&[-1.0, -0.5])], vec![-1.0, -1.0])
            .unwrap();
        assert!(!wedge.is_bounded());
        let r = wedge
            .nearest_projection(&euclid(), &v(&[0.0, 0.0]))
            .unwrap();
        // Euclidean distance from 0 to {x ≥ 1 + |y|/2} is 1
        assert!((r.value - 1.0).abs() < 1e-6);
        let empty = TargetSet::hpolytope(vec![v(&[1.0, 0.0]), v(&[-1.0, 0.0])], vec![-1.0, -1.0]);
        assert!(empty.is_err());
    }

    #[test]
    fn extended_ball_requires_matching_dynamics() {
        let t = TargetSet::extended_ball(v(&[1.0, 0.0]), 1.0, &euclid()).unwrap();
        assert!(matches!(
            t.nearest_projection(&unit_box(), &v(&[0.0, 0.0])),
            Err(Error::Unsupported(_))
        ));
    }
}
