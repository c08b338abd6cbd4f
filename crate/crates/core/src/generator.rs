//! Seeded generator of random planar instances.
//!
//! Each draw, from a ChaCha8 stream seeded with the given seed:
//!
//! * dynamics: one of Euclidean disc (radius in [0.6, 1.8]), ℓ_p ball
//!   (p in [1.5, 4], radius in [0.6, 1.8]), sup-norm box (radius in
//!   [0.6, 1.8]), ellipse (eigenvalues in [0.4, 2.5], random rotation), or a
//!   polygon given by 3–6 half-planes whose normals are spread around the
//!   circle with offsets in [0.6, 1.6] (origin strictly inside);
//! * 0–3 enclose-targets: point sets of 1–3 points, triangles, extended
//!   balls with scale in [0.1, 0.8], and Euclidean discs when the dynamics
//!   is Euclidean;
//! * 0–3 intersect-targets: single points, triangles, extended balls,
//!   discs, half-planes and axis-aligned rectangles (as H-polytopes);
//! * at least one target in total, and a bounded target whenever there
//!   are no enclose-targets, so a minimizer exists;
//! * constraint: whole plane (60%), the box [-4,4]² (20%) or a half-plane
//!   through a point of [-1,1]² (20%);
//! * objective: min-max or sum with equal probability, or as requested.
//!
//! All coordinates of target data lie in [-3, 3].

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraint::ConstraintSet;
use crate::error::Result;
use crate::gauge::{DynamicsKind, DynamicsSet};
use crate::geometry::Vector;
use crate::objectives::{ObjectiveKind, ProblemInstance};
use crate::targets::TargetSet;

fn point(rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_vec(vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)])
}

fn unit(theta: f64) -> Vector {
    Vector::from_vec(vec![theta.cos(), theta.sin()])
}

fn dynamics(rng: &mut ChaCha8Rng) -> Result<DynamicsSet> {
    match rng.gen_range(0..5) {
        0 => DynamicsSet::euclidean(2, rng.gen_range(0.6..1.8)),
        1 => DynamicsSet::lp(2, rng.gen_range(1.5..4.0), rng.gen_range(0.6..1.8)),
        2 => DynamicsSet::sup_box(2, rng.gen_range(0.6..1.8)),
        3 => {
            let (l1, l2) = (rng.gen_range(0.4..2.5), rng.gen_range(0.4..2.5));
            let th: f64 = rng.gen_range(0.0..PI);
            let (c, s) = (th.cos(), th.sin());
            let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
            let d = DMatrix::from_diagonal(&Vector::from_vec(vec![l1, l2]));
            let a = &r * d * r.transpose();
            // symmetrize away rounding
            let a = (&a + a.transpose()) * 0.5;
            DynamicsSet::ellipsoid(a)
        }
        _ => {
            let k = rng.gen_range(3..=6);
            let base: f64 = rng.gen_range(0.0..2.0 * PI);
            let rows = (0..k)
                .map(|i| unit(base + 2.0 * PI * (i as f64 + rng.gen_range(-0.2..0.2)) / k as f64))
                .collect();
            let offsets = (0..k).map(|_| rng.gen_range(0.6..1.6)).collect();
            DynamicsSet::hpolytope(rows, offsets)
        }
    }
}

fn triangle(rng: &mut ChaCha8Rng) -> Result<TargetSet> {
    let c = point(rng);
    let verts = (0..3)
        .map(|_| &c + Vector::from_vec(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
        .collect();
    TargetSet::vpolytope(verts)
}

fn enclose_target(rng: &mut ChaCha8Rng, f: &DynamicsSet) -> Result<TargetSet> {
    let euclidean = matches!(f.kind(), DynamicsKind::Euclidean { .. });
    match rng.gen_range(0..if euclidean { 4 } else { 3 }) {
        0 => {
            let n = rng.gen_range(1..=3);
            TargetSet::points((0..n).map(|_| point(rng)).collect())
        }
        1 => triangle(rng),
        2 => TargetSet::extended_ball(point(rng), rng.gen_range(0.1..0.8), f),
        _ => TargetSet::euclidean_ball(point(rng), rng.gen_range(0.1..0.8)),
    }
}

fn intersect_target(rng: &mut ChaCha8Rng, f: &DynamicsSet, bounded: bool) -> Result<TargetSet> {
    match rng.gen_range(0..if bounded { 5 } else { 6 }) {
        0 => TargetSet::points(vec![point(rng)]),
        1 => triangle(rng),
        2 => TargetSet::extended_ball(point(rng), rng.gen_range(0.1..0.8), f),
        3 => TargetSet::euclidean_ball(point(rng), rng.gen_range(0.1..0.8)),
        4 => {
            let c = point(rng);
            let (w, h) = (rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0));
            let e = |x: f64, y: f64| Vector::from_vec(vec![x, y]);
            TargetSet::hpolytope(
                vec![e(1.0, 0.0), e(-1.0, 0.0), e(0.0, 1.0), e(0.0, -1.0)],
                vec![c[0] + w, w - c[0], c[1] + h, h - c[1]],
            )
        }
        _ => {
            let a = unit(rng.gen_range(0.0..2.0 * PI));
            let through = point(rng);
            let b = a.dot(&through);
            TargetSet::halfspace(a, b)
        }
    }
}

/// A random planar instance; the objective is drawn too unless given.
pub fn random_instance(seed: u64, objective: Option<ObjectiveKind>) -> Result<ProblemInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = dynamics(&mut rng)?;
    let objective = match objective {
        Some(o) => o,
        None if rng.gen_bool(0.5) => ObjectiveKind::MinMax,
        None => ObjectiveKind::Sum,
    };
    let n_enclose = rng.gen_range(0..=3);
    let n_intersect = if n_enclose == 0 {
        rng.gen_range(1..=3)
    } else {
        rng.gen_range(0..=3)
    };
    let enclose = (0..n_enclose)
        .map(|_| enclose_target(&mut rng, &f))
        .collect::<Result<Vec<_>>>()?;
    let intersect = (0..n_intersect)
        .map(|j| intersect_target(&mut rng, &f, n_enclose == 0 && j == 0))
        .collect::<Result<Vec<_>>>()?;
    let constraint = match rng.gen_range(0..5) {
        0 => ConstraintSet::boxed(Vector::from_element(2, -4.0), Vector::from_element(2, 4.0))?,
        1 => {
            let a = unit(rng.gen_range(0.0..2.0 * PI));
            let through =
                Vector::from_vec(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
            let b = a.dot(&through);
            ConstraintSet::halfspace(a, b)?
        }
        _ => ConstraintSet::whole_space(2)?,
    };
    ProblemInstance::new(f, enclose, intersect, constraint, objective)
}
