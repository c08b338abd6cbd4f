//! Brute-force references: grid search over the feasible region and
//! sampling-based time-function estimates.
//!
//! Both are deliberately independent of the projection routines in
//! [`crate::targets`] so they can validate them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::gauge::DynamicsSet;
use crate::geometry::Vector;
use crate::objectives::ProblemInstance;
use crate::targets::{TargetKind, TargetSet};

/// Seed of the sampling oracle; every call restarts from it.
pub const SAMPLER_SEED: u64 = 0x6a09_e667;
pub const MAX_GRID_DIM: usize = 3;
/// Evaluation budget of one refinement level.
pub const MAX_LEVEL_EVALS: usize = 400_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lo: Vector,
    pub hi: Vector,
    /// Cells per axis on the first level.
    pub resolution: usize,
    /// Number of 4×-per-axis refinements after the first level.
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub center: Vec<f64>,
    pub value: f64,
    pub levels: usize,
    pub evaluations: usize,
    /// Best value after each level (non-increasing).
    pub level_values: Vec<f64>,
    /// Cell width of the final level (largest over axes).
    pub final_step: f64,
}

impl GridSpec {
    pub fn new(lo: Vector, hi: Vector) -> Result<Self> {
        Self::with_levels(lo, hi, 64, 4)
    }

    pub fn with_levels(lo: Vector, hi: Vector, resolution: usize, levels: usize) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() || lo.len() > MAX_GRID_DIM {
            return Err(Error::Unsupported(format!(
                "grid search needs dimension 1..={MAX_GRID_DIM}, got {}",
                lo.len()
            )));
        }
        if lo.iter().zip(hi.iter()).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidProblem("grid box needs lo < hi".into()));
        }
        if resolution < 2 {
            return Err(Error::InvalidProblem(
                "grid resolution must be at least 2".into(),
            ));
        }
        Ok(GridSpec {
            lo,
            hi,
            resolution,
            levels,
        })
    }

    /// Box around the problem data (see [`problem_box`]).
    pub fn for_problem(p: &ProblemInstance) -> Result<Self> {
        let (lo, hi) = problem_box(p)?;
        Self::new(lo, hi)
    }
}

/// Minimizes the problem's objective by grid refinement.
///
/// The box is split into `resolution` cells per axis. On every level each
/// cell is evaluated at the projection `q` of its center onto `S`; a cell
/// whose center is farther than its half-diagonal `h` from `S` misses `S`
/// and is dropped. No point of a cell can beat `f(q) − 2Lh`, where `L` is
/// the norm of the subgradient at `q` for convex objectives and the
/// objective's Lipschitz bound otherwise. Only cells whose bound does not
/// exceed the incumbent survive, and each survivor is split 4× per axis for the
/// next level. The cell holding a minimizer is never dropped, which gives
/// `value ≤ optimum + 2·lip·h_final` as long as the survivors fit in
/// [`MAX_LEVEL_EVALS`]; past that only the lowest-valued survivors are kept.
pub fn grid_minimize(p: &ProblemInstance, spec: &GridSpec) -> Result<GridResult> {
    let n = p.dim();
    check_dim(n, spec.lo.len())?;
    let lip = p.lipschitz_bound();
    let convex = p.is_convex();
    let res = spec.resolution;
    let children = 4usize.pow(n as u32);
    let mut width = (&spec.hi - &spec.lo) / res as f64;
    let mut cells: Vec<Vector> = (0..res.pow(n as u32))
        .map(|idx| {
            let mut c = spec.lo.clone();
            let mut r = idx;
            for i in 0..n {
                c[i] += width[i] * ((r % res) as f64 + 0.5);
                r /= res;
            }
            c
        })
        .collect();
    let mut best: Option<(Vector, f64)> = None;
    let mut evaluations = 0;
    let mut level_values = Vec::new();
    for level in 0..=spec.levels {
        if level > 0 {
            let parent = width.clone();
            width /= 4.0;
            cells = cells
                .iter()
                .flat_map(|c| {
                    let lo = c - &parent / 2.0;
                    let w = width.clone();
                    (0..children).map(move |idx| {
                        let mut q = lo.clone();
                        let mut r = idx;
                        for i in 0..n {
                            q[i] += w[i] * ((r % 4) as f64 + 0.5);
                            r /= 4;
                        }
                        q
                    })
                })
                .collect();
        }
        let half_diag = 0.5 * width.norm();
        // (projected center, value, lower bound over the cell)
        let evals: Vec<Option<(Vector, f64, f64)>> = cells
            .par_iter()
            .map(|c| {
                let q = p.constraint().project(c)?;
                if (&q - c).norm() > half_diag {
                    return Ok(None);
                }
                let (v, g) = p.eval(&q)?;
                let slope = if convex { g.norm().min(lip) } else { lip };
                Ok(Some((q, v, v - 2.0 * slope * half_diag)))
            })
            .collect::<Result<_>>()?;
        evaluations += evals.iter().filter(|e| e.is_some()).count();
        // first strict minimum in cell order
        for (q, v, _) in evals.iter().flatten() {
            if best.as_ref().is_none_or(|(_, b)| v < b) {
                best = Some((q.clone(), *v));
            }
        }
        let Some((_, incumbent)) = &best else {
            return Err(Error::EmptyGrid);
        };
        let incumbent = *incumbent;
        level_values.push(incumbent);
        if level == spec.levels {
            break;
        }
        let mut keep: Vec<(usize, f64)> = evals
            .iter()
            .enumerate()
            .filter_map(|(k, e)| {
                e.as_ref()
                    .filter(|(_, _, lb)| *lb <= incumbent)
                    .map(|(_, v, _)| (k, *v))
            })
            .collect();
        let cap = (MAX_LEVEL_EVALS / children).max(1);
        if keep.len() > cap {
            keep.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            keep.truncate(cap);
            keep.sort_by_key(|k| k.0);
        }
        cells = keep.into_iter().map(|(k, _)| cells[k].clone()).collect();
    }
    let (center, value) = best.expect("checked above");
    Ok(GridResult {
        center: center.iter().cloned().collect(),
        value,
        levels: spec.levels,
        evaluations,
        level_values,
        final_step: width.amax(),
    })
}

/// Box containing sample points of every target (unbounded targets
/// contribute the projection of the data centroid) and the projection of
/// that centroid onto `S`, inflated by 50% on each axis.
pub fn problem_box(p: &ProblemInstance) -> Result<(Vector, Vector)> {
    let n = p.dim();
    let mut pts: Vec<Vector> = Vec::new();
    let mut unbounded = Vec::new();
    for t in p.enclose().iter().chain(p.intersect()) {
        if t.is_bounded() {
            pts.extend(sample_target(p.dynamics(), t, 64, &mut sampler())?);
        } else {
            unbounded.push(t);
        }
    }
    let centroid = if pts.is_empty() {
        Vector::zeros(n)
    } else {
        pts.iter().fold(Vector::zeros(n), |a, q| a + q) / pts.len() as f64
    };
    for t in unbounded {
        pts.push(t.euclidean_projection(&centroid));
    }
    pts.push(p.constraint().project(&centroid)?);
    let mut lo = pts[0].clone();
    let mut hi = pts[0].clone();
    for q in &pts {
        lo = lo.inf(q);
        hi = hi.sup(q);
    }
    for i in 0..n {
        let w = (hi[i] - lo[i]).max(1.0);
        let mid = 0.5 * (hi[i] + lo[i]);
        lo[i] = mid - 0.75 * w;
        hi[i] = mid + 0.75 * w;
    }
    Ok((lo, hi))
}

/// `count` points drawn uniformly from [`problem_box`] with the given
/// seed and projected onto `S`.
pub fn sample_feasible(p: &ProblemInstance, count: usize, seed: u64) -> Result<Vec<Vector>> {
    let (lo, hi) = problem_box(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x = Vector::from_fn(lo.len(), |i, _| rng.gen_range(lo[i]..=hi[i]));
            p.constraint().project(&x)
        })
        .collect()
}

fn sampler() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SAMPLER_SEED)
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    loop {
        let d = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let norm = d.norm();
        if norm > 1e-3 && norm <= 1.0 {
            return d / norm;
        }
    }
}

/// Points of a bounded target: its points or vertices first, then a mix
/// of boundary and interior points. Every returned point lies in the set.
pub fn sample_target(
    f: &DynamicsSet,
    t: &TargetSet,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vector>> {
    if !t.is_bounded() {
        return Err(Error::Unbounded("cannot sample an unbounded target".into()));
    }
    let n = t.dim();
    let mut out = Vec::with_capacity(count);
    match t.kind() {
        TargetKind::Points(ps) => out.extend(ps.iter().cloned()),
        TargetKind::VPolytope(_) | TargetKind::HPolytope { .. } => {
            let vs = t.vertices().expect("bounded polytope has vertices");
            out.extend(vs.iter().cloned());
            while out.len() < count {
                let w: Vec<f64> = if out.len() % 2 == 0 && vs.len() > 1 {
                    // a point on a chord between two vertices
                    let i = rng.gen_range(0..vs.len());
                    let j = rng.gen_range(0..vs.len());
                    let s: f64 = rng.gen();
                    (0..vs.len())
                        .map(|k| if k == i { s } else { 0.0 } + if k == j { 1.0 - s } else { 0.0 })
                        .collect()
                } else {
                    let e: Vec<f64> = (0..vs.len())
                        .map(|_| -rng.gen::<f64>().max(1e-300).ln())
                        .collect();
                    let s: f64 = e.iter().sum();
                    e.into_iter().map(|x| x / s).collect()
                };
                out.push(
                    vs.iter()
                        .zip(&w)
                        .fold(Vector::zeros(n), |a, (v, wi)| a + v * *wi),
                );
            }
        }
        TargetKind::ExtendedBall {
            center,
            scale,
            dynamics,
        } => {
            check_dim(f.dim(), n)?;
            while out.len() < count {
                let d = random_direction(rng, n);
                let b = dynamics.boundary_point(&d);
                let r = if out.len() % 4 == 3 {
                    rng.gen::<f64>()
                } else {
                    1.0
                };
                out.push(center + b * (scale * r));
            }
        }
        TargetKind::EuclideanBall { center, radius } => {
            while out.len() < count {
                let d = random_direction(rng, n);
                let r = if out.len() % 4 == 3 {
                    rng.gen::<f64>()
                } else {
                    1.0
                };
                out.push(center + d * (radius * r));
            }
        }
        TargetKind::HalfSpace { .. } => unreachable!("half-spaces are unbounded"),
    }
    Ok(out)
}

/// Sampled lower estimate of `C_F` and upper estimate of `T_F` at `x`,
/// from `count` deterministic samples of a bounded target.
pub fn sample_time_functions(
    f: &DynamicsSet,
    t: &TargetSet,
    x: &Vector,
    count: usize,
) -> Result<(f64, f64)> {
    check_dim(f.dim(), x.len())?;
    check_dim(f.dim(), t.dim())?;
    let pts = sample_target(f, t, count.max(1), &mut sampler())?;
    let vals: Vec<f64> = pts.iter().map(|q| f.gauge_of(&(q - x))).collect();
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((max, min))
}

/// Sampled upper estimate of `T_F` for any target: Euclidean projections of
/// points scattered around `x` (including `x` itself).
pub fn sample_minimal_time(
    f: &DynamicsSet,
    t: &TargetSet,
    x: &Vector,
    count: usize,
    spread: f64,
) -> Result<f64> {
    check_dim(f.dim(), x.len())?;
    check_dim(f.dim(), t.dim())?;
    if t.is_bounded() {
        return Ok(sample_time_functions(f, t, x, count)?.1);
    }
    let mut rng = sampler();
    let mut best = f.gauge_of(&(t.euclidean_projection(x) - x));
    for _ in 1..count {
        let d = random_direction(&mut rng, x.len()) * (spread * rng.gen::<f64>());
        let q = t.euclidean_projection(&(x + d));
        best = best.min(f.gauge_of(&(q - x)));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::ConstraintSet;
    use crate::objectives::ObjectiveKind;
    use crate::timefns::{maximal_time, minimal_time};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn euclid() -> DynamicsSet {
        DynamicsSet::euclidean(2, 1.0).unwrap()
    }

    fn singletons(pts: &[[f64; 2]]) -> Vec<TargetSet> {
        pts.iter()
            .map(|p| TargetSet::points(vec![v(p)]).unwrap())
            .collect()
    }

    fn instance(
        enclose: Vec<TargetSet>,
        intersect: Vec<TargetSet>,
        kind: ObjectiveKind,
    ) -> ProblemInstance {
        ProblemInstance::new(
            euclid(),
            enclose,
            intersect,
            ConstraintSet::whole_space(2).unwrap(),
            kind,
        )
        .unwrap()
    }

    #[test]
    fn grid_finds_circumradius() {
        let p = instance(
            singletons(&[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]),
            vec![],
            ObjectiveKind::MinMax,
        );
        let r = grid_minimize(&p, &GridSpec::for_problem(&p).unwrap()).unwrap();
        assert!((r.value - 2f64.sqrt()).abs() < 1e-3);
        assert!(r.value >= 2f64.sqrt() - 1e-12);
        assert!(r.level_values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn grid_two_singleton_intersection() {
        let p = instance(
            vec![],
            singletons(&[[0.0, 0.0], [4.0, 0.0]]),
            ObjectiveKind::MinMax,
        );
        let r = grid_minimize(&p, &GridSpec::for_problem(&p).unwrap()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-3);
    }

    #[test]
    fn grid_equilateral_sum() {
        let s3 = 3f64.sqrt();
        let p = instance(
            singletons(&[[0.0, 0.0], [1.0, 0.0], [0.5, s3 / 2.0]]),
            vec![],
            ObjectiveKind::Sum,
        );
        let r = grid_minimize(&p, &GridSpec::for_problem(&p).unwrap()).unwrap();
        assert!((r.value - s3).abs() < 1e-3);
    }

    #[test]
    fn grid_rejects_high_dimension_and_empty() {
        assert!(GridSpec::new(Vector::zeros(4), Vector::from_element(4, 1.0)).is_err());
        let p = ProblemInstance::new(
            euclid(),
            singletons(&[[0.0, 0.0]]),
            vec![],
            ConstraintSet::boxed(v(&[10.0, 10.0]), v(&[11.0, 11.0])).unwrap(),
            ObjectiveKind::MinMax,
        )
        .unwrap();
        let spec = GridSpec::new(v(&[-1.0, -1.0]), v(&[1.0, 1.0])).unwrap();
        assert_eq!(grid_minimize(&p, &spec), Err(Error::EmptyGrid));
    }

    #[test]
    fn sampling_bounds_are_one_sided() {
        let f = DynamicsSet::lp(2, 3.0, 1.0).unwrap();
        let targets = vec![
            TargetSet::points(vec![v(&[1.0, 2.0]), v(&[3.0, -1.0])]).unwrap(),
            TargetSet::vpolytope(vec![v(&[2.0, 1.0]), v(&[-1.0, 3.0]), v(&[0.0, 4.0])]).unwrap(),
            TargetSet::extended_ball(v(&[3.0, 0.0]), 1.0, &f).unwrap(),
        ];
        for t in &targets {
            for x in [v(&[0.0, 0.0]), v(&[-2.0, 1.5])] {
                let (c, tt) = sample_time_functions(&f, t, &x, 2000).unwrap();
                assert!(c <= maximal_time(&f, t, &x).unwrap().value + 1e-12);
                assert!(tt >= minimal_time(&f, t, &x).unwrap().value - 1e-12);
            }
        }
        // points are sampled exactly
        let (c, tt) = sample_time_functions(&f, &targets[0], &v(&[0.0, 0.0]), 1).unwrap();
        assert_eq!(
            c,
            maximal_time(&f, &targets[0], &v(&[0.0, 0.0]))
                .unwrap()
                .value
        );
        assert_eq!(
            tt,
            minimal_time(&f, &targets[0], &v(&[0.0, 0.0]))
                .unwrap()
                .value
        );
    }

    #[test]
    fn sampling_extended_ball_converges_to_closed_form() {
        let f = euclid();
        let t = TargetSet::extended_ball(v(&[3.0, 0.0]), 1.0, &f).unwrap();
        let (c, _) = sample_time_functions(&f, &t, &v(&[0.0, 0.0]), 10_000).unwrap();
        assert!((c - 4.0).abs() < 1e-3);
    }

    #[test]
    fn sampling_vpolytope_hits_vertex_max() {
        let f = DynamicsSet::sup_box(2, 1.0).unwrap();
        let t = TargetSet::vpolytope(vec![v(&[2.0, 1.0]), v(&[-1.0, 3.0])]).unwrap();
        let (c, _) = sample_time_functions(&f, &t, &v(&[0.0, 0.0]), 50).unwrap();
        assert_eq!(c, 3.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let f = euclid();
        let t = TargetSet::euclidean_ball(v(&[1.0, 1.0]), 0.5).unwrap();
        let a = sample_time_functions(&f, &t, &v(&[0.0, 0.0]), 300).unwrap();
        let b = sample_time_functions(&f, &t, &v(&[0.0, 0.0]), 300).unwrap();
        assert_eq!(a, b);
    }
}
