//! Multi-start projected subgradient descent for both objectives, with
//! existence and uniqueness diagnostics and an enclosure certificate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::constraint::ConstraintSet;
use crate::error::{check_dim, Error, Result};
use crate::gauge::DynamicsSet;
use crate::geometry::{project_simplex, Vector};
use crate::objectives::{ObjectiveKind, ProblemInstance};
use crate::oracle::{problem_box, sample_target};
use crate::targets::{TargetKind, TargetSet};
use crate::timefns::{maximal_time, minimal_time};

/// Iterations between restarts from the best point.
pub const WINDOW: usize = 200;
/// A stagnant window at or below this step scale ends a restart.
pub const SCALE_FLOOR: f64 = 1e-7;
/// Restart values within this of the best are compared for spread.
pub const FLAT_VALUE_TOL: f64 = 1e-8;
pub const FLAT_SPREAD: f64 = 1e-3;
/// Points sampled per enclose-target for the certificate.
pub const CERTIFICATE_SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum StepRule {
    /// Normalized steps `c·D·scale/√k`, `D` the start-box diameter.
    Diminishing { c: f64 },
    /// `(f − target)/‖g‖²` with the optimal value guessed as `target`.
    Polyak { target: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub step_rule: StepRule,
    /// Best-value improvement over a window below which the window counts as stagnant.
    pub stop_tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 5000,
            step_rule: StepRule::Diminishing { c: 1.0 },
            stop_tol: 1e-9,
            restarts: 8,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidProblem("max_iters must be >= 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidProblem("restarts must be >= 1".into()));
        }
        match self.step_rule {
            StepRule::Diminishing { c } if !(c > 0.0 && c.is_finite()) => Err(
                Error::InvalidProblem(format!("step constant must be > 0, got {c}")),
            ),
            StepRule::Polyak { target } if !target.is_finite() => {
                Err(Error::InvalidProblem("Polyak target must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartResult {
    pub center: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Margins `≤ 0` certify that `x̄ + rF` encloses every `Ω_i` (on sampled
/// points) and meets every `Θ_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SylvesterCertificate {
    pub radius: f64,
    pub enclosure_margins: Vec<f64>,
    pub intersection_margins: Vec<f64>,
}

impl SylvesterCertificate {
    pub fn max_margin(&self) -> f64 {
        self.enclosure_margins
            .iter()
            .chain(&self.intersection_margins)
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub center: Vec<f64>,
    pub value: f64,
    pub objective: ObjectiveKind,
    pub iterations_used: usize,
    pub converged: bool,
    /// False when none of the existence conditions applies.
    pub existence_verified: bool,
    /// Restarts near the best value ended far apart.
    pub likely_non_unique: bool,
    pub certificate: Option<SylvesterCertificate>,
    pub starts: Vec<RestartResult>,
    /// Best value of the winning restart at the end of every window.
    pub trace: Vec<f64>,
}

/// Euclidean projection onto the constraint set.
pub fn project_constraint(s: &ConstraintSet, x: &Vector) -> Result<Vector> {
    s.project(x)
}

/// Minimum-norm point of the convex hull of `gs`, by projected gradient
/// on the weights.
fn min_norm_hull(gs: &[&Vector]) -> Vector {
    let k = gs.len();
    let gram: Vec<f64> = (0..k * k).map(|ij| gs[ij / k].dot(gs[ij % k])).collect();
    let trace: f64 = (0..k).map(|i| gram[i * k + i]).sum();
    if trace == 0.0 {
        return gs[0].clone();
    }
    let eta = 1.0 / trace;
    let mut lam = vec![1.0 / k as f64; k];
    for _ in 0..100 {
        let grad: Vec<f64> = (0..k)
            .map(|i| (0..k).map(|j| gram[i * k + j] * lam[j]).sum())
            .collect();
        for i in 0..k {
            lam[i] -= eta * grad[i];
        }
        project_simplex(&mut lam);
    }
    gs.iter()
        .zip(&lam)
        .fold(Vector::zeros(gs[0].len()), |acc, (g, l)| acc + *g * *l)
}

/// The min-max objective as a maximum of pieces: one per point or vertex
/// of finite enclose-targets, one per remaining component.
fn max_pieces(p: &ProblemInstance, x: &Vector) -> Result<Vec<(f64, Vector)>> {
    let f = p.dynamics();
    let mut out = Vec::new();
    for t in p.enclose() {
        let finite = match t.kind() {
            TargetKind::Points(ps) => Some(ps.as_slice()),
            _ => t.vertices(),
        };
        match finite {
            Some(vs) => out.extend(vs.iter().map(|q| {
                let d = q - x;
                (f.gauge_of(&d), -f.subgradient_of(&d))
            })),
            None => {
                let c = maximal_time(f, t, x)?;
                out.push((c.value, c.subgradient));
            }
        }
    }
    for t in p.intersect() {
        let c = minimal_time(f, t, x)?;
        out.push((c.value, c.subgradient));
    }
    Ok(out)
}

/// Value and search direction. For the min-max objective the direction is
/// the minimum-norm combination of the subgradients of pieces within `eps`
/// of the maximum, which follows ridges where several pieces tie.
fn value_and_direction(p: &ProblemInstance, x: &Vector, eps: f64) -> Result<(f64, Vector)> {
    if p.objective() == ObjectiveKind::Sum {
        return p.eval(x);
    }
    let pieces = max_pieces(p, x)?;
    let value = pieces.iter().map(|(v, _)| *v).fold(0.0, f64::max);
    let active: Vec<&Vector> = pieces
        .iter()
        .filter(|(v, _)| value - v <= eps)
        .map(|(_, g)| g)
        .collect();
    if active.len() <= 1 {
        return Ok((
            value,
            active
                .first()
                .map_or_else(|| Vector::zeros(x.len()), |g| (*g).clone()),
        ));
    }
    let d = min_norm_hull(&active);
    // a vanishing combination carries no direction; fall back to one piece
    Ok((
        value,
        if d.norm() > 1e-9 * active[0].norm() {
            d
        } else {
            active[0].clone()
        },
    ))
}

struct Run {
    center: Vector,
    value: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

/// One restart. Steps shrink by 0.5 after an improving window and by 0.1
/// after a stagnant one, restarting from the best point each time. The run
/// stops at a stagnant window once the scale is below [`SCALE_FLOOR`]; a run
/// that exhausts the budget counts as converged if any window stagnated.
fn run_restart(
    p: &ProblemInstance,
    cfg: &SolverConfig,
    start: Vector,
    diameter: f64,
) -> Result<Run> {
    let s = p.constraint();
    let lip = p.lipschitz_bound();
    let mut x = s.project(&start)?;
    let (mut fx, mut gx) = value_and_direction(p, &x, 0.0)?;
    let mut last_step;
    let mut best = x.clone();
    let mut best_val = fx;
    let mut window_start_val = fx;
    let mut scale = 1.0;
    let mut k = 0usize;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut any_stagnant = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let gn = gx.norm();
        if best_val == 0.0 || gn == 0.0 {
            converged = true;
            break;
        }
        k += 1;
        let next = match cfg.step_rule {
            StepRule::Diminishing { c } => {
                let t = c * diameter * scale / (k as f64).sqrt();
                last_step = t;
                &x - &gx * (t / gn)
            }
            StepRule::Polyak { target } => {
                if fx <= target {
                    converged = true;
                    break;
                }
                last_step = (fx - target) / gn;
                &x - &gx * ((fx - target) / (gn * gn))
            }
        };
        x = s.project(&next)?;
        (fx, gx) = value_and_direction(p, &x, lip * last_step)?;
        if fx < best_val {
            best_val = fx;
            best = x.clone();
        }
        if iterations % WINDOW == 0 {
            trace.push(best_val);
            let improvement = window_start_val - best_val;
            window_start_val = best_val;
            let stagnant = improvement <= cfg.stop_tol;
            any_stagnant |= stagnant;
            if stagnant {
                if scale <= SCALE_FLOOR {
                    converged = true;
                    break;
                }
                scale *= 0.1;
            } else {
                scale *= 0.5;
            }
            x = best.clone();
            (fx, gx) = value_and_direction(p, &x, lip * last_step)?;
            k = 0;
        }
    }
    if !converged && iterations >= cfg.max_iters {
        converged = any_stagnant;
    }
    if trace.last() != Some(&best_val) {
        trace.push(best_val);
    }
    Ok(Run {
        center: best,
        value: best_val,
        iterations,
        converged,
        trace,
    })
}

/// Start points: uniform in the problem box (seed `seed + i` for restart
/// `i`), projected onto `S` by the restart itself.
fn start_point(lo: &Vector, hi: &Vector, seed: u64) -> Vector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Vector::from_fn(lo.len(), |i, _| rng.gen_range(lo[i]..=hi[i]))
}

/// Minimizes the configured objective over `S`. Deterministic for a fixed
/// configuration: restarts run in parallel but are merged by value with
/// ties going to the lowest restart index.
pub fn minimize(p: &ProblemInstance, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let (lo, hi) = problem_box(p)?;
    let diameter = (&hi - &lo).norm();
    let runs: Vec<Run> = (0..cfg.restarts)
        .into_par_iter()
        .map(|i| {
            run_restart(
                p,
                cfg,
                start_point(&lo, &hi, cfg.seed.wrapping_add(i as u64)),
                diameter,
            )
        })
        .collect::<Result<_>>()?;
    let mut win = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value < runs[win].value {
            win = i;
        }
    }
    let best = &runs[win];
    let near: Vec<&Run> = runs
        .iter()
        .filter(|r| r.value - best.value <= FLAT_VALUE_TOL)
        .collect();
    let spread = near
        .iter()
        .flat_map(|a| near.iter().map(move |b| (&a.center - &b.center).norm()))
        .fold(0.0, f64::max);
    let certificate = match p.objective() {
        ObjectiveKind::MinMax => Some(certificate(p, &best.center, best.value)?),
        ObjectiveKind::Sum => None,
    };
    Ok(Solution {
        center: best.center.iter().cloned().collect(),
        value: best.value,
        objective: p.objective(),
        iterations_used: runs.iter().map(|r| r.iterations).sum(),
        converged: best.converged,
        existence_verified: existence_check(p).holds,
        likely_non_unique: spread > FLAT_SPREAD,
        certificate,
        starts: runs
            .iter()
            .map(|r| RestartResult {
                center: r.center.iter().cloned().collect(),
                value: r.value,
                iterations: r.iterations,
                converged: r.converged,
            })
            .collect(),
        trace: best.trace.clone(),
    })
}

/// Enclosure margins from sampled target points and intersection margins
/// from the minimal time, both relative to `radius`.
pub fn certificate(
    p: &ProblemInstance,
    center: &Vector,
    radius: f64,
) -> Result<SylvesterCertificate> {
    check_dim(p.dim(), center.len())?;
    let f = p.dynamics();
    let mut rng = ChaCha8Rng::seed_from_u64(crate::oracle::SAMPLER_SEED);
    let enclosure_margins = p
        .enclose()
        .iter()
        .map(|o| {
            let pts = sample_target(f, o, CERTIFICATE_SAMPLES, &mut rng)?;
            Ok(pts
                .iter()
                .map(|q| f.gauge_of(&(q - center)))
                .fold(f64::NEG_INFINITY, f64::max)
                - radius)
        })
        .collect::<Result<_>>()?;
    let intersection_margins = p
        .intersect()
        .iter()
        .map(|t| Ok(minimal_time(f, t, center)?.value - radius))
        .collect::<Result<_>>()?;
    Ok(SylvesterCertificate {
        radius,
        enclosure_margins,
        intersection_margins,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExistenceCondition {
    CompactConstraint,
    EncloseTargetsPresent,
    BoundedIntersectTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExistenceReport {
    pub holds: bool,
    pub conditions: Vec<ExistenceCondition>,
    pub reasons: Vec<String>,
}

/// Which finite-dimensional sufficient condition for a minimizer applies.
pub fn existence_check(p: &ProblemInstance) -> ExistenceReport {
    let mut conditions = Vec::new();
    let mut reasons = Vec::new();
    if p.constraint().is_compact() {
        conditions.push(ExistenceCondition::CompactConstraint);
    } else {
        reasons.push("constraint set is not compact".into());
    }
    if !p.enclose().is_empty() {
        conditions.push(ExistenceCondition::EncloseTargetsPresent);
    } else {
        reasons.push("no enclose-targets".into());
    }
    if p.intersect().iter().any(|t| t.is_bounded()) {
        conditions.push(ExistenceCondition::BoundedIntersectTarget);
    } else {
        reasons.push("no bounded intersect-target".into());
    }
    ExistenceReport {
        holds: !conditions.is_empty(),
        conditions,
        reasons,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UniquenessVerdict {
    UniqueCapable,
    NotUniqueCapable,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub verdict: UniquenessVerdict,
    pub reason: String,
}

fn report(verdict: UniquenessVerdict, reason: &str) -> UniquenessReport {
    UniquenessReport {
        verdict,
        reason: reason.into(),
    }
}

/// Affine rank of a point list is at most one.
fn collinear(points: &[&Vector]) -> bool {
    let Some(first) = points.first() else {
        return true;
    };
    let n = first.len();
    let diffs: Vec<Vector> = points.iter().map(|q| *q - *first).collect();
    let scale = diffs.iter().map(|d| d.norm()).fold(0.0, f64::max);
    if scale == 0.0 || n == 1 {
        return true;
    }
    let m = nalgebra::DMatrix::from_columns(&diffs);
    let sv = m.singular_values();
    let mut sv: Vec<f64> = sv.iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv.get(1).is_none_or(|s| *s <= 1e-9 * scale)
}

/// `(center, scale, gauge)` with the target equal to `center + scale·gauge`.
fn as_ball(t: &TargetSet, f: &DynamicsSet) -> Option<(Vector, f64, DynamicsSet)> {
    if let Some(p) = t.singleton() {
        return Some((p.clone(), 0.0, f.clone()));
    }
    match t.kind() {
        TargetKind::ExtendedBall {
            center,
            scale,
            dynamics,
        } => Some((center.clone(), *scale, dynamics.clone())),
        TargetKind::EuclideanBall { center, radius } => Some((
            center.clone(),
            *radius,
            DynamicsSet::euclidean(t.dim(), 1.0).ok()?,
        )),
        _ => None,
    }
}

/// Disjointness of two symmetric balls: `c_a + s_a·F_a` misses `B` iff
/// `T_{F_a}(c_a; B) > s_a`.
fn disjoint(a: &TargetSet, b: &TargetSet, f: &DynamicsSet) -> Option<bool> {
    let (c, s, g) = as_ball(a, f)?;
    if !g.is_symmetric() {
        return None;
    }
    if let TargetKind::ExtendedBall { dynamics, .. } = b.kind() {
        if dynamics != &g {
            // nearest point under a different gauge than the target was built for
            let (cb, sb, gb) = as_ball(b, f)?;
            return Some(minimal_time(&gb, a, &cb).ok()?.value > sb);
        }
    }
    Some(minimal_time(&g, b, &c).ok()?.value > s)
}

/// Decides the uniqueness hypotheses that are checkable for this instance.
pub fn uniqueness_check(p: &ProblemInstance) -> UniquenessReport {
    use UniquenessVerdict::*;
    let f = p.dynamics();
    match p.objective() {
        ObjectiveKind::MinMax => {
            if !f.is_strictly_convex() {
                return report(NotUniqueCapable, "dynamics set is not strictly convex");
            }
            if p.intersect().iter().any(|t| !t.is_strictly_convex()) {
                return report(
                    NotUniqueCapable,
                    "an intersect-target is not strictly convex",
                );
            }
            if !p.enclose().is_empty() {
                return report(
                    UniqueCapable,
                    "enclose-targets present and all hypotheses hold",
                );
            }
            let js = p.intersect();
            if js.iter().all(|t| t.singleton().is_some()) {
                return report(
                    UniqueCapable,
                    "no enclose-targets; singleton intersect-targets meet in at most one point",
                );
            }
            let pairwise = (0..js.len()).all(|i| {
                (i + 1..js.len()).all(|k| {
                    js[i].is_bounded()
                        && js[k].is_bounded()
                        && disjoint(&js[i], &js[k], f) == Some(true)
                })
            });
            if js.len() >= 2 && pairwise {
                return report(
                    UniqueCapable,
                    "no enclose-targets; pairwise disjoint intersect-targets have empty common part",
                );
            }
            report(
                NotUniqueCapable,
                "no enclose-targets and the intersect-targets may share more than one point",
            )
        }
        ObjectiveKind::Sum => {
            let all: Vec<&TargetSet> = p.enclose().iter().chain(p.intersect()).collect();
            let singles: Option<Vec<&Vector>> = all.iter().map(|t| t.singleton()).collect();
            if let Some(points) = singles {
                if collinear(&points) {
                    return report(NotUniqueCapable, "all targets are singletons on one line");
                }
                if f.is_strictly_convex() {
                    return report(
                        UniqueCapable,
                        "non-collinear singletons with strictly convex dynamics",
                    );
                }
                return report(Indeterminate, "dynamics set is not strictly convex");
            }
            if !f.is_strictly_convex() {
                return report(Indeterminate, "dynamics set is not strictly convex");
            }
            if p.intersect().iter().any(|t| !t.is_strictly_convex()) {
                return report(Indeterminate, "an intersect-target is not strictly convex");
            }
            report(
                Indeterminate,
                "line-avoidance condition is only decided for singleton targets",
            )
        }
    }
}
