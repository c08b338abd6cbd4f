//! Problem instances, the min-max and sum objectives, and the level-set
//! inclusions between them.
//!
//! With enclose-targets `Ω_i` and intersect-targets `Θ_j`:
//! the min-max objective is `max{C_F(x;Ω_i), T_F(x;Θ_j)}`, the sum
//! objective is `Σ C_F(x;Ω_i) + Σ T_F(x;Θ_j)`, and the squared objective
//! is the square of the min-max one.

use serde::{Deserialize, Serialize};

use crate::constraint::ConstraintSet;
use crate::error::{check_dim, Error, Result};
use crate::gauge::{DynamicsKind, DynamicsSet};
use crate::geometry::Vector;
use crate::targets::{TargetKind, TargetSet, TIE_TOL};
use crate::timefns::{maximal_time, minimal_time, TimeFnEval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveKind {
    #[serde(rename = "minmax")]
    MinMax,
    #[serde(rename = "sum")]
    Sum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    dim: usize,
    dynamics: DynamicsSet,
    enclose: Vec<TargetSet>,
    intersect: Vec<TargetSet>,
    constraint: ConstraintSet,
    objective: ObjectiveKind,
}

/// Value of the min-max objective with the active component and its
/// subgradient. Components are indexed enclose-first.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEval {
    pub value: f64,
    pub active: usize,
    pub subgradient: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumEval {
    pub value: f64,
    pub subgradient: Vector,
}

impl ProblemInstance {
    /// Validates dimensions and kind combinations.
    ///
    /// Enclose-targets must be bounded and have an exact farthest point
    /// (Euclidean-ball targets only under Euclidean dynamics). For the sum
    /// objective, intersect-targets must be convex.
    pub fn new(
        dynamics: DynamicsSet,
        enclose: Vec<TargetSet>,
        intersect: Vec<TargetSet>,
        constraint: ConstraintSet,
        objective: ObjectiveKind,
    ) -> Result<Self> {
        let dim = dynamics.dim();
        if enclose.is_empty() && intersect.is_empty() {
            return Err(Error::InvalidProblem("need at least one target".into()));
        }
        check_dim(dim, constraint.dim())?;
        for t in enclose.iter().chain(&intersect) {
            check_dim(dim, t.dim())?;
            if let TargetKind::ExtendedBall { dynamics: d, .. } = t.kind() {
                if d != &dynamics {
                    return Err(Error::Unsupported(
                        "extended ball built for different dynamics".into(),
                    ));
                }
            }
        }
        for t in &enclose {
            if !t.is_bounded() {
                return Err(Error::InvalidProblem(
                    "enclose-targets must be bounded".into(),
                ));
            }
            if matches!(t.kind(), TargetKind::EuclideanBall { .. })
                && !matches!(dynamics.kind(), DynamicsKind::Euclidean { .. })
            {
                return Err(Error::Unsupported(
                    "enclosing a Euclidean ball needs Euclidean dynamics".into(),
                ));
            }
        }
        if objective == ObjectiveKind::Sum && intersect.iter().any(|t| !t.is_convex()) {
            return Err(Error::Unsupported(
                "the sum objective needs convex intersect-targets".into(),
            ));
        }
        Ok(ProblemInstance {
            dim,
            dynamics,
            enclose,
            intersect,
            constraint,
            objective,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dynamics(&self) -> &DynamicsSet {
        &self.dynamics
    }

    pub fn enclose(&self) -> &[TargetSet] {
        &self.enclose
    }

    pub fn intersect(&self) -> &[TargetSet] {
        &self.intersect
    }

    pub fn constraint(&self) -> &ConstraintSet {
        &self.constraint
    }

    pub fn objective(&self) -> ObjectiveKind {
        self.objective
    }

    /// Number of components, `|I| + |J|`.
    pub fn m(&self) -> usize {
        self.enclose.len() + self.intersect.len()
    }

    /// Euclidean Lipschitz constant of the configured objective: each time
    /// function is `1/r_F`-Lipschitz.
    pub fn lipschitz_bound(&self) -> f64 {
        let per = 1.0 / self.dynamics.inner_radius();
        match self.objective {
            ObjectiveKind::MinMax => per,
            ObjectiveKind::Sum => per * self.m() as f64,
        }
    }

    /// Whether the objective is convex: maximal time functions always are,
    /// minimal time functions need a convex target.
    pub fn is_convex(&self) -> bool {
        self.intersect.iter().all(|t| t.is_convex())
    }

    /// Every time-function component at `x`, enclose-targets first.
    pub fn components(&self, x: &Vector) -> Result<Vec<TimeFnEval>> {
        check_dim(self.dim, x.len())?;
        let f = &self.dynamics;
        let mut out = Vec::with_capacity(self.m());
        for t in &self.enclose {
            out.push(maximal_time(f, t, x)?);
        }
        for t in &self.intersect {
            out.push(minimal_time(f, t, x)?);
        }
        Ok(out)
    }

    /// Min-max objective; the active index is the first component within
    /// a relative 1e-12 of the maximum.
    pub fn eval_max(&self, x: &Vector) -> Result<MaxEval> {
        let mut comps = self.components(x)?;
        let value = comps.iter().map(|c| c.value).fold(0.0, f64::max);
        let tol = TIE_TOL * value.max(1.0);
        let active = comps
            .iter()
            .position(|c| value - c.value <= tol)
            .unwrap_or(0);
        Ok(MaxEval {
            value,
            active,
            subgradient: comps.swap_remove(active).subgradient,
        })
    }

    pub fn eval_sum(&self, x: &Vector) -> Result<SumEval> {
        let comps = self.components(x)?;
        let mut value = 0.0;
        let mut subgradient = Vector::zeros(self.dim);
        for c in comps {
            value += c.value;
            subgradient += c.subgradient;
        }
        Ok(SumEval { value, subgradient })
    }

    /// Square of the min-max objective.
    pub fn eval_squared(&self, x: &Vector) -> Result<f64> {
        let g = self.eval_max(x)?.value;
        Ok(g * g)
    }

    /// Value and subgradient of the configured objective.
    pub fn eval(&self, x: &Vector) -> Result<(f64, Vector)> {
        match self.objective {
            ObjectiveKind::MinMax => self.eval_max(x).map(|e| (e.value, e.subgradient)),
            ObjectiveKind::Sum => self.eval_sum(x).map(|e| (e.value, e.subgradient)),
        }
    }

    /// Whether `Ω ⊆ x + αF`, checked on the vertices of finite kinds and by
    /// the gauge identity `ρ_F(c − x) + s ≤ α` for balls.
    fn encloses(&self, omega: &TargetSet, x: &Vector, alpha: f64) -> bool {
        let f = &self.dynamics;
        match omega.kind() {
            TargetKind::Points(ps) | TargetKind::VPolytope(ps) => {
                ps.iter().all(|q| f.gauge_of(&(q - x)) <= alpha)
            }
            TargetKind::HPolytope { .. } => omega
                .vertices()
                .is_some_and(|vs| vs.iter().all(|q| f.gauge_of(&(q - x)) <= alpha)),
            TargetKind::ExtendedBall { center, scale, .. } => {
                f.gauge_of(&(center - x)) + scale <= alpha
            }
            TargetKind::EuclideanBall { center, radius } => {
                ((center - x).norm() + radius) / f.inner_radius() <= alpha
            }
            TargetKind::HalfSpace { .. } => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Inclusion {
    /// strict sublevel of the min-max objective not inside the target set intersection
    MaxStrictNotInN,
    /// point of the intersection with min-max objective above α
    NNotInMaxSublevel,
    /// strict sublevel of the sum objective not inside the intersection
    SumStrictNotInN,
    /// point of the intersection with sum objective above m·α
    NNotInSumSublevel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichViolation {
    pub sample: usize,
    pub point: Vec<f64>,
    pub inclusion: Inclusion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub alpha: f64,
    pub samples: usize,
    /// Samples lying in the intersection set `N`.
    pub in_n: usize,
    pub violations: Vec<SandwichViolation>,
}

/// Checks both inclusion chains at every sample:
/// `{G < α} ⊆ N ⊆ {G ≤ α}` and `{H < α} ⊆ N ⊆ {H ≤ mα}` (all within `S`),
/// where `N` is the set of feasible `x` with `Ω_i ⊆ x + αF` for every
/// `i` and `(x + αF) ∩ Θ_j ≠ ∅` for every `j`.
pub fn level_set_sandwich_check(
    p: &ProblemInstance,
    alpha: f64,
    samples: &[Vector],
) -> Result<SandwichReport> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidProblem(format!(
            "alpha must be > 0, got {alpha}"
        )));
    }
    let m = p.m() as f64;
    let mut violations = Vec::new();
    let mut in_n_count = 0;
    for (k, x) in samples.iter().enumerate() {
        let feasible = p.constraint.contains(x, 0.0)?;
        let comps = p.components(x)?;
        let g = comps.iter().map(|c| c.value).fold(0.0, f64::max);
        let h: f64 = comps.iter().map(|c| c.value).sum();
        let in_n = feasible
            && p.enclose.iter().all(|o| p.encloses(o, x, alpha))
            && comps[p.enclose.len()..].iter().all(|c| c.value <= alpha);
        in_n_count += in_n as usize;
        let mut flag = |inclusion| {
            violations.push(SandwichViolation {
                sample: k,
                point: x.iter().cloned().collect(),
                inclusion,
            })
        };
        if feasible && g < alpha && !in_n {
            flag(Inclusion::MaxStrictNotInN);
        }
        if in_n && !(g <= alpha) {
            flag(Inclusion::NNotInMaxSublevel);
        }
        if feasible && h < alpha && !in_n {
            flag(Inclusion::SumStrictNotInN);
        }
        if in_n && !(h <= m * alpha) {
            flag(Inclusion::NNotInSumSublevel);
        }
    }
    Ok(SandwichReport {
        alpha,
        samples: samples.len(),
        in_n: in_n_count,
        violations,
    })
}

/// Multiples of the min-max objective at the reference point used by
/// [`sandwich_sweep`].
pub const SWEEP_FACTORS: [f64; 3] = [0.5, 1.0, 2.0];

/// Runs [`level_set_sandwich_check`] at `α = k·G(x₀)` for each factor in
/// [`SWEEP_FACTORS`], with `x₀` the projection onto `S` of the middle of
/// the problem box and `count` feasible samples drawn with `seed`. When
/// `G(x₀) = 0` the factors are used as `α` directly.
pub fn sandwich_sweep(p: &ProblemInstance, count: usize, seed: u64) -> Result<Vec<SandwichReport>> {
    let (lo, hi) = crate::oracle::problem_box(p)?;
    let start = p.constraint.project(&((lo + hi) * 0.5))?;
    let g0 = p.eval_max(&start)?.value;
    let base = if g0 > 0.0 { g0 } else { 1.0 };
    let samples = crate::oracle::sample_feasible(p, count, seed)?;
    SWEEP_FACTORS
        .iter()
        .map(|k| level_set_sandwich_check(p, k * base, &samples))
        .collect()
}
