//! Maximal and minimal time functions.
//!
//! `C_F(x;Ω) = inf{t ≥ 0 : Ω ⊆ x + tF} = sup_{q∈Ω} ρ_F(q − x)` and
//! `T_F(x;Θ) = inf{t ≥ 0 : (x + tF) ∩ Θ ≠ ∅} = inf_{q∈Θ} ρ_F(q − x)`.
//! With the Euclidean unit ball they are the farthest-distance and the
//! distance functions.

use crate::error::Result;
use crate::gauge::DynamicsSet;
use crate::geometry::Vector;
use crate::targets::TargetSet;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeFnEval {
    pub value: f64,
    /// Farthest (for `C_F`) or nearest (for `T_F`) point of the target.
    pub witness: Vector,
    pub subgradient: Vector,
    /// Accuracy reported by the underlying projection (0 when exact).
    pub tolerance: f64,
}

/// `C_F(x;Ω)` with a subgradient from the farthest point.
pub fn maximal_time(f: &DynamicsSet, omega: &TargetSet, x: &Vector) -> Result<TimeFnEval> {
    let p = omega.farthest_projection(f, x)?;
    Ok(TimeFnEval {
        value: p.value,
        witness: p.point,
        subgradient: -p.gauge_subgradient,
        tolerance: p.tolerance,
    })
}

/// `T_F(x;Θ)`; the subgradient is zero when `x ∈ Θ`.
pub fn minimal_time(f: &DynamicsSet, theta: &TargetSet, x: &Vector) -> Result<TimeFnEval> {
    let p = theta.nearest_projection(f, x)?;
    let subgradient = if p.value == 0.0 {
        Vector::zeros(x.len())
    } else {
        -p.gauge_subgradient
    };
    Ok(TimeFnEval {
        value: p.value,
        witness: p.point,
        subgradient,
        tolerance: p.tolerance,
    })
}
