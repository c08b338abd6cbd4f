//! Generalized Sylvester (smallest enclosing/intersecting ball) and
//! Fermat–Torricelli problems under Minkowski gauges.
//!
//! A convex body `F` with the origin in its interior defines the gauge
//! `ρ_F`. Given bounded sets `Ω_i` to enclose and closed sets `Θ_j` to
//! meet, the crate minimizes over a constraint set `S` either the largest
//! or the total of the times `C_F(x;Ω_i)` and `T_F(x;Θ_j)` needed to
//! cover `Ω_i` or reach `Θ_j` from `x` with dynamics `F`.

// `!(a > b)` comparisons deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod constraint;
pub mod error;
pub mod gauge;
pub mod generator;
pub mod geometry;
pub mod io;
pub mod objectives;
pub mod oracle;
pub mod solver;
pub mod targets;
pub mod timefns;

pub use constraint::{ConstraintKind, ConstraintSet};
pub use error::{Error, Result};
pub use gauge::{DynamicsKind, DynamicsSet};
pub use geometry::Vector;
pub use objectives::{
    level_set_sandwich_check, sandwich_sweep, ObjectiveKind, ProblemInstance, SandwichReport,
};
pub use oracle::{
    grid_minimize, problem_box, sample_feasible, sample_time_functions, GridResult, GridSpec,
};
pub use solver::{existence_check, minimize, uniqueness_check, Solution, SolverConfig, StepRule};
pub use targets::{ProjectionResult, TargetKind, TargetSet};
pub use timefns::{maximal_time, minimal_time, TimeFnEval};
