//! The benchmark suite: fixed planar instances with known optima plus
//! generated ones, each solved and checked against the grid oracle.

use std::time::Instant;

use crate::constraint::ConstraintSet;
use crate::error::Result;
use crate::gauge::DynamicsSet;
use crate::generator::random_instance;
use crate::geometry::Vector;
use crate::objectives::{ObjectiveKind, ProblemInstance};
use crate::oracle::{grid_minimize, problem_box, GridSpec};
use crate::solver::{minimize, SolverConfig};
use crate::targets::TargetSet;

/// Refinement levels used by the suite's oracle; four levels leave grid steps
/// near 1e-3 on typical boxes, six bring them to about 5e-5.
pub const ORACLE_LEVELS: usize = 6;
/// Number of generated instances in the suite.
pub const GENERATED: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: &'static str,
    pub problem: ProblemInstance,
    /// Known optimal value and center, where derived by hand.
    pub value: Option<f64>,
    pub center: Option<[f64; 2]>,
}

fn singletons(pts: &[[f64; 2]]) -> Vec<TargetSet> {
    pts.iter()
        .map(|p| TargetSet::points(vec![Vector::from_column_slice(p)]).expect("valid point"))
        .collect()
}

fn euclidean_points(pts: &[[f64; 2]], objective: ObjectiveKind) -> ProblemInstance {
    ProblemInstance::new(
        DynamicsSet::euclidean(2, 1.0).expect("unit disc"),
        singletons(pts),
        vec![],
        ConstraintSet::whole_space(2).expect("plane"),
        objective,
    )
    .expect("valid fixture")
}

/// Hand-derived instances.
pub fn fixtures() -> Vec<Fixture> {
    let s3 = 3f64.sqrt();
    vec![
        Fixture {
            name: "sylvester_triangle",
            problem: euclidean_points(&[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]], ObjectiveKind::MinMax),
            value: Some(2f64.sqrt()),
            center: Some([1.0, 1.0]),
        },
        Fixture {
            name: "enclosing_isosceles",
            problem: euclidean_points(&[[0.0, 0.0], [2.0, 0.0], [1.0, 2.0]], ObjectiveKind::MinMax),
            value: Some(1.25),
            center: Some([1.0, 0.75]),
        },
        Fixture {
            name: "fermat_equilateral",
            problem: euclidean_points(
                &[[0.0, 0.0], [1.0, 0.0], [0.5, s3 / 2.0]],
                ObjectiveKind::Sum,
            ),
            value: Some(s3),
            center: Some([0.5, s3 / 6.0]),
        },
        Fixture {
            name: "collinear_pair_sum",
            problem: euclidean_points(&[[0.0, 0.0], [4.0, 0.0]], ObjectiveKind::Sum),
            value: Some(4.0),
            center: None,
        },
        Fixture {
            name: "point_and_halfplane",
            problem: ProblemInstance::new(
                DynamicsSet::euclidean(2, 1.0).expect("unit disc"),
                singletons(&[[0.0, 0.0]]),
                vec![
                    TargetSet::halfspace(Vector::from_column_slice(&[-1.0, 0.0]), -4.0)
                        .expect("half-plane"),
                ],
                ConstraintSet::whole_space(2).expect("plane"),
                ObjectiveKind::MinMax,
            )
            .expect("valid fixture"),
            value: Some(2.0),
            center: Some([2.0, 0.0]),
        },
    ]
}

/// Fixtures followed by `generated_00` … `generated_19`.
pub fn suite() -> Result<Vec<(String, ProblemInstance)>> {
    let mut out: Vec<(String, ProblemInstance)> = fixtures()
        .into_iter()
        .map(|f| (f.name.to_string(), f.problem))
        .collect();
    for k in 0..GENERATED {
        out.push((
            format!("generated_{k:02}"),
            random_instance(k as u64, None)?,
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub solver_value: f64,
    pub oracle_value: f64,
    pub gap: f64,
    pub millis: Option<u128>,
}

/// Solves every suite instance with the given seed and compares with the
/// grid oracle. Wall-clock time is recorded only when `timing` is set.
pub fn run(seed: u64, timing: bool) -> Result<Vec<BenchRow>> {
    let cfg = SolverConfig {
        seed,
        ..SolverConfig::default()
    };
    suite()?
        .into_iter()
        .map(|(instance, p)| {
            let start = Instant::now();
            let s = minimize(&p, &cfg)?;
            let millis = start.elapsed().as_millis();
            let (lo, hi) = problem_box(&p)?;
            let g = grid_minimize(&p, &GridSpec::with_levels(lo, hi, 64, ORACLE_LEVELS)?)?;
            Ok(BenchRow {
                instance,
                solver_value: s.value,
                oracle_value: g.value,
                gap: s.value - g.value,
                millis: timing.then_some(millis),
            })
        })
        .collect()
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("instance,solver_value,oracle_value,gap,millis\n");
    for r in rows {
        let millis = r.millis.map(|m| m.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.instance, r.solver_value, r.oracle_value, r.gap, millis
        ));
    }
    out
}
