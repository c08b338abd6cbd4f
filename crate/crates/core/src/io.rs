//! JSON problem files.
//!
//! ```json
//! {"dim": 2,
//!  "dynamics": {"kind": "euclidean", "radius": 1.0},
//!  "enclose": [{"kind": "points", "points": [[0, 0], [2, 0], [0, 2]]}],
//!  "intersect": [],
//!  "constraint": {"kind": "whole_space"},
//!  "objective": "minmax"}
//! ```
//!
//! Numbers are written in shortest round-trip form, so parsing a
//! serialized instance reproduces it bit for bit.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::constraint::{ConstraintKind, ConstraintSet};
use crate::error::{Error, Result};
use crate::gauge::{DynamicsKind, DynamicsSet};
use crate::geometry::Vector;
use crate::objectives::{ObjectiveKind, ProblemInstance};
use crate::targets::{TargetKind, TargetSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DynamicsSpec {
    Euclidean {
        radius: f64,
    },
    Lp {
        p: f64,
        radius: f64,
    },
    Box {
        radius: f64,
    },
    Ellipsoid {
        /// Matrix rows.
        #[serde(rename = "A")]
        shape: Vec<Vec<f64>>,
    },
    Hpolytope {
        rows: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpec {
    Points {
        points: Vec<Vec<f64>>,
    },
    Vpolytope {
        vertices: Vec<Vec<f64>>,
    },
    ExtendedBall {
        center: Vec<f64>,
        s: f64,
    },
    EuclideanBall {
        center: Vec<f64>,
        radius: f64,
    },
    Halfspace {
        a: Vec<f64>,
        b: f64,
    },
    Hpolytope {
        rows: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSpec {
    WholeSpace,
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    EuclideanBall {
        center: Vec<f64>,
        radius: f64,
    },
    Halfspace {
        a: Vec<f64>,
        b: f64,
    },
    Hpolytope {
        rows: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dim: usize,
    pub dynamics: DynamicsSpec,
    #[serde(default)]
    pub enclose: Vec<TargetSpec>,
    #[serde(default)]
    pub intersect: Vec<TargetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintSpec>,
    pub objective: ObjectiveKind,
}

fn vector(xs: &[f64], dim: usize) -> Result<Vector> {
    if xs.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: xs.len(),
        });
    }
    Ok(Vector::from_column_slice(xs))
}

fn vectors(xss: &[Vec<f64>], dim: usize) -> Result<Vec<Vector>> {
    xss.iter().map(|xs| vector(xs, dim)).collect()
}

fn list(v: &Vector) -> Vec<f64> {
    v.iter().cloned().collect()
}

fn lists(vs: &[Vector]) -> Vec<Vec<f64>> {
    vs.iter().map(list).collect()
}

impl DynamicsSpec {
    pub fn build(&self, dim: usize) -> Result<DynamicsSet> {
        match self {
            DynamicsSpec::Euclidean { radius } => DynamicsSet::euclidean(dim, *radius),
            DynamicsSpec::Lp { p, radius } => DynamicsSet::lp(dim, *p, *radius),
            DynamicsSpec::Box { radius } => DynamicsSet::sup_box(dim, *radius),
            DynamicsSpec::Ellipsoid { shape } => {
                if shape.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: shape.len(),
                    });
                }
                let flat: Vec<f64> = vectors(shape, dim)?
                    .iter()
                    .flat_map(|r| r.iter().cloned().collect::<Vec<_>>())
                    .collect();
                DynamicsSet::ellipsoid(DMatrix::from_row_slice(dim, dim, &flat))
            }
            DynamicsSpec::Hpolytope { rows, offsets } => {
                DynamicsSet::hpolytope(vectors(rows, dim)?, offsets.clone())
            }
        }
    }

    pub fn describe(f: &DynamicsSet) -> Self {
        match f.kind() {
            DynamicsKind::Euclidean { radius } => DynamicsSpec::Euclidean { radius: *radius },
            DynamicsKind::Lp { p, radius } => DynamicsSpec::Lp {
                p: *p,
                radius: *radius,
            },
            DynamicsKind::SupBox { radius } => DynamicsSpec::Box { radius: *radius },
            DynamicsKind::Ellipsoid { shape } => DynamicsSpec::Ellipsoid {
                shape: shape
                    .row_iter()
                    .map(|r| r.iter().cloned().collect())
                    .collect(),
            },
            DynamicsKind::HPolytope { rows, offsets } => DynamicsSpec::Hpolytope {
                rows: lists(rows),
                offsets: offsets.clone(),
            },
        }
    }
}

impl TargetSpec {
    pub fn build(&self, dim: usize, f: &DynamicsSet) -> Result<TargetSet> {
        match self {
            TargetSpec::Points { points } => TargetSet::points(vectors(points, dim)?),
            TargetSpec::Vpolytope { vertices } => TargetSet::vpolytope(vectors(vertices, dim)?),
            TargetSpec::ExtendedBall { center, s } => {
                TargetSet::extended_ball(vector(center, dim)?, *s, f)
            }
            TargetSpec::EuclideanBall { center, radius } => {
                TargetSet::euclidean_ball(vector(center, dim)?, *radius)
            }
            TargetSpec::Halfspace { a, b } => TargetSet::halfspace(vector(a, dim)?, *b),
            TargetSpec::Hpolytope { rows, offsets } => {
                TargetSet::hpolytope(vectors(rows, dim)?, offsets.clone())
            }
        }
    }

    pub fn describe(t: &TargetSet) -> Self {
        match t.kind() {
            TargetKind::Points(ps) => TargetSpec::Points { points: lists(ps) },
            TargetKind::VPolytope(vs) => TargetSpec::Vpolytope {
                vertices: lists(vs),
            },
            TargetKind::ExtendedBall { center, scale, .. } => TargetSpec::ExtendedBall {
                center: list(center),
                s: *scale,
            },
            TargetKind::EuclideanBall { center, radius } => TargetSpec::EuclideanBall {
                center: list(center),
                radius: *radius,
            },
            TargetKind::HalfSpace { normal, offset } => TargetSpec::Halfspace {
                a: list(normal),
                b: *offset,
            },
            TargetKind::HPolytope { rows, offsets } => TargetSpec::Hpolytope {
                rows: lists(rows),
                offsets: offsets.clone(),
            },
        }
    }
}

impl ConstraintSpec {
    pub fn build(&self, dim: usize) -> Result<ConstraintSet> {
        match self {
            ConstraintSpec::WholeSpace => ConstraintSet::whole_space(dim),
            ConstraintSpec::Box { lo, hi } => {
                ConstraintSet::boxed(vector(lo, dim)?, vector(hi, dim)?)
            }
            ConstraintSpec::EuclideanBall { center, radius } => {
                ConstraintSet::euclidean_ball(vector(center, dim)?, *radius)
            }
            ConstraintSpec::Halfspace { a, b } => ConstraintSet::halfspace(vector(a, dim)?, *b),
            ConstraintSpec::Hpolytope { rows, offsets } => {
                ConstraintSet::hpolytope(vectors(rows, dim)?, offsets.clone())
            }
        }
    }

    pub fn describe(s: &ConstraintSet) -> Self {
        match s.kind() {
            ConstraintKind::WholeSpace => ConstraintSpec::WholeSpace,
            ConstraintKind::Box { lo, hi } => ConstraintSpec::Box {
                lo: list(lo),
                hi: list(hi),
            },
            ConstraintKind::EuclideanBall { center, radius } => ConstraintSpec::EuclideanBall {
                center: list(center),
                radius: *radius,
            },
            ConstraintKind::HalfSpace { normal, offset } => ConstraintSpec::Halfspace {
                a: list(normal),
                b: *offset,
            },
            ConstraintKind::HPolytope { rows, offsets } => ConstraintSpec::Hpolytope {
                rows: lists(rows),
                offsets: offsets.clone(),
            },
        }
    }
}

impl ProblemFile {
    pub fn build(&self) -> Result<ProblemInstance> {
        if self.dim == 0 {
            return Err(Error::InvalidProblem("dim must be positive".into()));
        }
        let f = self.dynamics.build(self.dim)?;
        let enclose = self
            .enclose
            .iter()
            .map(|t| t.build(self.dim, &f))
            .collect::<Result<_>>()?;
        let intersect = self
            .intersect
            .iter()
            .map(|t| t.build(self.dim, &f))
            .collect::<Result<_>>()?;
        let constraint = match &self.constraint {
            Some(c) => c.build(self.dim)?,
            None => ConstraintSet::whole_space(self.dim)?,
        };
        ProblemInstance::new(f, enclose, intersect, constraint, self.objective)
    }

    pub fn describe(p: &ProblemInstance) -> Self {
        ProblemFile {
            dim: p.dim(),
            dynamics: DynamicsSpec::describe(p.dynamics()),
            enclose: p.enclose().iter().map(TargetSpec::describe).collect(),
            intersect: p.intersect().iter().map(TargetSpec::describe).collect(),
            constraint: Some(ConstraintSpec::describe(p.constraint())),
            objective: p.objective(),
        }
    }
}

/// Parses and validates a problem document. Malformed JSON is reported as
/// [`Error::InvalidProblem`].
pub fn parse_problem(json: &str) -> Result<ProblemInstance> {
    let file: ProblemFile = serde_json::from_str(json)
        .map_err(|e| Error::InvalidProblem(format!("malformed problem file: {e}")))?;
    file.build()
}

pub fn problem_to_json(p: &ProblemInstance) -> String {
    serde_json::to_string_pretty(&ProblemFile::describe(p)).expect("problem files always serialize")
}
