//! Hand-written SVG for planar problems.

use std::f64::consts::PI;
use std::fmt::Write;

use gaugeball::geometry::hull_2d;
use gaugeball::{
    ConstraintKind, DynamicsSet, ProblemInstance, Result, TargetKind, TargetSet, Vector,
};

/// Directions sampled on the boundary of `F` for every drawn extended ball.
pub const BOUNDARY_DIRECTIONS: usize = 256;
const WIDTH: f64 = 600.0;

/// Center and radius from a solution document, either a bare solution or
/// the `{"solution": …}` wrapper printed with `--oracle-check`.
pub fn read_solution(json: &str) -> std::result::Result<(Vector, f64), String> {
    let doc: serde_json::Value = serde_json::from_str(json).map_err(|e| e.to_string())?;
    let s = doc.get("solution").unwrap_or(&doc);
    let center = s
        .get("center")
        .and_then(|c| c.as_array())
        .and_then(|c| c.iter().map(|v| v.as_f64()).collect::<Option<Vec<f64>>>())
        .ok_or("missing numeric \"center\" array")?;
    let value = s
        .get("value")
        .and_then(|v| v.as_f64())
        .ok_or("missing numeric \"value\"")?;
    if center.len() != 2 {
        return Err(format!(
            "solution center has {} coordinates, expected 2",
            center.len()
        ));
    }
    Ok((Vector::from_vec(center), value))
}

type Pt = [f64; 2];

fn pt(v: &Vector) -> Pt {
    [v[0], v[1]]
}

/// Boundary of `center + scale·F`.
fn ball_outline(f: &DynamicsSet, center: &Vector, scale: f64) -> Vec<Pt> {
    (0..BOUNDARY_DIRECTIONS)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / BOUNDARY_DIRECTIONS as f64;
            let b = f.boundary_point(&Vector::from_vec(vec![th.cos(), th.sin()]));
            pt(&(center + b * scale))
        })
        .collect()
}

fn circle_outline(center: &Vector, radius: f64) -> Vec<Pt> {
    (0..BOUNDARY_DIRECTIONS)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / BOUNDARY_DIRECTIONS as f64;
            [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
        })
        .collect()
}

/// Sutherland–Hodgman clip of a convex polygon by `⟨a,x⟩ ≤ b`.
fn clip(poly: &[Pt], a: &Vector, b: f64) -> Vec<Pt> {
    let side = |p: &Pt| a[0] * p[0] + a[1] * p[1] - b;
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (sp, sq) = (side(&p), side(&q));
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn clip_all(view: &[Pt], rows: &[Vector], offsets: &[f64]) -> Vec<Pt> {
    rows.iter()
        .zip(offsets)
        .fold(view.to_vec(), |poly, (a, b)| clip(&poly, a, *b))
}

enum Shape {
    Polygon(Vec<Pt>),
    Dots(Vec<Pt>),
}

fn target_shape(f: &DynamicsSet, t: &TargetSet, view: &[Pt]) -> Shape {
    match t.kind() {
        TargetKind::Points(ps) => Shape::Dots(ps.iter().map(pt).collect()),
        TargetKind::VPolytope(vs) => {
            let pts: Vec<Pt> = vs.iter().map(pt).collect();
            Shape::Polygon(hull_2d(&pts))
        }
        TargetKind::ExtendedBall { center, scale, .. } => {
            Shape::Polygon(ball_outline(f, center, *scale))
        }
        TargetKind::EuclideanBall { center, radius } => {
            Shape::Polygon(circle_outline(center, *radius))
        }
        TargetKind::HalfSpace { normal, offset } => Shape::Polygon(clip(view, normal, *offset)),
        TargetKind::HPolytope { rows, offsets } => Shape::Polygon(clip_all(view, rows, offsets)),
    }
}

struct Frame {
    lo: Pt,
    scale: f64,
    height: f64,
}

impl Frame {
    fn map(&self, p: &Pt) -> Pt {
        [
            (p[0] - self.lo[0]) * self.scale,
            self.height - (p[1] - self.lo[1]) * self.scale,
        ]
    }

    fn points(&self, poly: &[Pt]) -> String {
        poly.iter()
            .map(|p| {
                let q = self.map(p);
                format!("{:.3},{:.3}", q[0], q[1])
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn draw(out: &mut String, frame: &Frame, shape: &Shape, class: &str) {
    match shape {
        Shape::Polygon(poly) if poly.len() >= 3 => {
            let _ = writeln!(
                out,
                r#"  <polygon class="{class}" points="{}"/>"#,
                frame.points(poly)
            );
        }
        // degenerate hulls
        Shape::Polygon(poly) if poly.len() == 2 => {
            let _ = writeln!(
                out,
                r#"  <polyline class="{class}" points="{}"/>"#,
                frame.points(poly)
            );
        }
        Shape::Polygon(poly) => draw(out, frame, &Shape::Dots(poly.clone()), class),
        Shape::Dots(ps) => {
            for p in ps {
                let q = frame.map(p);
                let _ = writeln!(
                    out,
                    r#"  <circle class="{class}" cx="{:.3}" cy="{:.3}" r="3"/>"#,
                    q[0], q[1]
                );
            }
        }
    }
}

/// The problem's constraint region, targets, the optimal ball
/// `center + radius·F` and its center.
pub fn svg(p: &ProblemInstance, center: &Vector, radius: f64) -> Result<String> {
    let f = p.dynamics();
    let ball = ball_outline(f, center, radius.max(0.0));
    let (blo, bhi) = gaugeball::problem_box(p)?;
    let mut lo = [blo[0], blo[1]];
    let mut hi = [bhi[0], bhi[1]];
    for q in ball.iter().chain(std::iter::once(&pt(center))) {
        for i in 0..2 {
            lo[i] = lo[i].min(q[i]);
            hi[i] = hi[i].max(q[i]);
        }
    }
    let pad = 0.05 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    lo = [lo[0] - pad, lo[1] - pad];
    hi = [hi[0] + pad, hi[1] + pad];
    let scale = WIDTH / (hi[0] - lo[0]);
    let frame = Frame {
        lo,
        scale,
        height: (hi[1] - lo[1]) * scale,
    };
    let view = vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]];

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.3} {:.3}">"#,
        WIDTH, frame.height, WIDTH, frame.height
    );
    out.push_str(concat!(
        "  <style>\n",
        "    .constraint { fill: #eef2f7; stroke: #9aa5b1; }\n",
        "    .enclose { fill: none; stroke: #1f5fbf; stroke-width: 2; }\n",
        "    circle.enclose { fill: #1f5fbf; }\n",
        "    .intersect { fill: none; stroke: #c0392b; stroke-width: 2; stroke-dasharray: 6 3; }\n",
        "    circle.intersect { fill: #c0392b; }\n",
        "    .ball { fill: none; stroke: #2e7d32; stroke-width: 1.5; }\n",
        "    .center { fill: #2e7d32; }\n",
        "  </style>\n",
    ));
    let constraint = match p.constraint().kind() {
        ConstraintKind::WholeSpace => None,
        ConstraintKind::Box { lo: a, hi: b } => {
            let e = |x: f64, y: f64| Vector::from_vec(vec![x, y]);
            let rows = [e(1.0, 0.0), e(-1.0, 0.0), e(0.0, 1.0), e(0.0, -1.0)];
            Some(clip_all(&view, &rows, &[b[0], -a[0], b[1], -a[1]]))
        }
        ConstraintKind::EuclideanBall { center, radius } => Some(circle_outline(center, *radius)),
        ConstraintKind::HalfSpace { normal, offset } => Some(clip(&view, normal, *offset)),
        ConstraintKind::HPolytope { rows, offsets } => Some(clip_all(&view, rows, offsets)),
    };
    if let Some(poly) = constraint {
        draw(&mut out, &frame, &Shape::Polygon(poly), "constraint");
    }
    for t in p.enclose() {
        draw(&mut out, &frame, &target_shape(f, t, &view), "enclose");
    }
    for t in p.intersect() {
        draw(&mut out, &frame, &target_shape(f, t, &view), "intersect");
    }
    draw(&mut out, &frame, &Shape::Polygon(ball), "ball");
    let c = frame.map(&pt(center));
    let _ = writeln!(
        out,
        r#"  <circle class="center" cx="{:.3}" cy="{:.3}" r="4"/>"#,
        c[0], c[1]
    );
    out.push_str("</svg>\n");
    Ok(out)
}
