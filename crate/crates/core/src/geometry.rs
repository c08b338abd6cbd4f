//! Small computational-geometry kernels shared by the set types: vertex and
//! recession-ray enumeration for H-polytopes, planar hulls, simplex and
//! polytope projections, Dykstra's alternating projections and a
//! golden-section line search.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;

/// Upper bound on the number of row subsets enumerated for one polytope.
pub(crate) const MAX_SUBSETS: u128 = 200_000;

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Lexicographic k-subsets of `0..n`.
pub(crate) struct Combinations {
    n: usize,
    idx: Vec<usize>,
    started: bool,
    done: bool,
}

impl Combinations {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            idx: (0..k).collect(),
            started: false,
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.idx.clone());
        }
        let k = self.idx.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return Some(self.idx.clone());
            }
        }
        self.done = true;
        None
    }
}

fn check_subset_budget(m: usize, k: usize) -> Result<()> {
    if binomial(m, k) > MAX_SUBSETS {
        Err(Error::InvalidSet(format!(
            "polytope with {m} rows is too large to enumerate ({k}-subsets exceed {MAX_SUBSETS})"
        )))
    } else {
        Ok(())
    }
}

/// Eigen-decomposition of `MᵀM` for the selected rows; returns the
/// eigenvalues and eigenvectors (columns).
fn gram_eigen(rows: &[Vector], pick: &[usize], dim: usize) -> (Vector, DMatrix<f64>) {
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    for &k in pick {
        let r = &rows[k];
        gram += r * r.transpose();
    }
    let eig = gram.symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

/// A nonzero `d` with `⟨a_k, d⟩ ≤ 0` for every row, if one exists. Such a
/// direction makes `{x : ⟨a_k,x⟩ ≤ b_k}` unbounded whenever it is nonempty.
pub(crate) fn recession_direction(rows: &[Vector], dim: usize) -> Result<Option<Vector>> {
    let all: Vec<usize> = (0..rows.len()).collect();
    let (vals, vecs) = gram_eigen(rows, &all, dim);
    let top = vals.iter().cloned().fold(0.0_f64, f64::max);
    // rank deficiency means the recession cone contains a line
    for (i, &v) in vals.iter().enumerate() {
        if v <= 1e-12 * top.max(1e-300) {
            return Ok(Some(vecs.column(i).into_owned()));
        }
    }
    if dim == 1 {
        for d in [1.0, -1.0] {
            if rows.iter().all(|a| a[0] * d <= 0.0) {
                return Ok(Some(Vector::from_element(1, d)));
            }
        }
        return Ok(None);
    }
    check_subset_budget(rows.len(), dim - 1)?;
    for pick in Combinations::new(rows.len(), dim - 1) {
        let (vals, vecs) = gram_eigen(rows, &pick, dim);
        let top = vals.iter().cloned().fold(0.0_f64, f64::max);
        let null: Vec<usize> = (0..dim).filter(|&i| vals[i] <= 1e-12 * top).collect();
        if null.len() != 1 {
            continue;
        }
        let d = vecs.column(null[0]).into_owned();
        for sign in [1.0, -1.0] {
            let dd = &d * sign;
            if rows
                .iter()
                .all(|a| a.dot(&dd) <= 1e-10 * a.norm() * dd.norm())
            {
                return Ok(Some(dd));
            }
        }
    }
    Ok(None)
}

/// All vertices of `{x : ⟨a_k,x⟩ ≤ b_k}` by enumerating `dim`-subsets of
/// rows and keeping the feasible basic solutions.
pub(crate) fn enumerate_vertices(
    rows: &[Vector],
    offsets: &[f64],
    dim: usize,
) -> Result<Vec<Vector>> {
    check_subset_budget(rows.len(), dim)?;
    let mut out: Vec<Vector> = Vec::new();
    for pick in Combinations::new(rows.len(), dim) {
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        let mut rhs = Vector::zeros(dim);
        let mut scale = 1.0;
        for (r, &k) in pick.iter().enumerate() {
            m.row_mut(r).copy_from(&rows[k].transpose());
            rhs[r] = offsets[k];
            scale *= rows[k].norm();
        }
        let lu = m.clone().lu();
        if lu.determinant().abs() <= 1e-12 * scale {
            continue;
        }
        let Some(v) = lu.solve(&rhs) else { continue };
        let feasible = rows
            .iter()
            .zip(offsets)
            .all(|(a, &b)| a.dot(&v) <= b + 1e-9 * (1.0 + b.abs()) * a.norm().max(1.0));
        if !feasible {
            continue;
        }
        let vn = v.norm().max(1.0);
        if !out.iter().any(|w| (w - &v).norm() <= 1e-9 * vn) {
            out.push(v);
        }
    }
    Ok(out)
}

#[inline]
pub(crate) fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull of planar points, counter-clockwise, collinear points removed.
/// Degenerate inputs give one point or the two endpoints of a segment.
pub fn hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() <= 1e-15 && (a[1] - b[1]).abs() <= 1e-15);
    if pts.len() <= 2 {
        return pts;
    }
    let scale = pts
        .iter()
        .fold(0.0_f64, |m, p| m.max(p[0].abs()).max(p[1].abs()))
        .max(1.0);
    let eps = 1e-14 * scale * scale;
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross2(lower[lower.len() - 2], lower[lower.len() - 1], p) <= eps {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross2(upper[upper.len() - 2], upper[upper.len() - 1], p) <= eps {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() == 2
        && (lower[0][0] - lower[1][0]).abs() <= 1e-15
        && (lower[0][1] - lower[1][1]).abs() <= 1e-15
    {
        lower.pop();
    }
    lower
}

/// Closest point on segment `[a,b]` to `p` and its parameter in `[0,1]`.
pub(crate) fn closest_on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> ([f64; 2], f64) {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    ([a[0] + t * d[0], a[1] + t * d[1]], t)
}

/// Euclidean nearest point of a planar convex hull (as returned by
/// [`hull_2d`]) and the distance to it.
pub(crate) fn nearest_on_hull_2d(hull: &[[f64; 2]], p: [f64; 2]) -> ([f64; 2], f64) {
    let dist = |q: [f64; 2]| ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
    match hull.len() {
        0 => (p, f64::INFINITY),
        1 => (hull[0], dist(hull[0])),
        2 => {
            let (q, _) = closest_on_segment(hull[0], hull[1], p);
            (q, dist(q))
        }
        n => {
            let inside = (0..n).all(|i| cross2(hull[i], hull[(i + 1) % n], p) >= 0.0);
            if inside {
                return (p, 0.0);
            }
            let mut best = (hull[0], f64::INFINITY);
            for i in 0..n {
                let (q, _) = closest_on_segment(hull[i], hull[(i + 1) % n], p);
                let d = dist(q);
                if d < best.1 {
                    best = (q, d);
                }
            }
            best
        }
    }
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Euclidean projection of `y` onto `conv(vertices)` by accelerated
/// projected gradient on the barycentric weights.
pub(crate) fn project_hull(vertices: &[Vector], y: &Vector, iters: usize) -> Vector {
    let m = vertices.len();
    if m == 1 {
        return vertices[0].clone();
    }
    let lip: f64 = vertices
        .iter()
        .map(|v| v.norm_squared())
        .sum::<f64>()
        .max(1e-300);
    let combine = |w: &[f64]| {
        let mut p = Vector::zeros(y.len());
        for (v, &wi) in vertices.iter().zip(w) {
            p.axpy(wi, v, 1.0);
        }
        p
    };
    let mut w = vec![1.0 / m as f64; m];
    let mut z = w.clone();
    let mut t = 1.0_f64;
    for _ in 0..iters {
        let r = combine(&z) - y;
        let mut next: Vec<f64> = z
            .iter()
            .zip(vertices)
            .map(|(&zi, v)| zi - v.dot(&r) / lip)
            .collect();
        project_simplex(&mut next);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let beta = (t - 1.0) / t_next;
        let moved: f64 = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).sum();
        z = next
            .iter()
            .zip(&w)
            .map(|(&n, &o)| n + beta * (n - o))
            .collect();
        w = next;
        t = t_next;
        if moved < 1e-15 {
            break;
        }
    }
    combine(&w)
}

/// Dykstra's alternating projections onto `∩ {x : ⟨a_k,x⟩ ≤ b_k}`.
pub(crate) fn dykstra_halfspaces(
    rows: &[Vector],
    offsets: &[f64],
    x: &Vector,
    sweeps: usize,
    tol: f64,
) -> Vector {
    let m = rows.len();
    let mut cur = x.clone();
    let mut incr: Vec<Vector> = vec![Vector::zeros(x.len()); m];
    for _ in 0..sweeps {
        let start = cur.clone();
        for k in 0..m {
            let y = &cur + &incr[k];
            let viol = rows[k].dot(&y) - offsets[k];
            let proj = if viol > 0.0 {
                &y - &rows[k] * (viol / rows[k].norm_squared())
            } else {
                y.clone()
            };
            incr[k] = &y - &proj;
            cur = proj;
        }
        if (&cur - &start).norm() <= tol {
            break;
        }
    }
    cur
}

/// Minimizes a unimodal function on `[lo, hi]` by golden-section search;
/// returns the best abscissa and value seen, endpoints included.
pub(crate) fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut best = {
        let (fa, fb) = (f(a), f(b));
        if fb < fa {
            (b, fb)
        } else {
            (a, fa)
        }
    };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if fc < best.1 {
            best = (c, fc);
        }
        if fd < best.1 {
            best = (d, fd);
        }
    }
    best
}
