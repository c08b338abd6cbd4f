//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use gaugeball::bench::{self, fixtures, suite};
use gaugeball::generator::random_instance;
use gaugeball::solver::UniquenessVerdict;
use gaugeball::{
    grid_minimize, maximal_time, minimal_time, minimize, sandwich_sweep, uniqueness_check,
    DynamicsSet, GridSpec, ObjectiveKind, SolverConfig, TargetSet, Vector,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.gen_range(-scale..scale))
}

/// One dynamics set of the given kind index (0..5) in dimension `n`.
fn random_dynamics(rng: &mut ChaCha8Rng, kind: usize, n: usize) -> DynamicsSet {
    match kind {
        0 => DynamicsSet::euclidean(n, rng.gen_range(0.3..3.0)),
        1 => DynamicsSet::lp(n, rng.gen_range(1.2..6.0), rng.gen_range(0.3..3.0)),
        2 => DynamicsSet::sup_box(n, rng.gen_range(0.3..3.0)),
        3 => {
            let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let a = &m * m.transpose() + DMatrix::identity(n, n) * 0.3;
            DynamicsSet::ellipsoid((&a + a.transpose()) * 0.5)
        }
        _ => {
            let mut rows = Vec::new();
            for i in 0..n {
                for s in [1.0, -1.0] {
                    let mut e = Vector::zeros(n);
                    e[i] = s;
                    rows.push(e);
                }
            }
            for _ in 0..rng.gen_range(0..4) {
                rows.push(random_vector(rng, n, 1.0));
            }
            let offsets = rows.iter().map(|_| rng.gen_range(0.5..2.0)).collect();
            DynamicsSet::hpolytope(rows, offsets)
        }
    }
    .expect("valid random dynamics")
}

fn gauge_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = 1000;
    for k in 0..draws {
        let kind = k % 5;
        let n = 2 + k % 3;
        let f = random_dynamics(&mut rng, kind, n);
        let x = random_vector(&mut rng, n, 5.0);
        let y = random_vector(&mut rng, n, 5.0);
        let t = rng.gen_range(0.0..10.0);
        let gx = f.gauge(&x).map_err(fail)?;
        let gy = f.gauge(&y).map_err(fail)?;
        let ctx = || format!("draw {k}, kind {kind}, dim {n}");
        let gtx = f.gauge(&(&x * t)).map_err(fail)?;
        ensure((gtx - t * gx).abs() <= 1e-12 * (t * gx).max(1.0), || {
            format!("homogeneity fails at {}", ctx())
        })?;
        ensure(
            f.gauge(&(&x + &y)).map_err(fail)? <= gx + gy + 1e-12,
            || format!("subadditivity fails at {}", ctx()),
        )?;
        let nx = x.norm();
        ensure(
            nx / f.outer_radius() <= gx * (1.0 + 1e-12)
                && gx <= nx / f.inner_radius() * (1.0 + 1e-12),
            || format!("norm equivalence fails at {}", ctx()),
        )?;
        let g = f.subgradient(&x).map_err(fail)?;
        ensure(gy >= gx + g.dot(&(&y - &x)) - 1e-10, || {
            format!("subgradient inequality fails at {}", ctx())
        })?;
    }
    Ok(format!("{draws} draws over 5 kinds in dimensions 2 to 4"))
}

fn distance_reductions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let instances = 200;
    let mut worst: f64 = 0.0;
    for k in 0..instances {
        let n = 2 + k % 2;
        let f = DynamicsSet::euclidean(n, 1.0).map_err(fail)?;
        let pts: Vec<Vector> = (0..rng.gen_range(1..7))
            .map(|_| random_vector(&mut rng, n, 4.0))
            .collect();
        let q = TargetSet::points(pts.clone()).map_err(fail)?;
        let a = random_vector(&mut rng, n, 1.0);
        let b = rng.gen_range(-2.0..2.0);
        let h = TargetSet::halfspace(a.clone(), b).map_err(fail)?;
        let x = random_vector(&mut rng, n, 4.0);
        let far = pts.iter().map(|p| (p - &x).norm()).fold(0.0, f64::max);
        let near = pts
            .iter()
            .map(|p| (p - &x).norm())
            .fold(f64::INFINITY, f64::min);
        let to_half = (a.dot(&x) - b).max(0.0) / a.norm();
        let errs = [
            (maximal_time(&f, &q, &x).map_err(fail)?.value - far).abs(),
            (minimal_time(&f, &q, &x).map_err(fail)?.value - near).abs(),
            (minimal_time(&f, &h, &x).map_err(fail)?.value - to_half).abs(),
        ];
        for e in errs {
            worst = worst.max(e);
        }
        ensure(errs.iter().all(|e| *e <= 1e-9), || {
            format!("instance {k}: errors {errs:?}")
        })?;
    }
    Ok(format!("{instances} instances, worst error {worst:.1e}"))
}

fn level_set_sandwich() -> Outcome {
    let (mut checks, mut in_n) = (0, 0);
    for seed in 0..100u64 {
        let p = random_instance(1000 + seed, None).map_err(fail)?;
        for r in sandwich_sweep(&p, 50, seed).map_err(fail)? {
            ensure(r.violations.is_empty(), || {
                format!("instance {seed}, alpha {}: {:?}", r.alpha, r.violations[0])
            })?;
            checks += r.samples;
            in_n += r.in_n;
        }
    }
    Ok(format!(
        "{checks} point checks on both chains, {in_n} inside the intersection set, no violations"
    ))
}

fn fixture(name: &str) -> gaugeball::bench::Fixture {
    fixtures()
        .into_iter()
        .find(|f| f.name == name)
        .expect("fixture exists")
}

fn known_instance(
    name: &str,
    value_tol: f64,
    center_tol: f64,
    limit: Option<Duration>,
    oracle: bool,
) -> Outcome {
    let fx = fixture(name);
    let start = Instant::now();
    let s = minimize(&fx.problem, &SolverConfig::default()).map_err(fail)?;
    let elapsed = start.elapsed();
    let want = fx.value.expect("fixture value");
    let c = fx.center.expect("fixture center");
    let dist = (v(&s.center) - v(&c)).norm();
    ensure((s.value - want).abs() <= value_tol, || {
        format!("value {} vs {want}", s.value)
    })?;
    ensure(dist <= center_tol, || {
        format!("center {:?} is {dist:.2e} from {c:?}", s.center)
    })?;
    if let Some(limit) = limit {
        ensure(elapsed < limit, || format!("took {elapsed:?}"))?;
    }
    let mut detail = format!(
        "value {:.10}, center off by {dist:.1e}, {elapsed:.2?}",
        s.value
    );
    if oracle {
        let g = grid_minimize(
            &fx.problem,
            &GridSpec::for_problem(&fx.problem).map_err(fail)?,
        )
        .map_err(fail)?;
        ensure((g.value - want).abs() <= 1e-3, || {
            format!("grid oracle gives {}", g.value)
        })?;
        detail.push_str(&format!(", grid oracle {:.6}", g.value));
    }
    Ok(detail)
}

fn oracle_agreement() -> Outcome {
    let start = Instant::now();
    let rows = bench::run(0, false).map_err(fail)?;
    let elapsed = start.elapsed();
    let generated: Vec<_> = rows
        .iter()
        .filter(|r| r.instance.starts_with("generated_"))
        .collect();
    ensure(generated.len() == 20, || {
        format!("{} generated instances", generated.len())
    })?;
    let (mut minmax, mut sum) = (0, 0);
    for (name, p) in suite().map_err(fail)? {
        if name.starts_with("generated_") {
            match p.objective() {
                ObjectiveKind::MinMax => minmax += 1,
                ObjectiveKind::Sum => sum += 1,
            }
        }
    }
    let worst = generated.iter().map(|r| r.gap.abs()).fold(0.0, f64::max);
    for r in &generated {
        ensure(r.gap.abs() <= 1e-3, || {
            format!(
                "{}: solver {} vs oracle {}",
                r.instance, r.solver_value, r.oracle_value
            )
        })?;
    }
    ensure(elapsed < Duration::from_secs(60), || {
        format!("suite took {elapsed:?}")
    })?;
    Ok(format!(
        "20 instances ({minmax} min-max, {sum} sum), worst gap {worst:.1e}, {elapsed:.1?} for the full suite"
    ))
}

fn restart_agreement() -> Outcome {
    let mut seen = 0;
    let mut worst: f64 = 0.0;
    let mut seed = 0u64;
    while seen < 10 {
        let p = random_instance(seed, Some(ObjectiveKind::MinMax)).map_err(fail)?;
        seed += 1;
        if uniqueness_check(&p).verdict != UniquenessVerdict::UniqueCapable {
            continue;
        }
        seen += 1;
        let s = minimize(&p, &SolverConfig::default()).map_err(fail)?;
        let near: Vec<Vector> = s
            .starts
            .iter()
            .filter(|r| r.value - s.value <= 1e-6)
            .map(|r| v(&r.center))
            .collect();
        for a in &near {
            for b in &near {
                let d = (a - b).norm();
                worst = worst.max(d);
                ensure(d <= 1e-4, || {
                    format!("instance seed {}: restarts {d:.2e} apart", seed - 1)
                })?;
            }
        }
    }
    Ok(format!(
        "10 instances (seeds up to {}), widest restart spread {worst:.1e}",
        seed - 1
    ))
}

fn flat_valley() -> Outcome {
    let fx = fixture("collinear_pair_sum");
    let s = minimize(&fx.problem, &SolverConfig::default()).map_err(fail)?;
    let values: Vec<f64> = s.starts.iter().map(|r| r.value).collect();
    let value_spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - values.iter().cloned().fold(f64::INFINITY, f64::min);
    let xs: Vec<f64> = s.starts.iter().map(|r| r.center[0]).collect();
    let along = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let off_axis = s
        .starts
        .iter()
        .map(|r| r.center[1].abs())
        .fold(0.0, f64::max);
    ensure(along > 1e-2, || {
        format!("restart spread along the segment only {along:.2e}")
    })?;
    ensure(value_spread < 1e-8, || {
        format!("value spread {value_spread:.2e}")
    })?;
    ensure(off_axis < 1e-6, || {
        format!("a restart ended {off_axis:.2e} off the segment")
    })?;
    ensure(s.likely_non_unique, || {
        "solution is not flagged as likely non-unique".into()
    })?;
    Ok(format!(
        "spread {along:.2} along the segment, value spread {value_spread:.1e}, flagged"
    ))
}

fn certificates() -> Outcome {
    let mut count = 0;
    let mut worst = f64::NEG_INFINITY;
    for (name, p) in suite().map_err(fail)? {
        if p.objective() != ObjectiveKind::MinMax {
            continue;
        }
        let s = minimize(&p, &SolverConfig::default()).map_err(fail)?;
        let c = s
            .certificate
            .ok_or_else(|| format!("{name}: no certificate"))?;
        let m = c.max_margin();
        worst = worst.max(m);
        ensure(m <= 1e-6, || format!("{name}: margin {m:.2e}"))?;
        count += 1;
    }
    Ok(format!(
        "{count} min-max solutions, largest margin {worst:.1e}"
    ))
}

fn gauge_additivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let kinds = [0, 1, 3];
    let mut worst_eq: f64 = 0.0;
    for k in 0..500 {
        let n = 2 + k % 3;
        let f = random_dynamics(&mut rng, kinds[k % 3], n);
        assert!(f.is_strictly_convex());
        let x = random_vector(&mut rng, n, 3.0);
        let lam = rng.gen_range(0.05..5.0);
        let y = &x * lam;
        let err = (f.gauge(&(&x + &y)).map_err(fail)?
            - f.gauge(&x).map_err(fail)?
            - f.gauge(&y).map_err(fail)?)
        .abs();
        worst_eq = worst_eq.max(err);
        ensure(err <= 1e-12, || {
            format!("parallel pair {k}: error {err:.2e}")
        })?;
    }
    let (mut accepted, mut rejected) = (0, 0);
    let mut smallest_gap = f64::INFINITY;
    while accepted < 500 {
        let n = 2 + accepted % 3;
        let f = random_dynamics(&mut rng, kinds[accepted % 3], n);
        let x = random_vector(&mut rng, n, 3.0);
        let y = random_vector(&mut rng, n, 3.0);
        let gap = f.gauge(&x).map_err(fail)? + f.gauge(&y).map_err(fail)?
            - f.gauge(&(&x + &y)).map_err(fail)?;
        // near-parallel pairs are too close to equality to separate from rounding
        if gap.abs() < 1e-9 {
            rejected += 1;
            continue;
        }
        ensure(gap > 1e-12, || {
            format!("non-parallel pair has gap {gap:.2e}")
        })?;
        smallest_gap = smallest_gap.min(gap);
        accepted += 1;
    }
    Ok(format!(
        "500 parallel pairs (worst error {worst_eq:.1e}), 500 non-parallel pairs (smallest gap {smallest_gap:.1e}, {rejected} rejected)"
    ))
}

fn bench_determinism() -> Outcome {
    let a = bench::to_csv(&bench::run(42, false).map_err(fail)?);
    let b = bench::to_csv(&bench::run(42, false).map_err(fail)?);
    ensure(a == b, || "CSV differs between runs".into())?;
    Ok(format!("{} bytes, identical across two runs", a.len()))
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("gauge axioms", Box::new(gauge_axioms)),
        ("distance reductions", Box::new(distance_reductions)),
        ("level-set sandwich", Box::new(level_set_sandwich)),
        (
            "right-triangle enclosing ball",
            Box::new(|| {
                known_instance(
                    "sylvester_triangle",
                    1e-4,
                    1e-3,
                    Some(Duration::from_secs(1)),
                    false,
                )
            }),
        ),
        (
            "isosceles enclosing ball",
            Box::new(|| known_instance("enclosing_isosceles", 1e-4, 1e-3, None, true)),
        ),
        (
            "equilateral Fermat point",
            Box::new(|| known_instance("fermat_equilateral", 1e-4, 1e-3, None, false)),
        ),
        ("solver and oracle agree", Box::new(oracle_agreement)),
        ("restarts agree when unique", Box::new(restart_agreement)),
        ("flat valley detected", Box::new(flat_valley)),
        ("enclosure certificates", Box::new(certificates)),
        ("gauge additivity", Box::new(gauge_additivity)),
        ("bench determinism", Box::new(bench_determinism)),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {:>2}. {name} ({secs:.2}s): {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}. {name} ({secs:.2}s): {why}", k + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
