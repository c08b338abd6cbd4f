//! `gaugeball`: solve, evaluate, brute-force, check and render problem files.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 invalid problem
//! file, 3 unsupported kind combination (or `render` on a non-planar
//! problem), 4 solver did not converge. `check` also exits 1 when the
//! level-set inclusions are violated.

mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gaugeball::io::parse_problem;
use gaugeball::objectives::SWEEP_FACTORS;
use gaugeball::{
    bench, existence_check, grid_minimize, minimize, sandwich_sweep, uniqueness_check, Error,
    GridSpec, ProblemInstance, SolverConfig, StepRule, Vector,
};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Unsupported(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Unsupported(_)) | CliError::Unsupported(_) => 3,
            CliError::Core(Error::EmptyGrid) | CliError::Io { .. } => 1,
            CliError::Core(_) | CliError::Usage(_) => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "gaugeball",
    version,
    about = "Smallest enclosing/intersecting balls and Fermat-Torricelli points under gauge dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SeedArg {
    /// Base random seed
    #[arg(long, env = "GAUGEBALL_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the problem's objective and print the solution as JSON
    Solve {
        problem: PathBuf,
        #[arg(long, default_value_t = 5000)]
        max_iters: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[command(flatten)]
        seed: SeedArg,
        /// Step constant of the diminishing rule
        #[arg(long, default_value_t = 1.0, conflicts_with = "polyak")]
        step_c: f64,
        /// Use Polyak steps with this guess of the optimal value
        #[arg(long)]
        polyak: Option<f64>,
        /// Also run the grid oracle and report the gap
        #[arg(long)]
        oracle_check: bool,
    },
    /// Evaluate every time function and the objective at a point
    Eval {
        problem: PathBuf,
        /// Comma-separated coordinates
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        at: Vec<f64>,
    },
    /// Brute-force grid minimization (dimension at most 3)
    Oracle {
        problem: PathBuf,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Existence, uniqueness and level-set inclusion checks
    Check {
        problem: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Draw a planar problem and a solution as SVG
    Render {
        problem: PathBuf,
        solution: PathBuf,
        out: PathBuf,
    },
    /// Solve the benchmark suite and print a CSV comparison with the oracle
    Bench {
        #[command(flatten)]
        seed: SeedArg,
        /// Add wall-clock milliseconds (makes the output non-deterministic)
        #[arg(long)]
        timing: bool,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load(path: &Path) -> CliResult<ProblemInstance> {
    Ok(parse_problem(&read(path)?)?)
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn list(v: &Vector) -> Vec<f64> {
    v.iter().cloned().collect()
}

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Solve {
            problem,
            max_iters,
            restarts,
            seed,
            step_c,
            polyak,
            oracle_check,
        } => {
            let p = load(&problem)?;
            let cfg = SolverConfig {
                max_iters,
                restarts,
                seed: seed.seed,
                step_rule: match polyak {
                    Some(target) => StepRule::Polyak { target },
                    None => StepRule::Diminishing { c: step_c },
                },
                ..SolverConfig::default()
            };
            let s = minimize(&p, &cfg)?;
            if oracle_check {
                let g = grid_minimize(&p, &GridSpec::for_problem(&p)?)?;
                println!(
                    "{}",
                    pretty(&json!({ "solution": s, "oracle": g, "gap": s.value - g.value }))
                );
            } else {
                println!("{}", pretty(&s));
            }
            Ok(if s.converged { 0 } else { 4 })
        }
        Command::Eval { problem, at } => {
            let p = load(&problem)?;
            if at.len() != p.dim() {
                return Err(Error::DimensionMismatch {
                    expected: p.dim(),
                    found: at.len(),
                }
                .into());
            }
            let x = Vector::from_vec(at);
            let comps = p.components(&x)?;
            let (value, g) = p.eval(&x)?;
            let ne = p.enclose().len();
            let components: Vec<_> = comps
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let (role, index) = if k < ne {
                        ("enclose", k)
                    } else {
                        ("intersect", k - ne)
                    };
                    json!({
                        "role": role,
                        "index": index,
                        "value": c.value,
                        "witness": list(&c.witness),
                        "subgradient": list(&c.subgradient),
                        "tolerance": c.tolerance,
                    })
                })
                .collect();
            let report = json!({
                "point": list(&x),
                "objective": p.objective(),
                "value": value,
                "subgradient": list(&g),
                "components": components,
            });
            println!("{}", pretty(&report));
            Ok(0)
        }
        Command::Oracle {
            problem,
            resolution,
            levels,
        } => {
            let p = load(&problem)?;
            let (lo, hi) = gaugeball::problem_box(&p)?;
            let g = grid_minimize(&p, &GridSpec::with_levels(lo, hi, resolution, levels)?)?;
            println!("{}", pretty(&g));
            Ok(0)
        }
        Command::Check {
            problem,
            samples,
            seed,
        } => {
            let p = load(&problem)?;
            if samples == 0 {
                return Err(CliError::Usage("--samples must be at least 1".into()));
            }
            let sandwich = sandwich_sweep(&p, samples, seed.seed)?;
            let violations: usize = sandwich.iter().map(|r| r.violations.len()).sum();
            let report = json!({
                "existence": existence_check(&p),
                "uniqueness": uniqueness_check(&p),
                "alpha_factors": SWEEP_FACTORS,
                "sandwich": sandwich,
                "violations": violations,
            });
            println!("{}", pretty(&report));
            Ok(if violations == 0 { 0 } else { 1 })
        }
        Command::Render {
            problem,
            solution,
            out,
        } => {
            let p = load(&problem)?;
            if p.dim() != 2 {
                return Err(CliError::Unsupported(format!(
                    "render needs a planar problem, got dimension {}",
                    p.dim()
                )));
            }
            let (center, radius) = render::read_solution(&read(&solution)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", solution.display())))?;
            write(&out, &render::svg(&p, &center, radius)?)?;
            Ok(0)
        }
        Command::Bench { seed, timing, out } => {
            let csv = bench::to_csv(&bench::run(seed.seed, timing)?);
            match out {
                Some(path) => write(&path, &csv)?,
                None => print!("{csv}"),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
