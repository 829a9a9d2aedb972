//! Command-line front end for certification, minimization, orbit extension
//! and family comparison.
//!
//! Data goes to `-o FILE` or standard output; progress and summaries go to
//! standard error. Exit codes: 0 success, 1 usage or I/O error, 2 numerical
//! failure (non-convergence, a failed certificate, a non-positive gap).

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ddorbit::extension::{extend_full, junction_c1_check, Closure};
use ddorbit::kepler::{kepler_collision_inf, kepler_inf, kepler_numeric_inf, g1, KeplerParams};
use ddorbit::minimizer::{minimize, Family, Init, Problem, Solution, TEST_PATH_LIMIT};
use ddorbit::tables::builtin_tables;
use ddorbit::testpath::{certify, test_path_from};
use ddorbit::zgeom::compare_problems;
use ddorbit::{path_action, Error};

#[derive(Parser, Debug)]
#[command(name = "ddorbit", version, about = "Variational lab for double-double orbits in the parallelogram four-body problem")]
struct Cli {
    /// Seed for randomized runs. Every current command is deterministic and
    /// records the seed in its JSON output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the test-path action against the collision bound on a dense grid.
    Certify {
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Minimize the discrete action for one end angle.
    Minimize {
        #[command(flatten)]
        job: MinimizeArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Extend a saved solution to an orbit on [0, 4k].
    Extend {
        /// Solution JSON written by `minimize`.
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Minimize both families and compare their actions.
    Compare {
        #[arg(long, value_parser = parse_theta)]
        theta: f64,
        #[arg(long, default_value_t = 160)]
        n: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List the built-in test-path tables with their actions and margins.
    Tables {
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Evaluate the Kepler action bounds.
    Kepler {
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, value_parser = parse_theta)]
        theta: f64,
        /// Also minimize numerically over paths with this many segments.
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct MinimizeArgs {
    /// Radians, or a multiple of pi written as `0.05pi`.
    #[arg(long, value_parser = parse_theta)]
    theta: f64,
    #[arg(long, value_enum, default_value_t = FamilyArg::Prograde)]
    family: FamilyArg,
    #[arg(long, default_value_t = 160)]
    n: usize,
    /// `testpath`, `straight` or `file=PATH` (a solution JSON).
    #[arg(long, value_parser = parse_init)]
    init: Option<InitArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Prograde,
    Retrograde,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Prograde => Family::Prograde,
            FamilyArg::Retrograde => Family::Retrograde,
        }
    }
}

#[derive(Clone, Debug)]
enum InitArg {
    TestPath,
    Straight,
    File(PathBuf),
}

fn parse_theta(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.strip_suffix("pi") {
        Some("") => PI,
        Some(m) => m.trim().parse::<f64>().map_err(|e| format!("bad multiple of pi {m:?}: {e}"))? * PI,
        None => s.parse::<f64>().map_err(|e| format!("bad angle {s:?}: {e}"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("angle {s:?} is not finite"))
    }
}

fn parse_init(s: &str) -> Result<InitArg, String> {
    match s {
        "testpath" => Ok(InitArg::TestPath),
        "straight" => Ok(InitArg::Straight),
        _ => match s.strip_prefix("file=") {
            Some(p) if !p.is_empty() => Ok(InitArg::File(PathBuf::from(p))),
            _ => Err(format!("expected testpath, straight or file=PATH, got {s:?}")),
        },
    }
}

/// Failure carrying the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: error.into() }
}

fn numerical(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_)
            | Error::ConstraintViolation(_)
            | Error::DimensionMismatch { .. }
            | Error::BoundaryMembership(_)
            | Error::Io(_)
            | Error::Json(_) => usage(e),
            _ => numerical(e),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        usage(e)
    }
}

type Outcome = Result<(), Failure>;

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display())).map_err(usage)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(path: Option<&Path>, value: &serde_json::Value) -> Outcome {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(usage)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn closure_text(c: Closure) -> String {
    match c {
        Closure::Periodic { period, k1, l1 } => format!("Periodic, period {period} (theta/pi = {k1}/{l1})"),
        Closure::QuasiPeriodic => "QuasiPeriodic".into(),
    }
}

fn cmd_certify(grid: usize, out: &OutputArgs, seed: u64) -> Outcome {
    if grid < 2 {
        return Err(usage(anyhow::anyhow!("--grid must be at least 2, got {grid}")));
    }
    let report = certify(grid)?;
    match out.format {
        Format::Csv => {
            let mut w = sink(out.output.as_deref())?;
            report.write_csv(&mut w)?;
            w.flush()?;
        }
        Format::Json => write_json(out.output.as_deref(), &json!({ "seed": seed, "report": report }))?,
    }
    for s in &report.intervals {
        eprintln!(
            "interval {} [{:.4}pi, {:.4}pi]: min margin {:.6e} at {:.6}pi, between-grid margin {:.3e}",
            s.table,
            s.theta_lo / PI,
            s.theta_hi / PI,
            s.min_margin,
            s.argmin_theta / PI,
            s.between_grid_margin
        );
    }
    eprintln!(
        "min margin {:.6e} at theta = {:.6}pi over {} samples",
        report.min_margin,
        report.argmin_theta / PI,
        report.theta_grid.len()
    );
    if report.passed() {
        Ok(())
    } else {
        Err(numerical(anyhow::anyhow!("certificate failed: margin not positive")))
    }
}

fn build_problem(job: &MinimizeArgs) -> Result<Problem, Failure> {
    let problem = Problem::new(job.theta, job.n, job.family.into())?;
    Ok(match &job.init {
        None => problem,
        Some(InitArg::TestPath) => {
            if job.theta > TEST_PATH_LIMIT {
                return Err(usage(anyhow::anyhow!(
                    "test-path init needs theta <= 0.143pi, got {:.4}pi",
                    job.theta / PI
                )));
            }
            problem.with_init(Init::FromTestPath)
        }
        Some(InitArg::Straight) => problem.with_init(Init::StraightLine),
        Some(InitArg::File(p)) => problem.with_init(Init::FromGiven(Solution::load(p)?.path)),
    })
}

fn report_solution(s: &Solution) {
    eprintln!(
        "{:?} theta = {:.6}pi, n = {}: action {:.12}, grad norm {:.3e}, {} iterations, {}",
        s.family,
        s.theta / PI,
        s.n_segments,
        s.action.total,
        s.grad_norm,
        s.iterations,
        s.stop_reason
    );
}

fn cmd_minimize(job: &MinimizeArgs, output: Option<&Path>) -> Outcome {
    let problem = build_problem(job)?;
    if job.theta > TEST_PATH_LIMIT {
        eprintln!("note: theta beyond 0.143pi, no collision certificate covers this minimizer");
    }
    let solution = minimize(&problem)?;
    report_solution(&solution);
    let mut w = sink(output)?;
    w.write_all(solution.to_json()?.as_bytes())?;
    writeln!(w)?;
    w.flush()?;
    if solution.converged {
        Ok(())
    } else {
        Err(numerical(anyhow::anyhow!(
            "minimizer did not converge ({}), grad norm {:.3e}",
            solution.stop_reason,
            solution.grad_norm
        )))
    }
}

fn cmd_extend(solution: &Path, k: usize, out: &OutputArgs, seed: u64) -> Outcome {
    if k == 0 {
        return Err(usage(anyhow::anyhow!("--k must be at least 1")));
    }
    let sol = Solution::load(solution)
        .map_err(|e| usage(anyhow::anyhow!("cannot read solution {}: {e}", solution.display())))?;
    let orbit = extend_full(&sol.path, sol.theta, k)?;
    let junctions = junction_c1_check(&orbit).ok();
    match out.format {
        Format::Csv => {
            let mut w = sink(out.output.as_deref())?;
            orbit.write_csv(&mut w)?;
            w.flush()?;
        }
        Format::Json => write_json(
            out.output.as_deref(),
            &json!({
                "seed": seed,
                "theta": orbit.theta,
                "blocks": orbit.blocks,
                "closure": orbit.closure,
                "junctions": junctions,
                "path": orbit.path,
            }),
        )?,
    }
    eprintln!("{}", closure_text(orbit.closure));
    match junctions {
        Some(j) => eprintln!(
            "junction velocity jumps: max {:.3e}, relative to max speed {:.3e}",
            j.mismatch.iter().cloned().fold(0.0, f64::max),
            j.max_relative()
        ),
        None => eprintln!("junction velocity jumps: too few segments to estimate"),
    }
    Ok(())
}

fn cmd_compare(theta: f64, n: usize, output: Option<&Path>, seed: u64) -> Outcome {
    let pro = Problem::new(theta, n, Family::Prograde)?;
    let retro = Problem::new(theta, n, Family::Retrograde)?;
    let c = compare_problems(&pro, &retro)?;
    report_solution(&c.prograde);
    report_solution(&c.retrograde);
    eprintln!(
        "prograde {:.12}, retrograde {:.12}, gap {:.6e}; retrograde confined to its quadrants: {}",
        c.a_prograde, c.a_retrograde, c.gap, c.retrograde_confined
    );
    write_json(
        output,
        &json!({
            "seed": seed,
            "theta": theta,
            "n_segments": n,
            "a_prograde": c.a_prograde,
            "a_retrograde": c.a_retrograde,
            "gap": c.gap,
            "reflected_prograde": c.reflected_prograde,
            "retrograde_confined": c.retrograde_confined,
            "prograde": c.prograde,
            "retrograde": c.retrograde,
        }),
    )?;
    if !(c.prograde.converged && c.retrograde.converged) {
        return Err(numerical(anyhow::anyhow!("a minimization did not converge")));
    }
    if c.gap > 0.0 {
        Ok(())
    } else {
        Err(numerical(anyhow::anyhow!("prograde action does not exceed retrograde")))
    }
}

fn cmd_tables(out: &OutputArgs) -> Outcome {
    let mut rows = Vec::new();
    for (k, t) in builtin_tables().iter().enumerate() {
        let a = path_action(&test_path_from(t, t.theta0))?.total;
        let g = g1(t.theta0)?;
        rows.push((k, t, a, g));
    }
    match out.format {
        Format::Csv => {
            let mut w = sink(out.output.as_deref())?;
            writeln!(w, "table,theta0,theta_lo,theta_hi,b1,b2,a_test,g1,margin")?;
            for (k, t, a, g) in rows {
                writeln!(
                    w,
                    "{k},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{a:.16e},{g:.16e},{:.16e}",
                    t.theta0,
                    t.theta_lo,
                    t.theta_hi,
                    t.endpoint_radii.0,
                    t.endpoint_radii.1,
                    g - a
                )?;
            }
            w.flush()?;
        }
        Format::Json => {
            let list: Vec<_> = rows
                .into_iter()
                .map(|(k, t, a, g)| {
                    json!({
                        "table": k,
                        "theta0": t.theta0,
                        "theta_lo": t.theta_lo,
                        "theta_hi": t.theta_hi,
                        "endpoint_radii": [t.endpoint_radii.0, t.endpoint_radii.1],
                        "nodes": t.nodes,
                        "a_test": a,
                        "g1": g,
                    })
                })
                .collect();
            write_json(out.output.as_deref(), &json!(list))?;
        }
    }
    Ok(())
}

fn cmd_kepler(mu: f64, alpha: f64, t: f64, theta: f64, n: Option<usize>) -> Outcome {
    let p = KeplerParams::new(mu, alpha, t, theta)?;
    println!("kepler_inf {:.12}", kepler_inf(p));
    println!("kepler_collision_inf {:.12}", kepler_collision_inf(mu, alpha, t));
    if let Some(n) = n {
        let r = kepler_numeric_inf(p, n)?;
        println!("numeric_inf {:.12} ({:?}, {} iterations)", r.action, r.opt.reason, r.opt.iterations);
        if !r.opt.converged() {
            return Err(numerical(anyhow::anyhow!("numeric minimization did not converge")));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let seed = cli.seed;
    match &cli.command {
        Command::Certify { grid, out } => cmd_certify(*grid, out, seed),
        Command::Minimize { job, output } => cmd_minimize(job, output.as_deref()),
        Command::Extend { solution, k, out } => cmd_extend(solution, *k, out, seed),
        Command::Compare { theta, n, output } => {
            if !(*theta > 0.0 && *theta < PI / 2.0) {
                return Err(usage(anyhow::anyhow!("theta must lie in (0, pi/2), got {:.4}pi", theta / PI)));
            }
            cmd_compare(*theta, *n, output.as_deref(), seed)
        }
        Command::Tables { out } => cmd_tables(out),
        Command::Kepler { mu, alpha, t, theta, n } => cmd_kepler(*mu, *alpha, *t, *theta, *n),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
