//! `betastein`: Stein-equation solutions, bound constants and Pólya urn
//! checks from the command line.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use betastein::beta::{bound_suite, c_constant, solve, BetaSteinContext};
use betastein::experiments::{
    density_round_trip, exponential_check, mills_counterexample, rate_study, EXP_GRID,
};
use betastein::fixtures;
use betastein::polya::{check_regressions, simulate_summary, PolyaModel};
use betastein::report::{emit_report, format_float, ReportArtifact, ReportFormat};
use betastein::supnorm::{chebyshev_grid, GridKind, DEFAULT_GRID};
use betastein::{BetaParams, Error};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "betastein", version, about = "Stein's method for the Beta distribution and the Pólya urn")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "BETASTEIN_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the standard solution g_h and its derivative on a grid.
    Solve {
        #[command(flatten)]
        params: ShapeArgs,
        /// Test function (x, x2, x3, smoothstep, sin, const:c, indicator:z, abs:c, poly:c0,c1,...).
        #[arg(long, default_value = "x2")]
        h: String,
        /// Number of interior grid points.
        #[arg(long, default_value_t = 11)]
        points: usize,
    },
    /// Print C(a, b), or a table of it when a or b is omitted.
    Constants {
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
    },
    /// Bounds on g_h and its derivatives next to grid measurements.
    Bounds {
        #[command(flatten)]
        params: ShapeArgs,
        #[arg(long, default_value = "x2")]
        h: String,
        /// Highest derivative order of g_h to bound.
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Pólya urn identities and simulation.
    Polya {
        #[command(subcommand)]
        command: PolyaCommand,
    },
    /// Exact distance |E h(W) - E h(Z)| and the rate bound over n, as CSV.
    RateStudy {
        #[command(flatten)]
        params: ShapeArgs,
        #[arg(long, default_value = "x2")]
        h: String,
        /// Comma-separated list of n.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// General-framework tools.
    Framework {
        #[command(subcommand)]
        command: FrameworkCommand,
    },
    /// Mills ratios of the sawtooth density along x_{2n}.
    MillsCheck {
        #[arg(long, default_value_t = 10)]
        levels: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Solution bounds for the exponential distribution.
    ExpCheck {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value = "sin")]
        h: String,
        #[arg(long, default_value_t = EXP_GRID)]
        grid: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Subcommand, Debug)]
enum PolyaCommand {
    /// Check both regression identities for every k = 0..n.
    Check {
        #[command(flatten)]
        params: UrnArgs,
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Simulate (W, W') and compare the empirical law of W with the exact pmf.
    Simulate {
        #[command(flatten)]
        params: UrnArgs,
        #[arg(long, default_value_t = 1_000_000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug)]
enum FrameworkCommand {
    /// Rebuild a density from its (γ, η) pair and report the L¹ error.
    Density {
        /// Target law: beta:a,b, exp:alpha, gamma:shape,rate or normal.
        #[arg(long, default_value = "beta:2,3")]
        dist: String,
        #[arg(long, default_value_t = 9)]
        points: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

#[derive(Args, Debug)]
struct ShapeArgs {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    b: f64,
}

impl ShapeArgs {
    fn params(&self) -> Result<BetaParams, Error> {
        BetaParams::new(self.a, self.b)
    }
}

#[derive(Args, Debug)]
struct UrnArgs {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    b: f64,
    #[arg(long)]
    n: usize,
}

impl UrnArgs {
    fn model(&self) -> Result<PolyaModel, Error> {
        PolyaModel::new(self.a, self.b, self.n)
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Write a report; `.csv` selects CSV, anything else JSON.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl OutputArgs {
    fn write(&self, build: impl FnOnce(ReportFormat) -> Result<ReportArtifact, Error>) -> Result<(), Error> {
        if let Some(path) = &self.output {
            emit_report(&build(ReportFormat::from_path(path))?, path)?;
        }
        Ok(())
    }
}

enum Failure {
    Usage(String),
    Check(String),
    Numeric(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::Smoothness { .. } | Error::Domain { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Numeric(other),
        }
    }
}

type Outcome = Result<(), Failure>;

fn check(ok: bool, message: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(Failure::Check(message()))
    }
}

fn f(v: f64) -> String {
    format_float(v)
}

fn run(cli: Cli) -> Outcome {
    let mut out = String::new();
    let result = dispatch(cli.command, &mut out);
    print!("{out}");
    result
}

fn dispatch(command: Command, out: &mut String) -> Outcome {
    match command {
        Command::Solve { params, h, points } => {
            let p = params.params()?;
            let h = fixtures::named(&h, 0.0, 1.0)?;
            let ctx = BetaSteinContext::new(p)?;
            let sol = solve(&ctx, &h)?;
            let _ = writeln!(out, "x,g,g_prime");
            let _ = writeln!(out, "{},{},", f(0.0), f(sol.eval(0.0)?));
            for x in chebyshev_grid(0.0, 1.0, points, GridKind::Open) {
                let _ = writeln!(out, "{},{},{}", f(x), f(sol.eval(x)?), f(sol.deriv(x)?));
            }
            let _ = writeln!(out, "{},{},", f(1.0), f(sol.eval(1.0)?));
            Ok(())
        }
        Command::Constants { a, b } => {
            if let (Some(a), Some(b)) = (a, b) {
                let _ = writeln!(out, "{}", c_constant(BetaParams::new(a, b)?));
                return Ok(());
            }
            let grid = [0.5, 1.0, 2.0, 3.7, 5.0];
            let avals: Vec<f64> = a.map_or(grid.to_vec(), |v| vec![v]);
            let bvals: Vec<f64> = b.map_or(grid.to_vec(), |v| vec![v]);
            let _ = writeln!(out, "a,b,C");
            for &a in &avals {
                for &b in &bvals {
                    let _ = writeln!(out, "{a},{b},{}", f(c_constant(BetaParams::new(a, b)?)));
                }
            }
            Ok(())
        }
        Command::Bounds {
            params,
            h,
            order,
            grid,
            out: output,
        } => {
            let p = params.params()?;
            let h = fixtures::named(&h, 0.0, 1.0)?;
            let ctx = BetaSteinContext::new(p)?;
            let reports = bound_suite(&ctx, &h, order, grid)?;
            let _ = writeln!(out, "label,bound,estimate,argmax,passed");
            for r in &reports {
                let _ = writeln!(
                    out,
                    "\"{}\",{},{},{},{}",
                    r.label,
                    f(r.bound),
                    f(r.estimate),
                    f(r.argmax),
                    r.passed
                );
            }
            output.write(|fmt| ReportArtifact::bound_suite(p.a(), p.b(), h.name(), &reports, fmt))?;
            check(reports.iter().all(|r| r.passed), || "a bound is violated".into())
        }
        Command::Polya { command } => match command {
            PolyaCommand::Check {
                params,
                tol,
                out: output,
            } => {
                let model = params.model()?;
                let c = check_regressions(&model);
                let _ = writeln!(out, "lambda = {}", f(model.lambda()));
                let _ = writeln!(out, "max |E[W'-W|k] - lambda gamma(k/n)| = {}", f(c.max_first_error));
                let _ = writeln!(out, "max |E[(W'-W)^2|k] - closed form| = {}", f(c.max_second_error));
                let _ = writeln!(out, "max |2 lambda (W(1-W) + S) - closed form| = {}", f(c.max_remainder_error));
                output.write(|fmt| ReportArtifact::regression_check(&[c], fmt))?;
                check(c.passes(tol), || format!("identities violated beyond {tol:e}"))
            }
            PolyaCommand::Simulate { params, reps, seed } => {
                let model = params.model()?;
                let s = simulate_summary(&model, reps, seed)?;
                let tv = s.total_variation();
                let _ = writeln!(out, "reps = {reps}");
                let _ = writeln!(out, "seed = {seed}");
                let _ = writeln!(out, "mean W = {}", f(s.mean_w));
                let _ = writeln!(out, "mean W' - W = {}", f(s.mean_step));
                let _ = writeln!(out, "mean (W' - W)^2 = {}", f(s.mean_square_step));
                let _ = writeln!(out, "TV(empirical, exact) = {}", f(tv));
                let _ = writeln!(out, "TV threshold = {}", f(s.tv_threshold()));
                let _ = writeln!(out, "TV(W, W') = {}", f(s.marginal_gap()));
                check(tv < s.tv_threshold(), || "empirical pmf is too far from the exact pmf".into())
            }
        },
        Command::RateStudy {
            params,
            h,
            n,
            out: output,
        } => {
            let p = params.params()?;
            let h = fixtures::named(&h, 0.0, 1.0)?;
            let r = rate_study(p, &h, &n)?;
            out.push_str(&ReportArtifact::rate_study(&r, ReportFormat::Csv)?.render()?);
            match r.loglog_slope {
                Some(s) => eprintln!("log-log slope (n >= 20): {}", f(s)),
                None => eprintln!("log-log slope: not enough non-degenerate points"),
            }
            output.write(|fmt| ReportArtifact::rate_study(&r, fmt))?;
            check(r.within_bounds(), || "a distance exceeds its bound".into())
        }
        Command::Framework { command } => match command {
            FrameworkCommand::Density { dist, points, tol } => {
                let spec = fixtures::named_distribution(&dist)?;
                let r = density_round_trip(&spec, points)?;
                let _ = writeln!(out, "x,rebuilt,exact");
                for (x, p, q) in &r.samples {
                    let _ = writeln!(out, "{},{},{}", f(*x), f(*p), f(*q));
                }
                eprintln!("L1 error: {}", f(r.l1));
                check(r.l1 <= tol, || format!("L1 error {} exceeds {tol:e}", r.l1))
            }
        },
        Command::MillsCheck { levels, out: output } => {
            let r = mills_counterexample(levels)?;
            let _ = writeln!(out, "level,node,ratio,density");
            for row in &r.rows {
                let _ = writeln!(out, "{},{},{},{}", row.level, f(row.node), f(row.ratio), f(row.density));
            }
            eprintln!("integral of p: {}", f(r.integral));
            output.write(|fmt| ReportArtifact::mills_check(&r, fmt))?;
            check(r.passed(), || "Mills-ratio check failed".into())
        }
        Command::ExpCheck {
            alpha,
            h,
            grid,
            out: output,
        } => {
            let h = fixtures::named(&h, 0.0, 1.0)?;
            let r = exponential_check(alpha, &h, grid)?;
            let _ = writeln!(out, "label,bound,estimate,argmax,passed");
            for b in &r.reports {
                let _ = writeln!(out, "\"{}\",{},{},{},{}", b.label, f(b.bound), f(b.estimate), f(b.argmax), b.passed);
            }
            let _ = writeln!(out, "lift L1 to Gamma(2, alpha) = {}", f(r.lift_l1));
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            output.write(|fmt| ReportArtifact::exp_check(&r, fmt))?;
            check(r.passed() && r.lift_l1 <= 1e-8, || "exponential bounds failed".into())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: thread count must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
