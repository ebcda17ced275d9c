//! `pwidths`: command-line driver for the poisson-widths library.

mod commands;
mod grid;
mod output;
mod reproduce;
mod sweep;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use poisson_widths::skspline::DEFAULT_ZERO_TOL;
use poisson_widths::thresholds::{ThresholdKind, DEFAULT_CAP};
use poisson_widths::KernelParams;

use output::{Format, Report};
use sweep::{SweepConfig, SweepKind};

#[derive(Parser)]
#[command(
    name = "pwidths",
    version,
    about = "Widths of Poisson-integral classes and related certificates"
)]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    output: Format,

    /// Worker threads for sweeps.
    #[arg(long, env = "WIDTHS_THREADS", global = true, value_parser = parse_threads)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Point {
    /// Decay parameter, 0 < q < 1.
    #[arg(long, value_parser = parse_q)]
    q: f64,
    /// Phase shift.
    #[arg(long, default_value_t = 0.0, value_parser = parse_finite)]
    beta: f64,
    /// Half the number of nodes.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
}

#[derive(Args)]
struct Tolerance {
    /// Root-finding tolerance on theta.
    #[arg(long, default_value_t = 1e-12, value_parser = parse_positive)]
    tol: f64,
}

#[derive(Args)]
struct Cap {
    /// Largest index scanned by threshold searches.
    #[arg(long, default_value_t = DEFAULT_CAP, value_parser = clap::value_parser!(u64).range(1..))]
    cap: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Nq,
    Nqstar,
}

#[derive(Subcommand)]
enum Command {
    /// Root of the phase equation.
    Theta {
        #[command(flatten)]
        point: Point,
        #[command(flatten)]
        tol: Tolerance,
    },
    /// Best-approximation value and its certification.
    Width {
        #[command(flatten)]
        point: Point,
        #[command(flatten)]
        tol: Tolerance,
        #[command(flatten)]
        cap: Cap,
    },
    /// Threshold index n_q or n_q*.
    Threshold {
        #[arg(long, value_parser = parse_q)]
        q: f64,
        #[arg(long, value_enum, default_value_t = KindArg::Nq)]
        kind: KindArg,
        #[command(flatten)]
        cap: Cap,
    },
    /// Alternating-sign check of the fundamental spline derivative.
    #[command(name = "verify-cy2n")]
    VerifyCy2n {
        #[command(flatten)]
        point: Point,
        /// Node shift in radians; defaults to the maximizer.
        #[arg(long, value_parser = parse_finite)]
        y: Option<f64>,
        /// Relative magnitude below which a midpoint value counts as zero.
        #[arg(long, default_value_t = DEFAULT_ZERO_TOL, value_parser = parse_nonnegative)]
        zero_tol: f64,
    },
    /// Error terms of the spline derivative at the maximizer.
    GammaReport {
        #[command(flatten)]
        point: Point,
        /// Single midpoint index in 1..2n; all when omitted.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        k: Option<u64>,
    },
    /// Cyclic determinants of the counterexample node systems.
    CvdCheck {
        #[arg(long, default_value_t = 0.21, value_parser = parse_q)]
        q: f64,
        #[arg(long, default_value_t = 0.0, value_parser = parse_finite)]
        beta: f64,
    },
    /// Evaluate one computation over a grid.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
        /// q grid: a:b:step, a list, or a value.
        #[arg(long)]
        grid_q: String,
        /// beta grid: a:b:step, a list, or a value.
        #[arg(long, default_value = "0")]
        grid_beta: String,
        /// n grid: a:b, a list, or a value.
        #[arg(long, default_value = "1:16")]
        grid_n: String,
        #[command(flatten)]
        tol: Tolerance,
        #[command(flatten)]
        cap: Cap,
    },
    /// Run the fixed suite of published values.
    ReproducePaper,
}

fn parse_finite(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("invalid number '{s}'"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("value must be finite".into())
    }
}

fn parse_q(s: &str) -> Result<f64, String> {
    let q = parse_finite(s)?;
    if q > 0.0 && q < 1.0 {
        Ok(q)
    } else {
        Err(format!("q must lie in (0, 1), got {q}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v = parse_finite(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err("value must be positive".into())
    }
}

fn parse_nonnegative(s: &str) -> Result<f64, String> {
    let v = parse_finite(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err("value must be non-negative".into())
    }
}

fn parse_threads(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(t) if t >= 1 => Ok(t),
        _ => Err(format!(
            "thread count must be a positive integer, got '{s}'"
        )),
    }
}

fn usage_error(message: String) -> ! {
    Cli::command()
        .error(ErrorKind::ValueValidation, message)
        .exit()
}

fn sweep_config(
    kind: SweepKind,
    grid_q: &str,
    grid_beta: &str,
    grid_n: &str,
    tol: f64,
    cap: u64,
) -> SweepConfig {
    let qs =
        grid::parse_real_grid(grid_q).unwrap_or_else(|e| usage_error(format!("--grid-q: {e}")));
    if let Some(q) = qs.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
        usage_error(format!("--grid-q: q must lie in (0, 1), got {q}"));
    }
    let betas = grid::parse_real_grid(grid_beta)
        .unwrap_or_else(|e| usage_error(format!("--grid-beta: {e}")));
    let ns =
        grid::parse_index_grid(grid_n).unwrap_or_else(|e| usage_error(format!("--grid-n: {e}")));
    SweepConfig {
        kind,
        qs,
        betas,
        ns,
        tol,
        cap,
    }
}

fn params(point: &Point) -> poisson_widths::Result<KernelParams> {
    KernelParams::new(point.q, point.beta)
}

fn record(
    command: &'static str,
    fields: poisson_widths::Result<serde_json::Map<String, serde_json::Value>>,
) -> poisson_widths::Result<(Report, bool)> {
    Ok((
        Report::Record {
            command,
            fields: fields?,
        },
        true,
    ))
}

fn dispatch(command: Command) -> poisson_widths::Result<(Report, bool)> {
    match command {
        Command::Theta { point, tol } => {
            record("theta", commands::theta(&params(&point)?, point.n, tol.tol))
        }
        Command::Width { point, tol, cap } => record(
            "width",
            commands::width(&params(&point)?, point.n, tol.tol, cap.cap),
        ),
        Command::Threshold { q, kind, cap } => {
            let kind = match kind {
                KindArg::Nq => ThresholdKind::Nq,
                KindArg::Nqstar => ThresholdKind::NqStar,
            };
            record("threshold", commands::threshold(q, kind, cap.cap))
        }
        Command::VerifyCy2n { point, y, zero_tol } => record(
            "verify-cy2n",
            commands::verify_cy2n(&params(&point)?, point.n, y, zero_tol),
        ),
        Command::GammaReport { point, k } => {
            if let Some(k) = k.filter(|k| *k > 2 * point.n) {
                usage_error(format!("--k must lie in 1..{}, got {k}", 2 * point.n));
            }
            record(
                "gamma-report",
                commands::gamma_report(&params(&point)?, point.n, k),
            )
        }
        Command::CvdCheck { q, beta } => record("cvd-check", commands::cvd_check(q, beta)),
        Command::Sweep {
            kind,
            grid_q,
            grid_beta,
            grid_n,
            tol,
            cap,
        } => {
            let config = sweep_config(kind, &grid_q, &grid_beta, &grid_n, tol.tol, cap.cap);
            Ok((sweep::run(&config), true))
        }
        Command::ReproducePaper => reproduce::run(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let (report, success) = match dispatch(cli.command) {
        Ok(result) => result,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if let Err(e) = output::render(&report, cli.output, &mut out).and_then(|_| out.flush()) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(1);
    }
    if success {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
