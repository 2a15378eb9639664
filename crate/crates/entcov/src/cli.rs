//! Command dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use entcov_core::mixed::{corr_from_offdiag, solve_mixed};
use entcov_core::solve::{fit, pd_completion, SolveOptions, Solver};
use entcov_core::specfun::link_gradient;
use entcov_core::stats::{clt_check, simulate_gaussian};
use entcov_core::{Error as CoreError, LinkFunction, Status};

use crate::io::{format_matrix_csv, read_matrix_csv};
use crate::report::{CltReport, ConfigEcho, FitReport};
use crate::spec::{ConstraintSpec, MixedSpec};
use crate::{CliError, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "entcov", version, about = "Bregman estimation of entropic covariance models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    DualPgd,
    PrimalPgd,
    BregmanProj,
    Jordan,
    Auto,
}

impl SolverArg {
    fn solver(self) -> Solver {
        match self {
            SolverArg::DualPgd => Solver::DualPgd,
            SolverArg::PrimalPgd => Solver::PrimalPgd,
            SolverArg::BregmanProj => Solver::BregmanProjection,
            SolverArg::Jordan => Solver::Jordan,
            SolverArg::Auto => Solver::Auto,
        }
    }

    fn name(self) -> &'static str {
        match self {
            SolverArg::DualPgd => "dual-pgd",
            SolverArg::PrimalPgd => "primal-pgd",
            SolverArg::BregmanProj => "bregman-proj",
            SolverArg::Jordan => "jordan",
            SolverArg::Auto => "auto",
        }
    }
}

#[derive(Debug, Args)]
struct Tuning {
    /// KKT tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl Tuning {
    fn options(&self) -> SolveOptions {
        let mut opts = SolveOptions::default();
        if let Some(t) = self.tol {
            opts.tol_kkt = t;
        }
        if let Some(k) = self.max_iter {
            opts.max_iter = k;
        }
        opts
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit Σ̂ with ∇F(Σ̂) in an affine subspace.
    Fit {
        /// logdet, vonneumann, power:<q> or shifted:<lambda>.
        #[arg(long)]
        link: String,
        /// Constraint specification (JSON).
        #[arg(long)]
        constraint: PathBuf,
        /// Sample covariance (CSV).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        solver: SolverArg,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Positive definite completion along a graph.
    Complete {
        #[arg(long)]
        link: String,
        /// Graph constraint (JSON).
        #[arg(long)]
        constraint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Correlation matrix from the off-diagonal of its link transform.
    Corr {
        #[arg(long)]
        link: String,
        #[arg(long)]
        m: usize,
        /// Upper-triangular entries, row by row, comma separated.
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        offdiag: String,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve the mixed parametrization (Σ_A, L_B).
    Mixed {
        #[arg(long)]
        link: String,
        /// Mixed specification (JSON).
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Sample covariance of Gaussian draws, as CSV.
    Simulate {
        /// True covariance (CSV).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo check of the asymptotic normality of θ̂.
    CltCheck {
        #[arg(long)]
        link: String,
        #[arg(long)]
        constraint: PathBuf,
        /// True covariance (CSV).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Parses `logdet`, `vonneumann`, `power:<q>` or `shifted:<lambda>`.
pub fn parse_link(name: &str) -> Result<LinkFunction> {
    let lower = name.trim().to_ascii_lowercase();
    let (head, param) = match lower.split_once(':') {
        Some((h, p)) => (h, Some(p)),
        None => (lower.as_str(), None),
    };
    let number = |p: Option<&str>| -> Result<f64> {
        p.and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| CliError::Input(format!("link {name:?} needs a numeric parameter")))
    };
    let link = match head {
        "logdet" if param.is_none() => LinkFunction::log_det(),
        "vonneumann" if param.is_none() => LinkFunction::von_neumann(),
        "power" => LinkFunction::power(number(param)?)?,
        "shifted" => LinkFunction::shifted(number(param)?)?,
        _ => return Err(CliError::Input(format!("unknown link {name:?}"))),
    };
    Ok(link)
}

fn parse_offdiag(text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Input(format!("--offdiag: not a finite number: {t:?}")))
        })
        .collect()
}

fn path_string(p: &Path) -> Option<String> {
    Some(p.display().to_string())
}

struct Outcome {
    body: String,
    code: i32,
}

fn emit(outcome: &Outcome, output: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, &outcome.body)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source }),
        None => out
            .write_all(outcome.body.as_bytes())
            .and_then(|_| if outcome.body.ends_with('\n') { Ok(()) } else { out.write_all(b"\n") })
            .map_err(|source| CliError::Io { path: "<stdout>".into(), source }),
    }
}

/// Maps a solver outcome to a report: infeasible starts and unconverged inner
/// solves are results (exit 2), everything else is an input error.
fn fit_outcome(result: std::result::Result<FitReport, CoreError>, config: ConfigEcho) -> Result<Outcome> {
    match result {
        Ok(report) => {
            let code = if report.status == Status::Converged.as_str() { EXIT_OK } else { EXIT_NOT_CONVERGED };
            Ok(Outcome { body: report.to_json(), code })
        }
        Err(CoreError::InfeasibleStart(msg)) => Ok(Outcome {
            body: FitReport::failed(Status::InfeasibleStart.as_str(), msg, config).to_json(),
            code: EXIT_NOT_CONVERGED,
        }),
        Err(CoreError::NotConverged(status)) => Ok(Outcome {
            body: FitReport::failed(status, format!("inner solve ended with {status}"), config).to_json(),
            code: EXIT_NOT_CONVERGED,
        }),
        Err(e) => Err(e.into()),
    }
}

fn dispatch(command: Command) -> Result<(Outcome, Option<PathBuf>)> {
    match command {
        Command::Fit { link, constraint, input, solver, tuning, output } => {
            let link_fn = parse_link(&link)?;
            let spec = ConstraintSpec::read(&constraint)?;
            let sub = spec.subspace()?;
            let s_n = read_matrix_csv(&input)?;
            let opts = tuning.options();
            opts.validate()?;
            let config = ConfigEcho {
                command: "fit".into(),
                link: Some(link_fn.to_string()),
                solver: Some(solver.name().into()),
                constraint: path_string(&constraint),
                input: path_string(&input),
                tol: Some(opts.tol_kkt),
                max_iter: Some(opts.max_iter),
                ..Default::default()
            };
            let result = fit(&link_fn, &sub, &s_n, solver.solver(), &opts)
                .map(|r| FitReport::from_fit(&r, true, config.clone()));
            Ok((fit_outcome(result, config)?, output))
        }
        Command::Complete { link, constraint, input, tuning, output } => {
            let link_fn = parse_link(&link)?;
            let graph = ConstraintSpec::read(&constraint)?.graph()?;
            let s = read_matrix_csv(&input)?;
            let opts = tuning.options();
            opts.validate()?;
            let config = ConfigEcho {
                command: "complete".into(),
                link: Some(link_fn.to_string()),
                solver: Some("dual-pgd".into()),
                constraint: path_string(&constraint),
                input: path_string(&input),
                tol: Some(opts.tol_kkt),
                max_iter: Some(opts.max_iter),
                ..Default::default()
            };
            let result =
                pd_completion(&link_fn, &graph, &s, &opts).map(|r| FitReport::from_fit(&r, false, config.clone()));
            Ok((fit_outcome(result, config)?, output))
        }
        Command::Corr { link, m, offdiag, tuning, output } => {
            let link_fn = parse_link(&link)?;
            let values = parse_offdiag(&offdiag)?;
            let opts = tuning.options();
            opts.validate()?;
            let config = ConfigEcho {
                command: "corr".into(),
                link: Some(link_fn.to_string()),
                tol: Some(opts.tol_kkt),
                max_iter: Some(opts.max_iter),
                ..Default::default()
            };
            let result = corr_from_offdiag(&link_fn, m, &values, &opts).and_then(|r| {
                let l = link_gradient(&link_fn, &r)?;
                Ok(FitReport::from_matrix(&r, &l, config.clone()))
            });
            Ok((fit_outcome(result, config)?, output))
        }
        Command::Mixed { link, spec, tuning, output } => {
            let link_fn = parse_link(&link)?;
            let mixed = MixedSpec::read(&spec)?;
            let part = mixed.partition()?;
            let opts = tuning.options();
            opts.validate()?;
            let config = ConfigEcho {
                command: "mixed".into(),
                link: Some(link_fn.to_string()),
                constraint: path_string(&spec),
                tol: Some(opts.tol_kkt),
                max_iter: Some(opts.max_iter),
                ..Default::default()
            };
            let result = solve_mixed(&link_fn, &part, &mixed.sigma_a, &mixed.l_b, &opts).and_then(|s| {
                let l = link_gradient(&link_fn, &s)?;
                Ok(FitReport::from_matrix(&s, &l, config.clone()))
            });
            Ok((fit_outcome(result, config)?, output))
        }
        Command::Simulate { input, n, seed, output } => {
            let sigma0 = read_matrix_csv(&input)?;
            let s_n = simulate_gaussian(&sigma0, n, seed)?;
            Ok((Outcome { body: format_matrix_csv(&s_n), code: EXIT_OK }, output))
        }
        Command::CltCheck { link, constraint, input, n, reps, seed, tuning, output } => {
            let link_fn = parse_link(&link)?;
            let sub = ConstraintSpec::read(&constraint)?.subspace()?;
            let sigma0 = read_matrix_csv(&input)?;
            let opts = tuning.options();
            opts.validate()?;
            if n == 0 {
                return Err(CliError::Input("--n must be positive".into()));
            }
            let summary = clt_check(&link_fn, &sub, &sigma0, n, reps, seed, &opts)?;
            let config = ConfigEcho {
                command: "clt-check".into(),
                link: Some(link_fn.to_string()),
                solver: Some("auto".into()),
                constraint: path_string(&constraint),
                input: path_string(&input),
                tol: Some(opts.tol_kkt),
                max_iter: Some(opts.max_iter),
                seed: Some(seed),
                n: Some(n),
                reps: Some(reps),
            };
            let code = if summary.failures == 0 { EXIT_OK } else { EXIT_NOT_CONVERGED };
            Ok((Outcome { body: CltReport::new(&summary, config).to_json(), code }, output))
        }
    }
}

/// Runs the command line with explicit streams; returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(rendered.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let first = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
                    let _ = writeln!(err, "{first}");
                    EXIT_INPUT
                }
            };
        }
    };
    match dispatch(cli.command).and_then(|(outcome, path)| emit(&outcome, path.as_deref(), out).map(|_| outcome.code)) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

/// Runs the command line on the process streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
