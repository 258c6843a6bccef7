//! `vlp` command-line front end.
//!
//! Every sub-command writes `check,name,value,bound,pass` rows (or a Picard
//! trace for `solve`) and exits 0 when all rows pass, 1 when any row fails and
//! 2 on usage, I/O or domain errors.

pub mod config;
pub mod report;
pub mod suites;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use vlp_core::grid::{Grid, GridError};
use vlp_core::io::{read_field, write_field, IoError, EXPONENT_TAG, FIELD_TAG};
use vlp_core::kernel::KernelError;
use vlp_core::operators::OperatorError;
use vlp_core::solver::{
    check_local_existence, check_smallness_global, picard_solve, Mode, SolverError,
};
use vlp_core::varexp::{
    check_emb_class, check_log_holder, local_log_holder_constant, luxemburg_norm, mixed_norm,
    MixedSpaceParams, VarExpError, VariableExponent, DEFAULT_TOL,
};

use config::{Config, Problem};
use report::{Report, Row};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Fs {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    VarExp(#[from] VarExpError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Parser)]
#[command(
    name = "vlp",
    version,
    about = "Verification tools for fractional heat equations in variable Lebesgue spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Luxemburg norm of a field, or the mixed norm when `--q` is given.
    Norm {
        field: PathBuf,
        /// Constant exponent or an exponent file.
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Heat-kernel oracles, decay, smoothing and time-integral rows.
    VerifyKernel {
        /// Repeat for several values.
        #[arg(long, num_args = 1.., default_values_t = [0.6, 0.75, 1.0])]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long = "L", default_value_t = 20.0)]
        half_len: f64,
        #[arg(long = "N", default_value_t = 512)]
        points: usize,
        /// Comma-separated sweep times; defaults to a geometric sweep.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Riesz, maximal-function and variable-Lebesgue rows.
    VerifyOperators {
        #[arg(long = "N", default_value_t = 64)]
        points: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Exponent conditions and the smallness verdict for a config.
    Check {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Picard solve; writes `trace.csv` and one field file per time node.
    Solve {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// All suites in one CSV.
    Report {
        #[command(flatten)]
        output: Output,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("vlp: {e}");
            2
        }
    }
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Fs {
        path: path.display().to_string(),
        source,
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(fs_err(path)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(fs_err(Path::new("<stdout>")))
        }
    }
}

fn finish(report: Report, out: Option<&Path>) -> Result<bool, CliError> {
    emit(&report.to_csv(), out)?;
    Ok(report.all_pass())
}

/// Runs one command; `Ok(pass)` on completion.
pub fn run(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Norm { field, p, q, tol } => {
            let f = read_field(&field, FIELD_TAG)?;
            let exponent = match p.parse::<f64>() {
                Ok(v) => VariableExponent::constant(f.grid(), v)?,
                Err(_) => {
                    let e = read_field(Path::new(&p), EXPONENT_TAG)?;
                    VariableExponent::spatial(e, None)?
                }
            };
            let value = match q {
                Some(q) => mixed_norm(&f, &MixedSpaceParams::new(exponent, q)?, tol)?,
                None => luxemburg_norm(&f, &exponent, tol)?,
            };
            emit(&format!("{value}\n"), None)?;
            Ok(true)
        }
        Command::VerifyKernel {
            alpha,
            n,
            half_len,
            points,
            sweep,
            output,
        } => {
            let grid = Grid::new(n, half_len, points)?;
            let mut report = Report::default();
            for a in alpha {
                if sweep.is_empty() {
                    report.extend(suites::kernel_suite(a, &grid, output.seed)?);
                } else {
                    report.extend(suites::kernel_suite_with(a, &grid, &sweep, output.seed)?);
                }
            }
            finish(report, output.out.as_deref())
        }
        Command::VerifyOperators { points, output } => {
            let mut report = Report::default();
            report.extend(suites::operator_suite(points, output.seed)?);
            finish(report, output.out.as_deref())
        }
        Command::Check { config, out } => {
            let problem = Config::read(&config)?.problem()?;
            finish(check_rows(&problem)?, out.as_deref())
        }
        Command::Solve { config, out } => solve(&Config::read(&config)?.problem()?, &out),
        Command::Report { output } => {
            let mut report = Report::default();
            let grid = Grid::new(1, 20.0, 512)?;
            if let Some((name, err)) = suites::kernel_oracle(0.5, &grid, 1.0)? {
                report.push(Row::at_most("oracle", name, err, suites::ORACLE_TOL));
            }
            for a in [0.6, 0.75, 1.0] {
                report.extend(suites::kernel_suite(a, &grid, output.seed)?);
            }
            report.extend(suites::operator_suite(64, output.seed)?);
            report.extend(suites::solver_suite(output.seed)?);
            finish(report, output.out.as_deref())
        }
    }
}

/// Log-Hölder, embedding-class and smallness rows for a problem.
pub fn check_rows(problem: &Problem) -> Result<Report, CliError> {
    let mut report = Report::default();
    let p = &problem.checked_exponent;
    let budget = problem.log_holder_budget;
    if p.p_inf().is_some() {
        let lh = check_log_holder(p, budget)?;
        report.push(Row::at_most(
            "log-holder",
            "local",
            lh.local_constant,
            budget,
        ));
        report.push(Row::at_most(
            "log-holder",
            "decay",
            lh.decay_constant,
            budget,
        ));
    } else {
        report.push(Row::at_most(
            "log-holder",
            "local",
            local_log_holder_constant(p),
            budget,
        ));
    }
    let spec = &problem.spec;
    match spec.mode() {
        Mode::Global { .. } => {
            let s = check_smallness_global(spec, problem.tol)?;
            report.push(Row::new(
                "smallness",
                format!(
                    "data={};radius={};constant={}",
                    s.data, s.radius, s.constant
                ),
                s.product,
                vlp_core::solver::SMALLNESS_BOUND,
                s.pass,
            ));
        }
        Mode::Local { q_space, qbar, .. } => {
            let emb = check_emb_class(qbar, *q_space);
            report.push(Row::new(
                "emb-class",
                format!("q={q_space}"),
                f64::from(u8::from(emb)),
                1.0,
                emb,
            ));
            match check_local_existence(spec, problem.tol) {
                Ok(local) => report.push(Row::new(
                    "smallness",
                    format!(
                        "T_suggested={};M={}",
                        local.horizon,
                        local.candidates.last().map_or(spec.steps(), |c| c.steps)
                    ),
                    local.report.product,
                    vlp_core::solver::SMALLNESS_BOUND,
                    local.report.pass,
                )),
                Err(SolverError::NoAdmissibleT) => report.push(Row::new(
                    "smallness",
                    "T_suggested=none",
                    f64::INFINITY,
                    vlp_core::solver::SMALLNESS_BOUND,
                    false,
                )),
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(report)
}

fn solve(problem: &Problem, out: &Path) -> Result<bool, CliError> {
    std::fs::create_dir_all(out).map_err(fs_err(out))?;
    let (u, trace) = picard_solve(&problem.spec, problem.k_max, problem.tol)?;
    let mut csv = String::from("k,norm,increment,ratio\n");
    for s in &trace.steps {
        let ratio = s.ratio.map(|r| r.to_string()).unwrap_or_default();
        csv.push_str(&format!("{},{},{},{}\n", s.k, s.norm, s.increment, ratio));
    }
    let path = out.join("trace.csv");
    std::fs::write(&path, csv).map_err(fs_err(&path))?;
    for (i, frame) in u.frames().iter().enumerate() {
        write_field(&out.join(format!("u_{i:04}.txt")), frame, FIELD_TAG)?;
    }
    eprintln!(
        "vlp: {} after {} iterations",
        if trace.converged {
            "converged"
        } else {
            "not converged"
        },
        trace.iterations
    );
    Ok(trace.converged)
}
