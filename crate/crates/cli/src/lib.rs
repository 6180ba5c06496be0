//! Command-line front-end. [`run`] does all the work so it can be driven from
//! tests; the binary only forwards `std::env::args` and the exit code.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hpdcov::coverage::{coverage_curve, coverage_exact, coverage_mc, CoverageCurve};
use hpdcov::{
    family_constants, full_audit, legacy_lower_bound, make_family, min_coverage_bracket, Alpha,
    Error, Family, FamilySpec, Hpd, LocationFamily,
};

/// Exit status for a failed audit or an I/O problem.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status for unparsable or invalid arguments.
pub const EXIT_USAGE: i32 = 2;
/// Exit status when a root could not be bracketed or a limit did not settle.
pub const EXIT_NUMERIC: i32 = 3;

/// Environment variable that caps the worker-thread count.
pub const THREADS_ENV: &str = "HPDCOV_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "hpdcov",
    version,
    about = "HPD intervals for a nonnegative location parameter and their frequentist coverage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Model {
    /// normal, laplace, polyexp or student:<dof>
    #[arg(long, default_value = "normal")]
    family: FamilySpec,
    /// Posterior tail mass; the interval has credibility 1 - alpha.
    #[arg(long, default_value = "0.1")]
    alpha: Alpha,
    /// Let `interval` and `constants` evaluate families that are not
    /// logconcave (results carry no guarantees). Coverage commands always
    /// refuse them.
    #[arg(long)]
    allow_non_logconcave: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TextFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CurveFormat {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Credible interval and its posterior mass for one observation.
    Interval {
        #[command(flatten)]
        model: Model,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: TextFormat,
    },
    /// Landmark constants d0, d1, d2, 2d0 and a.
    Constants {
        #[command(flatten)]
        model: Model,
        #[arg(long, value_enum, default_value = "text")]
        format: TextFormat,
    },
    /// Exact coverage curve as CSV (theta,coverage,region,side).
    Curve {
        #[command(flatten)]
        model: Model,
        /// Defaults to 4 max(d1, 2 d0).
        #[arg(long)]
        theta_max: Option<f64>,
        #[arg(long, default_value_t = 400)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: CurveFormat,
    },
    /// Monte Carlo coverage estimate compared with the exact value.
    Mc {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: TextFormat,
    },
    /// Family diagnostics, doubling-ratio checks and every coverage bound.
    Audit {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        theta_max: Option<f64>,
        #[arg(long, default_value_t = 400)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: TextFormat,
    },
    /// Bracket on the minimum coverage, and the older lower bound.
    Bracket {
        #[arg(long, default_value = "0.1")]
        alpha: Alpha,
    },
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Io(io::Error),
    AuditFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn exit_code(e: &Error) -> i32 {
    if e.is_numeric() {
        EXIT_NUMERIC
    } else {
        EXIT_USAGE
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))
}

fn configure_threads() {
    let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    else {
        return;
    };
    // a second call (tests run `run` repeatedly) is harmless
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
}

/// Parses `args` (including the program name) and executes the command,
/// writing results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    configure_threads();
    let audit = matches!(cli.command, Command::Audit { .. });
    let overridable = matches!(
        cli.command,
        Command::Interval { .. } | Command::Constants { .. }
    );
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(Failure::AuditFailed) => EXIT_FAILURE,
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILURE
        }
        Err(Failure::Lib(e)) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::NonLogconcaveFamily(_) if audit => EXIT_FAILURE,
                Error::NonLogconcaveFamily(_) => {
                    if overridable {
                        let _ = writeln!(
                            err,
                            "hint: pass --allow-non-logconcave to evaluate it anyway"
                        );
                    }
                    EXIT_USAGE
                }
                ref other => exit_code(other),
            }
        }
    }
}

fn load(model: &Model) -> Result<Family, Error> {
    make_family(&model.family)
}

/// Coverage needs monotone endpoints, which only logconcave families give.
fn load_logconcave(model: &Model) -> Result<Family, Error> {
    let family = load(model)?;
    if family.is_logconcave() {
        Ok(family)
    } else {
        Err(Error::NonLogconcaveFamily(family.name().to_string()))
    }
}

fn default_theta_max(family: &Family, alpha: Alpha) -> Result<f64, Error> {
    let c = family_constants(family, alpha)?;
    Ok(4.0 * c.d1.max(c.two_d0))
}

fn open_output<'a>(
    path: &Option<PathBuf>,
    out: &'a mut dyn Write,
) -> io::Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(out),
    })
}

fn execute(command: Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Interval { model, x, format } => {
            let family = load(&model)?;
            let hpd = if model.allow_non_logconcave {
                Hpd::new_unchecked(&family, model.alpha)?
            } else {
                Hpd::new(&family, model.alpha)?
            };
            let ci = hpd.interval(x)?;
            let mass = hpd.posterior_mass(x)?;
            match format {
                TextFormat::Text => {
                    writeln!(out, "lower={}", ci.lower)?;
                    writeln!(out, "upper={}", ci.upper)?;
                    writeln!(out, "posterior_mass={mass}")?;
                }
                TextFormat::Json => {
                    #[derive(serde::Serialize)]
                    struct Row {
                        x: f64,
                        lower: f64,
                        upper: f64,
                        posterior_mass: f64,
                    }
                    let row = Row {
                        x,
                        lower: ci.lower,
                        upper: ci.upper,
                        posterior_mass: mass,
                    };
                    writeln!(out, "{}", to_json(&row)?)?;
                }
            }
        }
        Command::Constants { model, format } => {
            let family = load(&model)?;
            if !model.allow_non_logconcave && !family.is_logconcave() {
                return Err(Error::NonLogconcaveFamily(family.name().to_string()).into());
            }
            let c = family_constants(&family, model.alpha)?;
            match format {
                TextFormat::Text => {
                    writeln!(out, "d0={}", c.d0)?;
                    writeln!(out, "d1={}", c.d1)?;
                    writeln!(out, "d2={}", c.d2)?;
                    writeln!(out, "two_d0={}", c.two_d0)?;
                    writeln!(out, "a={}", c.a)?;
                }
                TextFormat::Json => writeln!(out, "{}", to_json(&c)?)?,
            }
        }
        Command::Curve {
            model,
            theta_max,
            points,
            out: path,
            format,
        } => {
            let family = load_logconcave(&model)?;
            let theta_max = match theta_max {
                Some(t) => t,
                None => default_theta_max(&family, model.alpha)?,
            };
            let curve: CoverageCurve = coverage_curve(&family, model.alpha, theta_max, points)?;
            let mut sink = open_output(&path, out)?;
            match format {
                CurveFormat::Csv => curve.write_csv(&mut sink)?,
                CurveFormat::Json => curve.write_jsonl(&mut sink)?,
            }
            sink.flush()?;
        }
        Command::Mc {
            model,
            theta,
            n,
            seed,
            format,
        } => {
            let family = load_logconcave(&model)?;
            let est = coverage_mc(&family, model.alpha, theta, n, seed)?;
            let exact = coverage_exact(&family, model.alpha, theta)?.coverage;
            let deviation = if est.std_error > 0.0 {
                (est.mean - exact) / est.std_error
            } else {
                0.0
            };
            match format {
                TextFormat::Text => {
                    writeln!(out, "theta={}", est.theta)?;
                    writeln!(out, "mean={}", est.mean)?;
                    writeln!(out, "std_error={}", est.std_error)?;
                    writeln!(out, "n={}", est.n)?;
                    writeln!(out, "seed={}", est.seed)?;
                    writeln!(out, "exact={exact}")?;
                    writeln!(out, "deviation_se={deviation}")?;
                }
                TextFormat::Json => {
                    #[derive(serde::Serialize)]
                    struct Row {
                        #[serde(flatten)]
                        estimate: hpdcov::McEstimate,
                        exact: f64,
                        deviation_se: f64,
                    }
                    let row = Row {
                        estimate: est,
                        exact,
                        deviation_se: deviation,
                    };
                    writeln!(out, "{}", to_json(&row)?)?;
                }
            }
        }
        Command::Audit {
            model,
            theta_max,
            points,
            out: path,
            format,
        } => {
            let family = load_logconcave(&model)?;
            let theta_max = match theta_max {
                Some(t) => t,
                None => default_theta_max(&family, model.alpha)?,
            };
            let curve = coverage_curve(&family, model.alpha, theta_max, points)?;
            let report = full_audit(&family, model.alpha, &curve)?;
            let mut sink = open_output(&path, out)?;
            match format {
                TextFormat::Text => write!(sink, "{}", report.to_key_value())?,
                TextFormat::Json => writeln!(sink, "{}", report.to_json()?)?,
            }
            sink.flush()?;
            if !report.passed() {
                return Err(Failure::AuditFailed);
            }
        }
        Command::Bracket { alpha } => {
            let (lo, hi) = min_coverage_bracket(alpha);
            let legacy = legacy_lower_bound(alpha);
            writeln!(out, "{lo:.6} ≤ inf C ≤ {hi:.6}; legacy {legacy:.6}")?;
        }
    }
    Ok(())
}
