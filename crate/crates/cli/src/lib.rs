//! `finsler-sph` command line: eval, verify, classify, sweep, catalog.
//!
//! Exit status: 0 ok, 1 verification failure, 2 usage error, 3 domain or
//! singularity error. Reports go to stdout, diagnostics to stderr.

mod commands;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use finsler_sph::catalog::{MetricSpec, Params};
use finsler_sph::verify::Suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "FINSLER_SPH_THREADS";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    UnsupportedFormat { command: &'static str, format: Format },
    Core(finsler_sph::Error),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::UnsupportedFormat { command, format } => {
                write!(f, "UnsupportedFormat: `{command}` cannot emit {format}")
            }
            CliError::Core(e) => write!(f, "{}: {e}", error_kind(e)),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<finsler_sph::Error> for CliError {
    fn from(e: finsler_sph::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_domain() => EXIT_DOMAIN,
            _ => EXIT_USAGE,
        }
    }
}

fn error_kind(e: &finsler_sph::Error) -> &'static str {
    use finsler_sph::Error::*;
    match e {
        Parse(_) => "ParseError",
        Domain { .. } => "DomainError",
        DivisionByZero { .. } => "DivisionByZero",
        UnboundParameter(_) => "UnboundParameter",
        OutsideDomain { .. } => "OutsideDomain",
        InsufficientOrder { .. } => "InsufficientOrder",
        SingularMetric(_) => "SingularMetric",
        ZeroVector(_) => "ZeroVector",
        DimensionMismatch { .. } => "DimensionMismatch",
        DimensionOutOfRange(_) => "DimensionOutOfRange",
        DimensionTooSmall(_) => "DimensionTooSmall",
        IndexOutOfRange { .. } => "IndexOutOfRange",
        DegeneratePoint(_) => "DegeneratePoint",
        ZeroMeanCartan(_) => "ZeroMeanCartan",
        EmptyGrid => "EmptyGrid",
        RiemannianAtRadius(_) => "RiemannianAtRadius",
        UnknownMetric(_) => "UnknownMetric",
        MissingParam { .. } => "MissingParam",
        InvalidParam { .. } => "InvalidParam",
        SamplingExhausted { .. } => "SamplingExhausted",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "text",
        })
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "finsler-sph",
    version,
    about = "Tensors of spherically symmetric Finsler metrics F = u*phi(r, s)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate scalars and tensors at one point (x, y).
    Eval(EvalArgs),
    /// Run verification suites on seeded random points.
    Verify(VerifyArgs),
    /// Decide Riemannian / T-condition / quasi-C on a grid.
    Classify(ClassifyArgs),
    /// Tabulate Phi, Psi, Omega on a grid.
    Sweep(SweepArgs),
    /// List built-in metrics.
    Catalog(CatalogArgs),
}

#[derive(Debug, Args)]
struct MetricArgs {
    /// Built-in name or `expr:<source>`
    #[arg(long)]
    metric: String,
    /// Metric parameter, repeatable: --param c=2
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_param)]
    params: Vec<(String, f64)>,
}

impl MetricArgs {
    fn spec(&self) -> Result<MetricSpec, CliError> {
        let params: Params = self.params.iter().cloned().collect();
        Ok(MetricSpec::parse(&self.metric, &params)?)
    }
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Comma-separated r values
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.4, 0.6, 0.8])]
    r_values: Vec<f64>,
    /// Comma-separated fractions f, giving s = ±r*f
    #[arg(long, value_delimiter = ',', default_values_t = [0.15, 0.35, 0.55, 0.75, 0.95])]
    s_fractions: Vec<f64>,
    /// Only s = +r*f
    #[arg(long)]
    positive_only: bool,
    /// |y| at every grid point
    #[arg(long, default_value_t = 1.0)]
    u: f64,
    /// Ambient dimension
    #[arg(long, default_value_t = 3)]
    dim: usize,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    metric: MetricArgs,
    /// Base point, comma-separated
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true,
        num_args = 1
    )]
    x: Vec<f64>,
    /// Direction, comma-separated
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true,
        num_args = 1
    )]
    y: Vec<f64>,
    /// Subset of g,g_inv,cartan,cartan_mixed,mean_cartan,cartan_vert,T_closed,T_oracle, or `all`
    #[arg(long, value_delimiter = ',', default_value = "g,cartan,T_closed")]
    tensors: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    metric: MetricArgs,
    /// oracle, identities, phi-zero, quasi-c or all
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Override every per-property tolerance
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[command(flatten)]
    metric: MetricArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Threshold on the scaled T coefficients and sigma2
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    metric: MetricArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct CatalogArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("parameter `{k}` has non-numeric value `{v}`"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_suite(s: &str) -> Result<Suite, CliError> {
    s.parse::<Suite>().map_err(|_| {
        CliError::Usage(format!(
            "unknown suite `{s}` (expected one of {})",
            Suite::NAMES.join(", ")
        ))
    })
}

/// Cap the global worker pool from `FINSLER_SPH_THREADS`, if set.
pub fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

/// Parse `argv` (program name first), run one subcommand and return the
/// exit status.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Eval(a) => a
            .metric
            .spec()
            .and_then(|m| commands::eval(&m, &a.x, &a.y, &a.tensors, a.format)),
        Command::Verify(a) => parse_suite(&a.suite).and_then(|suite| {
            let m = a.metric.spec()?;
            commands::verify(&m, suite, a.samples, a.seed, a.dim, a.tol, a.format)
        }),
        Command::Classify(a) => a
            .metric
            .spec()
            .and_then(|m| commands::classify(&m, &a.grid.into(), a.tol, a.format)),
        Command::Sweep(a) => a
            .metric
            .spec()
            .and_then(|m| commands::sweep(&m, &a.grid.into(), a.format)),
        Command::Catalog(a) => commands::catalog(a.format),
    };
    match result {
        Ok(run) => {
            if let Err(e) = out.write_all(run.stdout.as_bytes()) {
                let _ = writeln!(err, "error: i/o error: {e}");
                return EXIT_USAGE;
            }
            for line in &run.diagnostics {
                let _ = writeln!(err, "{line}");
            }
            run.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

impl From<GridArgs> for finsler_sph::ttensor::Grid {
    fn from(a: GridArgs) -> Self {
        finsler_sph::ttensor::Grid {
            r_values: a.r_values,
            s_fractions: a.s_fractions,
            both_signs: !a.positive_only,
            u: a.u,
            n: a.dim,
        }
    }
}

/// What a successful subcommand produced.
pub struct Run {
    pub stdout: String,
    pub diagnostics: Vec<String>,
    pub code: i32,
}
