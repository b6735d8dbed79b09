//! `stable-info`: tables of stable densities, scores and Fisher information.
//!
//! Exit status: 0 on success, 2 on bad flags or parameters, 3 when a
//! quadrature failed to converge (or a `verify` check failed) and
//! `--lenient` was not given.

mod commands;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stable_info::fisher::Param;

#[derive(Parser, Debug)]
#[command(name = "stable-info", version, about = "Stable densities, scores and Fisher information near alpha = 2")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Density and its x-derivative on a grid.
    Density,
    /// Score vector (mu, sigma, alpha, beta) on a grid.
    Score,
    /// Full 4x4 Fisher information matrix.
    Fisher,
    /// Exact density against the core + tail approximant on a grid.
    CompareAsymptotics,
    /// Limit of the information matrix at alpha = 2.
    Table1,
    /// One Fisher entry against its leading asymptotic form over a list of deltas.
    Sweep,
    /// Oracle cross-checks, one JSON line per comparison.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Density => "density",
            Command::Score => "score",
            Command::Fisher => "fisher",
            Command::CompareAsymptotics => "compare-asymptotics",
            Command::Table1 => "table1",
            Command::Sweep => "sweep",
            Command::Verify => "verify",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let span = self.hi - self.lo;
        (0..self.n)
            .map(|i| if i + 1 == self.n { self.hi } else { self.lo + span * i as f64 / (self.n - 1) as f64 })
            .collect()
    }
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err("expected lo:hi:n".into());
    };
    let lo: f64 = a.trim().parse().map_err(|e| format!("bad lo `{a}`: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("bad hi `{b}`: {e}"))?;
    let n: usize = n.trim().parse().map_err(|e| format!("bad n `{n}`: {e}"))?;
    if !lo.is_finite() || !hi.is_finite() {
        return Err("grid ends must be finite".into());
    }
    match n {
        0 => Err("n must be at least 1".into()),
        1 if lo != hi => Err("a single-point grid needs lo == hi".into()),
        1 => Ok(Grid { lo, hi, n }),
        _ if lo < hi => Ok(Grid { lo, hi, n }),
        _ => Err("grid needs lo < hi".into()),
    }
}

fn parse_entry(s: &str) -> Result<(Param, Param), String> {
    let (a, b) = s.split_once(',').ok_or("expected two names, e.g. alpha,alpha")?;
    let p = |t: &str| t.parse::<Param>().map_err(|e| e.to_string());
    Ok((p(a)?, p(b)?))
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("must be positive and finite".into())
    }
}

#[derive(Args, Debug, Clone)]
pub struct Opts {
    /// Characteristic exponent in (1, 2].
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Skewness, |beta| <= 0.999.
    #[arg(long, global = true, default_value_t = 0.0, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, global = true, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, global = true, default_value_t = 1.0, allow_hyphen_values = true)]
    pub sigma: f64,
    /// x grid as lo:hi:n.
    #[arg(long, global = true, value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: Option<Grid>,
    /// Comma-separated list of delta = 2 - alpha values.
    #[arg(long, global = true, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Fisher entry for `sweep`, e.g. alpha,alpha.
    #[arg(long, global = true, value_parser = parse_entry, default_value = "alpha,alpha")]
    pub entry: (Param, Param),
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<std::path::PathBuf>,
    /// Report best estimates instead of failing on non-convergence.
    #[arg(long, global = true)]
    pub lenient: bool,
    /// Half-width of the crossover band between core and tail.
    #[arg(long, global = true, default_value_t = stable_info::asymptotics::DEFAULT_DELTA_KNOB)]
    pub delta_knob: f64,
    #[arg(long, global = true, value_parser = parse_positive)]
    pub abs_tol: Option<f64>,
    #[arg(long, global = true, value_parser = parse_positive)]
    pub rel_tol: Option<f64>,
}

/// Everything a command needs, after parsing.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub opts: Opts,
    pub quad: stable_info::quadrature::QuadConfig,
    /// Flags as given, minus `--output`, for the metadata header.
    pub invocation: String,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    NonConverged(String),
    Io(std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::NonConverged(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::NonConverged(m) => write!(f, "{m} (rerun with --lenient to accept best estimates)"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<stable_info::Error> for CliError {
    fn from(e: stable_info::Error) -> Self {
        match e {
            stable_info::Error::InvalidParameter { name, value, reason } => {
                CliError::Usage(format!("invalid value for --{}: {value} ({reason})", name.replace('_', "-")))
            }
            stable_info::Error::NonConvergence { .. } => CliError::NonConverged(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn invocation(args: &[String]) -> String {
    let mut kept = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a == "--output" {
            skip = true;
            continue;
        }
        if a.starts_with("--output=") {
            continue;
        }
        kept.push(a.as_str());
    }
    kept.join(" ")
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("STABLE_INFO_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("STABLE_INFO_THREADS must be a positive integer, got `{v}`")))?;
    // A second initialization only happens in tests that share a process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(cli: Cli, args: &[String]) -> Result<(), CliError> {
    configure_threads()?;
    let defaults = stable_info::fisher::FisherConfig::default().quad;
    let quad = stable_info::quadrature::QuadConfig {
        abs_tol: cli.opts.abs_tol.unwrap_or(defaults.abs_tol),
        rel_tol: cli.opts.rel_tol.unwrap_or(defaults.rel_tol),
        ..defaults
    };
    let cfg = RunConfig {
        command: cli.command,
        opts: cli.opts,
        quad,
        invocation: invocation(args),
    };
    let outcome = commands::execute(&cfg)?;
    match &cfg.opts.output {
        Some(path) => std::fs::write(path, &outcome.text).map_err(CliError::Io)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(outcome.text.as_bytes()).map_err(CliError::Io)?
        }
    }
    outcome.failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
