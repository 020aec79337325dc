//! `becck`: single-point reports, parameter sweeps and the oracle suite.
//!
//! Exit codes: 0 success, 2 configuration error, 3 internal consistency
//! failure, 4 I/O failure, 5 verification failure.

mod config;
mod output;

use becck_core::sweep::{run_sweep_with_workers, Preset, SweepError};
use becck_core::verify::{run_verification, VerifyOptions};
use clap::{Parser, Subcommand};
use config::{ConfigError, Format, Resolved, RunConfig};
use output::{steady_report, write_csv, write_json_lines, ReportError};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "becck", version, about = "Cavity-BEC bistability, stability and Gaussian fluctuations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Figure preset (fig2a, fig2b, fig3a, fig3b, fig4 .. fig8).
    #[arg(long, global = true)]
    preset: Option<Preset>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sweep output format: csv or json-lines.
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "BECCK_WORKERS")]
    workers: Option<usize>,
    /// Seed of the verification draws.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    /// Scale the analytic drift matrix by (1 + eps) inside the verification suites.
    #[arg(long, global = true, default_value_t = 0.0, allow_negative_numbers = true)]
    perturb_drift: f64,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Branches, stability and observables at one parameter point (JSON).
    Steady,
    /// One-dimensional sweep (CSV or JSON lines).
    Sweep,
    /// Run the oracle suites.
    Verify,
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "csv" => Ok(Format::Csv),
        "json-lines" => Ok(Format::JsonLines),
        _ => Err(format!("unknown format `{s}` (csv, json-lines)")),
    }
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Consistency(String),
    Io(String),
    Verify(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Consistency(_) => 3,
            Self::Io(_) => 4,
            Self::Verify(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Consistency(m) | Self::Io(m) | Self::Verify(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::InvalidSpec(_) | SweepError::Model(_) => Self::Config(e.to_string()),
            _ => Self::Consistency(e.to_string()),
        }
    }
}

fn io_failure(path: Option<&Path>, e: io::Error) -> Failure {
    match path {
        Some(p) => Failure::Io(format!("{}: {e}", p.display())),
        None => Failure::Io(format!("standard output: {e}")),
    }
}

fn load_config(cli: &Cli) -> Result<Resolved, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_failure(Some(path), e))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if cli.preset.is_some() {
        cfg.preset = cli.preset;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if cli.format.is_some() {
        cfg.format = cli.format;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    Ok(cfg.resolve()?)
}

/// Runs `body` against the configured output, buffered.
fn with_output(out: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_failure(Some(path), e))?;
            let mut w = BufWriter::new(file);
            body(&mut w).and_then(|_| w.flush()).map_err(|e| io_failure(Some(path), e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            body(&mut w).and_then(|_| w.flush()).map_err(|e| io_failure(None, e))
        }
    }
}

fn cmd_steady(r: &Resolved) -> Result<(), Failure> {
    let report = steady_report(&r.params).map_err(|e| match e {
        ReportError::Model(m) => Failure::Config(ConfigError::from(m).to_string()),
        ReportError::Consistency(m) => Failure::Consistency(m),
    })?;
    with_output(r.out.as_deref(), |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)
    })
}

fn cmd_sweep(r: &Resolved) -> Result<(), Failure> {
    let spec = r
        .sweep
        .ok_or_else(|| Failure::Config("sweep needs a preset or sweep_var, sweep_min and sweep_max".into()))?;
    let workers = r.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let rows = run_sweep_with_workers(&spec, workers)?;
    let flagged = rows.iter().filter(|row| !row.warnings.is_empty()).count();
    if flagged > 0 {
        eprintln!("{flagged} rows carry solver warnings");
    }
    with_output(r.out.as_deref(), |w| match r.format {
        Format::Csv => write_csv(w, &rows),
        Format::JsonLines => write_json_lines(w, &rows),
    })
}

fn cmd_verify(r: &Resolved, seed: u64, perturb_drift: f64) -> Result<(), Failure> {
    let opts = VerifyOptions {
        seed,
        perturb_drift,
        ..VerifyOptions::default()
    };
    let summary = run_verification(&r.params, &opts).map_err(|e| Failure::from(ConfigError::from(e)))?;
    with_output(r.out.as_deref(), |w| write!(w, "{summary}"))?;
    if summary.all_passed() {
        Ok(())
    } else {
        let failing: Vec<&str> = summary.suites.iter().filter(|s| !s.passed).map(|s| s.name).collect();
        Err(Failure::Verify(format!("failed suites: {}", failing.join(", "))))
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let resolved = load_config(cli)?;
    if cli.dump_config {
        return with_output(None, |w| writeln!(w, "{}", resolved.canonical().to_json()));
    }
    match cli.command {
        Command::Steady => cmd_steady(&resolved),
        Command::Sweep => cmd_sweep(&resolved),
        Command::Verify => cmd_verify(&resolved, cli.seed, cli.perturb_drift),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
