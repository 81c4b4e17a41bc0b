//! `cascade`: run network-cascade experiments from a configuration file.
//!
//! Every parameter lives in an INI-style file (`--config`) and can be
//! overridden on the command line as `--block.key=value`. Exit status is 0
//! on success, 1 for invalid input and 2 when a run fails.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{ExperimentConfig, RawConfig};
use output::{gnuplot_stub, Metadata, OutDir};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("run failed: {0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "cascade",
    version,
    about = "Failure cascades on hierarchical lending networks",
    after_help = "Any configuration key can be overridden as --block.key=value, e.g. --params.t_h=0.3"
)]
struct Cli {
    /// Configuration file; unset keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (same as --run.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (same as --output.dir).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for parallel sections; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Leave the creation time out of output headers, so reruns are byte-identical.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Draw a network and write its edge list.
    Generate,
    /// Simulate one trajectory.
    Simulate,
    /// Ramp intrinsic forcing up and back down.
    Sweep,
    /// Classify regimes over a two-parameter grid.
    Riskmap,
    /// Scan p_ext for rising fluctuations.
    Warning,
    /// Detrended fluctuation analysis of a series.
    Dfa,
    /// Fit the model to a monthly repayment series.
    Calibrate,
    /// Write synthetic input files.
    Fixture,
    /// Print the effective configuration.
    Config,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Riskmap => "riskmap",
            Command::Warning => "warning",
            Command::Dfa => "dfa",
            Command::Calibrate => "calibrate",
            Command::Fixture => "fixture",
            Command::Config => "config",
        }
    }
}

type Overrides = Vec<(String, String)>;

/// Splits `--block.key=value` and `--block.key value` out of the arguments.
fn extract_overrides(args: Vec<OsString>) -> Result<(Vec<OsString>, Overrides), CliError> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let Some(text) = arg.to_str().and_then(|s| s.strip_prefix("--")) else {
            rest.push(arg);
            continue;
        };
        let (name, value) = match text.split_once('=') {
            Some((n, v)) => (n.to_string(), Some(v.to_string())),
            None => (text.to_string(), None),
        };
        if !name.contains('.') {
            rest.push(arg);
            continue;
        }
        let value = match value {
            Some(v) => v,
            None => iter
                .next()
                .and_then(|v| v.into_string().ok())
                .ok_or_else(|| CliError::Validation(format!("--{name} needs a value")))?,
        };
        overrides.push((name, value));
    }
    Ok((rest, overrides))
}

fn execute(cli: &Cli, overrides: &[(String, String)]) -> Result<(), CliError> {
    let mut raw = match &cli.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    if let Some(seed) = cli.seed {
        raw.set("run.seed", &seed.to_string()).map_err(CliError::Validation)?;
    }
    if let Some(dir) = &cli.out_dir {
        raw.set("output.dir", &dir.to_string_lossy()).map_err(CliError::Validation)?;
    }
    for (key, value) in overrides {
        raw.set(key, value).map_err(|e| CliError::Validation(format!("--{key}: {e}")))?;
    }
    let cfg = ExperimentConfig::from_raw(&raw)?;
    if let Command::Config = cli.command {
        print!("{}", raw.to_ini());
        return Ok(());
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }

    let meta = Metadata {
        command: cli.command.name(),
        config_sha256: raw.sha256(),
        seed: cfg.run.seed,
        timestamp: !cli.no_timestamp,
    };
    let mut out = OutDir::create(&cfg.out_dir, meta)?;
    match cli.command {
        Command::Generate => commands::generate(&cfg, &mut out)?,
        Command::Simulate => commands::simulate(&cfg, &mut out)?,
        Command::Sweep => commands::sweep(&cfg, &mut out)?,
        Command::Riskmap => commands::riskmap(&cfg, &mut out)?,
        Command::Warning => commands::warning(&cfg, &mut out)?,
        Command::Dfa => commands::dfa_cmd(&cfg, &mut out)?,
        Command::Calibrate => commands::calibrate(&cfg, &mut out)?,
        Command::Fixture => commands::fixture(&cfg, &mut out)?,
        Command::Config => unreachable!(),
    }
    if cfg.gnuplot {
        if let Some(script) = gnuplot_stub(cli.command.name()) {
            out.write_plain(&format!("{}.gp", cli.command.name()), script)?;
        }
    }
    for path in out.written() {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let (args, overrides) = match extract_overrides(std::env::args_os().collect()) {
        Ok(split) => split,
        Err(e) => {
            eprintln!("cascade: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cascade: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
