//! `irdeco` command-line front end.
//!
//! Exit codes: 0 success, 1 failed check or criterion, 2 config error,
//! 3 domain error, 4 I/O error.

pub mod commands;
pub mod config;
pub mod criteria;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{Format, RunConfig};
pub use error::CliError;
use output::Report;

#[derive(Debug, Parser)]
#[command(
    name = "irdeco",
    version,
    about = "Soft-photon dressing and decoherence of scattering branches"
)]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file, or directory for `demo`. Standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Print the planned jobs and write nothing.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Print the JSON field list of every command and exit.
    #[arg(long)]
    pub schema: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Classical emission current at the configured photon momenta.
    Current,
    /// Photon spectrum and the fitted log-divergence coefficient.
    Spectrum,
    /// Vacuum overlap against exp(-N/2) over a sweep of deflections.
    Overlap,
    /// Decoherence matrices of a branch set over an infrared-cutoff sweep.
    Decohere,
    /// Truncated Fock-space cross-checks.
    FockCheck {
        /// Override the truncation.
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Return probability over a ladder of angular tolerances.
    Rescatter,
    /// Every sweep plus the acceptance summary, written into a directory.
    Demo,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Current => "current",
            Command::Spectrum => "spectrum",
            Command::Overlap => "overlap",
            Command::Decohere => "decohere",
            Command::FockCheck { .. } => "fock-check",
            Command::Rescatter => "rescatter",
            Command::Demo => "demo",
        }
    }
}

pub const DEFAULT_DEMO_DIR: &str = "irdeco-demo";

/// Config file, then flag overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(format) = cli.format {
        cfg.format = format;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    if let Some(Command::FockCheck { n_max: Some(n) }) = &cli.command {
        cfg.grid.n_max = Some(*n);
    }
    Ok(cfg)
}

pub fn run_command(name: &str, cfg: &RunConfig) -> Result<Report, CliError> {
    match name {
        "current" => commands::current(cfg),
        "spectrum" => commands::spectrum(cfg),
        "overlap" => commands::overlap(cfg),
        "decohere" => commands::decohere(cfg),
        "fock-check" => commands::fock_check(cfg),
        "rescatter" => commands::rescatter(cfg),
        other => Err(CliError::Config(format!("unknown command {other}"))),
    }
}

/// Sweeps written by `demo`, in order.
pub const DEMO_SWEEPS: [&str; 6] = [
    "current",
    "spectrum",
    "overlap",
    "decohere",
    "fock-check",
    "rescatter",
];

fn demo_plan(cfg: &RunConfig, dir: &Path) -> Vec<String> {
    let ext = cfg.format.extension();
    let schema = commands::schema();
    let mut plan = Vec::new();
    for sweep in DEMO_SWEEPS {
        let tables = schema
            .iter()
            .find(|(c, _)| *c == sweep)
            .map(|(_, t)| t.as_slice())
            .unwrap_or_default();
        let names: Vec<String> = match cfg.format {
            Format::Csv if tables.len() > 1 => tables
                .iter()
                .map(|(t, _)| format!("{sweep}_{t}.{ext}"))
                .collect(),
            _ => vec![format!("{sweep}.{ext}")],
        };
        for name in names {
            plan.push(format!("{sweep} -> {}", dir.join(name).display()));
        }
    }
    plan.extend(
        criteria::IDS
            .iter()
            .map(|id| format!("criterion {id}: {}", criteria::title(*id))),
    );
    plan.push(format!(
        "summary -> {}",
        dir.join(format!("summary.{ext}")).display()
    ));
    plan
}

/// Runs every sweep and criterion, writing into `dir`. Returns the number of
/// failed criteria.
pub fn demo(cfg: &RunConfig, dir: &Path) -> Result<usize, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let ext = cfg.format.extension();
    for sweep in DEMO_SWEEPS {
        let report = run_command(sweep, cfg)?;
        output::emit(
            &report,
            cfg.format,
            Some(&dir.join(format!("{sweep}.{ext}"))),
        )?;
    }
    let mut results = Vec::with_capacity(criteria::IDS.len());
    for id in criteria::IDS {
        let r = criteria::evaluate(cfg, id)?;
        eprintln!("{}", r.line());
        results.push(r);
    }
    let summary = Report::new("demo", vec![criteria::summary_table(&results)]);
    output::emit(
        &summary,
        cfg.format,
        Some(&dir.join(format!("summary.{ext}"))),
    )?;
    Ok(results.iter().filter(|r| !r.pass()).count())
}

/// Parse-independent entry point; returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    match execute(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("irdeco: {err}");
            err.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<u8, CliError> {
    if cli.schema {
        output::write_stdout(&format!("{}\n", commands::schema_json()))?;
        return Ok(0);
    }
    let Some(command) = &cli.command else {
        return Err(CliError::Config("no subcommand given (try --help)".into()));
    };
    let cfg = resolve_config(cli)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads {n}: {e}")))?;
    }
    if let Command::Demo = command {
        let dir = cfg
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_DEMO_DIR));
        if cli.dry_run {
            output::write_stdout(&(demo_plan(&cfg, &dir).join("\n") + "\n"))?;
            return Ok(0);
        }
        let failed = demo(&cfg, &dir)?;
        return Ok(u8::from(failed > 0));
    }
    if cli.dry_run {
        let target = cfg
            .out
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "stdout".into());
        output::write_stdout(&format!(
            "{} -> {target} ({})\n",
            command.name(),
            cfg.format.extension()
        ))?;
        return Ok(0);
    }
    let report = run_command(command.name(), &cfg)?;
    output::emit(&report, cfg.format, cfg.out.as_deref())?;
    Ok(u8::from(report.failures > 0))
}
