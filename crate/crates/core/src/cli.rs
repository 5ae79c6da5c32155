//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime invariant violation (or a failed trend
//! under `report --strict`), 2 configuration or input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::ScenarioConfig;
use crate::engine::Simulation;
use crate::error::{Error, Result};
use crate::output::{self, SweepTables};
use crate::sweep;
use crate::trends::{self, Verdict};

pub const SEED_ENV: &str = "FEMTOSCHED_SEED";

#[derive(Debug, Parser)]
#[command(name = "femtosched", version, about = "LTE downlink scheduler simulator for macro/femto deployments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write metrics.csv and summary.csv.
    Run(RunArgs),
    /// Run the UE-count × femto-mode × scheduler grid and write per-metric tables.
    Sweep(SweepArgs),
    /// Check the qualitative trends on a directory of sweep tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario file (TOML). Built-in defaults are used when omitted.
    pub scenario: Option<PathBuf>,
    /// Override a scenario key, e.g. `--set sched=fls --set traffic.voip_delay_s=0.08`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: ScenarioArgs,
    /// Root seed; overrides FEMTOSCHED_SEED and the scenario's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write every RB grant (`tti cell rb flow cqi bits`) to this file.
    #[arg(long, value_name = "PATH")]
    pub event_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: ScenarioArgs,
    /// Seeds to average over; replaces `sweep.seeds`.
    #[arg(long = "seed", value_delimiter = ',')]
    pub seeds: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding the sweep tables.
    pub dir: PathBuf,
    /// Exit with status 1 when any trend fails.
    #[arg(long)]
    pub strict: bool,
}

fn load_config(args: &ScenarioArgs) -> Result<ScenarioConfig> {
    match &args.scenario {
        Some(p) => ScenarioConfig::load(p, &args.overrides),
        None => ScenarioConfig::from_toml("", &args.overrides),
    }
}

/// Seed precedence: flag, then environment, then scenario file.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, scenario: u64) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::config(SEED_ENV, format!("`{v}` is not an unsigned integer"))),
        None => Ok(scenario),
    }
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    let env = std::env::var(SEED_ENV).ok();
    cfg.seed = resolve_seed(args.seed, env.as_deref(), cfg.seed)?;
    let mut sim = Simulation::new(&cfg, cfg.seed)?;
    if args.event_log.is_some() {
        sim.enable_event_log();
    }
    sim.run_to_end()?;
    sim.check_conservation()?;
    let report = sim.report();
    output::write_run(&args.common.out, &report)?;
    if let Some(p) = &args.event_log {
        let f = std::fs::File::create(p).map_err(|e| Error::io(p, e))?;
        sim.write_event_log(std::io::BufWriter::new(f)).map_err(|e| Error::io(p, e))?;
    }
    let _ = writeln!(
        out,
        "{} femto={} ues={} seed={}: wrote {}",
        cfg.sched,
        if cfg.femto { "on" } else { "off" },
        cfg.n_ues,
        cfg.seed,
        args.common.out.display()
    );
    Ok(())
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    if !args.seeds.is_empty() {
        cfg.sweep.seeds = args.seeds.clone();
    }
    let results = sweep::run_sweep(&cfg)?;
    let tables = SweepTables::from_results(&results);
    let files = tables.write(&args.common.out)?;
    let _ = writeln!(
        out,
        "{} grid points × {} seeds: wrote {} tables to {}",
        results.len(),
        cfg.sweep.seeds.len(),
        files.len(),
        args.common.out.display()
    );
    Ok(())
}

fn cmd_report(args: &ReportArgs, out: &mut dyn Write) -> Result<bool> {
    let tables = SweepTables::read(&args.dir)?;
    let checks = trends::evaluate(&tables);
    for c in &checks {
        let _ = writeln!(out, "{c}");
    }
    Ok(checks.iter().all(|c| c.verdict != Verdict::Fail))
}

fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        2
    } else {
        1
    }
}

/// Parse `argv` and execute. Returns the process exit code.
pub fn main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if code == 0 {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, out).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a, out).map(|_| true),
        Command::Report(a) => cmd_report(a, out).map(|ok| ok || !a.strict),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// True if `dir` contains every sweep table.
pub fn has_sweep_tables(dir: &Path) -> bool {
    output::TableKind::all().iter().all(|k| dir.join(k.file_name()).is_file())
}
