use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gevrey_core::harness::{output_dir, run_scenario, ExperimentConfig, Scenario, Summary};

#[derive(Parser)]
#[command(name = "gevrey", version, about = "Gevrey-radius experiments for second-grade, damped Euler and Navier-Stokes flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one flow. The config's `scenario` may also name
    /// small_data_3d, damped_euler or shear_flow.
    Run(Common),
    /// Second-grade solutions against Navier-Stokes as alpha -> 0.
    SweepAlpha(Common),
    /// Pairing surveys, oracle agreement and exact zeros.
    VerifyLemmas(Common),
    /// Littlewood-Paley partition, Bony and Bernstein checks.
    LpChecks(Common),
    /// Radius estimator on synthetic spectra.
    FitRadius(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: `out_dir` from the config, else runs/<scenario>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// `key.path=value`, repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(common: &Common, forced: Option<Scenario>) -> Result<ExperimentConfig> {
    let mut overrides = Vec::new();
    let text = match &common.config {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => String::new(),
    };
    let mut table: toml::Table = toml::from_str(&text).context("parsing config")?;
    match forced {
        Some(s) => {
            table.insert("scenario".into(), toml::Value::String(s.name().into()));
        }
        None => {
            table.entry("scenario").or_insert_with(|| toml::Value::String("run".into()));
        }
    }
    if let Some(seed) = common.seed {
        overrides.push(format!("seed={seed}"));
    }
    overrides.extend(common.overrides.iter().cloned());
    let text = toml::to_string(&table)?;
    Ok(ExperimentConfig::parse(&text, &overrides)?)
}

fn report(summary: &Summary, dir: &std::path::Path) {
    for c in &summary.checks {
        let mark = match (c.asserted, c.passed) {
            (true, true) => "pass",
            (true, false) => "FAIL",
            (false, true) => "info",
            (false, false) => "info!",
        };
        println!("{mark:>5}  {:<28} {:>12.4e}  (limit {:.3e})  {}", c.name, c.measured, c.limit, c.detail);
    }
    if let Some(e) = &summary.error {
        println!("error: {e}");
    }
    println!(
        "{}: {}  ({})",
        summary.scenario,
        if summary.passed() { "passed" } else { "failed" },
        dir.display()
    );
}

fn execute(common: Common, forced: Option<Scenario>) -> Result<bool> {
    let cfg = load(&common, forced)?;
    let dir = output_dir(&cfg, common.out.clone());
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = common.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build()?;
    let summary = pool.install(|| run_scenario(&cfg, Some(&dir)))?;
    report(&summary, &dir);
    Ok(summary.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(c) => execute(c, None),
        Command::SweepAlpha(c) => execute(c, Some(Scenario::SweepAlpha)),
        Command::VerifyLemmas(c) => execute(c, Some(Scenario::VerifyLemmas)),
        Command::LpChecks(c) => execute(c, Some(Scenario::LpChecks)),
        Command::FitRadius(c) => execute(c, Some(Scenario::FitRadius)),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
