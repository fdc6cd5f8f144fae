//! Command-line driver: reads an experiment config, then solves, sweeps or
//! simulates it and writes CSV results plus a manifest.

pub mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use forcebal::harness::output::{
    fmt_real, write_allocations, write_curve, write_diagnostics, write_pareto, write_solution, write_summary,
};
use forcebal::harness::{
    aggregate_with, phase_diagnostics, run_seeds, AggregateReport, CheckpointSpec, Experiment, RegretEvaluator,
};
use forcebal::objective::concavity_constants;
use forcebal::solver::{pareto_sweep, solve_allocation};
use forcebal::{Execution, DEFAULT_TOL};

pub use config::{ArmConfig, ExperimentConfig, Weights};

#[derive(Debug, Parser)]
#[command(name = "forcebal", version, about = "Reward/estimation-error tradeoff bandits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for episode execution; 1 runs sequentially.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal allocation for every configured weight.
    Solve {
        /// Print the default config and exit.
        #[arg(long)]
        print_defaults: bool,
    },
    /// Reward/error frontier over the configured weights.
    Pareto,
    /// Monte-Carlo runs of every configured policy.
    Simulate,
    /// Ranking quality of the final mean estimates.
    Rank,
}

/// Parses arguments and runs the selected command.
pub fn run(cli: Cli) -> Result<()> {
    if let Command::Solve { print_defaults: true } = cli.command {
        print!("{}", ExperimentConfig::default().to_toml()?);
        return Ok(());
    }
    let path = cli.global.config.as_deref().context("--config is required")?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.global.seed {
        config.seed = seed;
    }
    if let Some(dir) = &cli.global.output {
        config.output_dir = dir.clone();
    }
    let execution = execution_for(cli.global.jobs)?;
    with_pool(cli.global.jobs, || match cli.command {
        Command::Solve { .. } => cmd_solve(&config),
        Command::Pareto => cmd_pareto(&config, execution),
        Command::Simulate => cmd_simulate(&config, execution).map(|_| ()),
        Command::Rank => cmd_rank(&config, execution),
    })
}

fn execution_for(jobs: Option<usize>) -> Result<Execution> {
    match jobs {
        Some(0) => bail!("--jobs must be at least 1"),
        Some(1) => Ok(Execution::Sequential),
        _ if Execution::parallel_available() => Ok(Execution::Parallel),
        _ => Ok(Execution::Sequential),
    }
}

#[cfg(feature = "parallel")]
fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        Some(n) if n > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("starting worker pool")?
            .install(f),
        _ => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_pool<T: Send>(_jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    f()
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_file(path: &Path, fill: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut out = create_file(path)?;
    fill(&mut out).with_context(|| format!("writing {}", path.display()))?;
    out.flush().with_context(|| format!("writing {}", path.display()))
}

fn prepare_dir(config: &ExperimentConfig) -> Result<PathBuf> {
    let dir = config.experiment_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

#[derive(Serialize)]
struct ConfigSection<'a> {
    config: &'a ExperimentConfig,
}

/// Records the command, code version, phase diagnostics and resolved config.
fn write_manifest(dir: &Path, command: &str, config: &ExperimentConfig) -> Result<()> {
    let inst = config.instance()?;
    let m = inst.moments();
    let mut text = format!("command = \"{command}\"\nversion = \"{}\"\n", env!("CARGO_PKG_VERSION"));
    for w in config.w.values() {
        let d = phase_diagnostics(&m, &config.params_for(w)?);
        let mut buf = Vec::new();
        write_diagnostics(&mut buf, &d)?;
        text.push_str(&format!("\n[[diagnostics]]\nw = {}\n", fmt_real(w)));
        text.push_str(std::str::from_utf8(&buf)?);
    }
    text.push('\n');
    text.push_str(&toml::to_string(&ConfigSection { config })?);
    fs::write(dir.join("manifest.toml"), text).context("writing manifest")
}

pub fn cmd_solve(config: &ExperimentConfig) -> Result<()> {
    let dir = prepare_dir(config)?;
    let m = config.instance()?.moments();
    let ws = config.w.values();
    for (i, &w) in ws.iter().enumerate() {
        let p = config.params_for(w)?;
        let report = solve_allocation(&m, &p, DEFAULT_TOL).with_context(|| format!("solving at w = {w}"))?;
        println!("w = {w}");
        for (arm, l) in report.allocation.iter().enumerate() {
            let floor = if report.active_floor_set.contains(&arm) {
                "  (floor)"
            } else {
                ""
            };
            println!("  lambda*_{} = {l:.6}{floor}", arm + 1);
        }
        println!("  f* = {:.8}", report.objective_value);
        match concavity_constants(&m, w, config.lambda_min) {
            Ok(c) => println!("  alpha = {:.6e}  beta = {:.6e}", c.alpha, c.beta),
            Err(_) => println!("  alpha, beta undefined"),
        }
        println!("  lambda*_min = {:.6}", report.lambda_star_min());
        if !report.unique {
            println!("  note: the optimum is not unique; lowest-index best arm chosen");
        }
        let file = if ws.len() == 1 {
            "solution.csv".to_string()
        } else {
            format!("solution_w{i}.csv")
        };
        write_file(&dir.join(file), |out| write_solution(out, &m, &report))?;
    }
    write_manifest(&dir, "solve", config)
}

pub fn cmd_pareto(config: &ExperimentConfig, execution: Execution) -> Result<()> {
    let dir = prepare_dir(config)?;
    let m = config.instance()?.moments();
    let points = pareto_sweep(&m, &config.w.values(), config.lambda_min, execution)?;
    write_file(&dir.join("pareto.csv"), |out| write_pareto(out, &points))?;
    write_manifest(&dir, "pareto", config)
}

/// Runs every configured policy and aggregates its episodes.
pub fn simulate(
    config: &ExperimentConfig,
    checkpoints: CheckpointSpec,
    execution: Execution,
) -> Result<Vec<AggregateReport>> {
    let inst = config.instance()?;
    let params = config.single_params()?;
    let exp = Experiment::new(inst.clone(), params, config.horizon)?
        .with_options(config.options)
        .with_checkpoints(checkpoints);
    let evaluator = RegretEvaluator::new(inst.moments(), &params)?;
    let seeds = run_seeds(config.seed, config.runs);
    config
        .policies
        .iter()
        .map(|&kind| {
            let traces = exp.run_batch(kind, &seeds, execution)?;
            Ok(aggregate_with(&traces, &inst, &evaluator)?)
        })
        .collect()
}

pub fn cmd_simulate(config: &ExperimentConfig, execution: Execution) -> Result<Vec<AggregateReport>> {
    let dir = prepare_dir(config)?;
    let reports = simulate(config, config.checkpoints.clone(), execution)?;
    for r in &reports {
        for (metric, curve) in r.curves() {
            write_file(&dir.join(format!("{}.{metric}.csv", r.policy)), |out| {
                write_curve(out, curve)
            })?;
        }
        write_file(&dir.join(format!("{}.allocations.csv", r.policy)), |out| {
            write_allocations(out, r)
        })?;
    }
    write_file(&dir.join("summary.csv"), |out| write_summary(out, &reports))?;
    write_manifest(&dir, "simulate", config)?;
    Ok(reports)
}

pub fn cmd_rank(config: &ExperimentConfig, execution: Execution) -> Result<()> {
    let dir = prepare_dir(config)?;
    let checkpoints = CheckpointSpec::Explicit { steps: vec![] };
    let reports = simulate(config, checkpoints, execution)?;
    // DCG loses its meaning once a mean can be zero or negative.
    let dcg_defined = config.arms.iter().all(|a| a.mean > 0.0);
    write_file(&dir.join("rank.csv"), |out| {
        writeln!(out, "policy,runs,rel_dcg,rank_err")?;
        for r in &reports {
            let rel = if dcg_defined {
                fmt_real(r.rel_dcg)
            } else {
                "undefined".into()
            };
            writeln!(out, "{},{},{rel},{}", r.policy, r.runs, fmt_real(r.rank_err))?;
        }
        Ok(())
    })?;
    for r in &reports {
        let rel = if dcg_defined {
            format!("{:.6}", r.rel_dcg)
        } else {
            "undefined".into()
        };
        println!(
            "{:<26} rel_dcg = {rel:<10} rank_err = {:.6}",
            r.policy.name(),
            r.rank_err
        );
    }
    write_manifest(&dir, "rank", config)
}
