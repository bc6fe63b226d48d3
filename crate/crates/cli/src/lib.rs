//! `messplus` command-line driver.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 when the
//! SLA target is infeasible for the zoo.

pub mod config;
pub mod report;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use messplus_core::baselines::calibrate_guessing;
use messplus_core::metrics::{compliance_report, MetricStream};
use messplus_core::simulator::{generate_trace, run_experiment, sweep, ExperimentTrace, ScenarioConfig};
use messplus_core::Error as CoreError;
use messplus_service::ServiceConfig;

use config::{Overrides, RunConfig};
use report::{RunSummary, SUMMARY_FILE};

pub const OUTPUT_SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "messplus", version, about = "SLA-constrained, cost-optimal model routing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic traces and run policies over them.
    Simulate(RunArgs),
    /// Run policies over an existing trace file.
    Replay {
        /// Trace file (JSON lines).
        trace: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evaluate a grid of alpha, V and c values in parallel.
    Sweep(RunArgs),
    /// Start the HTTP gateway.
    Serve {
        /// Service configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Listen port; overrides the config and MESSPLUS_PORT.
        #[arg(long)]
        port: Option<u16>,
        /// Data directory; overrides the config and MESSPLUS_DATA_DIR.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Compare policies from simulate or replay output.
    Report {
        /// Run directories or summary.json files.
        inputs: Vec<PathBuf>,
        /// Write the table as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the educated-guessing mixture for per-model accuracies.
    CalibrateGuessing {
        /// Target satisfaction rate.
        #[arg(long)]
        alpha: f64,
        /// Per-model accuracies, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = messplus_core::simulator::REFERENCE_RATES)]
        accuracies: Vec<f64>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run configuration (TOML). Defaults to the canonical scenario.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Random seed; repeat for several runs.
    #[arg(long = "seed")]
    pub seeds: Vec<u64>,
    /// Target satisfaction rate. Sweeps accept several values.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Cost weight V. Sweeps accept several values.
    #[arg(long, value_delimiter = ',')]
    pub v: Vec<f64>,
    /// Exploration constant c. Sweeps accept several values.
    #[arg(long, value_delimiter = ',')]
    pub c: Vec<f64>,
    /// Number of requests per run.
    #[arg(long = "t-horizon")]
    pub horizon: Option<u64>,
    /// Worker threads for sweeps; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Policy: messplus, guessing, oracle, single:<i>, threshold:<small>:<large>:<x>
    /// or all. Repeatable.
    #[arg(long = "policy")]
    pub policies: Vec<String>,
}

impl RunArgs {
    fn load(&self, sweep: bool) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        cfg.apply(
            &Overrides {
                seeds: self.seeds.clone(),
                alpha: self.alpha.clone(),
                v: self.v.clone(),
                c: self.c.clone(),
                horizon: self.horizon,
                policies: self.policies.clone(),
            },
            sweep,
        )?;
        Ok(cfg)
    }
}

/// Maps an error to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let infeasible = err
        .chain()
        .any(|e| matches!(e.downcast_ref::<CoreError>(), Some(CoreError::Infeasible { .. })));
    if infeasible {
        EXIT_INFEASIBLE
    } else {
        EXIT_USAGE
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate(&args).map(|_| ()),
        Command::Replay { trace, run } => replay(&trace, &run).map(|_| ()),
        Command::Sweep(args) => run_sweep(&args),
        Command::Serve { config, port, data_dir } => serve(&config, port, data_dir),
        Command::Report { inputs, out } => run_report(&inputs, out.as_deref()),
        Command::CalibrateGuessing { alpha, accuracies } => {
            let g = calibrate_guessing(&accuracies, alpha)?;
            let out = serde_json::json!({
                "schema_version": OUTPUT_SCHEMA_VERSION,
                "alpha": alpha,
                "accuracies": accuracies,
                "probs": g.probs,
                "expected_accuracy": g.expected_accuracy(),
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(())
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn check_feasible(alpha: f64, rates: &[f64]) -> Result<()> {
    let max = rates.iter().copied().fold(0.0, f64::max);
    if alpha > max {
        return Err(CoreError::Infeasible { alpha, max }.into());
    }
    Ok(())
}

/// Runs every policy over one trace and writes its artifacts under `dir`.
fn run_policies(
    cfg: &RunConfig,
    scenario: &ScenarioConfig,
    trace: &ExperimentTrace,
    seed: u64,
    dir: &Path,
) -> Result<Vec<RunSummary>> {
    let names: Vec<String> = scenario.zoo.models.iter().map(|m| m.name.clone()).collect();
    let mut out = Vec::new();
    for policy in cfg.policies() {
        let run = run_experiment(trace, &scenario.zoo, &policy, &scenario.sla, seed)
            .with_context(|| format!("seed {seed}, policy {}", policy.name(&scenario.zoo)))?;
        let pdir = dir.join(&run.policy);
        fs::create_dir_all(&pdir)?;
        write_steps(&run.stream, &pdir.join("steps.csv"))?;
        let summary = RunSummary {
            schema_version: OUTPUT_SCHEMA_VERSION,
            policy: run.policy.clone(),
            seed,
            alpha: scenario.sla.alpha,
            v: scenario.sla.v,
            c: scenario.sla.c,
            model_names: names.clone(),
            summary: run.stream.summary(),
            guessing_probs: run.guessing.map(|g| g.probs),
        };
        write_json(&pdir.join(SUMMARY_FILE), &summary)?;
        write_json(
            &pdir.join("compliance.json"),
            &compliance_report(&run.stream, &scenario.sla, cfg.grace_t0)?,
        )?;
        tracing::info!(
            seed,
            policy = %run.policy,
            cost_mj = summary.summary.mean_cost_mj,
            satisfaction = summary.summary.mean_satisfaction,
            "run finished"
        );
        out.push(summary);
    }
    Ok(out)
}

fn write_steps(stream: &MetricStream, path: &Path) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    stream.write_csv(BufWriter::new(f))?;
    Ok(())
}

fn write_summary_csv(runs: &[RunSummary], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "policy",
        "seed",
        "requests",
        "mean_cost_mj",
        "mean_satisfaction",
        "exploration_count",
        "final_queue",
        "queue_over_t",
        "max_queue_excess",
        "call_ratios",
    ])?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for r in runs {
        let s = &r.summary;
        w.write_record([
            r.policy.clone(),
            r.seed.to_string(),
            s.requests.to_string(),
            opt(s.mean_cost_mj),
            opt(s.mean_satisfaction),
            s.exploration_count.to_string(),
            s.final_queue.to_string(),
            opt(s.queue_over_t),
            opt(s.max_queue_excess),
            s.call_ratios
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `simulate`: one directory per seed holding the trace and, per policy,
/// `steps.csv`, `summary.json` and `compliance.json`.
pub fn simulate(args: &RunArgs) -> Result<Vec<RunSummary>> {
    let cfg = args.load(false)?;
    fs::create_dir_all(&args.out)?;
    let mut all = Vec::new();
    for &seed in &cfg.seeds {
        let scenario = cfg.scenario(seed)?;
        check_feasible(scenario.sla.alpha, &scenario.truth_rates()?)?;
        let trace = generate_trace(&scenario)?;
        let dir = args.out.join(format!("seed-{seed}"));
        fs::create_dir_all(&dir)?;
        if cfg.write_trace {
            trace.save(&dir.join("trace.jsonl"))?;
        }
        all.extend(run_policies(&cfg, &scenario, &trace, seed, &dir)?);
    }
    write_summary_csv(&all, &args.out.join("summary.csv"))?;
    Ok(all)
}

/// `replay`: runs the configured policies over a saved trace. The zoo comes
/// from the configuration and must match the trace header.
pub fn replay(trace_path: &Path, args: &RunArgs) -> Result<Vec<RunSummary>> {
    let cfg = args.load(false)?;
    let trace = ExperimentTrace::load(trace_path).with_context(|| format!("loading {}", trace_path.display()))?;
    let seed = cfg.seeds[0];
    let scenario = cfg.scenario(seed)?;
    trace.check_zoo(&scenario.zoo)?;
    check_feasible(scenario.sla.alpha, &trace.label_rates())?;
    fs::create_dir_all(&args.out)?;
    let runs = run_policies(&cfg, &scenario, &trace, seed, &args.out)?;
    write_summary_csv(&runs, &args.out.join("summary.csv"))?;
    Ok(runs)
}

fn run_sweep(args: &RunArgs) -> Result<()> {
    let cfg = args.load(true)?;
    let policies = cfg.policies();
    let [policy] = policies.as_slice() else {
        bail!("a sweep runs exactly one policy");
    };
    let grid = cfg.grid();
    let base = cfg.scenario(grid.seeds[0])?;
    for &a in &grid.alphas {
        check_feasible(a, &base.truth_rates()?)?;
    }
    let report = sweep(&base, &grid, policy, args.jobs)?;
    fs::create_dir_all(&args.out)?;
    report.write_csv(File::create(args.out.join("sweep.csv"))?)?;
    let means = messplus_core::simulator::SweepReport {
        schema_version: report.schema_version,
        horizon: report.horizon,
        cells: report.seed_means(),
    };
    means.write_csv(File::create(args.out.join("sweep_means.csv"))?)?;
    tracing::info!(cells = report.cells.len(), out = %args.out.display(), "sweep finished");
    Ok(())
}

fn serve(config: &Path, port: Option<u16>, data_dir: Option<PathBuf>) -> Result<()> {
    let mut cfg = ServiceConfig::load(config)?;
    cfg.apply_env()?;
    cfg.apply_overrides(port.map(|p| p.to_string()).as_deref(), data_dir)?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(messplus_service::serve(&cfg, messplus_service::shutdown_signal()))?;
    Ok(())
}

fn run_report(inputs: &[PathBuf], out: Option<&Path>) -> Result<()> {
    let runs = report::collect(inputs)?;
    let models = runs[0].model_names.clone();
    let rows = report::build(&runs)?;
    print!("{}", report::render(&rows, &models));
    if let Some(path) = out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        report::write_csv(&rows, &models, File::create(path)?)?;
    }
    Ok(())
}
