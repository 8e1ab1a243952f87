//! `blindra` — Monte Carlo simulator CLI for the blind activity-detection
//! pipeline.
//!
//! Subcommands:
//! - `run`: one batch under the configuration, emitting `metrics.csv` (and
//!   per-trial JSON reports when asked).
//! - `sweep`: one batch per value of the configured sweep parameter.
//! - `trace`: dump the dual-polynomial trace (`trace_<seed>.csv`) and the
//!   solver iteration diagnostics (`admm_trace_<seed>.csv`) for one seed.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use blindra_sim::config::ExperimentConfig;
use blindra_sim::runner::{monte_carlo, sweep, write_metrics_csv};
use blindra_sim::trial::TrialReport;
use blindra_sim::{Result, SimError};

#[derive(Parser)]
#[command(name = "blindra", version, about = "Blind angle-domain massive-access simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(long, short = 'c')]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, short = 'o', default_value = "out")]
    out: PathBuf,
    /// Worker threads for trials; defaults to the available parallelism.
    #[arg(long, short = 'w')]
    workers: Option<usize>,
    /// Print one line per trial to stderr.
    #[arg(long, short = 'v')]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one Monte Carlo batch.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write trial_<seed>.json reports.
        #[arg(long)]
        trial_reports: bool,
    },
    /// Run one batch per sweep value.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Emit polynomial and solver traces for a single seed.
    Trace {
        #[command(flatten)]
        common: CommonArgs,
        /// Trial seed to trace.
        #[arg(long)]
        seed: u64,
    },
}

fn main() {
    if let Err(e) = real_main() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn real_main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            common,
            trial_reports,
        } => cmd_run(&common, trial_reports),
        Command::Sweep { common } => cmd_sweep(&common),
        Command::Trace { common, seed } => cmd_trace(&common, seed),
    }
}

fn workers_for(common: &CommonArgs) -> usize {
    common.workers.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(std::num::NonZeroUsize::get)
            .unwrap_or(1)
    })
}

fn report_line(report: &TrialReport) -> String {
    match &report.error {
        Some(e) => format!("trial {}: FAILED ({e})", report.seed),
        None => format!(
            "trial {}: k̂={} |Ŝ|={} p_d={} p_fa={} iters={} {:.2}s",
            report.seed,
            report.k_hat,
            report.estimated_active.len(),
            report.p_d.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
            report.p_fa.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            report.admm_iterations,
            report.runtime_s,
        ),
    }
}

fn write_trial_reports(dir: &Path, reports: &[TrialReport]) -> Result<()> {
    for report in reports {
        let path = dir.join(format!("trial_{}.json", report.seed));
        fs::write(path, serde_json::to_string_pretty(report)?)?;
    }
    Ok(())
}

fn cmd_run(common: &CommonArgs, trial_reports: bool) -> Result<()> {
    let config = ExperimentConfig::load(&common.config)?;
    fs::create_dir_all(&common.out)?;
    let (record, reports) = monte_carlo(&config, workers_for(common));
    if common.verbose {
        for report in &reports {
            eprintln!("{}", report_line(report));
        }
    }
    let rows = vec![(config.clone(), String::new(), None, record.clone())];
    let mut buf = Vec::new();
    write_metrics_csv(&mut buf, &rows)?;
    let metrics_path = common.out.join("metrics.csv");
    fs::write(&metrics_path, buf)?;
    if trial_reports || config.run.emit_trial_reports {
        write_trial_reports(&common.out, &reports)?;
    }
    println!(
        "{} trials ({} failed): p_d={} p_fa={} → {}",
        record.n_trials + record.failed_trials,
        record.failed_trials,
        record.p_d.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
        record.p_fa.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
        metrics_path.display()
    );
    Ok(())
}

fn cmd_sweep(common: &CommonArgs) -> Result<()> {
    let config = ExperimentConfig::load(&common.config)?;
    let sweep_config = config
        .sweep
        .clone()
        .ok_or_else(|| SimError::Config("config has no [sweep] block".into()))?;
    fs::create_dir_all(&common.out)?;
    let points = sweep(&config, workers_for(common))?;
    let mut rows = Vec::with_capacity(points.len());
    for (value, record, reports) in &points {
        if common.verbose {
            for report in reports {
                eprintln!("[{}={}] {}", sweep_config.parameter, value, report_line(report));
            }
        }
        let mut point = config.clone();
        point.sweep = None;
        point.apply_sweep_value(&sweep_config.parameter, *value)?;
        println!(
            "{} = {}: p_d={} p_fa={} ({} trials, {} failed)",
            sweep_config.parameter,
            value,
            record.p_d.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            record.p_fa.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            record.n_trials,
            record.failed_trials,
        );
        rows.push((point, sweep_config.parameter.clone(), Some(*value), record.clone()));
        if config.run.emit_trial_reports {
            let dir = common
                .out
                .join(format!("{}_{}", sweep_config.parameter, value));
            fs::create_dir_all(&dir)?;
            write_trial_reports(&dir, reports)?;
        }
    }
    let mut buf = Vec::new();
    write_metrics_csv(&mut buf, &rows)?;
    let metrics_path = common.out.join("metrics.csv");
    fs::write(&metrics_path, buf)?;
    println!("wrote {}", metrics_path.display());
    Ok(())
}

fn cmd_trace(common: &CommonArgs, seed: u64) -> Result<()> {
    use blindra_core::admm::{solve_detailed, write_iteration_trace};
    use blindra_core::array::{clean_signal, generate_scene, noise_sigma_for_snr, observe};
    use blindra_core::detector::eval_polynomial;

    let config = ExperimentConfig::load(&common.config)?;
    fs::create_dir_all(&common.out)?;

    let mut scene = generate_scene(&config.scene_params(), seed)?;
    let array = blindra_core::array::ArrayConfig::new(
        config.model.n_antennas,
        (0..config.n_observed()).collect(),
        config.model.spacing_ratio,
    )?;
    if let Some(snr_db) = config.model.snr_db {
        if !scene.active.is_empty() {
            let clean = clean_signal(&scene, &array)?;
            scene = scene.with_noise_sigma(noise_sigma_for_snr(&clean, snr_db)?);
        }
    }
    let observation = observe(&scene, &array, seed)?;
    let mut options = config.solver_options(scene.noise_sigma);
    options.record_history = true;
    let (certificate, state) = solve_detailed(&observation, &options)?;

    let trace = eval_polynomial(&certificate, config.grid_size(), &array)?;
    let trace_path = common.out.join(format!("trace_{seed}.csv"));
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    fs::write(&trace_path, buf)?;

    let admm_path = common.out.join(format!("admm_trace_{seed}.csv"));
    let mut buf = Vec::new();
    write_iteration_trace(&state.history, &mut buf)?;
    fs::write(&admm_path, buf)?;

    println!(
        "seed {seed}: converged={} iterations={} → {}, {}",
        certificate.converged,
        certificate.iterations_used,
        trace_path.display(),
        admm_path.display()
    );
    Ok(())
}
