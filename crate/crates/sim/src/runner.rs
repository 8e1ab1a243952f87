//! Batch execution, sweeps, and CSV emission.

use std::io::Write;

use crate::config::ExperimentConfig;
use crate::metrics::{aggregate, MetricsRecord};
use crate::trial::{run_trial, TrialReport};
use crate::Result;

/// Run `trials` seeds (`base_seed..base_seed+trials`) and aggregate.
///
/// Trials are independent; with more than one worker they are distributed
/// round-robin over scoped threads and the reports are reassembled in seed
/// order, so the output never depends on the worker count.
pub fn monte_carlo(
    config: &ExperimentConfig,
    workers: usize,
) -> (MetricsRecord, Vec<TrialReport>) {
    let seeds: Vec<u64> = (0..config.run.trials)
        .map(|i| config.run.base_seed + i as u64)
        .collect();
    let reports = run_all(config, &seeds, workers);
    (aggregate(&reports), reports)
}

fn run_all(config: &ExperimentConfig, seeds: &[u64], workers: usize) -> Vec<TrialReport> {
    let workers = workers.max(1).min(seeds.len().max(1));
    if workers <= 1 {
        return seeds.iter().map(|&s| run_trial(config, s)).collect();
    }
    let mut slots: Vec<Option<TrialReport>> = Vec::new();
    slots.resize_with(seeds.len(), || None);
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::scope(|scope| {
        for w in 0..workers {
            let tx = tx.clone();
            scope.spawn(move || {
                let mut i = w;
                while i < seeds.len() {
                    let report = run_trial(config, seeds[i]);
                    if tx.send((i, report)).is_err() {
                        return;
                    }
                    i += workers;
                }
            });
        }
        drop(tx);
        for (i, report) in rx {
            slots[i] = Some(report);
        }
    });
    slots
        .into_iter()
        .map(|r| r.expect("every trial slot is filled"))
        .collect()
}

/// Stable CSV column order; documented in the README and frozen here.
pub const CSV_COLUMNS: &[&str] = &[
    "sweep_parameter",
    "sweep_value",
    "n_trials",
    "failed_trials",
    "recovery_failures",
    "unreliable",
    "p_d",
    "p_fa",
    "nmse_ce",
    "nmse_dr",
    "mean_runtime_s",
    "mean_solver_runtime_s",
    "n_antennas",
    "n_observed",
    "n_users",
    "n_active",
    "l_min",
    "l_max",
    "horizon",
    "snr_db",
    "noise_sigma",
    "spacing_ratio",
    "min_sep_factor",
    "rho",
    "gamma",
    "max_iterations",
    "primal_tolerance",
    "grid_size",
    "relative_threshold",
    "k_max",
    "known_active_count",
    "stationary",
    "run_recovery",
    "am_iterations",
    "min_correlation",
    "trials",
    "base_seed",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_row(
    config: &ExperimentConfig,
    sweep_parameter: &str,
    sweep_value: Option<f64>,
    record: &MetricsRecord,
) -> String {
    let m = &config.model;
    let fields: Vec<String> = vec![
        sweep_parameter.to_string(),
        opt(sweep_value),
        record.n_trials.to_string(),
        record.failed_trials.to_string(),
        record.recovery_failures.to_string(),
        record.unreliable.to_string(),
        opt(record.p_d),
        opt(record.p_fa),
        opt(record.nmse_ce),
        opt(record.nmse_dr),
        record.mean_runtime_s.to_string(),
        record.mean_solver_runtime_s.to_string(),
        m.n_antennas.to_string(),
        config.n_observed().to_string(),
        m.n_users.to_string(),
        m.n_active.to_string(),
        m.l_min.to_string(),
        m.l_max.to_string(),
        m.horizon.to_string(),
        opt(m.snr_db),
        opt(m.noise_sigma),
        m.spacing_ratio.to_string(),
        m.min_sep_factor.to_string(),
        config.solver.rho.to_string(),
        opt(config.solver.gamma),
        config.solver.max_iterations.to_string(),
        config.solver.primal_tolerance.to_string(),
        config.grid_size().to_string(),
        config.detector.relative_threshold.to_string(),
        config.detector.k_max.to_string(),
        config.detector.known_active_count.to_string(),
        config.detector.stationary.to_string(),
        config.recovery.run_recovery.to_string(),
        config.recovery.am_iterations.to_string(),
        config.recovery.min_correlation.to_string(),
        config.run.trials.to_string(),
        config.run.base_seed.to_string(),
    ];
    fields.join(",")
}

/// Write the metrics CSV: a `# generated …` comment line, the header, one
/// row per record. Everything below the comment is deterministic for a
/// fixed configuration.
pub fn write_metrics_csv<W: Write>(
    out: &mut W,
    rows: &[(ExperimentConfig, String, Option<f64>, MetricsRecord)],
) -> Result<()> {
    writeln!(
        out,
        "# generated {}",
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    )?;
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for (config, parameter, value, record) in rows {
        writeln!(out, "{}", csv_row(config, parameter, *value, record))?;
    }
    Ok(())
}

/// One batch per sweep value, in order.
pub fn sweep(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<Vec<(f64, MetricsRecord, Vec<TrialReport>)>> {
    let sweep_config = config
        .sweep
        .clone()
        .ok_or_else(|| crate::SimError::Config("sweep block missing".into()))?;
    let mut out = Vec::with_capacity(sweep_config.values.len());
    for &value in &sweep_config.values {
        let mut point = config.clone();
        point.sweep = None;
        point.apply_sweep_value(&sweep_config.parameter, value)?;
        let (record, reports) = monte_carlo(&point, workers);
        out.push((value, record, reports));
    }
    Ok(out)
}
