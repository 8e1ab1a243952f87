//! Detection and recovery metrics, per trial and aggregated.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use blindra_core::array::{user_channel, ArrayConfig, Scene};

use crate::trial::TrialReport;

/// Per-trial detection counts: `p_d = |S ∩ Ŝ|/Kₐ` over the active users and
/// `p_fa = |Ŝ ∖ S|/(K − Kₐ)` over the inactive ones. Either side is `None`
/// when its denominator vanishes.
pub fn detection_metrics(
    estimated_set: &BTreeSet<usize>,
    true_set: &BTreeSet<usize>,
    n_users: usize,
    n_active: usize,
) -> (Option<f64>, Option<f64>) {
    let hits = estimated_set.intersection(true_set).count();
    let spurious = estimated_set.difference(true_set).count();
    let p_d = if n_active > 0 {
        Some(hits as f64 / n_active as f64)
    } else {
        None
    };
    let p_fa = if n_users > n_active {
        Some(spurious as f64 / (n_users - n_active) as f64)
    } else {
        None
    };
    (p_d, p_fa)
}

/// Optimal nonnegative scalar `s` minimizing `‖s·est − truth‖`.
fn positive_alignment(truth_dot_est: f64, est_norm_sq: f64) -> f64 {
    if est_norm_sq > 0.0 {
        (truth_dot_est / est_norm_sq).max(0.0)
    } else {
        1.0
    }
}

/// Channel-estimation NMSE: extended `N×K` matrices with columns at the
/// true/estimated active indices, zero elsewhere; ratio of Frobenius norms.
/// With `align` set, each commonly-detected user's estimate is first scaled
/// by the optimal positive scalar (the recovery only identifies channels up
/// to one).
pub fn nmse_ce(
    estimates: &BTreeMap<usize, DVector<Complex64>>,
    scene: &Scene,
    array: &ArrayConfig,
    align: bool,
) -> Option<f64> {
    let n = array.n_antennas();
    let k = scene.n_users;
    let mut truth = DMatrix::<Complex64>::zeros(n, k);
    for user in &scene.active {
        let h = user_channel(user, array).ok()?;
        truth.set_column(user.id, &h);
    }
    let mut est = DMatrix::<Complex64>::zeros(n, k);
    for (&id, h) in estimates {
        if id >= k || h.len() != n {
            return None;
        }
        let mut h = h.clone();
        if align {
            let t: DVector<Complex64> = truth.column(id).into();
            let s = positive_alignment(
                t.iter().zip(h.iter()).map(|(a, b)| (a * b.conj()).re).sum(),
                h.norm_squared(),
            );
            h *= Complex64::from(s);
        }
        est.set_column(id, &h);
    }
    let denom = truth.norm();
    if denom == 0.0 {
        return None;
    }
    Some((est - truth).norm() / denom)
}

/// Data-recovery NMSE: extended `K×T` matrices with rows at the
/// true/estimated active indices; otherwise the mirror of [`nmse_ce`].
pub fn nmse_dr(
    estimates: &BTreeMap<usize, DVector<f64>>,
    scene: &Scene,
    align: bool,
) -> Option<f64> {
    let k = scene.n_users;
    let t = scene.horizon;
    let mut truth = DMatrix::<f64>::zeros(k, t);
    for user in &scene.active {
        truth.set_row(user.id, &user.data.transpose());
    }
    let mut est = DMatrix::<f64>::zeros(k, t);
    for (&id, phi) in estimates {
        if id >= k || phi.len() != t {
            return None;
        }
        let mut phi = phi.clone();
        if align {
            let row: DVector<f64> = truth.row(id).transpose();
            let s = positive_alignment(row.dot(&phi), phi.norm_squared());
            phi *= s;
        }
        est.set_row(id, &phi.transpose());
    }
    let denom = truth.norm();
    if denom == 0.0 {
        return None;
    }
    Some((est - truth).norm() / denom)
}

/// Batch-level averages over the successful trials of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub p_d: Option<f64>,
    pub p_fa: Option<f64>,
    pub nmse_ce: Option<f64>,
    pub nmse_dr: Option<f64>,
    /// Mean wall-clock of the full per-trial pipeline, seconds.
    pub mean_runtime_s: f64,
    /// Mean wall-clock of the SDP solve alone, seconds.
    pub mean_solver_runtime_s: f64,
    /// Successful trials aggregated here.
    pub n_trials: usize,
    pub failed_trials: usize,
    /// Trials whose recovery stage failed while detection survived.
    pub recovery_failures: usize,
    /// Set when more than 20% of the requested trials failed.
    pub unreliable: bool,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let collected: Vec<f64> = values.flatten().collect();
    if collected.is_empty() {
        None
    } else {
        Some(collected.iter().sum::<f64>() / collected.len() as f64)
    }
}

/// Aggregate per-trial reports; metric means skip trials where a metric is
/// undefined, runtimes average over all successful trials.
pub fn aggregate(reports: &[TrialReport]) -> MetricsRecord {
    let requested = reports.len();
    let ok: Vec<&TrialReport> = reports.iter().filter(|r| r.error.is_none()).collect();
    let failed = requested - ok.len();
    let n = ok.len();
    let mean_runtime_s = if n > 0 {
        ok.iter().map(|r| r.runtime_s).sum::<f64>() / n as f64
    } else {
        0.0
    };
    let mean_solver_runtime_s = if n > 0 {
        ok.iter().map(|r| r.solver_runtime_s).sum::<f64>() / n as f64
    } else {
        0.0
    };
    MetricsRecord {
        p_d: mean_of(ok.iter().map(|r| r.p_d)),
        p_fa: mean_of(ok.iter().map(|r| r.p_fa)),
        nmse_ce: mean_of(ok.iter().map(|r| r.nmse_ce)),
        nmse_dr: mean_of(ok.iter().map(|r| r.nmse_dr)),
        mean_runtime_s,
        mean_solver_runtime_s,
        n_trials: n,
        failed_trials: failed,
        recovery_failures: ok.iter().filter(|r| r.recovery_error.is_some()).count(),
        unreliable: requested > 0 && (failed as f64) > 0.2 * requested as f64,
    }
}
