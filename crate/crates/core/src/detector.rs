//! Angle localization and user grouping from the dual certificate.
//!
//! The certificate's vector polynomial `q(θ) = (𝒫ᴬᵈʲ_Ω(V))ᴴ·a(θ)` has
//! `ℓ₂`-norm peaks exactly at the active users' path angles. This module
//! evaluates `‖q(θ)‖₂` on a grid that is uniform in spatial frequency
//! (matching the polynomial's bandlimited structure), extracts grid-local
//! maxima above a relative threshold with sub-grid quadratic refinement,
//! and groups the resulting angles into users.
//!
//! Grouping runs 1-D k-means (seeded k-means++ with 20 restarts, which is
//! effectively exact in one dimension) either at a fixed cluster count or
//! with the count chosen by the sharpest knee of the
//! within-cluster-sum-of-squares curve (see [`cluster_elbow`]). Clustering uses
//! raw θ: a user's paths are a contiguous angular spread, so θ-space and
//! frequency space give the same partition at realistic spreads.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::admm::DualCertificate;
use crate::array::{steering_vector, ArrayConfig};
use crate::error::{Error, Result};

/// Fixed seed for the k-means++ restarts; clustering is a pure function of
/// its inputs.
const KMEANS_SEED: u64 = 0x6b6d_6570_7031;
/// Restart count for k-means++.
const KMEANS_RESTARTS: usize = 20;
/// Lloyd iteration cap per restart.
const KMEANS_MAX_ITERS: usize = 100;
/// WCSS below this is treated as "all angles coincide".
const WCSS_FLOOR: f64 = 1e-12;
/// Relative floor applied to the WCSS curve before taking logarithms.
const RELATIVE_WCSS_FLOOR: f64 = 1e-9;
/// A cluster count only qualifies as a knee while the previous count still
/// leaves this fraction of the total variance unexplained.
const KNEE_GATE: f64 = 1e-2;
/// The all-singletons count `k = n` zeroes the WCSS outright, which looks
/// infinitely sharp on a relative scale; it only qualifies when the count
/// below it still leaves this fraction of the variance unexplained.
const SINGLETON_GATE: f64 = 0.1;

/// `‖q(θ)‖₂` sampled on an angular grid, finest in frequency space.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialTrace {
    /// Grid angles, ascending, in `(0, π)`.
    pub thetas: Vec<f64>,
    /// `‖q(θ)‖₂` per grid point.
    pub values: Vec<f64>,
    /// Spatial frequency of each grid point (uniformly spaced).
    pub frequencies: Vec<f64>,
    /// `d/λ` used to map between θ and frequency.
    pub spacing_ratio: f64,
}

impl PolynomialTrace {
    pub fn new(
        thetas: Vec<f64>,
        values: Vec<f64>,
        frequencies: Vec<f64>,
        spacing_ratio: f64,
    ) -> Result<Self> {
        if thetas.len() != values.len() || thetas.len() != frequencies.len() {
            return Err(Error::Dimension("trace arrays must have equal length".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain("trace values must be finite and nonnegative".into()));
        }
        if thetas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("trace angles must be strictly ascending".into()));
        }
        Ok(Self {
            thetas,
            values,
            frequencies,
            spacing_ratio,
        })
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Two-column `theta,value` CSV for external plotting.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "theta,value")?;
        for (t, v) in self.thetas.iter().zip(&self.values) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }
}

/// Evaluate `‖(lifted dual)ᴴ·a(θ)‖₂` on `grid_size` points uniform in
/// frequency over the array's admissible range.
pub fn eval_polynomial(
    cert: &DualCertificate,
    grid_size: usize,
    array: &ArrayConfig,
) -> Result<PolynomialTrace> {
    if grid_size < 2 {
        return Err(Error::Domain(format!("grid size must be ≥ 2, got {grid_size}")));
    }
    if cert.lifted_dual.nrows() != array.n_antennas() {
        return Err(Error::Dimension(format!(
            "certificate has {} rows, array has {} antennas",
            cert.lifted_dual.nrows(),
            array.n_antennas()
        )));
    }
    let ratio = array.spacing_ratio();
    let step = 2.0 * ratio / grid_size as f64;
    // midpoint grid: endpoints θ = 0, π are excluded by construction
    let mut thetas = Vec::with_capacity(grid_size);
    let mut values = Vec::with_capacity(grid_size);
    let mut frequencies = Vec::with_capacity(grid_size);
    for j in (0..grid_size).rev() {
        let f = -ratio + (j as f64 + 0.5) * step;
        let theta = (f / ratio).clamp(-1.0, 1.0).acos();
        let a = steering_vector(theta, array)?;
        let q: DVector<Complex64> = cert.lifted_dual.adjoint() * a;
        thetas.push(theta);
        values.push(q.norm());
        frequencies.push(f);
    }
    PolynomialTrace::new(thetas, values, frequencies, ratio)
}

/// Peaks of a trace: grid-local maxima (plateaus resolve to their midpoint)
/// at or above `relative_threshold` times the global maximum, refined by a
/// three-point parabola in frequency space. Returns ascending angles.
pub fn find_peaks(trace: &PolynomialTrace, relative_threshold: f64) -> Result<Vec<f64>> {
    if !(relative_threshold > 0.0 && relative_threshold <= 1.0) {
        return Err(Error::Domain(format!(
            "relative threshold must lie in (0, 1], got {relative_threshold}"
        )));
    }
    let n = trace.len();
    let v = &trace.values;
    let global_max = v.iter().cloned().fold(0.0_f64, f64::max);
    if global_max <= 0.0 {
        return Ok(Vec::new());
    }
    let cutoff = relative_threshold * global_max;

    let mut peaks = Vec::new();
    let mut i = 0;
    while i < n {
        // plateau [i, j)
        let mut j = i + 1;
        while j < n && v[j] == v[i] {
            j += 1;
        }
        let left_lower = i > 0 && v[i - 1] < v[i];
        let right_lower = j < n && v[j] < v[i];
        if left_lower && right_lower && v[i] >= cutoff {
            let mid = (i + j - 1) / 2;
            let theta = if j - i == 1 {
                refine_peak(trace, mid)
            } else {
                trace.thetas[mid]
            };
            peaks.push(theta);
        }
        i = j;
    }
    peaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(peaks)
}

/// Three-point quadratic refinement around grid index `i` in frequency
/// space; falls back to the grid point when the parabola degenerates.
fn refine_peak(trace: &PolynomialTrace, i: usize) -> f64 {
    if i == 0 || i + 1 >= trace.len() {
        return trace.thetas[i];
    }
    let (vm, v0, vp) = (trace.values[i - 1], trace.values[i], trace.values[i + 1]);
    let denom = vm - 2.0 * v0 + vp;
    if denom.abs() <= f64::EPSILON * (vm.abs() + v0.abs() + vp.abs()) {
        return trace.thetas[i];
    }
    let h = trace.frequencies[i + 1] - trace.frequencies[i];
    let f_star = trace.frequencies[i] + 0.5 * h * (vm - vp) / denom;
    let cos = (f_star / trace.spacing_ratio).clamp(-1.0, 1.0);
    let theta = cos.acos();
    if theta > 0.0 && theta < std::f64::consts::PI {
        theta
    } else {
        trace.thetas[i]
    }
}

/// Angle grouping produced by the clustering stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    /// The angles that were clustered, as given.
    pub estimated_angles: Vec<f64>,
    /// Angle groups, one per estimated user, ordered by centroid.
    pub clusters: Vec<Vec<f64>>,
    /// Centroid of each cluster.
    pub centroids: Vec<f64>,
    /// Estimated number of active users.
    pub k_hat: usize,
    /// Per-cluster path counts.
    pub l_hat: Vec<usize>,
    /// Within-cluster sum of squares per candidate cluster count
    /// (`wcss_curve[k−1]` belongs to `k` clusters).
    pub wcss_curve: Vec<f64>,
}

impl ClusterReport {
    fn empty() -> Self {
        Self {
            estimated_angles: Vec::new(),
            clusters: Vec::new(),
            centroids: Vec::new(),
            k_hat: 0,
            l_hat: Vec::new(),
            wcss_curve: Vec::new(),
        }
    }
}

struct Clustering {
    wcss: f64,
    /// cluster index per point
    assignment: Vec<usize>,
    centroids: Vec<f64>,
}

/// Best-of-restarts 1-D k-means with k-means++ initialization.
fn kmeans_best(points: &[f64], k: usize) -> Clustering {
    let mut best: Option<Clustering> = None;
    for restart in 0..KMEANS_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(KMEANS_SEED ^ (k as u64));
        rng.set_stream(restart as u64);
        let candidate = kmeans_once(points, k, &mut rng);
        if best.as_ref().map_or(true, |b| candidate.wcss < b.wcss) {
            best = Some(candidate);
        }
    }
    best.expect("at least one restart runs")
}

fn kmeans_once(points: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Clustering {
    let n = points.len();
    debug_assert!(k >= 1 && k <= n);

    // k-means++ seeding
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)]);
    while centroids.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|&p| {
                centroids
                    .iter()
                    .map(|&c| (p - c) * (p - c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // all mass on existing centroids; any point works
            points[rng.random_range(0..n)]
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points[n - 1];
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = points[i];
                    break;
                }
            }
            chosen
        };
        centroids.push(next);
    }

    let mut assignment = vec![0usize; n];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (i, &p) in points.iter().enumerate() {
            let mut best_c = 0;
            let mut best_d = f64::INFINITY;
            for (c, &centroid) in centroids.iter().enumerate() {
                let d = (p - centroid) * (p - centroid);
                if d < best_d {
                    best_d = d;
                    best_c = c;
                }
            }
            if assignment[i] != best_c {
                assignment[i] = best_c;
                changed = true;
            }
        }

        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (i, &p) in points.iter().enumerate() {
            sums[assignment[i]] += p;
            counts[assignment[i]] += 1;
        }
        // repair empty clusters by stealing the worst-fitting point from a
        // cluster that can spare one; with all-coincident points nothing can
        // be spared and the stale centroid is kept
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let donor = points
                .iter()
                .enumerate()
                .filter(|(i, _)| counts[assignment[*i]] >= 2)
                .map(|(i, &p)| (i, (p - centroids[assignment[i]]).abs()))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            if let Some((worst, _)) = donor {
                let old = assignment[worst];
                sums[old] -= points[worst];
                counts[old] -= 1;
                assignment[worst] = c;
                sums[c] = points[worst];
                counts[c] = 1;
                changed = true;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c] / counts[c] as f64;
            }
        }
        if !changed {
            break;
        }
    }

    let wcss = points
        .iter()
        .enumerate()
        .map(|(i, &p)| (p - centroids[assignment[i]]) * (p - centroids[assignment[i]]))
        .sum();
    Clustering {
        wcss,
        assignment,
        centroids,
    }
}

fn report_from(points: &[f64], clustering: &Clustering, wcss_curve: Vec<f64>, k_hat: usize) -> ClusterReport {
    let k = clustering.centroids.len();
    let mut clusters: Vec<Vec<f64>> = vec![Vec::new(); k];
    for (i, &c) in clustering.assignment.iter().enumerate() {
        clusters[c].push(points[i]);
    }
    // order clusters by centroid; drop empties (cannot happen after the
    // empty-cluster repair, but keep the shape honest)
    let mut order: Vec<usize> = (0..k).filter(|&c| !clusters[c].is_empty()).collect();
    order.sort_by(|&a, &b| {
        clustering.centroids[a]
            .partial_cmp(&clustering.centroids[b])
            .unwrap()
    });
    let mut sorted_clusters = Vec::with_capacity(order.len());
    let mut centroids = Vec::with_capacity(order.len());
    for &c in &order {
        let mut group = clusters[c].clone();
        group.sort_by(|a, b| a.partial_cmp(b).unwrap());
        centroids.push(clustering.centroids[c]);
        sorted_clusters.push(group);
    }
    let l_hat: Vec<usize> = sorted_clusters.iter().map(Vec::len).collect();
    ClusterReport {
        estimated_angles: points.to_vec(),
        clusters: sorted_clusters,
        centroids,
        k_hat,
        l_hat,
        wcss_curve,
    }
}

/// k-means with a fixed cluster count.
pub fn cluster_kmeans(angles: &[f64], k: usize) -> Result<ClusterReport> {
    if angles.is_empty() {
        return Ok(ClusterReport::empty());
    }
    if k == 0 || k > angles.len() {
        return Err(Error::Domain(format!(
            "cluster count {k} must lie in 1..={}",
            angles.len()
        )));
    }
    let clustering = kmeans_best(angles, k);
    let wcss = clustering.wcss;
    Ok(report_from(angles, &clustering, vec![wcss], k))
}

/// Cluster-count selection at the sharpest knee of the WCSS curve.
///
/// Candidate counts run from 2 to `min(k_max, n)` and the knee is the
/// largest discrete second difference of the curve measured on a relative
/// (logarithmic) scale,
/// `d²(k) = log w(k−1) − 2·log w(k) + log w(k+1)`.
/// The raw-scale second difference is dominated by the first split whenever
/// clusters are tight, which contradicts the intended "sharp elbow"
/// behavior; on the log scale the knee compares successive *improvement
/// ratios* and lands at the true group count for well-separated groups.
/// Two guards keep the statistic meaningful:
///
/// - values are floored at `1e−9·w(1)` and the curve is extended flat past
///   `k = n`, so all-singleton tails stay finite;
/// - a count `k` is only eligible while `w(k−1) ≥ 1e−2·w(1)`, i.e. the step
///   into `k` must still explain a visible share of the variance; the
///   all-singletons count `k = n` (whose WCSS is exactly zero and therefore
///   looks infinitely sharp) needs `w(n−1) ≥ 0.1·w(1)`.
///
/// Degenerate inputs take the documented shortcuts: an empty list reports
/// `k̂ = 0`; a single angle, or a WCSS already at the absolute floor
/// (coincident angles), reports `k̂ = 1`. With two or more distinct angles
/// the elbow by construction reports `k̂ ≥ 2`.
pub fn cluster_elbow(angles: &[f64], k_max: usize) -> Result<ClusterReport> {
    if k_max == 0 {
        return Err(Error::Domain("k_max must be ≥ 1".into()));
    }
    let n = angles.len();
    if n == 0 {
        return Ok(ClusterReport::empty());
    }
    let k_range = k_max.min(n);
    let k_eval = (k_max + 1).min(n);
    let runs: Vec<Clustering> = (1..=k_eval).map(|k| kmeans_best(angles, k)).collect();
    let wcss_curve: Vec<f64> = runs.iter().map(|r| r.wcss).collect();

    let k_hat = if n == 1 || wcss_curve[0] <= WCSS_FLOOR || k_range == 1 {
        1
    } else {
        let w1 = wcss_curve[0];
        let log_w = |k: usize| -> f64 {
            let raw = if k <= k_eval { wcss_curve[k - 1] } else { wcss_curve[k_eval - 1] };
            raw.max(w1 * RELATIVE_WCSS_FLOOR).ln()
        };
        let mut best_k = 2;
        let mut best_d2 = f64::NEG_INFINITY;
        for k in 2..=k_range {
            let gate = if k == n { SINGLETON_GATE } else { KNEE_GATE };
            if wcss_curve[k - 2] < gate * w1 {
                continue; // nearly everything is already explained before k
            }
            let d2 = log_w(k - 1) - 2.0 * log_w(k) + log_w(k + 1);
            if d2 > best_d2 {
                best_d2 = d2;
                best_k = k;
            }
        }
        best_k
    };

    Ok(report_from(angles, &runs[k_hat - 1], wcss_curve, k_hat))
}

/// Outcome of matching clusters against registered (stationary) user angles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchOutcome {
    /// Estimated active set, ascending.
    pub active_set: Vec<usize>,
    /// Matched user id per cluster, in cluster order.
    pub assignments: Vec<Option<usize>>,
    /// Clusters that matched no registered angle; these count toward false
    /// alarms.
    pub unidentified: usize,
}

/// Assign each cluster to the registered user whose angle is nearest to the
/// cluster centroid and within `tolerance`, greedily by distance; one user
/// claims at most one cluster.
pub fn match_stationary(
    report: &ClusterReport,
    known_user_angles: &BTreeMap<usize, f64>,
    tolerance: f64,
) -> Result<MatchOutcome> {
    if !(tolerance > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new(); // (distance, cluster, user)
    for (c, &centroid) in report.centroids.iter().enumerate() {
        for (&user, &angle) in known_user_angles {
            let d = (centroid - angle).abs();
            if d <= tolerance {
                candidates.push((d, c, user));
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.2.cmp(&b.2))
            .then(a.1.cmp(&b.1))
    });

    let mut assignments = vec![None; report.centroids.len()];
    let mut used_users = std::collections::BTreeSet::new();
    let mut used_clusters = vec![false; report.centroids.len()];
    for (_, c, user) in candidates {
        if used_clusters[c] || used_users.contains(&user) {
            continue;
        }
        assignments[c] = Some(user);
        used_clusters[c] = true;
        used_users.insert(user);
    }
    let unidentified = assignments.iter().filter(|a| a.is_none()).count();
    Ok(MatchOutcome {
        active_set: used_users.into_iter().collect(),
        assignments,
        unidentified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn unit_atom_certificate(theta0: f64, n: usize, t: usize) -> (DualCertificate, ArrayConfig) {
        let array = ArrayConfig::full(n);
        let a0 = steering_vector(theta0, &array).unwrap();
        let mut u = DVector::<Complex64>::zeros(t);
        u[0] = Complex64::new(1.0, 0.0);
        let lifted = a0 * u.adjoint();
        (
            DualCertificate {
                lifted_dual: lifted,
                c1: 1.0,
                converged: true,
                iterations_used: 0,
            },
            array,
        )
    }

    #[test]
    fn zero_certificate_gives_zero_trace_and_no_peaks() {
        let array = ArrayConfig::full(8);
        let cert = DualCertificate {
            lifted_dual: DMatrix::zeros(8, 2),
            c1: 1.0,
            converged: true,
            iterations_used: 0,
        };
        let trace = eval_polynomial(&cert, 64, &array).unwrap();
        assert!(trace.values.iter().all(|&v| v == 0.0));
        assert!(find_peaks(&trace, 0.9).unwrap().is_empty());
    }

    #[test]
    fn unit_atom_trace_peaks_at_one() {
        let theta0 = 1.1;
        let (cert, array) = unit_atom_certificate(theta0, 16, 2);
        let trace = eval_polynomial(&cert, 16 * 16, &array).unwrap();
        let max = trace.values.iter().cloned().fold(0.0_f64, f64::max);
        // ‖q‖ = |⟨a(θ), a(θ₀)⟩| ≤ 1 with equality at θ₀; on a 16N grid the
        // peak sample sits at most half a grid step off, where the
        // mainlobe has dropped to ≈ 0.9976
        assert!(max <= 1.0 + 1e-12);
        assert!(max >= 0.997);
        let peaks = find_peaks(&trace, 0.9).unwrap();
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0] - theta0).abs() <= 2e-3, "peak at {}", peaks[0]);
    }

    #[test]
    fn eval_rejects_tiny_grid_and_wrong_dims() {
        let (cert, array) = unit_atom_certificate(1.0, 8, 1);
        assert!(eval_polynomial(&cert, 1, &array).is_err());
        let wrong = ArrayConfig::full(9);
        assert!(eval_polynomial(&cert, 64, &wrong).is_err());
    }

    fn dirichlet(n: usize, df: f64) -> f64 {
        // |sin(Nπx)/(N sin(πx))| with the removable singularity filled in
        let x = df;
        let denom = (std::f64::consts::PI * x).sin();
        if denom.abs() < 1e-12 {
            1.0
        } else {
            ((n as f64 * std::f64::consts::PI * x).sin() / (n as f64 * denom)).abs()
        }
    }

    #[test]
    fn synthetic_bumps_refine_to_known_frequencies() {
        // trace = max of two Dirichlet bumps at known frequencies
        let n = 32;
        let grid = 16 * n;
        let ratio = 0.5;
        let (f1, f2) = (-0.123, 0.2042);
        let step = 2.0 * ratio / grid as f64;
        let mut thetas = Vec::new();
        let mut values = Vec::new();
        let mut freqs = Vec::new();
        for j in (0..grid).rev() {
            let f = -ratio + (j as f64 + 0.5) * step;
            thetas.push((f / ratio).acos());
            // wrap-aware frequency distance, period 1
            let d1 = (f - f1).rem_euclid(1.0).min(1.0 - (f - f1).rem_euclid(1.0));
            let d2 = (f - f2).rem_euclid(1.0).min(1.0 - (f - f2).rem_euclid(1.0));
            values.push(dirichlet(n, d1).max(dirichlet(n, d2)));
            freqs.push(f);
        }
        let trace = PolynomialTrace::new(thetas, values, freqs, ratio).unwrap();
        let peaks = find_peaks(&trace, 0.9).unwrap();
        assert_eq!(peaks.len(), 2);
        let mut peak_freqs: Vec<f64> = peaks.iter().map(|&t| ratio * t.cos()).collect();
        peak_freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((peak_freqs[0] - f1).abs() <= 1e-4, "got {}", peak_freqs[0]);
        assert!((peak_freqs[1] - f2).abs() <= 1e-4, "got {}", peak_freqs[1]);
    }

    #[test]
    fn two_separated_peaks_survive_a_tight_threshold() {
        let thetas: Vec<f64> = (1..=99).map(|i| i as f64 * 0.03).collect();
        let mut values = vec![0.0; 99];
        values[20] = 1.0;
        values[70] = 0.97;
        let freqs: Vec<f64> = thetas.iter().map(|&t| 0.5 * t.cos()).collect();
        // frequencies must be uniformly spaced only for refinement quality,
        // not for correctness of peak identification
        let trace = PolynomialTrace::new(thetas.clone(), values, freqs, 0.5).unwrap();
        let peaks = find_peaks(&trace, 0.9).unwrap();
        assert_eq!(peaks.len(), 2);
    }

    #[test]
    fn plateau_resolves_to_midpoint() {
        let thetas: Vec<f64> = (1..=9).map(|i| i as f64 * 0.1).collect();
        let values = vec![0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let freqs: Vec<f64> = thetas.iter().map(|&t| 0.5 * t.cos()).collect();
        let trace = PolynomialTrace::new(thetas.clone(), values, freqs, 0.5).unwrap();
        let peaks = find_peaks(&trace, 0.5).unwrap();
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0], thetas[3]);
    }

    #[test]
    fn peak_finding_is_scale_invariant() {
        let (cert, array) = unit_atom_certificate(0.9, 12, 2);
        let trace = eval_polynomial(&cert, 128, &array).unwrap();
        let peaks = find_peaks(&trace, 0.9).unwrap();

        // ×4 is exact in floating point: identical output bits
        let scaled4 = DualCertificate {
            lifted_dual: &cert.lifted_dual * Complex64::from(4.0),
            ..cert.clone()
        };
        let trace4 = eval_polynomial(&scaled4, 128, &array).unwrap();
        assert_eq!(find_peaks(&trace4, 0.9).unwrap(), peaks);

        let scaled = DualCertificate {
            lifted_dual: &cert.lifted_dual * Complex64::from(3.7),
            ..cert.clone()
        };
        let traces = eval_polynomial(&scaled, 128, &array).unwrap();
        let peaks_s = find_peaks(&traces, 0.9).unwrap();
        assert_eq!(peaks_s.len(), peaks.len());
        for (a, b) in peaks.iter().zip(&peaks_s) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn single_angle_clusters_trivially() {
        let report = cluster_elbow(&[0.5], 8).unwrap();
        assert_eq!(report.k_hat, 1);
        assert_eq!(report.l_hat, vec![1]);
        assert_eq!(report.clusters, vec![vec![0.5]]);
    }

    #[test]
    fn empty_input_reports_zero_clusters() {
        let report = cluster_elbow(&[], 8).unwrap();
        assert_eq!(report.k_hat, 0);
        assert!(report.clusters.is_empty());
    }

    #[test]
    fn three_tight_triplets_produce_three_clusters() {
        let mut angles = Vec::new();
        for &center in &[0.6, 1.5, 2.4] {
            for &off in &[-0.01, 0.0, 0.01] {
                angles.push(center + off);
            }
        }
        let report = cluster_elbow(&angles, 8).unwrap();
        assert_eq!(report.k_hat, 3, "wcss curve: {:?}", report.wcss_curve);
        assert_eq!(report.l_hat, vec![3, 3, 3]);
        // knee: the relative second difference at k = 3 dominates
        let w = &report.wcss_curve;
        let d2_3 = w[1].ln() - 2.0 * w[2].ln() + w[3].ln();
        let d2_2 = w[0].ln() - 2.0 * w[1].ln() + w[2].ln();
        assert!(d2_3 > d2_2);
        for (centroid, expect) in report.centroids.iter().zip(&[0.6, 1.5, 2.4]) {
            assert!((centroid - expect).abs() <= 1e-9);
        }
    }

    #[test]
    fn fixed_k_bypasses_the_elbow() {
        let angles = [0.4, 0.42, 1.9, 1.95];
        let report = cluster_kmeans(&angles, 2).unwrap();
        assert_eq!(report.k_hat, 2);
        assert_eq!(report.l_hat, vec![2, 2]);
        assert_eq!(report.wcss_curve.len(), 1);
    }

    #[test]
    fn kmeans_with_k_equal_count_gives_singletons() {
        let angles = [0.3, 0.9, 1.7, 2.2];
        let report = cluster_kmeans(&angles, 4).unwrap();
        assert_eq!(report.l_hat, vec![1, 1, 1, 1]);
        assert!(report.wcss_curve[0] <= 1e-15);
        assert!(cluster_kmeans(&angles, 5).is_err());
    }

    #[test]
    fn clustering_is_deterministic() {
        let angles = [0.31, 0.29, 0.33, 1.2, 1.22, 2.0, 2.05, 2.02];
        let a = cluster_elbow(&angles, 6).unwrap();
        let b = cluster_elbow(&angles, 6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coincident_angles_hit_the_wcss_floor() {
        let report = cluster_elbow(&[1.0, 1.0, 1.0, 1.0], 4).unwrap();
        assert_eq!(report.k_hat, 1);
    }

    #[test]
    fn stationary_match_basic() {
        let report = cluster_kmeans(&[1.0], 1).unwrap();
        let mut registry = BTreeMap::new();
        registry.insert(7usize, 1.005);
        let outcome = match_stationary(&report, &registry, 0.02).unwrap();
        assert_eq!(outcome.active_set, vec![7]);
        assert_eq!(outcome.unidentified, 0);
    }

    #[test]
    fn stationary_match_out_of_tolerance_is_unidentified() {
        let report = cluster_kmeans(&[1.0], 1).unwrap();
        let mut registry = BTreeMap::new();
        registry.insert(3usize, 1.4);
        let outcome = match_stationary(&report, &registry, 0.02).unwrap();
        assert!(outcome.active_set.is_empty());
        assert_eq!(outcome.unidentified, 1);
    }

    #[test]
    fn stationary_match_greedy_nearest_wins() {
        // two clusters both within tolerance of user 5; the nearer claims it
        let report = cluster_kmeans(&[1.00, 1.08], 2).unwrap();
        let mut registry = BTreeMap::new();
        registry.insert(5usize, 1.06);
        let outcome = match_stationary(&report, &registry, 0.2).unwrap();
        assert_eq!(outcome.active_set, vec![5]);
        assert_eq!(outcome.assignments, vec![None, Some(5)]);
        assert_eq!(outcome.unidentified, 1);
        assert!(match_stationary(&report, &registry, 0.0).is_err());
    }
}
