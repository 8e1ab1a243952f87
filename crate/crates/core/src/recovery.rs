//! Joint data recovery and channel estimation by alternating minimization.
//!
//! Given the clustered angle estimates, the observed matrix factors as
//! `Y ≈ Σ_k (𝒫_Ω A_k α^k) φ_kᴴ` with `A_k` the steering matrix of cluster
//! `k`. Starting from a random data guess, two least-squares half-steps
//! alternate:
//!
//! - gains: `α̂^k = (𝒫_Ω A_k)† Y φ_k†`, with `φ_k†` the k-th column of the
//!   pseudo-inverse of the stacked data matrix;
//! - data: `Φ̂ = (B† Y)₊` with `B = [𝒫_Ω A_1 α̂¹, …]`, where `(·)₊` takes the
//!   real part and clamps negatives to zero — the transmitted data is
//!   modeled real and nonnegative, which is what removes the sign/phase
//!   ambiguity of the bilinear factorization.
//!
//! A positive per-user scale still survives; the result fixes it by
//! normalizing each recovered data row to unit norm and absorbing the scale
//! into the gains. Angles stay frozen throughout: no re-estimation happens
//! inside the loop.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{steering_vector, ArrayConfig};
use crate::error::{Error, Result};
use crate::linalg::all_finite;

/// ChaCha substream for the data initialization.
const STREAM_AM_INIT: u64 = 3;

/// Relative singular-value floor below which a least-squares system is
/// reported as rank deficient.
const RANK_RTOL: f64 = 1e-10;

/// A data row whose norm falls below this fraction of the largest row is
/// considered dead (the clamp annihilated it).
const DEAD_ROW_RTOL: f64 = 1e-8;

/// Bounded number of re-initializations when an init lands in the clamp's
/// dead zone. A random complex start gives each user's first gain estimate
/// an arbitrary phase; when that phase points away from the nonnegative
/// cone the clamp zeroes the whole row and the factorization loses rank.
/// Re-drawing the start is the standard remedy and keeps the procedure
/// deterministic per seed.
const INIT_RESTARTS: usize = 20;

/// How the data matrix is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitStrategy {
    /// i.i.d. circular complex Gaussian entries.
    #[default]
    ComplexGaussian,
    /// i.i.d. uniform `[0, 1)` entries, already inside the feasible cone.
    NonnegativeUniform,
}

/// Knobs for [`recover`].
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryOptions {
    /// Alternating rounds (one gains step + one data step each).
    pub am_iterations: usize,
    pub rng_seed: u64,
    pub init: InitStrategy,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            am_iterations: 30,
            rng_seed: 0,
            init: InitStrategy::ComplexGaussian,
        }
    }
}

/// Output of the alternating minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    /// Complex gain vector per cluster (length `L̂_k`).
    pub alpha_hat: Vec<DVector<Complex64>>,
    /// Recovered nonnegative data, `K̂ₐ×T`, each row unit-norm.
    pub phi_hat: DMatrix<f64>,
    /// Channel vector per cluster: `ĥ_k = Σ_l α̂_l·a(θ̂_l)`.
    pub h_hat: Vec<DVector<Complex64>>,
    /// User id per cluster once identification has run; `None` until then
    /// (and for clusters nothing matched).
    pub identified_ids: Vec<Option<usize>>,
    /// Rounds actually executed.
    pub am_iterations: usize,
    /// Data-fit residual after each round.
    pub residual_history: Vec<f64>,
}

impl RecoveryResult {
    /// Attach identification results (from [`identify_mobile`] or the
    /// stationary matcher).
    pub fn with_identity(mut self, ids: Vec<Option<usize>>) -> Self {
        self.identified_ids = ids;
        self
    }
}

/// Random data initialization: `K̂ₐ×T` i.i.d. entries, deterministic per
/// seed.
pub fn init_phi(k_hat: usize, horizon: usize, rng_seed: u64) -> DMatrix<Complex64> {
    init_phi_with(k_hat, horizon, rng_seed, InitStrategy::ComplexGaussian)
}

/// As [`init_phi`] with an explicit strategy.
pub fn init_phi_with(
    k_hat: usize,
    horizon: usize,
    rng_seed: u64,
    init: InitStrategy,
) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(STREAM_AM_INIT);
    let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
    DMatrix::from_fn(k_hat, horizon, |_, _| match init {
        InitStrategy::ComplexGaussian => {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re * inv_sqrt2, im * inv_sqrt2)
        }
        InitStrategy::NonnegativeUniform => {
            use rand::Rng;
            Complex64::new(rng.random::<f64>(), 0.0)
        }
    })
}

/// Observed steering matrix `𝒫_Ω A_k` of one cluster.
fn observed_steering_matrix(angles: &[f64], array: &ArrayConfig) -> Result<DMatrix<Complex64>> {
    let cols: Result<Vec<DVector<Complex64>>> = angles
        .iter()
        .map(|&theta| steering_vector(theta, array))
        .collect();
    let full = DMatrix::from_columns(&cols?);
    array.restrict_rows(&full)
}

/// Full steering matrix `A_k` of one cluster.
fn full_steering_matrix(angles: &[f64], array: &ArrayConfig) -> Result<DMatrix<Complex64>> {
    let cols: Result<Vec<DVector<Complex64>>> = angles
        .iter()
        .map(|&theta| steering_vector(theta, array))
        .collect();
    Ok(DMatrix::from_columns(&cols?))
}

/// Pseudo-inverse with an explicit full-column/row-rank check.
fn pinv_checked(
    m: &DMatrix<Complex64>,
    need_rank: usize,
    cluster: Option<usize>,
    what: &str,
) -> Result<DMatrix<Complex64>> {
    let svd = m.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > max_sv * RANK_RTOL)
        .count();
    if rank < need_rank || max_sv == 0.0 {
        return Err(Error::Singular {
            cluster,
            reason: format!("{what} has rank {rank}, need {need_rank}"),
        });
    }
    svd.pseudo_inverse(max_sv * RANK_RTOL).map_err(|e| Error::Singular {
        cluster,
        reason: format!("{what}: {e}"),
    })
}

/// Gains half-step: per-cluster least squares through the stated
/// pseudo-inverse composition.
pub fn update_alpha(
    y: &DMatrix<Complex64>,
    clusters: &[Vec<f64>],
    phi_current: &DMatrix<Complex64>,
    array: &ArrayConfig,
) -> Result<Vec<DVector<Complex64>>> {
    let k_hat = clusters.len();
    if phi_current.nrows() != k_hat || phi_current.ncols() != y.ncols() {
        return Err(Error::Dimension(format!(
            "data matrix is {}×{}, expected {k_hat}×{}",
            phi_current.nrows(),
            phi_current.ncols(),
            y.ncols()
        )));
    }
    if y.nrows() != array.n_observed() {
        return Err(Error::Dimension("observation rows must match |Ω|".into()));
    }
    // Φ† ∈ ℂ^{T×K̂ₐ}; needs full row rank (K̂ₐ ≤ T)
    let phi_pinv = pinv_checked(phi_current, k_hat, None, "stacked data matrix")?;

    let mut gains = Vec::with_capacity(k_hat);
    for (k, angles) in clusters.iter().enumerate() {
        let a_obs = observed_steering_matrix(angles, array)?;
        let a_pinv = pinv_checked(&a_obs, angles.len(), Some(k), "observed steering matrix")?;
        let phi_col: DVector<Complex64> = phi_pinv.column(k).into();
        gains.push(&a_pinv * y * phi_col);
    }
    Ok(gains)
}

/// `(·)₊`: real part, negatives clamped to zero.
pub fn nonnegative_clamp(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    m.map(|z| z.re.max(0.0))
}

/// Data half-step: stacked least squares against the per-cluster channel
/// columns, then the nonnegativity clamp.
pub fn update_phi(
    y: &DMatrix<Complex64>,
    clusters: &[Vec<f64>],
    alpha_current: &[DVector<Complex64>],
    array: &ArrayConfig,
) -> Result<DMatrix<f64>> {
    let k_hat = clusters.len();
    if alpha_current.len() != k_hat {
        return Err(Error::Dimension("one gain vector per cluster expected".into()));
    }
    if y.nrows() != array.n_observed() {
        return Err(Error::Dimension("observation rows must match |Ω|".into()));
    }
    let b = channel_columns(clusters, alpha_current, array)?;
    let b_pinv = pinv_checked(&b, k_hat, None, "channel column matrix")?;
    Ok(nonnegative_clamp(&(b_pinv * y)))
}

/// `B = [𝒫_Ω A_1 α¹, …, 𝒫_Ω A_K̂ α^K̂]`.
fn channel_columns(
    clusters: &[Vec<f64>],
    alpha: &[DVector<Complex64>],
    array: &ArrayConfig,
) -> Result<DMatrix<Complex64>> {
    let cols: Result<Vec<DVector<Complex64>>> = clusters
        .iter()
        .zip(alpha)
        .map(|(angles, a)| {
            if angles.len() != a.len() {
                return Err(Error::Dimension(format!(
                    "{} angles vs {} gains in a cluster",
                    angles.len(),
                    a.len()
                )));
            }
            Ok(observed_steering_matrix(angles, array)? * a)
        })
        .collect();
    Ok(DMatrix::from_columns(&cols?))
}

/// Data-fit residual `‖Y − B·conj(Φ)‖_F` of a candidate factorization.
pub fn reconstruction_residual(
    y: &DMatrix<Complex64>,
    clusters: &[Vec<f64>],
    alpha: &[DVector<Complex64>],
    phi: &DMatrix<Complex64>,
    array: &ArrayConfig,
) -> Result<f64> {
    let b = channel_columns(clusters, alpha, array)?;
    Ok((y - b * phi.conjugate()).norm())
}

/// Run the alternating minimization and resolve the per-user scale.
///
/// When an initialization degenerates (a clamped data row dies, taking the
/// rank of the factorization with it), the start is re-drawn from a derived
/// seed, up to [`INIT_RESTARTS`] times. Structural rank failures — a cluster
/// whose steering matrix is singular — are not retried.
pub fn recover(
    y: &DMatrix<Complex64>,
    clusters: &[Vec<f64>],
    array: &ArrayConfig,
    options: &RecoveryOptions,
) -> Result<RecoveryResult> {
    let k_hat = clusters.len();
    let t = y.ncols();
    if k_hat == 0 {
        return Ok(RecoveryResult {
            alpha_hat: Vec::new(),
            phi_hat: DMatrix::zeros(0, t),
            h_hat: Vec::new(),
            identified_ids: Vec::new(),
            am_iterations: 0,
            residual_history: Vec::new(),
        });
    }
    if options.am_iterations == 0 {
        return Err(Error::Domain("need at least one alternating round".into()));
    }

    let mut last_err = None;
    for attempt in 0..INIT_RESTARTS {
        let seed = options
            .rng_seed
            .wrapping_add((attempt as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        match am_rounds(y, clusters, array, options, seed) {
            Ok((alpha, phi, residual_history)) => {
                return finalize(y.ncols(), clusters, array, options, alpha, phi, residual_history)
            }
            Err(e @ Error::Singular { cluster: Some(_), .. }) => return Err(e),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or(Error::Singular {
        cluster: None,
        reason: "no alternating-minimization attempt survived".into(),
    }))
}

type Rounds = (Vec<DVector<Complex64>>, DMatrix<Complex64>, Vec<f64>);

fn am_rounds(
    y: &DMatrix<Complex64>,
    clusters: &[Vec<f64>],
    array: &ArrayConfig,
    options: &RecoveryOptions,
    seed: u64,
) -> Result<Rounds> {
    let t = y.ncols();
    let k_hat = clusters.len();
    let mut phi = init_phi_with(k_hat, t, seed, options.init);
    let mut alpha: Vec<DVector<Complex64>> = Vec::new();
    let mut residual_history = Vec::with_capacity(options.am_iterations);
    for round in 0..options.am_iterations {
        alpha = update_alpha(y, clusters, &phi, array)?;
        let phi_real = update_phi(y, clusters, &alpha, array)?;
        let max_row = (0..k_hat)
            .map(|k| phi_real.row(k).norm())
            .fold(0.0_f64, f64::max);
        if (0..k_hat).any(|k| phi_real.row(k).norm() <= DEAD_ROW_RTOL * max_row) {
            return Err(Error::Singular {
                cluster: None,
                reason: format!("data row died at round {round}"),
            });
        }
        phi = phi_real.map(|x| Complex64::new(x, 0.0));
        if !all_finite(&phi) {
            return Err(Error::Numerical {
                iteration: round,
                reason: "non-finite data iterate".into(),
            });
        }
        residual_history.push(reconstruction_residual(y, clusters, &alpha, &phi, array)?);
    }
    Ok((alpha, phi, residual_history))
}

fn finalize(
    t: usize,
    clusters: &[Vec<f64>],
    array: &ArrayConfig,
    options: &RecoveryOptions,
    mut alpha: Vec<DVector<Complex64>>,
    phi: DMatrix<Complex64>,
    residual_history: Vec<f64>,
) -> Result<RecoveryResult> {
    let k_hat = clusters.len();
    // resolve the positive per-user scale: unit-norm data rows
    let mut phi_hat = nonnegative_clamp(&phi);
    for k in 0..k_hat {
        let norm = phi_hat.row(k).norm();
        if norm > 0.0 {
            for j in 0..t {
                phi_hat[(k, j)] /= norm;
            }
            alpha[k] *= Complex64::from(norm);
        }
    }

    let h_hat: Result<Vec<DVector<Complex64>>> = clusters
        .iter()
        .zip(&alpha)
        .map(|(angles, a)| Ok(full_steering_matrix(angles, array)? * a))
        .collect();

    Ok(RecoveryResult {
        alpha_hat: alpha,
        phi_hat,
        h_hat: h_hat?,
        identified_ids: vec![None; k_hat],
        am_iterations: options.am_iterations,
        residual_history,
    })
}

/// Match recovered data rows against a registry of known per-user vectors
/// by normalized inner product, greedily best-first; rows below
/// `min_correlation` stay unidentified.
pub fn identify_mobile(
    phi_hat: &DMatrix<f64>,
    preamble_registry: &BTreeMap<usize, DVector<f64>>,
    min_correlation: f64,
) -> Result<Vec<Option<usize>>> {
    if !(0.0..=1.0).contains(&min_correlation) {
        return Err(Error::Domain(format!(
            "min_correlation must lie in [0, 1], got {min_correlation}"
        )));
    }
    for (user, v) in preamble_registry {
        if v.norm() == 0.0 {
            return Err(Error::Domain(format!("registry vector for user {user} is zero")));
        }
        if v.len() != phi_hat.ncols() {
            return Err(Error::Dimension(format!(
                "registry vector for user {user} has length {}, expected {}",
                v.len(),
                phi_hat.ncols()
            )));
        }
    }

    let mut candidates: Vec<(f64, usize, usize)> = Vec::new(); // (correlation, row, user)
    for r in 0..phi_hat.nrows() {
        let row: DVector<f64> = phi_hat.row(r).transpose();
        let rn = row.norm();
        if rn == 0.0 {
            continue;
        }
        for (&user, reg) in preamble_registry {
            let corr = (row.dot(reg) / (rn * reg.norm())).abs();
            if corr >= min_correlation {
                candidates.push((corr, r, user));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(a.2.cmp(&b.2))
            .then(a.1.cmp(&b.1))
    });

    let mut ids = vec![None; phi_hat.nrows()];
    let mut used_users = std::collections::BTreeSet::new();
    for (_, row, user) in candidates {
        if ids[row].is_some() || used_users.contains(&user) {
            continue;
        }
        ids[row] = Some(user);
        used_users.insert(user);
    }
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{generate_scene, observe, SceneParams};
    use proptest::prelude::*;

    /// A noiseless observation with known clusters (the truth), returning
    /// `(y, clusters, true alphas, true phi rows, array)`.
    fn consistent_instance(
        n: usize,
        m: usize,
        t: usize,
        seed: u64,
    ) -> (
        DMatrix<Complex64>,
        Vec<Vec<f64>>,
        Vec<DVector<Complex64>>,
        DMatrix<f64>,
        ArrayConfig,
    ) {
        let scene = generate_scene(
            &SceneParams::new(20, 2, 2, t, n).with_fixed_paths(2),
            seed,
        )
        .unwrap();
        let array = ArrayConfig::first_m(n, m).unwrap();
        let obs = observe(&scene, &array, seed).unwrap();
        let clusters: Vec<Vec<f64>> = scene.active.iter().map(|u| u.path_angles.clone()).collect();
        let alphas: Vec<DVector<Complex64>> = scene
            .active
            .iter()
            .map(|u| DVector::from_vec(u.path_gains.clone()))
            .collect();
        let mut phi = DMatrix::zeros(scene.active.len(), t);
        for (k, u) in scene.active.iter().enumerate() {
            for j in 0..t {
                phi[(k, j)] = u.data[j];
            }
        }
        (obs.y, clusters, alphas, phi, array)
    }

    #[test]
    fn init_phi_is_deterministic_and_unit_power() {
        let a = init_phi(3, 5, 42);
        let b = init_phi(3, 5, 42);
        assert_eq!(a, b);
        assert_ne!(a, init_phi(3, 5, 43));
        assert_eq!(init_phi(0, 5, 1).nrows(), 0);

        let big = init_phi(100, 100, 7);
        let mean_power: f64 = big.iter().map(|z| z.norm_sqr()).sum::<f64>() / 10_000.0;
        assert!((0.95..=1.05).contains(&mean_power), "mean power {mean_power}");
    }

    #[test]
    fn alpha_step_recovers_truth_from_true_data() {
        let (y, clusters, alphas, phi, array) = consistent_instance(24, 24, 6, 1);
        let phi_c = phi.map(|x| Complex64::new(x, 0.0));
        let estimated = update_alpha(&y, &clusters, &phi_c, &array).unwrap();
        for (est, truth) in estimated.iter().zip(&alphas) {
            assert!((est - truth).norm() <= 1e-8, "gains off by {}", (est - truth).norm());
        }
    }

    #[test]
    fn alpha_step_zero_observation_gives_zero_gains() {
        let (_, clusters, _, phi, array) = consistent_instance(16, 16, 4, 2);
        let y0 = DMatrix::zeros(16, 4);
        let phi_c = phi.map(|x| Complex64::new(x, 0.0));
        let estimated = update_alpha(&y0, &clusters, &phi_c, &array).unwrap();
        for est in estimated {
            assert!(est.norm() <= 1e-14);
        }
    }

    #[test]
    fn alpha_step_reaches_zero_residual_on_consistent_instance() {
        let (y, clusters, _, phi, array) = consistent_instance(32, 32, 8, 3);
        let phi_c = phi.map(|x| Complex64::new(x, 0.0));
        let alpha = update_alpha(&y, &clusters, &phi_c, &array).unwrap();
        let resid = reconstruction_residual(&y, &clusters, &alpha, &phi_c, &array).unwrap();
        assert!(resid <= 1e-8, "residual {resid}");
    }

    #[test]
    fn phi_step_recovers_truth_from_true_gains() {
        let (y, clusters, alphas, phi, array) = consistent_instance(32, 32, 8, 4);
        let estimated = update_phi(&y, &clusters, &alphas, &array).unwrap();
        assert!((&estimated - &phi).norm() <= 1e-8);
    }

    #[test]
    fn clamp_zeroes_negative_real_parts() {
        let m = DMatrix::from_row_slice(
            1,
            3,
            &[
                Complex64::new(-1.0, 5.0),
                Complex64::new(2.0, -3.0),
                Complex64::new(-0.5, 0.0),
            ],
        );
        let clamped = nonnegative_clamp(&m);
        assert_eq!(clamped, DMatrix::from_row_slice(1, 3, &[0.0, 2.0, 0.0]));
    }

    proptest! {
        #[test]
        fn clamp_is_idempotent(entries in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 12)) {
            let m = DMatrix::from_fn(3, 4, |i, j| {
                let (re, im) = entries[i * 4 + j];
                Complex64::new(re, im)
            });
            let once = nonnegative_clamp(&m);
            let twice = nonnegative_clamp(&once.map(|x| Complex64::new(x, 0.0)));
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn rank_deficiency_names_the_cluster() {
        let (y, mut clusters, _, phi, array) = consistent_instance(16, 16, 4, 5);
        // duplicate an angle inside cluster 1: its steering matrix loses rank
        clusters[1][1] = clusters[1][0];
        let phi_c = phi.map(|x| Complex64::new(x, 0.0));
        match update_alpha(&y, &clusters, &phi_c, &array) {
            Err(Error::Singular { cluster: Some(1), .. }) => {}
            other => panic!("expected singular cluster 1, got {other:?}"),
        }
    }

    #[test]
    fn one_round_from_truth_is_a_fixed_point() {
        let (y, clusters, alphas, phi, array) = consistent_instance(32, 32, 8, 6);
        let phi_c = phi.map(|x| Complex64::new(x, 0.0));
        let alpha1 = update_alpha(&y, &clusters, &phi_c, &array).unwrap();
        let phi1 = update_phi(&y, &clusters, &alpha1, &array).unwrap();
        assert!((&phi1 - &phi).norm() <= 1e-8);
        for (a1, a0) in alpha1.iter().zip(&alphas) {
            assert!((a1 - a0).norm() <= 1e-8);
        }
    }

    #[test]
    fn recover_reaches_truth_up_to_scale() {
        let (y, clusters, _, phi, array) = consistent_instance(32, 32, 8, 7);
        let options = RecoveryOptions {
            am_iterations: 30,
            rng_seed: 7,
            ..Default::default()
        };
        let result = recover(&y, &clusters, &array, &options).unwrap();

        // residual trend: nonincreasing over rounds
        for w in result.residual_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "residual rose: {:?}", w);
        }

        // data rows are unit norm and match the (normalized) truth
        for k in 0..2 {
            let row: DVector<f64> = result.phi_hat.row(k).transpose();
            assert!((row.norm() - 1.0).abs() <= 1e-9);
            let truth: DVector<f64> = phi.row(k).transpose();
            let unit_truth = &truth / truth.norm();
            let err = (&row - &unit_truth).norm();
            assert!(err <= 1e-2, "row {k} off by {err}");
        }

        // the overall factorization fits the observation
        let phi_c = result.phi_hat.map(|x| Complex64::new(x, 0.0));
        let resid =
            reconstruction_residual(&y, &clusters, &result.alpha_hat, &phi_c, &array).unwrap();
        assert!(resid <= 1e-6 * y.norm().max(1.0), "final residual {resid}");
    }

    #[test]
    fn scale_resolution_leaves_rank_one_products_invariant() {
        let (y, clusters, _, _, array) = consistent_instance(32, 32, 8, 8);
        let options = RecoveryOptions {
            am_iterations: 20,
            rng_seed: 8,
            ..Default::default()
        };
        let result = recover(&y, &clusters, &array, &options).unwrap();
        // ĥ_k·φ̂_kᴴ must reproduce the same contribution the unnormalized
        // factors gave; verified through the final residual
        let phi_c = result.phi_hat.map(|x| Complex64::new(x, 0.0));
        let resid =
            reconstruction_residual(&y, &clusters, &result.alpha_hat, &phi_c, &array).unwrap();
        assert!(resid <= 1e-6 * y.norm().max(1.0));
        // and the channel assembles from the scaled gains by construction
        for (k, h) in result.h_hat.iter().enumerate() {
            let a_full = full_steering_matrix(&clusters[k], &array).unwrap();
            assert!((h - a_full * &result.alpha_hat[k]).norm() <= 1e-12);
        }
    }

    #[test]
    fn recover_empty_clusters_short_circuits() {
        let array = ArrayConfig::full(8);
        let y = DMatrix::zeros(8, 3);
        let result = recover(&y, &[], &array, &RecoveryOptions::default()).unwrap();
        assert_eq!(result.phi_hat.nrows(), 0);
        assert!(result.alpha_hat.is_empty());
        assert!(result.h_hat.is_empty());
    }

    #[test]
    fn identify_exact_and_orthogonal_rows() {
        let mut registry = BTreeMap::new();
        registry.insert(4usize, DVector::from_vec(vec![1.0, 0.0, 0.0]));
        registry.insert(9usize, DVector::from_vec(vec![0.0, 1.0, 0.0]));

        let phi = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let ids = identify_mobile(&phi, &registry, 0.9).unwrap();
        assert_eq!(ids[0], Some(4)); // exact match, correlation 1
        assert_eq!(ids[1], None); // orthogonal to everything registered
    }

    #[test]
    fn identify_tolerates_small_noise() {
        let reg_vec = DVector::from_vec(vec![0.8, 0.4, 0.9, 0.3]);
        let mut registry = BTreeMap::new();
        registry.insert(2usize, reg_vec.clone());
        let noisy = &reg_vec + DVector::from_vec(vec![0.04, -0.02, 0.03, 0.01]);
        let phi = DMatrix::from_fn(1, 4, |_, j| noisy[j]);
        let ids = identify_mobile(&phi, &registry, 0.9).unwrap();
        assert_eq!(ids[0], Some(2));
        let corr = noisy.dot(&reg_vec) / (noisy.norm() * reg_vec.norm());
        assert!(corr >= 0.99);
    }

    #[test]
    fn identify_greedy_best_first() {
        let mut registry = BTreeMap::new();
        registry.insert(1usize, DVector::from_vec(vec![1.0, 0.0]));
        // both rows correlate with user 1; the stronger row claims it
        let phi = DMatrix::from_row_slice(2, 2, &[0.95, 0.31225, 1.0, 0.0]);
        let ids = identify_mobile(&phi, &registry, 0.9).unwrap();
        assert_eq!(ids, vec![None, Some(1)]);
        assert!(identify_mobile(&phi, &registry, 1.5).is_err());
    }
}
