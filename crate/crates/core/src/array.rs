//! Physical model: uniform linear array, random multipath scenes, and noisy
//! partial observations.
//!
//! A scene holds the ground truth for one trial: which of the `K` users are
//! active, each active user's multipath angles and complex gains, and the
//! nonnegative data it transmits over `T` slots. Observing a scene produces
//! the `M×T` measurement matrix seen on the antenna subset `Ω`.
//!
//! Angles live in the open interval `(0, π)`; all separation logic works on
//! spatial frequencies `f(θ) = (d/λ)·cos θ` on a torus of circumference 1.
//! Generation is deterministic per seed, with independent ChaCha substreams
//! for the active-id draw, the scene geometry, and (in [`observe`]) the
//! noise, so that changing `K` alone leaves the geometry bit-identical.

pub mod io;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// ChaCha substream for drawing which users are active.
const STREAM_IDS: u64 = 0;
/// ChaCha substream for angles, gains, and data.
const STREAM_GEOMETRY: u64 = 1;
/// ChaCha substream for observation noise.
const STREAM_NOISE: u64 = 2;

/// Attempt budget for the angle placement sampler.
const MAX_PLACEMENT_ATTEMPTS: usize = 2000;

/// Array geometry plus the observed antenna subset.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    n_antennas: usize,
    /// Sorted, unique, zero-based antenna indices Ω.
    observed_set: Vec<usize>,
    observed_mask: Vec<bool>,
    spacing_ratio: f64,
}

impl ArrayConfig {
    /// Build a configuration, validating `1 ≤ |Ω| ≤ N`, index bounds,
    /// uniqueness, and a positive spacing ratio.
    pub fn new(n_antennas: usize, mut observed_set: Vec<usize>, spacing_ratio: f64) -> Result<Self> {
        if n_antennas == 0 {
            return Err(Error::Domain("array needs at least one antenna".into()));
        }
        if !(spacing_ratio > 0.0) {
            return Err(Error::Domain(format!(
                "spacing ratio must be positive, got {spacing_ratio}"
            )));
        }
        if observed_set.is_empty() || observed_set.len() > n_antennas {
            return Err(Error::Domain(format!(
                "need 1 ≤ |Ω| ≤ {n_antennas}, got {}",
                observed_set.len()
            )));
        }
        observed_set.sort_unstable();
        if observed_set.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("observed set has duplicate indices".into()));
        }
        if *observed_set.last().unwrap() >= n_antennas {
            return Err(Error::Domain(format!(
                "observed index {} out of range 0..{n_antennas}",
                observed_set.last().unwrap()
            )));
        }
        let mut observed_mask = vec![false; n_antennas];
        for &i in &observed_set {
            observed_mask[i] = true;
        }
        Ok(Self {
            n_antennas,
            observed_set,
            observed_mask,
            spacing_ratio,
        })
    }

    /// Half-wavelength array observing every antenna.
    pub fn full(n_antennas: usize) -> Self {
        Self::new(n_antennas, (0..n_antennas).collect(), 0.5).expect("full array is always valid")
    }

    /// Half-wavelength array observing the first `m` antennas.
    pub fn first_m(n_antennas: usize, m: usize) -> Result<Self> {
        Self::new(n_antennas, (0..m).collect(), 0.5)
    }

    /// Half-wavelength array observing a uniformly random `m`-subset.
    pub fn random_subset(n_antennas: usize, m: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        if m == 0 || m > n_antennas {
            return Err(Error::Domain(format!(
                "need 1 ≤ m ≤ {n_antennas}, got {m}"
            )));
        }
        let idx = rand::seq::index::sample(rng, n_antennas, m).into_vec();
        Self::new(n_antennas, idx, 0.5)
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn n_observed(&self) -> usize {
        self.observed_set.len()
    }

    pub fn observed_set(&self) -> &[usize] {
        &self.observed_set
    }

    pub fn spacing_ratio(&self) -> f64 {
        self.spacing_ratio
    }

    #[inline]
    pub fn is_observed(&self, antenna: usize) -> bool {
        self.observed_mask.get(antenna).copied().unwrap_or(false)
    }

    /// `𝒫_Ω`: keep only the observed rows (`N×T → M×T`).
    pub fn restrict_rows(&self, full: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        if full.nrows() != self.n_antennas {
            return Err(Error::Dimension(format!(
                "expected {} rows, got {}",
                self.n_antennas,
                full.nrows()
            )));
        }
        let t = full.ncols();
        let mut out = DMatrix::zeros(self.n_observed(), t);
        for (r, &i) in self.observed_set.iter().enumerate() {
            out.set_row(r, &full.row(i));
        }
        Ok(out)
    }

    /// `𝒫ᴬᵈʲ_Ω`: scatter observed rows back into an `N×T` matrix, zero
    /// elsewhere.
    pub fn lift_rows(&self, observed: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        if observed.nrows() != self.n_observed() {
            return Err(Error::Dimension(format!(
                "expected {} rows, got {}",
                self.n_observed(),
                observed.nrows()
            )));
        }
        let t = observed.ncols();
        let mut out = DMatrix::zeros(self.n_antennas, t);
        for (r, &i) in self.observed_set.iter().enumerate() {
            out.set_row(i, &observed.row(r));
        }
        Ok(out)
    }
}

/// Unit-norm array response `a(θ)`: entry `n` (zero-based) is
/// `exp(−j·2π·(d/λ)·n·cos θ)/√N`.
pub fn steering_vector(theta: f64, array: &ArrayConfig) -> Result<DVector<Complex64>> {
    check_angle(theta)?;
    let n = array.n_antennas();
    let scale = 1.0 / (n as f64).sqrt();
    let step = -2.0 * std::f64::consts::PI * array.spacing_ratio() * theta.cos();
    Ok(DVector::from_fn(n, |i, _| {
        Complex64::from_polar(scale, step * i as f64)
    }))
}

fn check_angle(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::Domain(format!(
            "angle {theta} outside the open interval (0, π)"
        )));
    }
    Ok(())
}

/// Spatial frequency of an angle: `f(θ) = (d/λ)·cos θ`.
pub fn spatial_frequency(theta: f64, spacing_ratio: f64) -> f64 {
    spacing_ratio * theta.cos()
}

/// Wrap-around distance between two spatial frequencies on the unit torus.
pub fn wrap_distance(f1: f64, f2: f64) -> f64 {
    let d = (f1 - f2).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Minimal wrap-around separation of the pooled angle set, measured between
/// spatial frequencies `f(θ) = (d/λ)·cos θ` on the unit torus.
pub fn min_separation(angles: &[f64], spacing_ratio: f64) -> Result<f64> {
    if angles.len() < 2 {
        return Err(Error::UndefinedInput(
            "separation needs at least two angles".into(),
        ));
    }
    let freqs: Vec<f64> = angles
        .iter()
        .map(|&t| spatial_frequency(t, spacing_ratio))
        .collect();
    let mut best = f64::INFINITY;
    for i in 0..freqs.len() {
        for j in (i + 1)..freqs.len() {
            best = best.min(wrap_distance(freqs[i], freqs[j]));
        }
    }
    Ok(best)
}

/// One active user's ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveUser {
    /// Zero-based user id within `0..K`.
    pub id: usize,
    /// Multipath arrival angles, ascending, in `(0, π)`.
    pub path_angles: Vec<f64>,
    /// Complex gain per path.
    pub path_gains: Vec<Complex64>,
    /// Nonnegative transmitted data over the `T` slots.
    pub data: DVector<f64>,
}

/// Ground truth for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub n_users: usize,
    pub horizon: usize,
    pub noise_sigma: f64,
    /// Active users, ascending by id.
    pub active: Vec<ActiveUser>,
}

impl Scene {
    /// Ids of the active users, ascending.
    pub fn active_set(&self) -> Vec<usize> {
        self.active.iter().map(|u| u.id).collect()
    }

    /// All path angles across active users, in user order.
    pub fn pooled_angles(&self) -> Vec<f64> {
        self.active
            .iter()
            .flat_map(|u| u.path_angles.iter().copied())
            .collect()
    }

    /// Total number of paths.
    pub fn n_paths(&self) -> usize {
        self.active.iter().map(|u| u.path_angles.len()).sum()
    }

    /// Replace the noise level (used when σ is derived from a target SNR).
    pub fn with_noise_sigma(mut self, noise_sigma: f64) -> Self {
        self.noise_sigma = noise_sigma;
        self
    }

    /// Validate the structural invariants; used after generation and after
    /// deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.active.len() > self.n_users {
            return Err(Error::Domain(format!(
                "{} active users exceed K = {}",
                self.active.len(),
                self.n_users
            )));
        }
        let mut prev_id = None;
        for user in &self.active {
            if user.id >= self.n_users {
                return Err(Error::Domain(format!("user id {} out of range", user.id)));
            }
            if let Some(p) = prev_id {
                if user.id <= p {
                    return Err(Error::Domain("active ids must be strictly ascending".into()));
                }
            }
            prev_id = Some(user.id);
            if user.path_angles.is_empty() || user.path_angles.len() != user.path_gains.len() {
                return Err(Error::Dimension(format!(
                    "user {}: {} angles vs {} gains",
                    user.id,
                    user.path_angles.len(),
                    user.path_gains.len()
                )));
            }
            for &theta in &user.path_angles {
                check_angle(theta)?;
            }
            if user.data.len() != self.horizon {
                return Err(Error::Dimension(format!(
                    "user {}: data length {} vs horizon {}",
                    user.id,
                    user.data.len(),
                    self.horizon
                )));
            }
            if user.data.iter().any(|&x| x < 0.0) {
                return Err(Error::Domain(format!("user {}: negative data entry", user.id)));
            }
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::Domain("noise sigma must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Knobs for [`generate_scene`].
#[derive(Debug, Clone, PartialEq)]
pub struct SceneParams {
    /// Total user population `K`.
    pub n_users: usize,
    /// Number of active users `Kₐ`.
    pub n_active: usize,
    /// Per-user path count drawn uniformly from `l_min..=l_max`.
    pub l_min: usize,
    pub l_max: usize,
    /// Time slots `T`.
    pub horizon: usize,
    /// Antenna count `N`; the separation guard is `min_sep_factor / N`.
    pub n_antennas: usize,
    /// Per-entry noise standard deviation σ.
    pub noise_sigma: f64,
    /// Separation guard factor; 1.5 keeps scenes strictly inside the
    /// `Δ > 1/N` recovery regime.
    pub min_sep_factor: f64,
    /// `d/λ`, used to map frequencies back to angles.
    pub spacing_ratio: f64,
    /// Within-group gaps are drawn from `[δ, slack·δ]`; controls how wide a
    /// user's angular spread may get.
    pub group_spread_slack: f64,
    /// Minimum gap between two users' groups, in units of δ. Must exceed
    /// the within-group spacing or the clustering stage has nothing to
    /// latch onto; distinct devices sit at distinct spreads.
    pub min_group_gap_factor: f64,
}

impl SceneParams {
    pub fn new(n_users: usize, n_active: usize, l_max: usize, horizon: usize, n_antennas: usize) -> Self {
        Self {
            n_users,
            n_active,
            l_min: 1,
            l_max,
            horizon,
            n_antennas,
            noise_sigma: 0.0,
            min_sep_factor: 1.5,
            spacing_ratio: 0.5,
            group_spread_slack: 1.5,
            min_group_gap_factor: 4.0,
        }
    }

    pub fn with_noise_sigma(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_fixed_paths(mut self, l: usize) -> Self {
        self.l_min = l;
        self.l_max = l;
        self
    }

    pub fn with_min_sep_factor(mut self, factor: f64) -> Self {
        self.min_sep_factor = factor;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_active > self.n_users {
            return Err(Error::Domain(format!(
                "Kₐ = {} exceeds K = {}",
                self.n_active, self.n_users
            )));
        }
        if self.l_min == 0 || self.l_min > self.l_max {
            return Err(Error::Domain(format!(
                "need 1 ≤ l_min ≤ l_max, got {}..{}",
                self.l_min, self.l_max
            )));
        }
        if self.horizon == 0 || self.n_antennas == 0 {
            return Err(Error::Domain("horizon and antenna count must be positive".into()));
        }
        if self.min_sep_factor < 1.0 {
            return Err(Error::Domain("min_sep_factor must be ≥ 1".into()));
        }
        if !(self.spacing_ratio > 0.0) || self.group_spread_slack < 1.0 {
            return Err(Error::Domain("bad spacing ratio or spread slack".into()));
        }
        if self.min_group_gap_factor < 1.0 {
            return Err(Error::Domain("min_group_gap_factor must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Draw a random scene: active ids, per-user path groups separated in
/// frequency space, complex Gaussian gains, and uniform `[0.5, 1.5]` data.
///
/// Each user's paths form a contiguous frequency group (an angular spread)
/// whose internal gaps lie in `[δ, slack·δ]` with `δ = min_sep_factor/N`;
/// distinct users' groups sit at least `min_group_gap_factor·δ` apart, so
/// the pooled set keeps the `δ` separation while clusters stay visibly
/// grouped. Placement draws group widths and slots them into the admissible
/// frequency interval; after a bounded number of attempts the demand is
/// declared infeasible, which signals that `Kₐ·L_max` is too large for `N`
/// at the requested separation.
pub fn generate_scene(params: &SceneParams, seed: u64) -> Result<Scene> {
    params.validate()?;
    let mut rng_ids = ChaCha8Rng::seed_from_u64(seed);
    rng_ids.set_stream(STREAM_IDS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_GEOMETRY);

    let ka = params.n_active;
    if ka == 0 {
        return Ok(Scene {
            n_users: params.n_users,
            horizon: params.horizon,
            noise_sigma: params.noise_sigma,
            active: Vec::new(),
        });
    }

    let mut ids = rand::seq::index::sample(&mut rng_ids, params.n_users, ka).into_vec();
    ids.sort_unstable();

    let path_counts: Vec<usize> = (0..ka)
        .map(|_| rng.random_range(params.l_min..=params.l_max))
        .collect();

    let delta = params.min_sep_factor / params.n_antennas as f64;
    let group_gap = params.min_group_gap_factor * delta;
    let ratio = params.spacing_ratio;
    // usable frequency interval, with δ/2 margins so the ends also satisfy
    // the wrap-around separation
    let usable = 2.0 * ratio - delta;
    let min_total: f64 = path_counts.iter().map(|&l| (l - 1) as f64 * delta).sum::<f64>()
        + (ka - 1) as f64 * group_gap;
    if min_total > usable {
        return Err(Error::Infeasible {
            attempts: 0,
            reason: format!(
                "{} paths at separation {delta:.4} cannot fit the frequency range {usable:.4}",
                path_counts.iter().sum::<usize>()
            ),
        });
    }

    let mut groups: Option<Vec<Vec<f64>>> = None;
    for _attempt in 0..MAX_PLACEMENT_ATTEMPTS {
        // group offsets: consecutive within-group gaps in [δ, slack·δ]
        let offsets: Vec<Vec<f64>> = path_counts
            .iter()
            .map(|&l| {
                let mut o = Vec::with_capacity(l);
                let mut cur = 0.0;
                o.push(cur);
                for _ in 1..l {
                    let gap = if params.group_spread_slack > 1.0 {
                        delta * rng.random_range(1.0..params.group_spread_slack)
                    } else {
                        delta
                    };
                    cur += gap;
                    o.push(cur);
                }
                o
            })
            .collect();
        let widths: Vec<f64> = offsets.iter().map(|o| *o.last().unwrap()).collect();
        let slack = usable - widths.iter().sum::<f64>() - (ka - 1) as f64 * group_gap;
        if slack < 0.0 {
            continue;
        }
        // spread the slack over ka+1 nonnegative gaps via sorted uniforms
        let mut cuts: Vec<f64> = (0..ka).map(|_| rng.random_range(0.0..=slack)).collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut gaps = Vec::with_capacity(ka + 1);
        let mut prev = 0.0;
        for &c in &cuts {
            gaps.push(c - prev);
            prev = c;
        }
        gaps.push(slack - prev);

        // random user order along the interval
        let mut order: Vec<usize> = (0..ka).collect();
        order.shuffle(&mut rng);

        let mut anchors = vec![0.0; ka];
        let mut cursor = -ratio + delta / 2.0 + gaps[0];
        for (slot, &u) in order.iter().enumerate() {
            anchors[u] = cursor;
            cursor += widths[u] + group_gap + gaps[slot + 1];
        }

        let candidate: Vec<Vec<f64>> = (0..ka)
            .map(|u| {
                let mut thetas: Vec<f64> = offsets[u]
                    .iter()
                    .map(|&o| ((anchors[u] + o) / ratio).clamp(-1.0, 1.0).acos())
                    .collect();
                thetas.sort_by(|a, b| a.partial_cmp(b).unwrap());
                thetas
            })
            .collect();

        // verify the invariant the construction promises
        let pooled: Vec<f64> = candidate.iter().flatten().copied().collect();
        let sep_ok = pooled.len() < 2
            || min_separation(&pooled, ratio)? >= delta * (1.0 - 1e-9);
        let domain_ok = pooled.iter().all(|&t| t > 0.0 && t < std::f64::consts::PI);
        if sep_ok && domain_ok {
            groups = Some(candidate);
            break;
        }
    }

    let groups = groups.ok_or(Error::Infeasible {
        attempts: MAX_PLACEMENT_ATTEMPTS,
        reason: format!(
            "could not place {} paths at separation {delta:.4}",
            path_counts.iter().sum::<usize>()
        ),
    })?;

    let active = ids
        .iter()
        .zip(groups)
        .map(|(&id, path_angles)| {
            let l = path_angles.len();
            let path_gains: Vec<Complex64> = (0..l)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im) / 2.0_f64.sqrt()
                })
                .collect();
            let data = DVector::from_fn(params.horizon, |_, _| rng.random_range(0.5..1.5));
            ActiveUser {
                id,
                path_angles,
                path_gains,
                data,
            }
        })
        .collect();

    let scene = Scene {
        n_users: params.n_users,
        horizon: params.horizon,
        noise_sigma: params.noise_sigma,
        active,
    };
    scene.validate()?;
    Ok(scene)
}

/// Channel vector of one active user: `h = Σ_l α_l·a(θ_l)`.
pub fn user_channel(user: &ActiveUser, array: &ArrayConfig) -> Result<DVector<Complex64>> {
    let mut h = DVector::zeros(array.n_antennas());
    for (&theta, &gain) in user.path_angles.iter().zip(&user.path_gains) {
        h += steering_vector(theta, array)? * gain;
    }
    Ok(h)
}

/// Noise-free observed signal `𝒫_Ω(Σ_k h_k φ_kᴴ)` of shape `M×T`.
pub fn clean_signal(scene: &Scene, array: &ArrayConfig) -> Result<DMatrix<Complex64>> {
    scene.validate()?;
    let n = array.n_antennas();
    let mut x = DMatrix::zeros(n, scene.horizon);
    for user in &scene.active {
        let h = user_channel(user, array)?;
        let phi = user.data.map(|v| Complex64::new(v, 0.0));
        x += h * phi.adjoint();
    }
    array.restrict_rows(&x)
}

/// Measurement on the observed antennas after `T` slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// `M×T` received matrix.
    pub y: DMatrix<Complex64>,
    pub array: ArrayConfig,
    pub horizon: usize,
    /// Power normalization `max_k ‖φ_k‖₂ / √N` (1 when nothing transmits).
    pub c1: f64,
}

/// Observe a scene: superpose the active users' rank-one contributions,
/// restrict to `Ω` last, and add i.i.d. complex Gaussian noise with per-entry
/// variance σ².
pub fn observe(scene: &Scene, array: &ArrayConfig, rng_seed: u64) -> Result<Observation> {
    let clean = clean_signal(scene, array)?;
    let sigma = scene.noise_sigma;
    let mut y = clean;
    if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(STREAM_NOISE);
        let s = sigma / 2.0_f64.sqrt();
        for j in 0..y.ncols() {
            for i in 0..y.nrows() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                y[(i, j)] += Complex64::new(re * s, im * s);
            }
        }
    }
    let sqrt_n = (array.n_antennas() as f64).sqrt();
    let c1 = scene
        .active
        .iter()
        .map(|u| u.data.norm() / sqrt_n)
        .fold(f64::NEG_INFINITY, f64::max);
    let c1 = if c1.is_finite() && c1 > 0.0 { c1 } else { 1.0 };
    Ok(Observation {
        y,
        array: array.clone(),
        horizon: scene.horizon,
        c1,
    })
}

/// `SNR = 10·log₁₀(‖Y_clean‖²_F / (M·T·σ²))` in dB; `−∞` for a silent
/// clean signal.
pub fn measure_snr(y_clean: &DMatrix<Complex64>, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "SNR needs a positive noise level, got {sigma}"
        )));
    }
    let power = y_clean.norm_squared();
    if power == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let mt = (y_clean.nrows() * y_clean.ncols()) as f64;
    Ok(10.0 * (power / (mt * sigma * sigma)).log10())
}

/// Noise level that realizes a target SNR for the given clean signal.
pub fn noise_sigma_for_snr(y_clean: &DMatrix<Complex64>, snr_db: f64) -> Result<f64> {
    let power = y_clean.norm_squared();
    if power == 0.0 {
        return Err(Error::Domain(
            "cannot calibrate noise to an SNR target on a silent signal".into(),
        ));
    }
    let mt = (y_clean.nrows() * y_clean.ncols()) as f64;
    Ok((power / (mt * 10.0_f64.powf(snr_db / 10.0))).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn steering_broadside_is_uniform() {
        let array = ArrayConfig::full(4);
        let a = steering_vector(PI / 2.0, &array).unwrap();
        for i in 0..4 {
            assert!((a[i] - Complex64::new(0.5, 0.0)).norm() <= 1e-15);
        }
    }

    #[test]
    fn steering_hand_evaluated_phase() {
        // θ = π/3, d/λ = 1/2, N = 2: exponent −j·2π·(1/2)·cos(π/3) = −jπ/2
        let array = ArrayConfig::full(2);
        let a = steering_vector(PI / 3.0, &array).unwrap();
        let r = 1.0 / 2.0_f64.sqrt();
        assert!((a[0] - Complex64::new(r, 0.0)).norm() <= 1e-14);
        assert!((a[1] - Complex64::new(0.0, -r)).norm() <= 1e-14);
    }

    #[test]
    fn steering_rejects_out_of_domain() {
        let array = ArrayConfig::full(4);
        assert!(steering_vector(0.0, &array).is_err());
        assert!(steering_vector(PI, &array).is_err());
        assert!(steering_vector(-0.3, &array).is_err());
    }

    #[test]
    fn steering_unit_norm_many_angles() {
        let array = ArrayConfig::full(9);
        for k in 1..=1000 {
            let theta = PI * k as f64 / 1001.0;
            let a = steering_vector(theta, &array).unwrap();
            assert!((a.norm() - 1.0).abs() <= 1e-12, "θ = {theta}");
        }
    }

    proptest! {
        #[test]
        fn steering_unit_norm_prop(theta in 1e-6..(PI - 1e-6), n in 1usize..64) {
            let array = ArrayConfig::full(n);
            let a = steering_vector(theta, &array).unwrap();
            prop_assert!((a.norm() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn wrap_distance_symmetric_and_bounded(f1 in -2.0..2.0f64, f2 in -2.0..2.0f64) {
            let d = wrap_distance(f1, f2);
            prop_assert!((0.0..=0.5).contains(&d));
            prop_assert!((d - wrap_distance(f2, f1)).abs() <= 1e-12);
        }
    }

    #[test]
    fn separation_direct_and_wrapped() {
        // frequencies 0.01 and 0.09 (spacing ratio 1): plain distance
        let direct = min_separation(&[0.01f64.acos(), 0.09f64.acos()], 1.0).unwrap();
        assert!((direct - 0.08).abs() <= 1e-12);
        // frequencies 0.01 and 0.99: the wrapped pair
        let wrapped = min_separation(&[0.01f64.acos(), 0.99f64.acos()], 1.0).unwrap();
        assert!((wrapped - 0.02).abs() <= 1e-12);
    }

    #[test]
    fn separation_coincident_and_quarter() {
        let zero = min_separation(&[1.0, 1.0], 0.5).unwrap();
        assert_eq!(zero, 0.0);
        // cos θ = 0 and cos θ = 1/2 at d/λ = 1/2: |0 − 1/4| = 1/4
        let q = min_separation(&[PI / 2.0, 0.5f64.acos()], 0.5).unwrap();
        assert!((q - 0.25).abs() <= 1e-12);
        assert!(min_separation(&[1.0], 0.5).is_err());
    }

    #[test]
    fn empty_scene_when_no_active_users() {
        let params = SceneParams::new(50, 0, 3, 4, 16);
        let scene = generate_scene(&params, 9).unwrap();
        assert!(scene.active.is_empty());
        let array = ArrayConfig::full(16);
        let obs = observe(&scene, &array, 9).unwrap();
        assert_eq!(obs.y.norm(), 0.0);
        assert_eq!(obs.c1, 1.0);
    }

    #[test]
    fn scene_matches_paper_scale_parameters() {
        let params = SceneParams::new(100, 3, 3, 1, 64);
        let scene = generate_scene(&params, 3).unwrap();
        assert_eq!(scene.active.len(), 3);
        assert!(scene.n_paths() <= 9);
        assert!(scene.n_paths() >= 3);
        for user in &scene.active {
            assert!((1..=3).contains(&user.path_angles.len()));
        }
    }

    #[test]
    fn scene_generation_is_deterministic() {
        let params = SceneParams::new(40, 4, 2, 3, 32).with_noise_sigma(0.2);
        let a = generate_scene(&params, 77).unwrap();
        let b = generate_scene(&params, 77).unwrap();
        assert_eq!(a, b);
        let array = ArrayConfig::full(32);
        let oa = observe(&a, &array, 77).unwrap();
        let ob = observe(&b, &array, 77).unwrap();
        assert_eq!(oa, ob);
    }

    #[test]
    fn scene_geometry_independent_of_population_size() {
        let small = generate_scene(&SceneParams::new(100, 3, 3, 2, 64), 5).unwrap();
        let large = generate_scene(&SceneParams::new(1000, 3, 3, 2, 64), 5).unwrap();
        for (u, v) in small.active.iter().zip(&large.active) {
            assert_eq!(u.path_angles, v.path_angles);
            assert_eq!(u.path_gains, v.path_gains);
            assert_eq!(u.data, v.data);
        }
    }

    #[test]
    fn scene_respects_separation_invariant() {
        for seed in 0..40 {
            let params = SceneParams::new(60, 3, 3, 2, 32);
            let scene = generate_scene(&params, seed).unwrap();
            let pooled = scene.pooled_angles();
            if pooled.len() >= 2 {
                let sep = min_separation(&pooled, 0.5).unwrap();
                assert!(sep >= 1.5 / 32.0 * (1.0 - 1e-9), "seed {seed}: sep {sep}");
            }
            for user in &scene.active {
                assert!(user.data.iter().all(|&x| (0.5..1.5).contains(&x)));
            }
        }
    }

    #[test]
    fn scene_rejects_infeasible_separation_demand() {
        // 16 paths at δ = 1.5/4 = 0.375 cannot fit a unit circle
        let params = SceneParams::new(10, 4, 4, 1, 4).with_fixed_paths(4);
        match generate_scene(&params, 1) {
            Err(Error::Infeasible { .. }) => {}
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn noiseless_single_path_observation_is_rank_one() {
        let mut scene = generate_scene(
            &SceneParams::new(10, 1, 1, 1, 8).with_fixed_paths(1),
            21,
        )
        .unwrap();
        scene.noise_sigma = 0.0;
        let array = ArrayConfig::full(8);
        let obs = observe(&scene, &array, 21).unwrap();
        let user = &scene.active[0];
        let a = steering_vector(user.path_angles[0], &array).unwrap();
        let expect = a * (user.path_gains[0] * user.data[0]);
        for i in 0..8 {
            assert!((obs.y[(i, 0)] - expect[i]).norm() <= 1e-12);
        }
    }

    #[test]
    fn noiseless_observation_matches_atom_superposition() {
        let scene = generate_scene(&SceneParams::new(30, 3, 2, 4, 24), 5).unwrap();
        let array = ArrayConfig::first_m(24, 17).unwrap();
        let obs = observe(&scene, &array, 5).unwrap();
        let mut expect = DMatrix::<Complex64>::zeros(17, 4);
        for user in &scene.active {
            for (&theta, &gain) in user.path_angles.iter().zip(&user.path_gains) {
                let a_full = steering_vector(theta, &array).unwrap();
                let a_obs = array
                    .restrict_rows(&DMatrix::from_columns(&[a_full]))
                    .unwrap();
                let phi = user.data.map(|v| Complex64::new(v, 0.0));
                expect += (a_obs * gain) * phi.adjoint();
            }
        }
        assert!((expect - &obs.y).norm() <= 1e-12);
    }

    #[test]
    fn measured_snr_matches_definition() {
        let params = SceneParams::new(20, 2, 2, 3, 16).with_noise_sigma(0.1);
        let scene = generate_scene(&params, 11).unwrap();
        let array = ArrayConfig::full(16);
        let clean = clean_signal(&scene, &array).unwrap();
        let snr = measure_snr(&clean, 0.1).unwrap();
        let expect = 10.0 * (clean.norm_squared() / (16.0 * 3.0 * 0.01)).log10();
        assert!((snr - expect).abs() <= 1e-12);
    }

    #[test]
    fn snr_fixed_points() {
        let m = 4;
        let t = 2;
        let sigma = 0.3;
        // ‖Y‖² = M·T·σ² → 0 dB
        let val = (sigma * sigma) as f64;
        let y = DMatrix::from_element(m, t, Complex64::new(val.sqrt(), 0.0));
        assert!(measure_snr(&y, sigma).unwrap().abs() <= 1e-12);
        // scale power by 1000 → 30 dB
        let y30 = &y * Complex64::new(1000.0_f64.sqrt(), 0.0);
        assert!((measure_snr(&y30, sigma).unwrap() - 30.0).abs() <= 1e-12);
        // silent → −∞ sentinel
        let z = DMatrix::<Complex64>::zeros(m, t);
        assert_eq!(measure_snr(&z, sigma).unwrap(), f64::NEG_INFINITY);
        assert!(measure_snr(&y, 0.0).is_err());
    }

    #[test]
    fn sigma_for_snr_round_trips() {
        let scene = generate_scene(&SceneParams::new(20, 2, 2, 2, 16), 3).unwrap();
        let array = ArrayConfig::full(16);
        let clean = clean_signal(&scene, &array).unwrap();
        let sigma = noise_sigma_for_snr(&clean, 25.0).unwrap();
        let snr = measure_snr(&clean, sigma).unwrap();
        assert!((snr - 25.0).abs() <= 1e-10);
    }

    #[test]
    fn restrict_and_lift_are_adjoint_projections() {
        let array = ArrayConfig::new(6, vec![1, 3, 4], 0.5).unwrap();
        let full = DMatrix::from_fn(6, 2, |i, j| Complex64::new(i as f64, j as f64));
        let restricted = array.restrict_rows(&full).unwrap();
        assert_eq!(restricted.nrows(), 3);
        let lifted = array.lift_rows(&restricted).unwrap();
        // P^Adj P = diag(1_Ω)
        for i in 0..6 {
            for j in 0..2 {
                let expect = if array.is_observed(i) {
                    full[(i, j)]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert_eq!(lifted[(i, j)], expect);
            }
        }
    }

    #[test]
    fn array_config_validation() {
        assert!(ArrayConfig::new(4, vec![0, 0], 0.5).is_err());
        assert!(ArrayConfig::new(4, vec![4], 0.5).is_err());
        assert!(ArrayConfig::new(4, vec![], 0.5).is_err());
        assert!(ArrayConfig::new(4, vec![1], -0.5).is_err());
        assert!(ArrayConfig::new(4, vec![3, 1], 0.5).is_ok());
    }
}
