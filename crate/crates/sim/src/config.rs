//! Experiment configuration: a TOML file with one table per pipeline stage.
//!
//! ```toml
//! [model]
//! n_antennas = 64
//! n_users = 100
//! n_active = 3
//! l_max = 3
//! horizon = 1
//! snr_db = 30.0           # exactly one of snr_db / noise_sigma
//!
//! [solver]
//! primal_tolerance = 1e-6
//!
//! [detector]
//! stationary = true
//!
//! [run]
//! trials = 50
//! base_seed = 0
//!
//! [sweep]                  # optional
//! parameter = "n_antennas"
//! values = [16, 32, 64, 128]
//! ```
//!
//! Every field has a default (listed on the structs below); a minimal file
//! only needs the model dimensions it cares about.

use serde::{Deserialize, Serialize};

use blindra_core::admm::SolverOptions;
use blindra_core::array::SceneParams;
use blindra_core::recovery::InitStrategy;

use crate::{Result, SimError};

/// How the observed antenna subset Ω is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OmegaPolicy {
    /// The first `n_observed` antennas.
    #[default]
    First,
    /// A uniformly random `n_observed`-subset, redrawn per trial.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Antenna count `N`.
    pub n_antennas: usize,
    /// Observed antenna count `M`; `None` observes everything.
    pub n_observed: Option<usize>,
    pub omega_policy: OmegaPolicy,
    /// User population `K`.
    pub n_users: usize,
    /// Active users `Kₐ`.
    pub n_active: usize,
    /// Per-user path count range.
    pub l_min: usize,
    pub l_max: usize,
    /// Time slots `T`.
    pub horizon: usize,
    /// Exactly one of `snr_db` / `noise_sigma` must be set.
    pub snr_db: Option<f64>,
    pub noise_sigma: Option<f64>,
    pub spacing_ratio: f64,
    pub min_sep_factor: f64,
    pub group_spread_slack: f64,
    pub min_group_gap_factor: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        // both noise fields start unset so that a TOML file may choose
        // either; loading normalizes "neither" to the 30 dB default
        Self {
            n_antennas: 64,
            n_observed: None,
            omega_policy: OmegaPolicy::First,
            n_users: 100,
            n_active: 3,
            l_min: 1,
            l_max: 3,
            horizon: 1,
            snr_db: None,
            noise_sigma: None,
            spacing_ratio: 0.5,
            min_sep_factor: 1.5,
            group_spread_slack: 1.5,
            min_group_gap_factor: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub rho: f64,
    /// Data-fit weight; `None` applies the `1/σ²` rule (capped for σ → 0).
    pub gamma: Option<f64>,
    pub max_iterations: usize,
    /// Harness default is tighter than the library default: peak heights
    /// only equalize across users once the dual multiplier has settled.
    pub primal_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            gamma: None,
            max_iterations: 3000,
            primal_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Polynomial grid size; `None` uses `16·N`.
    pub grid_size: Option<usize>,
    pub relative_threshold: f64,
    /// Elbow search bound.
    pub k_max: usize,
    /// Cluster with the true `Kₐ` instead of the elbow.
    pub known_active_count: bool,
    /// Identify users by registered angles (stationary devices) instead of
    /// recovered data.
    pub stationary: bool,
    /// Matching tolerance in radians; `None` uses `6/N`.
    pub angle_tolerance: Option<f64>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            grid_size: None,
            relative_threshold: 0.9,
            k_max: 12,
            known_active_count: false,
            stationary: true,
            angle_tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoveryConfig {
    /// Run data/channel recovery even in stationary mode (needed for the
    /// NMSE metrics). Skipped automatically when `k̂ > T` would make the
    /// data system rank deficient.
    pub run_recovery: bool,
    pub am_iterations: usize,
    pub min_correlation: f64,
    /// `"gaussian"` or `"nonnegative"`.
    pub init: InitChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitChoice {
    #[default]
    Gaussian,
    Nonnegative,
}

impl From<InitChoice> for InitStrategy {
    fn from(c: InitChoice) -> Self {
        match c {
            InitChoice::Gaussian => InitStrategy::ComplexGaussian,
            InitChoice::Nonnegative => InitStrategy::NonnegativeUniform,
        }
    }
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            run_recovery: true,
            am_iterations: 30,
            min_correlation: 0.9,
            init: InitChoice::Gaussian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub trials: usize,
    pub base_seed: u64,
    /// Emit one JSON report per trial alongside the metrics CSV.
    pub emit_trial_reports: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            trials: 50,
            base_seed: 0,
            emit_trial_reports: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// One of: `n_antennas`, `n_observed`, `n_users`, `n_active`,
    /// `horizon`, `l_max`, `snr_db`, `noise_sigma`.
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub solver: SolverConfig,
    pub detector: DetectorConfig,
    pub recovery: RecoveryConfig,
    pub run: RunConfig,
    pub sweep: Option<SweepConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut config = Self {
            model: ModelConfig::default(),
            solver: SolverConfig::default(),
            detector: DetectorConfig::default(),
            recovery: RecoveryConfig::default(),
            run: RunConfig::default(),
            sweep: None,
        };
        config.normalize();
        config
    }
}

pub const SWEEPABLE: &[&str] = &[
    "n_antennas",
    "n_observed",
    "n_users",
    "n_active",
    "horizon",
    "l_max",
    "snr_db",
    "noise_sigma",
];

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut config: Self = toml::from_str(text)?;
        config.normalize();
        config.validate()?;
        Ok(config)
    }

    /// Fill the noise specification default: a file that names neither
    /// `snr_db` nor `noise_sigma` gets the 30 dB default.
    fn normalize(&mut self) {
        if self.model.snr_db.is_none() && self.model.noise_sigma.is_none() {
            self.model.snr_db = Some(30.0);
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.n_antennas == 0 || m.n_users == 0 || m.horizon == 0 {
            return Err(SimError::Config(
                "n_antennas, n_users, and horizon must be positive".into(),
            ));
        }
        if m.n_active > m.n_users {
            return Err(SimError::Config(format!(
                "n_active = {} exceeds n_users = {}",
                m.n_active, m.n_users
            )));
        }
        if let Some(observed) = m.n_observed {
            if observed == 0 || observed > m.n_antennas {
                return Err(SimError::Config(format!(
                    "n_observed = {observed} must lie in 1..={}",
                    m.n_antennas
                )));
            }
        }
        if m.l_min == 0 || m.l_min > m.l_max {
            return Err(SimError::Config("need 1 ≤ l_min ≤ l_max".into()));
        }
        match (m.snr_db, m.noise_sigma) {
            (Some(_), Some(_)) => {
                return Err(SimError::Config(
                    "set exactly one of snr_db / noise_sigma, not both".into(),
                ))
            }
            (None, None) => {
                return Err(SimError::Config(
                    "set exactly one of snr_db / noise_sigma".into(),
                ))
            }
            (None, Some(sigma)) if sigma < 0.0 => {
                return Err(SimError::Config("noise_sigma must be nonnegative".into()))
            }
            _ => {}
        }
        if !(self.solver.rho > 0.0) || !(self.solver.primal_tolerance > 0.0) {
            return Err(SimError::Config("rho and primal_tolerance must be positive".into()));
        }
        if let Some(g) = self.solver.gamma {
            if !(g > 0.0) {
                return Err(SimError::Config("gamma must be positive".into()));
            }
        }
        if self.solver.max_iterations == 0 {
            return Err(SimError::Config("max_iterations must be positive".into()));
        }
        let d = &self.detector;
        if !(d.relative_threshold > 0.0 && d.relative_threshold <= 1.0) {
            return Err(SimError::Config("relative_threshold must lie in (0, 1]".into()));
        }
        if d.k_max == 0 {
            return Err(SimError::Config("k_max must be positive".into()));
        }
        if let Some(g) = d.grid_size {
            if g < 2 {
                return Err(SimError::Config("grid_size must be ≥ 2".into()));
            }
        }
        if let Some(tol) = d.angle_tolerance {
            if !(tol > 0.0) {
                return Err(SimError::Config("angle_tolerance must be positive".into()));
            }
        }
        if self.recovery.am_iterations == 0 {
            return Err(SimError::Config("am_iterations must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.recovery.min_correlation) {
            return Err(SimError::Config("min_correlation must lie in [0, 1]".into()));
        }
        if self.run.trials == 0 {
            return Err(SimError::Config("trials must be positive".into()));
        }
        if let Some(sweep) = &self.sweep {
            if !SWEEPABLE.contains(&sweep.parameter.as_str()) {
                return Err(SimError::Config(format!(
                    "unknown sweep parameter `{}`; supported: {}",
                    sweep.parameter,
                    SWEEPABLE.join(", ")
                )));
            }
            if sweep.values.is_empty() {
                return Err(SimError::Config("sweep.values must be non-empty".into()));
            }
            // integer-valued parameters must get integer values
            if sweep.parameter != "snr_db" && sweep.parameter != "noise_sigma" {
                for &v in &sweep.values {
                    if v.fract() != 0.0 || v < 0.0 {
                        return Err(SimError::Config(format!(
                            "sweep value {v} is not a nonnegative integer for `{}`",
                            sweep.parameter
                        )));
                    }
                }
            }
            // each swept value must itself validate
            for &v in &sweep.values {
                let mut probe = self.clone();
                probe.sweep = None;
                probe.apply_sweep_value(&sweep.parameter, v)?;
                probe.validate()?;
            }
        }
        Ok(())
    }

    /// Set one sweepable parameter. `value` is cast for integer fields.
    pub fn apply_sweep_value(&mut self, parameter: &str, value: f64) -> Result<()> {
        match parameter {
            "n_antennas" => self.model.n_antennas = value as usize,
            "n_observed" => self.model.n_observed = Some(value as usize),
            "n_users" => self.model.n_users = value as usize,
            "n_active" => self.model.n_active = value as usize,
            "horizon" => self.model.horizon = value as usize,
            "l_max" => self.model.l_max = value as usize,
            "snr_db" => {
                self.model.snr_db = Some(value);
                self.model.noise_sigma = None;
            }
            "noise_sigma" => {
                self.model.noise_sigma = Some(value);
                self.model.snr_db = None;
            }
            other => {
                return Err(SimError::Config(format!("unknown sweep parameter `{other}`")))
            }
        }
        Ok(())
    }

    /// Number of observed antennas after applying the default.
    pub fn n_observed(&self) -> usize {
        self.model.n_observed.unwrap_or(self.model.n_antennas)
    }

    /// Polynomial grid size after applying the `16·N` default.
    pub fn grid_size(&self) -> usize {
        self.detector.grid_size.unwrap_or(16 * self.model.n_antennas)
    }

    /// Stationary matching tolerance after applying the `6/N` default.
    pub fn angle_tolerance(&self) -> f64 {
        self.detector
            .angle_tolerance
            .unwrap_or(6.0 / self.model.n_antennas as f64)
    }

    /// Scene parameters for one trial.
    pub fn scene_params(&self) -> SceneParams {
        let m = &self.model;
        SceneParams {
            n_users: m.n_users,
            n_active: m.n_active,
            l_min: m.l_min,
            l_max: m.l_max,
            horizon: m.horizon,
            n_antennas: m.n_antennas,
            noise_sigma: m.noise_sigma.unwrap_or(0.0),
            min_sep_factor: m.min_sep_factor,
            spacing_ratio: m.spacing_ratio,
            group_spread_slack: m.group_spread_slack,
            min_group_gap_factor: m.min_group_gap_factor,
        }
    }

    /// Solver options for a realized noise level.
    pub fn solver_options(&self, noise_sigma: f64) -> SolverOptions {
        SolverOptions {
            rho: self.solver.rho,
            gamma: self
                .solver
                .gamma
                .unwrap_or_else(|| SolverOptions::gamma_for_noise(noise_sigma)),
            max_iterations: self.solver.max_iterations,
            primal_tolerance: self.solver.primal_tolerance,
            record_history: false,
        }
    }
}
