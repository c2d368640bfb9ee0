//! Experiment configuration: a TOML document mirroring [`ExperimentConfig`]
//! field for field. Unknown keys are rejected so typos fail loudly instead
//! of silently running defaults.

use serde::{Deserialize, Serialize};

use crate::harness::HarnessError;
use crate::model::{AmplitudeModel, Placement};
use crate::solvers::{Algorithm, BpdnSettings};

/// A complete experiment description.
///
/// ```toml
/// m = 150
/// F_list = [50]
/// s = 20
/// snr_list = [20.0]
/// eta_list = [0.1]
/// trials = 10
/// master_seed = 1
/// algorithms = ["omp", "bloomp", "bp", "bp_blot"]
///
/// [placement.random]
/// min_sep = 4.0
///
/// [amplitude_model]
/// mag_range = [1.0, 2.0]
/// phase = "full"
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Number of Fourier measurements (rows of Φ).
    #[serde(default = "default_m")]
    pub m: usize,
    /// Super-resolution factors to run; the fine grid has `m·F` points.
    #[serde(rename = "F_list")]
    pub f_list: Vec<usize>,
    /// Spikes per instance.
    pub s: usize,
    /// Where the spikes go.
    pub placement: Placement,
    /// How spike amplitudes are drawn.
    #[serde(default)]
    pub amplitude_model: AmplitudeModel,
    /// Signal-to-noise ratios; `inf` means noiseless.
    pub snr_list: Vec<f64>,
    /// Algorithms to run, in output order.
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    /// Filter half-widths (ℓ units) for the filtered error metric; may be
    /// empty.
    #[serde(default)]
    pub eta_list: Vec<f64>,
    /// Exclusion-band radius policy.
    #[serde(default)]
    pub band_radius: BandRadiusConfig,
    /// Random instances per (F, SNR) cell.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Master seed; everything else derives from it.
    #[serde(default)]
    pub master_seed: u64,
    /// Basis-pursuit denoising controls.
    #[serde(default)]
    pub bpdn: BpdnConfig,
}

fn default_m() -> usize {
    150
}

fn default_trials() -> usize {
    10
}

fn default_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}

/// Band radius selection: `"auto"` derives the radius from the minimum
/// spike separation (one Rayleigh length for well-separated sets, half the
/// separation otherwise); `{ explicit = n }` pins it to `n` fine steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BandRadiusConfig {
    #[default]
    Auto,
    Explicit(usize),
}

/// BPDN controls as they appear in the config file. Field names match
/// [`BpdnSettings`]; `epsilon` is interpreted as a multiplier on the
/// realized noise norm of each trial (the harness sets the actual radius to
/// `epsilon · ‖e‖₂`, which collapses to exact interpolation when the trial
/// is noiseless).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BpdnConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub penalty: f64,
}

impl Default for BpdnConfig {
    fn default() -> Self {
        BpdnConfig {
            epsilon: 1.0,
            max_iterations: 5000,
            primal_tol: 1e-6,
            dual_tol: 1e-6,
            penalty: 1.0,
        }
    }
}

impl BpdnConfig {
    /// Concrete solver settings for one trial's realized noise norm.
    pub fn settings_for_noise(&self, noise_norm: f64) -> BpdnSettings {
        BpdnSettings {
            epsilon: self.epsilon * noise_norm,
            max_iterations: self.max_iterations,
            primal_tol: self.primal_tol,
            dual_tol: self.dual_tol,
            penalty: self.penalty,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        if self.m < 1 {
            return fail("m must be at least 1".into());
        }
        if self.f_list.is_empty() {
            return fail("F_list must not be empty".into());
        }
        if self.f_list.iter().any(|&f| f < 1) {
            return fail("every F must be a positive integer".into());
        }
        if self.s < 1 || self.s > self.m {
            return fail(format!("s must satisfy 1 ≤ s ≤ m = {}", self.m));
        }
        if self.trials < 1 {
            return fail("trials must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return fail("algorithms must not be empty".into());
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return fail(format!("algorithm `{a}` listed twice"));
            }
        }
        if self.snr_list.is_empty() {
            return fail("snr_list must not be empty".into());
        }
        if self.snr_list.iter().any(|&snr| !(snr > 0.0)) {
            return fail("every snr must be positive (inf allowed)".into());
        }
        if self.eta_list.iter().any(|&eta| !(eta >= 0.0 && eta.is_finite())) {
            return fail("every eta must be finite and non-negative".into());
        }
        self.amplitude_model.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        match &self.placement {
            Placement::Random { min_sep } => {
                if !(min_sep.is_finite() && *min_sep > 0.0) {
                    return fail("random placement needs min_sep > 0".into());
                }
            }
            Placement::Explicit { positions } => {
                if positions.len() != self.s {
                    return fail(format!(
                        "explicit placement lists {} positions but s = {}",
                        positions.len(),
                        self.s
                    ));
                }
                if !positions.windows(2).all(|w| w[0] < w[1]) {
                    return fail("explicit positions must be strictly increasing".into());
                }
                if positions.iter().any(|&p| !(p >= 0.0 && p < self.m as f64)) {
                    return fail(format!(
                        "explicit positions must lie in [0, {}ℓ)",
                        self.m
                    ));
                }
            }
        }
        if let BandRadiusConfig::Explicit(r) = self.band_radius {
            if r == 0 {
                return fail("explicit band radius must be at least 1 fine step".into());
            }
        }
        if !(self.bpdn.epsilon >= 0.0 && self.bpdn.epsilon.is_finite()) {
            return fail("bpdn.epsilon must be finite and non-negative".into());
        }
        if self.bpdn.max_iterations == 0 {
            return fail("bpdn.max_iterations must be positive".into());
        }
        if !(self.bpdn.penalty > 0.0 && self.bpdn.penalty.is_finite()) {
            return fail("bpdn.penalty must be finite and positive".into());
        }
        if !(self.bpdn.primal_tol > 0.0 && self.bpdn.dual_tol > 0.0) {
            return fail("bpdn tolerances must be positive".into());
        }
        Ok(())
    }

    /// Minimum pairwise spike separation in ℓ units, the quantity the
    /// automatic band-radius rule keys on.
    pub fn min_separation_ell(&self) -> f64 {
        match &self.placement {
            Placement::Random { min_sep } => *min_sep,
            Placement::Explicit { positions } => positions
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min),
        }
    }
}
