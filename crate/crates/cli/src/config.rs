//! Experiment configuration: JSON schema, defaults, normalization and
//! validation.
//!
//! A config file only needs `kind`; everything else has defaults matching
//! the reference experiments (ten-tap benchmark system, unit-power white
//! input, uniform noise on [−5, 5], step size 2×10⁻⁵, 200 realizations).
//! [`parse_config`] rejects unknown keys, fills every default explicitly
//! and validates field by field, so a rendered config — and therefore a
//! run manifest — always re-parses to exactly the same resolved value.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use nnlmf::{presets, Algorithm, InputModel, NoiseModel, SystemModel};

use crate::error::CliError;
use crate::table::OutputFormat;

/// Which quantity the experiment reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    MeanWeights,
    Emse,
    StabilityMap,
    Moments,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::MeanWeights => "mean_weights",
            ExperimentKind::Emse => "emse",
            ExperimentKind::StabilityMap => "stability_map",
            ExperimentKind::Moments => "moments",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmSpec {
    #[default]
    Nnlmf,
    Nnlms,
}

impl From<AlgorithmSpec> for Algorithm {
    fn from(spec: AlgorithmSpec) -> Self {
        match spec {
            AlgorithmSpec::Nnlmf => Algorithm::Nnlmf,
            AlgorithmSpec::Nnlms => Algorithm::Nnlms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    White {
        #[serde(default = "defaults::unit")]
        variance: f64,
    },
    /// First-order AR input; `innovation_variance` defaults to `1 − pole²`
    /// (unit process variance).
    Ar1 {
        pole: f64,
        #[serde(default)]
        innovation_variance: Option<f64>,
    },
}

impl Default for InputSpec {
    fn default() -> Self {
        InputSpec::White { variance: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Uniform { half_width: f64 },
    Binary { level: f64 },
    Gaussian { sigma: f64 },
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::Uniform { half_width: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    /// `null` selects the ten-tap benchmark response.
    #[serde(default)]
    pub true_weights: Option<Vec<f64>>,
    #[serde(default)]
    pub input: InputSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
}

/// Where the shared initial weight vector comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialWeightsSpec {
    /// The frozen default U(0, 1) draw.
    Default,
    /// A fresh U(0, 1) draw keyed by `seed`.
    UniformRandom { seed: u64 },
    Explicit { values: Vec<f64> },
}

impl Default for InitialWeightsSpec {
    fn default() -> Self {
        InitialWeightsSpec::Default
    }
}

/// Grid and per-cell effort of a stability sweep. The defaults are the
/// desk-scale settings; `--paper-scale` switches to the full-scale counts
/// (1000 realizations of 5×10⁵ samples per cell).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySpec {
    #[serde(default = "defaults::mu_values")]
    pub mu_values: Vec<f64>,
    #[serde(default = "defaults::d_values")]
    pub d_values: Vec<f64>,
    #[serde(default = "defaults::cell_realizations")]
    pub n_realizations: usize,
    #[serde(default = "defaults::cell_iters")]
    pub n_iters: usize,
}

impl Default for StabilitySpec {
    fn default() -> Self {
        StabilitySpec {
            mu_values: defaults::mu_values(),
            d_values: defaults::d_values(),
            n_realizations: defaults::cell_realizations(),
            n_iters: defaults::cell_iters(),
        }
    }
}

impl StabilitySpec {
    /// Full-scale per-cell effort.
    pub fn apply_paper_scale(&mut self) {
        self.n_realizations = 1000;
        self.n_iters = 500_000;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub system: SystemSpec,
    #[serde(default)]
    pub algorithm: AlgorithmSpec,
    #[serde(default = "defaults::step_size")]
    pub step_size: f64,
    #[serde(default)]
    pub initial_weights: InitialWeightsSpec,
    #[serde(default = "defaults::n_iters")]
    pub n_iters: usize,
    #[serde(default = "defaults::n_realizations")]
    pub n_realizations: usize,
    #[serde(default = "defaults::master_seed")]
    pub master_seed: u64,
    #[serde(default = "defaults::divergence_threshold")]
    pub divergence_threshold: f64,
    /// Emit every k-th iteration row (iteration 0 always included).
    #[serde(default = "defaults::output_stride")]
    pub output_stride: usize,
    #[serde(default)]
    pub format: OutputFormat,
    /// Window (in iterations) for the trailing deviation summary of
    /// `compare` runs.
    #[serde(default = "defaults::tail_window")]
    pub tail_window: usize,
    #[serde(default)]
    pub stability: StabilitySpec,
}

mod defaults {
    pub fn unit() -> f64 {
        1.0
    }
    pub fn step_size() -> f64 {
        nnlmf::presets::DEFAULT_STEP_SIZE
    }
    pub fn n_iters() -> usize {
        200_000
    }
    pub fn n_realizations() -> usize {
        200
    }
    pub fn master_seed() -> u64 {
        42
    }
    pub fn divergence_threshold() -> f64 {
        nnlmf::DEFAULT_DIVERGENCE_THRESHOLD
    }
    pub fn output_stride() -> usize {
        1
    }
    pub fn tail_window() -> usize {
        1000
    }
    pub fn mu_values() -> Vec<f64> {
        nnlmf::stability::reference_grid().0
    }
    pub fn d_values() -> Vec<f64> {
        nnlmf::stability::reference_grid().1
    }
    pub fn cell_realizations() -> usize {
        50
    }
    pub fn cell_iters() -> usize {
        100_000
    }
}

impl ExperimentConfig {
    /// Fill the remaining optional fields with their concrete values so the
    /// rendered config stands alone even if library defaults ever change.
    pub fn normalized(mut self) -> Self {
        if self.system.true_weights.is_none() {
            self.system.true_weights = Some(presets::DEFAULT_TRUE_WEIGHTS.to_vec());
        }
        if let InputSpec::Ar1 { pole, innovation_variance } = &mut self.system.input {
            if innovation_variance.is_none() {
                *innovation_variance = Some(1.0 - *pole * *pole);
            }
        }
        self
    }

    /// Field-by-field semantic validation. Expects a normalized config.
    pub fn validate(&self) -> Result<(), CliError> {
        let weights = self
            .system
            .true_weights
            .as_ref()
            .ok_or_else(|| CliError::field("system.true_weights", "missing (config not normalized)"))?;
        if weights.is_empty() {
            return Err(CliError::field("system.true_weights", "must have at least one tap"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(CliError::field("system.true_weights", "entries must be finite"));
        }
        let taps = weights.len();

        match &self.system.input {
            InputSpec::White { variance } => {
                if !(*variance > 0.0) || !variance.is_finite() {
                    return Err(CliError::field(
                        "system.input.variance",
                        format!("must be positive and finite, got {variance}"),
                    ));
                }
            }
            InputSpec::Ar1 { pole, innovation_variance } => {
                if !(pole.abs() < 1.0) {
                    return Err(CliError::field(
                        "system.input.pole",
                        format!("must lie in (-1, 1), got {pole}"),
                    ));
                }
                match innovation_variance {
                    Some(v) if *v > 0.0 && v.is_finite() => {}
                    Some(v) => {
                        return Err(CliError::field(
                            "system.input.innovation_variance",
                            format!("must be positive and finite, got {v}"),
                        ))
                    }
                    None => {
                        return Err(CliError::field(
                            "system.input.innovation_variance",
                            "missing (config not normalized)",
                        ))
                    }
                }
            }
        }

        match &self.system.noise {
            NoiseSpec::Uniform { half_width } => {
                if !(*half_width > 0.0) || !half_width.is_finite() {
                    return Err(CliError::field(
                        "system.noise.half_width",
                        format!("must be positive and finite, got {half_width}"),
                    ));
                }
            }
            NoiseSpec::Binary { level } => {
                if !(*level > 0.0) || !level.is_finite() {
                    return Err(CliError::field(
                        "system.noise.level",
                        format!("must be positive and finite, got {level}"),
                    ));
                }
            }
            NoiseSpec::Gaussian { sigma } => {
                if !(*sigma >= 0.0) || !sigma.is_finite() {
                    return Err(CliError::field(
                        "system.noise.sigma",
                        format!("must be nonnegative and finite, got {sigma}"),
                    ));
                }
            }
        }

        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(CliError::field(
                "step_size",
                format!("must be positive and finite, got {}", self.step_size),
            ));
        }
        if let InitialWeightsSpec::Explicit { values } = &self.initial_weights {
            if values.len() != taps {
                return Err(CliError::field(
                    "initial_weights.explicit.values",
                    format!("expected {taps} entries to match the system, got {}", values.len()),
                ));
            }
            if values.iter().any(|w| !w.is_finite()) {
                return Err(CliError::field("initial_weights.explicit.values", "entries must be finite"));
            }
        }
        if self.n_iters == 0 {
            return Err(CliError::field("n_iters", "must be at least 1"));
        }
        if self.n_realizations == 0 {
            return Err(CliError::field("n_realizations", "must be at least 1"));
        }
        if !(self.divergence_threshold > 0.0) || !self.divergence_threshold.is_finite() {
            return Err(CliError::field(
                "divergence_threshold",
                format!("must be positive and finite, got {}", self.divergence_threshold),
            ));
        }
        if self.output_stride == 0 {
            return Err(CliError::field("output_stride", "must be at least 1"));
        }
        if self.tail_window == 0 {
            return Err(CliError::field("tail_window", "must be at least 1"));
        }

        if self.kind == ExperimentKind::StabilityMap {
            if self.stability.mu_values.is_empty() {
                return Err(CliError::field("stability.mu_values", "must be nonempty"));
            }
            if self.stability.d_values.is_empty() {
                return Err(CliError::field("stability.d_values", "must be nonempty"));
            }
            if self
                .stability
                .mu_values
                .iter()
                .any(|mu| !(*mu >= 0.0) || !mu.is_finite())
            {
                return Err(CliError::field("stability.mu_values", "step sizes must be nonnegative and finite"));
            }
            if self.stability.d_values.iter().any(|d| !d.is_finite()) {
                return Err(CliError::field("stability.d_values", "distances must be finite"));
            }
            if self.stability.n_realizations == 0 {
                return Err(CliError::field("stability.n_realizations", "must be at least 1"));
            }
            if self.stability.n_iters == 0 {
                return Err(CliError::field("stability.n_iters", "must be at least 1"));
            }
        }
        Ok(())
    }

    /// Resolved true-weight vector.
    pub fn true_weights(&self) -> Array1<f64> {
        Array1::from(
            self.system
                .true_weights
                .clone()
                .unwrap_or_else(|| presets::DEFAULT_TRUE_WEIGHTS.to_vec()),
        )
    }

    pub fn taps(&self) -> usize {
        self.system
            .true_weights
            .as_ref()
            .map_or(presets::DEFAULT_TRUE_WEIGHTS.len(), Vec::len)
    }

    /// Build the core system model.
    pub fn system_model(&self) -> Result<SystemModel, CliError> {
        let taps = self.taps();
        let input = match &self.system.input {
            InputSpec::White { variance } => InputModel::white(*variance, taps)?,
            InputSpec::Ar1 { pole, innovation_variance } => {
                let innovation = innovation_variance.unwrap_or(1.0 - pole * pole);
                InputModel::first_order_ar(*pole, innovation, taps)?
            }
        };
        let noise = match &self.system.noise {
            NoiseSpec::Uniform { half_width } => NoiseModel::uniform(*half_width)?,
            NoiseSpec::Binary { level } => NoiseModel::binary(*level)?,
            NoiseSpec::Gaussian { sigma } => NoiseModel::gaussian(*sigma)?,
        };
        Ok(SystemModel::new(self.true_weights(), input, noise)?)
    }

    /// Resolved shared initial weight vector.
    pub fn initial_weight_vector(&self) -> Result<Array1<f64>, CliError> {
        let taps = self.taps();
        match &self.initial_weights {
            InitialWeightsSpec::Default => {
                if taps == presets::DEFAULT_INITIAL_WEIGHTS.len() {
                    Ok(presets::default_initial_weights())
                } else {
                    Err(CliError::field(
                        "initial_weights",
                        format!(
                            "the default vector has {} taps but the system has {taps}; \
                             use uniform_random or explicit",
                            presets::DEFAULT_INITIAL_WEIGHTS.len()
                        ),
                    ))
                }
            }
            InitialWeightsSpec::UniformRandom { seed } => Ok(presets::uniform_initial_weights(taps, *seed)),
            InitialWeightsSpec::Explicit { values } => Ok(Array1::from(values.clone())),
        }
    }

    /// Serialize the resolved config (pretty JSON, trailing newline).
    pub fn render(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }
}

/// Parse, normalize and validate a config from JSON text. A manifest from a
/// previous run (an object with a `config` field) is accepted too.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let config_value = match value.get("config") {
        Some(inner) => inner.clone(),
        None => value,
    };
    let raw: ExperimentConfig = serde_json::from_value(config_value)?;
    let cfg = raw.normalized();
    cfg.validate()?;
    Ok(cfg)
}
