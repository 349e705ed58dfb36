//! Run configuration files (TOML). Unknown keys are rejected everywhere.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

/// A scalar or a list in the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    One(f64),
    Many(Vec<f64>),
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Sweep::One(x) => vec![*x],
            Sweep::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_scenario")]
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    /// Per-mode Fock truncation; each command picks one when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qfi: Option<QfiConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfi: Option<CfiConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy: Option<EntropyConfig>,
}

fn default_scenario() -> String {
    "unnamed".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QfiConfig {
    pub alpha_sq: Sweep,
    #[serde(default)]
    pub alpha_phase: f64,
    pub nbar: Sweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitChoice {
    PerturbedVacuum,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub alpha_sq: f64,
    pub nbar: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_init")]
    pub init: InitChoice,
    #[serde(default = "default_opt_tol")]
    pub tol: f64,
}

fn default_restarts() -> usize {
    5
}

fn default_init() -> InitChoice {
    InitChoice::Random
}

fn default_opt_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSweep {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl PhiSweep {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n).map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfiConfig {
    pub alpha: f64,
    #[serde(default)]
    pub alpha_phase: f64,
    #[serde(default)]
    pub r: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_sweep: Option<PhiSweep>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    MaximumLikelihood,
    MaximumLikelihoodNd,
    Bayesian,
    LinearFringe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub alpha: f64,
    #[serde(default)]
    pub alpha_phase: f64,
    #[serde(default)]
    pub r: f64,
    pub phi_true: f64,
    pub shots_per_trial: usize,
    pub trials: usize,
    pub estimator: EstimatorChoice,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
}

fn default_grid() -> usize {
    fockmetro_core::estimation::DEFAULT_GRID
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    pub alpha: f64,
    #[serde(default)]
    pub alpha_phase: f64,
    /// Matched mean photon numbers for the number/squeezed comparison.
    pub nbar: Vec<f64>,
    /// Coherent secondaries `[re, im]` for the product-criterion sweep.
    #[serde(default)]
    pub coherent: Vec<[f64; 2]>,
    /// Squeezed secondaries for the product-criterion sweep.
    #[serde(default)]
    pub squeezed_r: Vec<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}
