use std::path::Path;

use serde::{Deserialize, Serialize};

use super::synth::SyntheticSpec;
use crate::compress::SearchConfig;
use crate::context::ReminderConfig;
use crate::error::{Error, Result};
use crate::model::{ConvSpec, ModelSpec, TrainConfig, DEFAULT_SE_REDUCTION};
use crate::signal::SignalConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub conv_layers: Vec<ConvSpec>,
    pub se_reduction: usize,
    pub attention_dim: usize,
    pub lstm_cells: usize,
    pub dense_layers: Vec<usize>,
    /// Adds an eleventh class for windows outside any step.
    pub null_class: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let s = ModelSpec::full_size(1);
        Self {
            conv_layers: s.conv_layers,
            se_reduction: DEFAULT_SE_REDUCTION,
            attention_dim: s.attention_dim,
            lstm_cells: s.lstm_cells,
            dense_layers: s.dense_layers,
            null_class: false,
        }
    }
}

impl ModelConfig {
    pub fn num_classes(&self) -> usize {
        if self.null_class {
            11
        } else {
            10
        }
    }

    pub fn spec(&self, feature_dim: usize) -> Result<ModelSpec> {
        let layers: Vec<(usize, usize)> = self
            .conv_layers
            .iter()
            .map(|c| (c.kernel, c.filters))
            .collect();
        let spec = ModelSpec::builder(feature_dim).conv(&layers).build_with(
            self.attention_dim,
            self.lstm_cells,
            &self.dense_layers,
            self.num_classes(),
            self.se_reduction,
        );
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompressConfig {
    pub alpha: f64,
    pub fine_tune_epochs: usize,
}

impl Default for CompressConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            fine_tune_epochs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            alphas: vec![0.1, 0.3, 0.5, 0.7, 0.9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Windows a step must win to count as performed.
    pub min_windows: usize,
    pub latency_repeats: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            min_windows: 3,
            latency_repeats: 30,
        }
    }
}

/// Every tunable of the pipeline. Loaded from TOML; missing keys keep their
/// defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub signal: SignalConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub search: SearchConfig,
    pub compress: CompressConfig,
    pub sweep: SweepConfig,
    pub eval: EvalConfig,
    pub synth: SyntheticSpec,
    pub reminder: ReminderConfig,
}

impl HarnessConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Use one seed for data generation, training and search.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.train.seed = seed;
        self.search.seed = seed;
        self.synth.seed = seed;
        self
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        self.model.spec(self.signal.feature_dim())
    }
}
