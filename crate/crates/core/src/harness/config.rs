//! Run configuration: one TOML file pins everything a scoring run depends on.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EvalConfig, HarnessError};
use crate::lexical::TOKENIZER_VERSION;

/// Everything that determines a run: preprocessing version, scoring
/// constants, resource paths, and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub tokenizer_version: String,
    /// ROUGE-L recall/precision trade-off.
    pub rouge_beta: f64,
    /// Emotion-consistency coverage penalty weight.
    pub affect_beta: f64,
    /// EMA smoothing constant for the loss scheduler.
    pub mu: f64,
    /// Numerical-stability guard for the loss scheduler.
    pub epsilon: f64,
    pub lexicon_path: Option<PathBuf>,
    pub embedding_fixture_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tokenizer_version: TOKENIZER_VERSION.to_string(),
            rouge_beta: crate::lexical::DEFAULT_ROUGE_BETA,
            affect_beta: crate::affect::DEFAULT_AFFECT_BETA,
            mu: crate::schedule::DEFAULT_MU,
            epsilon: crate::schedule::DEFAULT_EPSILON,
            lexicon_path: None,
            embedding_fixture_path: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| HarnessError::MalformedPrediction {
            line: 0,
            message: format!("config parse: {e}"),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HarnessError> {
        std::fs::write(
            path,
            toml::to_string_pretty(self).expect("config serializes"),
        )?;
        Ok(())
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            rouge_beta: self.rouge_beta,
            affect_beta: self.affect_beta,
        }
    }
}
