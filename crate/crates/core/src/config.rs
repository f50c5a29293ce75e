//! TOML run configuration.
//!
//! ```toml
//! query_source = "generated_summary"   # or "reference_summary"
//! retrieve_k = 20
//! rerank_m = 5
//! prompt_mode = "none"                 # "summarize_with_keyphrases", "paraphrase"
//! lead_sentences = 8
//!
//! [bm25]
//! k1 = 0.9
//! b = 0.4
//!
//! [reward]
//! target_fre = 60.0
//! sigma = 10.0
//! w_r = 0.5
//! w_b = 0.3
//! w_l = 0.2
//! length_target = 200     # omitted: mean training-summary length
//! length_sigma = 0.25
//! mode = "gaussian_normalized"   # or "eq2_literal"
//! metric = "fre"                 # or "fkgl"
//!
//! [ppo]
//! clip_epsilon = 0.2
//! learning_rate = 0.5
//! epochs_per_batch = 4
//! batch_size = 16
//! iterations = 500
//! baseline = "running_mean"      # or "none"
//! seed = 0
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Split};
use crate::pipeline::{PipelineConfig, PromptMode, QuerySource};
use crate::ppo::PpoConfig;
use crate::retrieval::Bm25Params;
use crate::reward::{RewardConfig, RewardError, RewardSettings, DEFAULT_LENGTH_TARGET};
use crate::textstats::tokenize;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub query_source: QuerySource,
    pub retrieve_k: usize,
    pub rerank_m: usize,
    pub prompt_mode: PromptMode,
    pub lead_sentences: usize,
    pub bm25: Bm25Params,
    pub reward: RewardSettings,
    pub ppo: PpoConfig,
}

impl Default for ConfigFile {
    fn default() -> Self {
        let p = PipelineConfig::default();
        ConfigFile {
            query_source: p.query_source,
            retrieve_k: p.retrieve_k,
            rerank_m: p.rerank_m,
            prompt_mode: p.prompt_mode,
            lead_sentences: p.lead_sentences,
            bm25: Bm25Params::default(),
            reward: RewardSettings::default(),
            ppo: PpoConfig::default(),
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Fills `length_target` from the corpus when the file leaves it unset.
    pub fn with_length_target_from(mut self, corpus: Option<&Corpus>) -> Self {
        if self.reward.length_target.is_none() {
            self.reward.length_target = Some(
                corpus
                    .and_then(mean_train_summary_length)
                    .unwrap_or(DEFAULT_LENGTH_TARGET),
            );
        }
        self
    }

    pub fn reward_config(&self) -> Result<RewardConfig, ConfigError> {
        Ok(RewardConfig::new(self.reward)?)
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig, ConfigError> {
        Ok(PipelineConfig {
            query_source: self.query_source,
            retrieve_k: self.retrieve_k,
            rerank_m: self.rerank_m,
            prompt_mode: self.prompt_mode,
            lead_sentences: self.lead_sentences,
            reward: self.reward_config()?,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Mean word count of training-split reference summaries.
pub fn mean_train_summary_length(corpus: &Corpus) -> Option<f64> {
    let lengths: Vec<usize> = corpus
        .split(Split::Train)
        .map(|d| tokenize(&d.summary).len())
        .collect();
    if lengths.is_empty() {
        return None;
    }
    Some(lengths.iter().sum::<usize>() as f64 / lengths.len() as f64)
}
