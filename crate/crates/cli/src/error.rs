use std::error::Error as _;

use laysum_core::config::ConfigError;
use laysum_core::corpus::CorpusError;
use laysum_core::pipeline::PipelineError;
use laysum_core::ppo::PpoError;
use laysum_core::retrieval::RetrievalError;
use laysum_core::reward::RewardError;
use laysum_core::rouge::RougeError;
use laysum_core::services::ServiceError;
use laysum_core::textstats::TextError;
use thiserror::Error;

/// Runtime failures; all map to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {detail}")]
    Input { path: String, detail: String },
    #[error("{0}")]
    Unavailable(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Rouge(#[from] RougeError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Ppo(#[from] PpoError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Service(#[from] ServiceError),
}

impl CliError {
    /// The error and its causes on a single line.
    pub fn one_line(&self) -> String {
        let mut msg = self.to_string();
        let mut cause = self.source();
        while let Some(c) = cause {
            let text = c.to_string();
            if !msg.contains(&text) {
                msg.push_str(": ");
                msg.push_str(&text);
            }
            cause = c.source();
        }
        msg.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}
