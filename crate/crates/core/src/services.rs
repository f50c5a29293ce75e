//! Model-service boundary: text generation, relevance scoring and learned
//! evaluation metrics, with deterministic offline mocks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::retrieval::{LexicalOverlapScorer, RerankScorer};
use crate::rouge::rouge_n;
use crate::textstats::tokenize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServiceError {
    #[error("service returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("empty generation")]
    EmptyOutput,
}

/// Text generator (summarizer or paraphrasing LLM).
pub trait GeneratorClient: Send + Sync {
    fn generate(&self, prompt: &str) -> Result<String, ServiceError>;
}

/// Candidate-vs-reference relevance in `[0, 1]`.
pub trait RelevanceScorer: Send + Sync {
    fn relevance(&self, candidate: &str, reference: &str) -> Result<f64, ServiceError>;
}

/// Evaluation metrics that need a learned model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnedMetric {
    BertScore,
    Lens,
    AlignScore,
    SummaC,
}

impl LearnedMetric {
    pub const ALL: [LearnedMetric; 4] = [
        LearnedMetric::BertScore,
        LearnedMetric::Lens,
        LearnedMetric::AlignScore,
        LearnedMetric::SummaC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnedMetric::BertScore => "bertscore",
            LearnedMetric::Lens => "lens",
            LearnedMetric::AlignScore => "alignscore",
            LearnedMetric::SummaC => "summac",
        }
    }
}

/// Source of learned metrics. `Ok(None)` means the provider cannot compute
/// the metric, which reports mark as unavailable.
pub trait MetricProvider: Send + Sync {
    fn learned_metric(
        &self,
        metric: LearnedMetric,
        prediction: &str,
        reference: &str,
    ) -> Result<Option<f64>, ServiceError>;
}

/// Number of trailing words the mock generator echoes.
pub const MOCK_ECHO_WORDS: usize = 50;

/// Deterministic generator: returns the last 50 whitespace-separated words
/// of the prompt.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockGenerator;

impl GeneratorClient for MockGenerator {
    fn generate(&self, prompt: &str) -> Result<String, ServiceError> {
        let words: Vec<&str> = prompt.split_whitespace().collect();
        let start = words.len().saturating_sub(MOCK_ECHO_WORDS);
        let text = words[start..].join(" ");
        if text.is_empty() {
            return Err(ServiceError::EmptyOutput);
        }
        Ok(text)
    }
}

/// Unigram F1 between candidate and reference tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnigramF1Relevance;

impl RelevanceScorer for UnigramF1Relevance {
    fn relevance(&self, candidate: &str, reference: &str) -> Result<f64, ServiceError> {
        let reference = tokenize(reference);
        if reference.is_empty() {
            return Ok(0.0);
        }
        Ok(rouge_n(&tokenize(candidate), &reference, 1)
            .map(|s| s.f1)
            .unwrap_or(0.0))
    }
}

/// The services a pipeline run can call.
pub struct Services {
    pub generator: Option<Box<dyn GeneratorClient>>,
    pub scorer: Box<dyn RerankScorer>,
    /// Relevance term of the reward; ROUGE-L F1 is used when absent.
    pub relevance: Option<Box<dyn RelevanceScorer>>,
}

impl Services {
    /// No generator; lexical reranking; ROUGE-L relevance.
    pub fn offline() -> Self {
        Services {
            generator: None,
            scorer: Box::new(LexicalOverlapScorer),
            relevance: None,
        }
    }

    /// Mock generator with lexical reranking.
    pub fn mock() -> Self {
        Services {
            generator: Some(Box::new(MockGenerator)),
            scorer: Box::new(LexicalOverlapScorer),
            relevance: None,
        }
    }
}
