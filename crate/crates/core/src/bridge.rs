//! JSON-over-HTTP client for the model bridge.
//!
//! Endpoints: `POST /generate`, `POST /score`, `POST /relevance`,
//! `GET /health`. The bridge URL normally comes from `LAYSUM_BRIDGE_URL`.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::retrieval::{RerankScorer, ScorerError};
use crate::services::{
    GeneratorClient, LearnedMetric, MetricProvider, RelevanceScorer, ServiceError,
};

pub const BRIDGE_URL_ENV: &str = "LAYSUM_BRIDGE_URL";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub text: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub query: String,
    pub passages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceRequest {
    pub candidate: String,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceResponse {
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    #[serde(default)]
    pub mock: bool,
}

#[derive(Debug, Clone)]
pub struct BridgeClient {
    base: String,
    agent: ureq::Agent,
}

impl BridgeClient {
    pub fn new(base_url: &str) -> Self {
        Self::with_timeout(base_url, Duration::from_secs(120))
    }

    pub fn with_timeout(base_url: &str, timeout: Duration) -> Self {
        BridgeClient {
            base: base_url.trim_end_matches('/').to_string(),
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }

    /// Client for `LAYSUM_BRIDGE_URL`, or `None` when unset or empty.
    pub fn from_env() -> Option<Self> {
        std::env::var(BRIDGE_URL_ENV)
            .ok()
            .filter(|u| !u.trim().is_empty())
            .map(|u| Self::new(&u))
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        path: &str,
        body: &Req,
    ) -> Result<Resp, ServiceError> {
        let response = self.agent.post(&self.url(path)).send_json(body);
        read_json(response)
    }

    pub fn health(&self) -> Result<HealthResponse, ServiceError> {
        read_json(self.agent.get(&self.url("/health")).call())
    }

    pub fn score_passages(&self, query: &str, passages: &[&str]) -> Result<Vec<f64>, ServiceError> {
        let req = ScoreRequest {
            query: query.to_string(),
            passages: passages.iter().map(|p| p.to_string()).collect(),
        };
        let resp: ScoreResponse = self.post("/score", &req)?;
        if resp.scores.len() != passages.len() {
            return Err(ServiceError::Protocol(format!(
                "{} scores for {} passages",
                resp.scores.len(),
                passages.len()
            )));
        }
        Ok(resp.scores)
    }
}

fn read_json<T: DeserializeOwned>(
    response: Result<ureq::Response, ureq::Error>,
) -> Result<T, ServiceError> {
    match response {
        Ok(r) => r
            .into_json()
            .map_err(|e| ServiceError::Protocol(format!("bad response body: {e}"))),
        Err(ureq::Error::Status(status, r)) => Err(ServiceError::Http {
            status,
            body: r.into_string().unwrap_or_default(),
        }),
        Err(ureq::Error::Transport(t)) => Err(ServiceError::Transport(t.to_string())),
    }
}

impl GeneratorClient for BridgeClient {
    fn generate(&self, prompt: &str) -> Result<String, ServiceError> {
        let resp: GenerateResponse = self.post(
            "/generate",
            &GenerateRequest {
                prompt: prompt.to_string(),
            },
        )?;
        if resp.text.trim().is_empty() {
            return Err(ServiceError::EmptyOutput);
        }
        Ok(resp.text)
    }
}

impl RelevanceScorer for BridgeClient {
    fn relevance(&self, candidate: &str, reference: &str) -> Result<f64, ServiceError> {
        let resp: RelevanceResponse = self.post(
            "/relevance",
            &RelevanceRequest {
                candidate: candidate.to_string(),
                reference: reference.to_string(),
            },
        )?;
        if !(0.0..=1.0).contains(&resp.score) {
            return Err(ServiceError::Protocol(format!(
                "relevance {} outside [0, 1]",
                resp.score
            )));
        }
        Ok(resp.score)
    }
}

impl RerankScorer for BridgeClient {
    fn name(&self) -> &str {
        "bridge"
    }

    fn score(&self, query: &str, passage: &str) -> Result<f64, ScorerError> {
        self.score_passages(query, &[passage])
            .map(|s| s[0])
            .map_err(|e| ScorerError(e.to_string()))
    }

    /// One `/score` call for the whole candidate list.
    fn score_batch(&self, query: &str, passages: &[&str]) -> Vec<Result<f64, ScorerError>> {
        match self.score_passages(query, passages) {
            Ok(scores) => scores.into_iter().map(Ok).collect(),
            Err(e) => {
                let err = ScorerError(e.to_string());
                passages.iter().map(|_| Err(err.clone())).collect()
            }
        }
    }
}

impl MetricProvider for BridgeClient {
    /// BERTScore-style relevance comes from `/relevance`; the protocol has
    /// no endpoint for the other learned metrics.
    fn learned_metric(
        &self,
        metric: LearnedMetric,
        prediction: &str,
        reference: &str,
    ) -> Result<Option<f64>, ServiceError> {
        match metric {
            LearnedMetric::BertScore => self.relevance(prediction, reference).map(Some),
            _ => Ok(None),
        }
    }
}
