use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use thiserror::Error;

use super::index::{Index, RankedHit};
use super::RetrievalError;
use crate::textstats::tokenize;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct ScorerError(pub String);

/// Second-stage relevance scorer. Must be deterministic per
/// `(query, passage)` pair.
pub trait RerankScorer: Send + Sync {
    fn name(&self) -> &str;

    fn score(&self, query: &str, passage: &str) -> Result<f64, ScorerError>;

    /// Scores a candidate batch. The default fans out in parallel; results
    /// come back in input order.
    fn score_batch(&self, query: &str, passages: &[&str]) -> Vec<Result<f64, ScorerError>> {
        passages.par_iter().map(|p| self.score(query, p)).collect()
    }
}

/// Number of distinct query terms that occur in the passage.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalOverlapScorer;

impl RerankScorer for LexicalOverlapScorer {
    fn name(&self) -> &str {
        "lexical-overlap"
    }

    fn score(&self, query: &str, passage: &str) -> Result<f64, ScorerError> {
        let passage: HashSet<String> = tokenize(passage).into_iter().collect();
        let query: HashSet<String> = tokenize(query).into_iter().collect();
        Ok(query.intersection(&passage).count() as f64)
    }
}

/// Test scorer that knows the gold passage for each query: 1 for the gold
/// passage text, 0 otherwise.
#[derive(Debug, Clone, Default)]
pub struct OracleScorer {
    gold: HashMap<String, String>,
}

impl OracleScorer {
    pub fn new(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        OracleScorer {
            gold: pairs.into_iter().collect(),
        }
    }
}

impl RerankScorer for OracleScorer {
    fn name(&self) -> &str {
        "oracle"
    }

    fn score(&self, query: &str, passage: &str) -> Result<f64, ScorerError> {
        Ok(match self.gold.get(query) {
            Some(gold) if gold == passage => 1.0,
            _ => 0.0,
        })
    }
}

/// Rescores `hits` and keeps the best `m`, renumbering ranks from 1.
/// Equal new scores keep their prior order.
pub fn rerank(
    index: &Index,
    hits: &[RankedHit],
    query: &str,
    scorer: &dyn RerankScorer,
    m: usize,
) -> Result<Vec<RankedHit>, RetrievalError> {
    if m > hits.len() {
        return Err(RetrievalError::InvalidParam(format!(
            "rerank depth {m} exceeds {} candidates",
            hits.len()
        )));
    }
    let texts: Vec<&str> = hits.iter().map(|h| index.passage_text(h.ordinal)).collect();
    let results = scorer.score_batch(query, &texts);
    if results.len() != hits.len() {
        return Err(RetrievalError::ScorerFailure {
            passage_id: hits
                .first()
                .map(|h| h.passage_id.clone())
                .unwrap_or_default(),
            reason: format!(
                "scorer returned {} scores for {} passages",
                results.len(),
                hits.len()
            ),
        });
    }
    let mut rescored = Vec::with_capacity(hits.len());
    for (hit, result) in hits.iter().zip(results) {
        let score = result
            .and_then(|s| {
                if s.is_finite() {
                    Ok(s)
                } else {
                    Err(ScorerError(format!("non-finite score {s}")))
                }
            })
            .map_err(|e| RetrievalError::ScorerFailure {
                passage_id: hit.passage_id.clone(),
                reason: e.0,
            })?;
        rescored.push((score, hit));
    }
    rescored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.rank.cmp(&b.1.rank)));
    Ok(rescored
        .into_iter()
        .take(m)
        .enumerate()
        .map(|(i, (score, hit))| RankedHit {
            passage_id: hit.passage_id.clone(),
            ordinal: hit.ordinal,
            score,
            rank: i + 1,
        })
        .collect())
}
