//! Gold-passage hit rate at cutoffs 1, 5 and 20.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::index::Index;
use super::rerank::{rerank, RerankScorer};
use super::RetrievalError;

/// Candidates retrieved per query before optional reranking.
pub const CANDIDATE_DEPTH: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPair {
    pub query: String,
    pub gold: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitRates {
    pub top1: f64,
    pub top5: f64,
    pub top20: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRateRow {
    pub method: String,
    #[serde(flatten)]
    pub rates: HitRates,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HitRateTable {
    pub rows: Vec<HitRateRow>,
}

impl HitRateTable {
    pub fn push(&mut self, method: impl Into<String>, rates: HitRates) {
        self.rows.push(HitRateRow {
            method: method.into(),
            rates,
        });
    }

    /// Markdown table with rates as percentages.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Method | Top1 | Top5 | Top20 |\n|---|---|---|---|\n");
        for row in &self.rows {
            let r = row.rates;
            let _ = writeln!(
                out,
                "| {} | {:.2} | {:.2} | {:.2} |",
                row.method,
                100.0 * r.top1,
                100.0 * r.top5,
                100.0 * r.top20
            );
        }
        out
    }
}

/// For each query, retrieves the top 20 by BM25, optionally reorders all of
/// them with `scorer`, and records where the gold passage landed.
pub fn hit_rate_eval(
    index: &Index,
    queries: &[EvalPair],
    scorer: Option<&dyn RerankScorer>,
) -> Result<HitRates, RetrievalError> {
    if queries.is_empty() {
        return Err(RetrievalError::InvalidParam("no evaluation queries".into()));
    }
    let mut hits_at = [0usize; 3];
    for pair in queries {
        if index.ordinal_of(&pair.gold).is_none() {
            return Err(RetrievalError::UnknownGoldId(pair.gold.clone()));
        }
        let mut hits = match index.search(&pair.query, CANDIDATE_DEPTH) {
            Ok(h) => h,
            Err(RetrievalError::EmptyQuery) => Vec::new(),
            Err(e) => return Err(e),
        };
        if let Some(scorer) = scorer {
            hits = rerank(index, &hits, &pair.query, scorer, hits.len())?;
        }
        if let Some(pos) = hits.iter().position(|h| h.passage_id == pair.gold) {
            for (slot, cutoff) in hits_at.iter_mut().zip([1, 5, 20]) {
                if pos < cutoff {
                    *slot += 1;
                }
            }
        }
    }
    let n = queries.len() as f64;
    Ok(HitRates {
        top1: hits_at[0] as f64 / n,
        top5: hits_at[1] as f64 / n,
        top20: hits_at[2] as f64 / n,
    })
}

/// Reads `{"query": ..., "gold": ...}` JSONL.
pub fn load_eval_pairs(path: impl AsRef<Path>) -> Result<Vec<EvalPair>, RetrievalError> {
    let path = path.as_ref();
    let contents = fs::read_to_string(path).map_err(|source| RetrievalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    contents
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| RetrievalError::InvalidParam(format!("line {}: {e}", i + 1)))
        })
        .collect()
}
