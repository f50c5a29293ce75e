//! ROUGE-1/2/L over lowercase word tokens (no stemming, no stopword removal).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textstats::tokenize;

/// Human-readable description of the scoring configuration, echoed in reports.
pub const ROUGE_CONFIG: &str =
    "lowercased alphanumeric+apostrophe tokens; no stemming; no stopword removal; single reference";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RougeError {
    #[error("n must be at least 1")]
    ZeroN,
    #[error("reference is empty")]
    EmptyReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PrfScore {
    pub const ZERO: PrfScore = PrfScore {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };

    pub fn from_counts(overlap: usize, hyp_total: usize, ref_total: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        Self::from_pr(ratio(overlap, hyp_total), ratio(overlap, ref_total))
    }

    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        PrfScore {
            precision,
            recall,
            f1,
        }
    }
}

pub fn ngram_counts<S: AsRef<str>>(
    tokens: &[S],
    n: usize,
) -> Result<HashMap<Vec<&str>, usize>, RougeError> {
    if n == 0 {
        return Err(RougeError::ZeroN);
    }
    let mut counts = HashMap::new();
    for window in tokens.windows(n) {
        let gram: Vec<&str> = window.iter().map(AsRef::as_ref).collect();
        *counts.entry(gram).or_insert(0) += 1;
    }
    Ok(counts)
}

/// ROUGE-N with clipped n-gram overlap.
pub fn rouge_n<S: AsRef<str>>(
    hyp: &[S],
    reference: &[S],
    n: usize,
) -> Result<PrfScore, RougeError> {
    if n == 0 {
        return Err(RougeError::ZeroN);
    }
    if reference.is_empty() {
        return Err(RougeError::EmptyReference);
    }
    let hyp_grams = ngram_counts(hyp, n)?;
    let ref_grams = ngram_counts(reference, n)?;
    let overlap: usize = hyp_grams
        .iter()
        .map(|(g, &c)| c.min(ref_grams.get(g).copied().unwrap_or(0)))
        .sum();
    let hyp_total = hyp.len().saturating_sub(n - 1);
    let ref_total = reference.len().saturating_sub(n - 1);
    Ok(PrfScore::from_counts(overlap, hyp_total, ref_total))
}

/// Length of the longest common subsequence, O(|a|·|b|) time, O(|b|) space.
pub fn lcs_len<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> Result<PrfScore, RougeError> {
    if reference.is_empty() {
        return Err(RougeError::EmptyReference);
    }
    let lcs = lcs_len(hyp, reference);
    Ok(PrfScore::from_counts(lcs, hyp.len(), reference.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScores {
    pub rouge1: PrfScore,
    pub rouge2: PrfScore,
    #[serde(rename = "rougeL")]
    pub rouge_l: PrfScore,
}

/// ROUGE-1, ROUGE-2 and ROUGE-L between two raw texts.
pub fn rouge_texts(hypothesis: &str, reference: &str) -> Result<RougeScores, RougeError> {
    let hyp = tokenize(hypothesis);
    let reference = tokenize(reference);
    Ok(RougeScores {
        rouge1: rouge_n(&hyp, &reference, 1)?,
        rouge2: rouge_n(&hyp, &reference, 2)?,
        rouge_l: rouge_l(&hyp, &reference)?,
    })
}
