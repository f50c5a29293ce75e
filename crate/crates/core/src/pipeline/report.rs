use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::rouge::{rouge_texts, ROUGE_CONFIG};
use crate::services::{LearnedMetric, MetricProvider};
use crate::textstats::{readability_report, FamiliarWords};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPair {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub prediction: String,
    pub reference: String,
}

impl EvalPair {
    pub fn new(prediction: impl Into<String>, reference: impl Into<String>) -> Self {
        EvalPair {
            id: None,
            prediction: prediction.into(),
            reference: reference.into(),
        }
    }
}

/// ROUGE values are mean F1 in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelevanceGroup {
    pub rouge1: f64,
    pub rouge2: f64,
    #[serde(rename = "rougeL")]
    pub rouge_l: f64,
    pub bertscore: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityGroup {
    pub fkgl: f64,
    pub dcrs: f64,
    pub cli: f64,
    pub lens: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactualityGroup {
    pub alignscore: Option<f64>,
    pub summac: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub rouge: String,
    pub familiar_words: usize,
    pub metric_provider: bool,
}

/// Mean metrics over prediction/reference pairs, grouped like the
/// relevance / readability / factuality columns of a results table.
/// Metrics that need an unavailable model are `null` and listed in
/// `unavailable`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pairs: usize,
    pub relevance: RelevanceGroup,
    pub readability: ReadabilityGroup,
    pub factuality: FactualityGroup,
    pub unavailable: Vec<String>,
    pub config: ReportConfig,
}

struct PairScores {
    rouge: [f64; 3],
    readability: [f64; 3],
    learned: Vec<Option<f64>>,
}

fn score_pair(
    pair: &EvalPair,
    familiar: &FamiliarWords,
    provider: Option<&dyn MetricProvider>,
) -> Result<PairScores, PipelineError> {
    let rouge = rouge_texts(&pair.prediction, &pair.reference)?;
    let r = readability_report(&pair.prediction, familiar)?;
    let learned = match provider {
        Some(p) => LearnedMetric::ALL
            .iter()
            .map(|&m| p.learned_metric(m, &pair.prediction, &pair.reference))
            .collect::<Result<Vec<_>, _>>()?,
        None => vec![None; LearnedMetric::ALL.len()],
    };
    Ok(PairScores {
        rouge: [rouge.rouge1.f1, rouge.rouge2.f1, rouge.rouge_l.f1],
        readability: [r.fkgl, r.dcrs, r.cli],
        learned,
    })
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

/// Scores every pair (in parallel on the current pool) and averages in
/// input order.
pub fn evaluate(
    pairs: &[EvalPair],
    familiar: &FamiliarWords,
    provider: Option<&dyn MetricProvider>,
) -> Result<EvalReport, PipelineError> {
    if pairs.is_empty() {
        return Err(PipelineError::EmptyPairs);
    }
    let scores = pairs
        .par_iter()
        .enumerate()
        .map(|(index, pair)| {
            score_pair(pair, familiar, provider).map_err(|e| PipelineError::Pair {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n = scores.len();
    let rouge = |i: usize| mean(scores.iter().map(|s| s.rouge[i]), n);
    let read = |i: usize| mean(scores.iter().map(|s| s.readability[i]), n);
    let learned = |i: usize| -> Option<f64> {
        let values: Option<Vec<f64>> = scores.iter().map(|s| s.learned[i]).collect();
        values.map(|v| mean(v.into_iter(), n))
    };
    let learned_values: Vec<Option<f64>> = (0..LearnedMetric::ALL.len()).map(learned).collect();
    let unavailable = LearnedMetric::ALL
        .iter()
        .zip(&learned_values)
        .filter(|(_, v)| v.is_none())
        .map(|(m, _)| m.name().to_string())
        .collect();
    let [bertscore, lens, alignscore, summac] = learned_values[..] else {
        unreachable!("four learned metrics")
    };
    Ok(EvalReport {
        pairs: n,
        relevance: RelevanceGroup {
            rouge1: rouge(0),
            rouge2: rouge(1),
            rouge_l: rouge(2),
            bertscore,
        },
        readability: ReadabilityGroup {
            fkgl: read(0),
            dcrs: read(1),
            cli: read(2),
            lens,
        },
        factuality: FactualityGroup { alignscore, summac },
        unavailable,
        config: ReportConfig {
            rouge: ROUGE_CONFIG.to_string(),
            familiar_words: familiar.len(),
            metric_provider: provider.is_some(),
        },
    })
}

fn cell(v: Option<f64>, scale: f64) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{:.2}", v * scale))
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Markdown table; ROUGE, BERTScore and factuality scores are shown ×100.
    pub fn to_markdown(&self) -> String {
        let (rel, read, fact) = (&self.relevance, &self.readability, &self.factuality);
        let mut out = String::from("# Evaluation report\n\n");
        let _ = writeln!(out, "Pairs: {}\n", self.pairs);
        out.push_str("| | Relevance | | | | Readability | | | | Factuality | |\n");
        out.push_str("|---|---|---|---|---|---|---|---|---|---|---|\n");
        out.push_str("| | Rouge1↑ | Rouge2↑ | RougeL↑ | BERTScore↑ | FKGL↓ | DCRS↓ | CLI↓ | LENS↑ | AlignScore↑ | SummaC↑ |\n");
        let _ = writeln!(
            out,
            "| mean | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            cell(Some(rel.rouge1), 100.0),
            cell(Some(rel.rouge2), 100.0),
            cell(Some(rel.rouge_l), 100.0),
            cell(rel.bertscore, 100.0),
            cell(Some(read.fkgl), 1.0),
            cell(Some(read.dcrs), 1.0),
            cell(Some(read.cli), 1.0),
            cell(read.lens, 1.0),
            cell(fact.alignscore, 100.0),
            cell(fact.summac, 100.0),
        );
        out.push('\n');
        if !self.unavailable.is_empty() {
            let _ = writeln!(
                out,
                "Unavailable (no model service): {}\n",
                self.unavailable.join(", ")
            );
        }
        let _ = writeln!(out, "ROUGE: {}", self.config.rouge);
        let _ = writeln!(
            out,
            "Dale-Chall familiar words: {}",
            self.config.familiar_words
        );
        out
    }
}
