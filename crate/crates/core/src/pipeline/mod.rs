//! End-to-end lay summarization run for one document:
//! first pass → query → BM25 top-k → rerank top-m → knowledge-augmented
//! generation (optionally paraphrased) → readability and reward.

pub mod prompts;
mod report;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use prompts::{
    build_paraphrase_prompt, build_summarize_prompt, PromptTemplate, PARAPHRASE, SUMMARIZE,
};
pub use report::{
    evaluate, EvalPair, EvalReport, FactualityGroup, ReadabilityGroup, RelevanceGroup,
};

use crate::corpus::{Document, Passage};
use crate::ppo::keyphrase_coverage;
use crate::retrieval::{rerank, Index, RankedHit, RetrievalError, MAX_QUERY_TOKENS};
use crate::reward::{composite_reward, RewardBreakdown, RewardConfig, RewardError};
use crate::rouge::{rouge_l, RougeError};
use crate::services::{GeneratorClient, ServiceError, Services};
use crate::textstats::{
    readability_report, sentence_spans, tokenize, FamiliarWords, ReadabilityReport, TextError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    FirstPass,
    Query,
    Retrieve,
    Rerank,
    Generate,
    Paraphrase,
    Score,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("stage serializes");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error("empty input")]
    EmptyInput,
    #[error("empty article")]
    EmptyArticle,
    #[error("prompt mode requires a generator but none is configured")]
    GeneratorUnavailable,
    #[error("query source `reference_summary` is unavailable: document has no reference summary")]
    QuerySourceUnavailable,
    #[error("no evaluation pairs")]
    EmptyPairs,
    #[error("pair {index}: {source}")]
    Pair {
        index: usize,
        #[source]
        source: Box<PipelineError>,
    },
    #[error("document `{doc_id}`, stage {stage}: {source}")]
    Stage {
        doc_id: String,
        stage: Stage,
        #[source]
        source: Box<PipelineError>,
    },
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Rouge(#[from] RougeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuerySource {
    GeneratedSummary,
    ReferenceSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    /// Knowledge-augmented input is sent to the generator as is.
    None,
    /// Summarization prompt over the knowledge-augmented input.
    SummarizeWithKeyphrases,
    /// Summarization prompt, then the one-shot paraphrase prompt on its output.
    Paraphrase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub query_source: QuerySource,
    pub retrieve_k: usize,
    pub rerank_m: usize,
    pub prompt_mode: PromptMode,
    /// Sentences kept by the extractive fallback.
    pub lead_sentences: usize,
    pub reward: RewardConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            query_source: QuerySource::GeneratedSummary,
            retrieve_k: 20,
            rerank_m: 5,
            prompt_mode: PromptMode::None,
            lead_sentences: 8,
            reward: RewardConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidConfig(m));
        if self.retrieve_k == 0 || self.rerank_m == 0 {
            return bad("retrieve_k and rerank_m must be >= 1".into());
        }
        if self.rerank_m > self.retrieve_k {
            return bad(format!(
                "rerank_m ({}) exceeds retrieve_k ({})",
                self.rerank_m, self.retrieve_k
            ));
        }
        if self.lead_sentences == 0 {
            return bad("lead_sentences must be >= 1".into());
        }
        Ok(())
    }
}

/// The first `k` sentences of `text`, sliced verbatim from the source.
pub fn lead_sentences(text: &str, k: usize) -> String {
    let spans = sentence_spans(text);
    match (spans.first(), spans[..k.min(spans.len())].last()) {
        (Some(first), Some(last)) => text[first.start..last.end].to_string(),
        _ => text.trim().to_string(),
    }
}

/// Initial summary: generated from the summarization prompt when a
/// generator is available, otherwise the article's lead sentences.
pub fn first_pass(
    doc: &Document,
    generator: Option<&dyn GeneratorClient>,
    lead: usize,
) -> Result<String, PipelineError> {
    match generator {
        Some(g) => Ok(g.generate(&build_summarize_prompt(&doc.article, &doc.keyphrases)?)?),
        None => {
            if doc.article.trim().is_empty() {
                return Err(PipelineError::EmptyArticle);
            }
            Ok(lead_sentences(&doc.article, lead))
        }
    }
}

/// Cuts `text` after its `max`-th word, keeping the original characters.
pub fn truncate_words(text: &str, max: usize) -> &str {
    let mut seen = 0;
    let mut in_word = false;
    for (i, c) in text.char_indices() {
        let w = c.is_alphanumeric();
        if w && !in_word {
            if seen == max {
                return text[..i].trim_end();
            }
            seen += 1;
        }
        in_word = w || (in_word && (c == '\'' || c == '\u{2019}'));
    }
    text
}

pub const KNOWLEDGE_OPEN: &str = "[KNOWLEDGE]";
pub const KNOWLEDGE_CLOSE: &str = "[/KNOWLEDGE]";

/// Article text followed by a knowledge block listing passages in rank order.
pub fn augment(doc: &Document, passages: &[Passage]) -> String {
    if passages.is_empty() {
        return doc.article.clone();
    }
    let mut out = String::with_capacity(doc.article.len() + 64);
    out.push_str(&doc.article);
    out.push_str("\n\n");
    out.push_str(KNOWLEDGE_OPEN);
    out.push('\n');
    for (rank, p) in passages.iter().enumerate() {
        out.push_str(&format!("[{}] {}: {}\n", rank + 1, p.id, p.text));
    }
    out.push_str(KNOWLEDGE_CLOSE);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub stage: Stage,
    pub template: String,
    pub template_sha256: String,
    pub prompt: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceSource {
    Bridge,
    RougeLF1,
    KeyphraseCoverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub doc_id: String,
    pub first_pass: String,
    pub query_source: QuerySource,
    pub query: String,
    pub retrieved: Vec<RankedHit>,
    pub reranked: Vec<RankedHit>,
    pub augmented_input: String,
    pub prompts: Vec<PromptRecord>,
    pub rag_output: String,
    pub final_summary: String,
    pub readability: ReadabilityReport,
    pub relevance_source: RelevanceSource,
    pub reward: RewardBreakdown,
}

fn at(doc: &Document, stage: Stage) -> impl Fn(PipelineError) -> PipelineError + '_ {
    move |e| PipelineError::Stage {
        doc_id: doc.id.clone(),
        stage,
        source: Box::new(e),
    }
}

fn generate_with(
    generator: &dyn GeneratorClient,
    template: &PromptTemplate,
    stage: Stage,
    prompt: String,
    prompts: &mut Vec<PromptRecord>,
) -> Result<String, PipelineError> {
    let out = generator.generate(&prompt)?;
    prompts.push(PromptRecord {
        stage,
        template: format!("{}.v{}", template.name, template.version),
        template_sha256: template.sha256(),
        prompt,
    });
    Ok(out)
}

/// Runs every stage for one document, halting at the first error.
pub fn run(
    doc: &Document,
    index: &Index,
    services: &Services,
    cfg: &PipelineConfig,
    familiar: &FamiliarWords,
) -> Result<PipelineResult, PipelineError> {
    cfg.validate()?;
    let generator = services.generator.as_deref();
    if cfg.prompt_mode != PromptMode::None && generator.is_none() {
        return Err(PipelineError::GeneratorUnavailable);
    }
    let mut prompts = Vec::new();

    let first = match generator {
        Some(g) => {
            let prompt = build_summarize_prompt(&doc.article, &doc.keyphrases)
                .map_err(at(doc, Stage::FirstPass))?;
            generate_with(g, &SUMMARIZE, Stage::FirstPass, prompt, &mut prompts)
        }
        None => first_pass(doc, None, cfg.lead_sentences),
    }
    .map_err(at(doc, Stage::FirstPass))?;

    let query_text = match cfg.query_source {
        QuerySource::GeneratedSummary => first.as_str(),
        QuerySource::ReferenceSummary if doc.summary.trim().is_empty() => {
            return Err(at(doc, Stage::Query)(PipelineError::QuerySourceUnavailable))
        }
        QuerySource::ReferenceSummary => doc.summary.as_str(),
    };
    let query = truncate_words(query_text, MAX_QUERY_TOKENS).to_string();

    let retrieved = index
        .search(&query, cfg.retrieve_k)
        .map_err(|e| at(doc, Stage::Retrieve)(e.into()))?;
    let depth = cfg.rerank_m.min(retrieved.len());
    let reranked = rerank(index, &retrieved, &query, services.scorer.as_ref(), depth)
        .map_err(|e| at(doc, Stage::Rerank)(e.into()))?;
    let passages: Vec<Passage> = reranked.iter().map(|h| index.passage(h.ordinal)).collect();
    let augmented_input = augment(doc, &passages);

    let rag_output = match (generator, cfg.prompt_mode) {
        (None, _) => Ok(lead_sentences(&doc.article, cfg.lead_sentences)),
        (Some(g), PromptMode::None) => g.generate(&augmented_input).map_err(PipelineError::from),
        (Some(g), _) => build_summarize_prompt(&augmented_input, &doc.keyphrases)
            .and_then(|p| generate_with(g, &SUMMARIZE, Stage::Generate, p, &mut prompts)),
    }
    .map_err(at(doc, Stage::Generate))?;

    let final_summary = match (generator, cfg.prompt_mode) {
        (Some(g), PromptMode::Paraphrase) => build_paraphrase_prompt(&rag_output)
            .and_then(|p| generate_with(g, &PARAPHRASE, Stage::Paraphrase, p, &mut prompts))
            .map_err(at(doc, Stage::Paraphrase))?,
        _ => rag_output.clone(),
    };

    let score =
        || -> Result<(ReadabilityReport, RelevanceSource, RewardBreakdown), PipelineError> {
            let readability = readability_report(&final_summary, familiar)?;
            let (source, relevance) = match (&services.relevance, doc.summary.trim().is_empty()) {
                (Some(r), false) => (
                    RelevanceSource::Bridge,
                    r.relevance(&final_summary, &doc.summary)?,
                ),
                (_, false) => (
                    RelevanceSource::RougeLF1,
                    rouge_l(&tokenize(&final_summary), &tokenize(&doc.summary))?.f1,
                ),
                (_, true) => (
                    RelevanceSource::KeyphraseCoverage,
                    keyphrase_coverage(&final_summary, &doc.keyphrases),
                ),
            };
            let reward = composite_reward(
                cfg.reward.readability_of(&readability),
                relevance,
                tokenize(&final_summary).len(),
                &cfg.reward,
            )?;
            Ok((readability, source, reward))
        };
    let (readability, relevance_source, reward) = score().map_err(at(doc, Stage::Score))?;

    Ok(PipelineResult {
        doc_id: doc.id.clone(),
        first_pass: first,
        query_source: cfg.query_source,
        query,
        retrieved,
        reranked,
        augmented_input,
        prompts,
        rag_output,
        final_summary,
        readability,
        relevance_source,
        reward,
    })
}

/// Runs documents in parallel; results come back in input order.
pub fn run_batch(
    docs: &[Document],
    index: &Index,
    services: &Services,
    cfg: &PipelineConfig,
    familiar: &FamiliarWords,
) -> Vec<Result<PipelineResult, PipelineError>> {
    docs.par_iter()
        .map(|d| run(d, index, services, cfg, familiar))
        .collect()
}

/// Runs `f` on a dedicated pool of `jobs` worker threads.
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}
