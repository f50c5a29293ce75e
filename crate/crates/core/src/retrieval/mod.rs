//! BM25 passage retrieval, second-stage reranking and hit-rate evaluation.

mod hit_rate;
mod index;
pub mod persist;
mod rerank;
pub mod synthetic;

use thiserror::Error;

pub use hit_rate::{
    hit_rate_eval, load_eval_pairs, EvalPair, HitRateRow, HitRateTable, HitRates, CANDIDATE_DEPTH,
};
pub use index::{
    build_index, idf, query_terms, Bm25Params, Index, Posting, RankedHit, MAX_QUERY_TOKENS,
};
pub use persist::{load_index, save_index};
pub use rerank::{rerank, LexicalOverlapScorer, OracleScorer, RerankScorer, ScorerError};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("passage collection is empty")]
    EmptyCollection,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("query has no indexable terms")]
    EmptyQuery,
    #[error("scorer failed on passage `{passage_id}`: {reason}")]
    ScorerFailure { passage_id: String, reason: String },
    #[error("gold passage `{0}` is not in the index")]
    UnknownGoldId(String),
    #[error("corrupt index file: {0}")]
    CorruptIndex(String),
    #[error("unsupported index format version {0}")]
    UnsupportedVersion(u32),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
