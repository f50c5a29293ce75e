use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RetrievalError;
use crate::corpus::Passage;
use crate::textstats::tokenize;

/// Queries are cut to this many word tokens before scoring.
pub const MAX_QUERY_TOKENS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    /// Pyserini's defaults.
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        if !(self.k1.is_finite() && self.k1 > 0.0) {
            return Err(RetrievalError::InvalidParam(format!(
                "k1 must be > 0, got {}",
                self.k1
            )));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(RetrievalError::InvalidParam(format!(
                "b must be in [0, 1], got {}",
                self.b
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub ordinal: u32,
    pub tf: u32,
}

/// BM25 inverted index over a passage collection.
///
/// Passage texts are kept alongside the postings so that rerankers and the
/// augmentation step can work from the index alone.
#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    pub(super) params: Bm25Params,
    pub(super) passage_ids: Vec<String>,
    pub(super) passage_texts: Vec<String>,
    pub(super) doc_lengths: Vec<u32>,
    pub(super) avg_doc_length: f64,
    pub(super) postings: BTreeMap<String, Vec<Posting>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedHit {
    pub passage_id: String,
    /// Position of the passage in the index.
    pub ordinal: u32,
    pub score: f64,
    pub rank: usize,
}

pub fn build_index(passages: &[Passage], params: Bm25Params) -> Result<Index, RetrievalError> {
    if passages.is_empty() {
        return Err(RetrievalError::EmptyCollection);
    }
    params.validate()?;
    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut doc_lengths = Vec::with_capacity(passages.len());
    for (ordinal, passage) in passages.iter().enumerate() {
        let tokens = tokenize(&passage.text);
        doc_lengths.push(tokens.len() as u32);
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t).or_insert(0) += 1;
        }
        for (term, count) in tf {
            postings.entry(term).or_default().push(Posting {
                ordinal: ordinal as u32,
                tf: count,
            });
        }
    }
    Index::from_parts(
        params,
        passages.iter().map(|p| p.id.clone()).collect(),
        passages.iter().map(|p| p.text.clone()).collect(),
        doc_lengths,
        postings,
    )
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`
pub fn idf(n_docs: usize, df: usize) -> f64 {
    let (n, df) = (n_docs as f64, df as f64);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

fn term_weight(params: Bm25Params, idf: f64, tf: f64, len: f64, avg: f64) -> f64 {
    let norm = params.k1 * (1.0 - params.b + params.b * len / avg);
    idf * (tf * (params.k1 + 1.0)) / (tf + norm)
}

/// Distinct query terms in first-occurrence order, after truncation.
pub fn query_terms(query: &str) -> Vec<String> {
    let mut terms: Vec<String> = Vec::new();
    for t in tokenize(query).into_iter().take(MAX_QUERY_TOKENS) {
        if !terms.contains(&t) {
            terms.push(t);
        }
    }
    terms
}

impl Index {
    pub(super) fn from_parts(
        params: Bm25Params,
        passage_ids: Vec<String>,
        passage_texts: Vec<String>,
        doc_lengths: Vec<u32>,
        postings: BTreeMap<String, Vec<Posting>>,
    ) -> Result<Self, RetrievalError> {
        params.validate()?;
        let n = passage_ids.len();
        if n == 0 {
            return Err(RetrievalError::EmptyCollection);
        }
        if passage_texts.len() != n || doc_lengths.len() != n {
            return Err(RetrievalError::CorruptIndex(
                "section lengths disagree".into(),
            ));
        }
        for (term, list) in &postings {
            let sorted = list.windows(2).all(|w| w[0].ordinal < w[1].ordinal);
            let in_range = list.iter().all(|p| (p.ordinal as usize) < n && p.tf > 0);
            if !sorted || !in_range || list.is_empty() {
                return Err(RetrievalError::CorruptIndex(format!(
                    "bad posting list for `{term}`"
                )));
            }
        }
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_length = total as f64 / n as f64;
        Ok(Index {
            params,
            passage_ids,
            passage_texts,
            doc_lengths,
            avg_doc_length,
            postings,
        })
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn len(&self) -> usize {
        self.passage_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passage_ids.is_empty()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn passage_ids(&self) -> &[String] {
        &self.passage_ids
    }

    pub fn postings(&self, term: &str) -> Option<&[Posting]> {
        self.postings.get(term).map(Vec::as_slice)
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn passage_text(&self, ordinal: u32) -> &str {
        &self.passage_texts[ordinal as usize]
    }

    pub fn ordinal_of(&self, passage_id: &str) -> Option<u32> {
        self.passage_ids
            .iter()
            .position(|id| id == passage_id)
            .map(|i| i as u32)
    }

    pub fn passage(&self, ordinal: u32) -> Passage {
        Passage {
            id: self.passage_ids[ordinal as usize].clone(),
            text: self.passage_texts[ordinal as usize].clone(),
            source: String::new(),
        }
    }

    /// Top-`k` passages by BM25. Ties go to the lower ordinal; only passages
    /// sharing at least one term with the query are returned.
    pub fn search(&self, query: &str, k: usize) -> Result<Vec<RankedHit>, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::InvalidParam("k must be >= 1".into()));
        }
        let terms = query_terms(query);
        if terms.is_empty() {
            return Err(RetrievalError::EmptyQuery);
        }
        let n = self.len();
        let mut scores = vec![0.0f64; n];
        let mut matched = vec![false; n];
        for term in &terms {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            let term_idf = idf(n, list.len());
            for p in list {
                let ord = p.ordinal as usize;
                scores[ord] += term_weight(
                    self.params,
                    term_idf,
                    f64::from(p.tf),
                    f64::from(self.doc_lengths[ord]),
                    self.avg_doc_length,
                );
                matched[ord] = true;
            }
        }
        let mut ranked: Vec<usize> = (0..n).filter(|&i| matched[i]).collect();
        ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        ranked.truncate(k);
        Ok(ranked
            .into_iter()
            .enumerate()
            .map(|(i, ord)| RankedHit {
                passage_id: self.passage_ids[ord].clone(),
                ordinal: ord as u32,
                score: scores[ord],
                rank: i + 1,
            })
            .collect())
    }
}
