//! Article and grounding-passage ingestion from line-delimited JSON.
//!
//! One JSON object per line. Article records carry
//! `id, article, summary, keyphrases, split`; passage records carry
//! `id, text` and an optional `source` label. Validation is fail-fast and
//! every error raised while loading a file names the offending line.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("field `{field}` has the wrong type: {detail}")]
    InvalidField { field: String, detail: String },
    #[error("empty id")]
    EmptyId,
    #[error("empty article")]
    EmptyArticle,
    #[error("empty summary for a {0} record")]
    EmptySummary(Split),
    #[error("empty text")]
    EmptyText,
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<CorpusError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    /// Strips any line-number wrapper.
    pub fn root(&self) -> &CorpusError {
        match self {
            CorpusError::AtLine { source, .. } => source.root(),
            other => other,
        }
    }

    fn at_line(self, line: usize) -> Self {
        CorpusError::AtLine {
            line,
            source: Box::new(self),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    fn parse(raw: &str) -> Option<Self> {
        match raw {
            "train" => Some(Split::Train),
            "validation" | "val" => Some(Split::Validation),
            "test" => Some(Split::Test),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One article record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub article: String,
    pub summary: String,
    pub keyphrases: Vec<String>,
    pub split: Split,
}

impl Document {
    /// Checks the record invariants: nonempty id and article, and a
    /// nonempty reference summary outside the test split.
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.id.is_empty() {
            return Err(CorpusError::EmptyId);
        }
        if self.article.trim().is_empty() {
            return Err(CorpusError::EmptyArticle);
        }
        if self.split != Split::Test && self.summary.trim().is_empty() {
            return Err(CorpusError::EmptySummary(self.split));
        }
        Ok(())
    }

    /// Serializes to a single JSONL line (no trailing newline).
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("Document serialization is infallible")
    }
}

/// One grounding-knowledge paragraph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub source: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Validation => self.validation,
            Split::Test => self.test,
        }
    }

    fn bump(&mut self, split: Split) {
        match split {
            Split::Train => self.train += 1,
            Split::Validation => self.validation += 1,
            Split::Test => self.test += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }
}

/// An ordered, validated collection of documents.
///
/// Constructed only through [`Corpus::from_documents`] or [`load_corpus`],
/// so the counts always agree with the document list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Corpus {
    documents: Vec<Document>,
    counts: SplitCounts,
}

impl Corpus {
    pub fn from_documents(documents: Vec<Document>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(documents.len());
        let mut counts = SplitCounts::default();
        for doc in &documents {
            doc.validate()?;
            if !seen.insert(doc.id.as_str()) {
                return Err(CorpusError::DuplicateId(doc.id.clone()));
            }
            counts.bump(doc.split);
        }
        Ok(Corpus { documents, counts })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn counts(&self) -> SplitCounts {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(move |d| d.split == split)
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.documents
    }
}

fn parse_object(line: &str) -> Result<Map<String, Value>, CorpusError> {
    match serde_json::from_str::<Value>(line) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CorpusError::MalformedJson("expected a JSON object".into())),
        Err(e) => Err(CorpusError::MalformedJson(e.to_string())),
    }
}

fn string_field(map: &Map<String, Value>, name: &str) -> Result<Option<String>, CorpusError> {
    match map.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(other) => Err(CorpusError::InvalidField {
            field: name.into(),
            detail: format!("expected string, got {other}"),
        }),
    }
}

fn required_string(map: &Map<String, Value>, name: &str) -> Result<String, CorpusError> {
    string_field(map, name)?.ok_or_else(|| CorpusError::MissingField(name.into()))
}

/// Parses and validates one article record. Unknown fields are ignored.
///
/// `keyphrases` defaults to an empty list and `split` to `train`; an empty
/// `summary` is accepted only for test-split records.
pub fn parse_record(line: &str) -> Result<Document, CorpusError> {
    let map = parse_object(line)?;
    let id = required_string(&map, "id")?;
    let article = required_string(&map, "article")?;
    if article.trim().is_empty() {
        return Err(CorpusError::EmptyArticle);
    }
    let summary = string_field(&map, "summary")?.unwrap_or_default();
    let keyphrases = match map.get("keyphrases") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                other => Err(CorpusError::InvalidField {
                    field: "keyphrases".into(),
                    detail: format!("expected string element, got {other}"),
                }),
            })
            .collect::<Result<_, _>>()?,
        Some(other) => {
            return Err(CorpusError::InvalidField {
                field: "keyphrases".into(),
                detail: format!("expected array, got {other}"),
            })
        }
    };
    let split = match string_field(&map, "split")? {
        None => Split::Train,
        Some(raw) => Split::parse(&raw).ok_or_else(|| CorpusError::InvalidField {
            field: "split".into(),
            detail: format!("unknown split `{raw}`"),
        })?,
    };
    let doc = Document {
        id,
        article,
        summary,
        keyphrases,
        split,
    };
    doc.validate()?;
    Ok(doc)
}

/// Parses one passage record (`id`, `text`, optional `source`).
pub fn parse_passage(line: &str) -> Result<Passage, CorpusError> {
    let map = parse_object(line)?;
    let id = required_string(&map, "id")?;
    if id.is_empty() {
        return Err(CorpusError::EmptyId);
    }
    let text = required_string(&map, "text")?;
    if text.trim().is_empty() {
        return Err(CorpusError::EmptyText);
    }
    let source = string_field(&map, "source")?.unwrap_or_default();
    Ok(Passage { id, text, source })
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Yields `(1-based line number, line)` for every non-blank line.
fn records(contents: &str) -> impl Iterator<Item = (usize, &str)> {
    contents
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
}

/// Parses a whole JSONL document stream held in memory.
pub fn parse_corpus(contents: &str) -> Result<Corpus, CorpusError> {
    let mut documents = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, line) in records(contents) {
        let doc = parse_record(line).map_err(|e| e.at_line(line_no))?;
        if !seen.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateId(doc.id).at_line(line_no));
        }
        documents.push(doc);
    }
    Corpus::from_documents(documents)
}

/// Loads a JSONL article file. Document order follows file order.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    parse_corpus(&read(path.as_ref())?)
}

pub fn parse_passages(contents: &str) -> Result<Vec<Passage>, CorpusError> {
    let mut passages = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, line) in records(contents) {
        let passage = parse_passage(line).map_err(|e| e.at_line(line_no))?;
        if !seen.insert(passage.id.clone()) {
            return Err(CorpusError::DuplicateId(passage.id).at_line(line_no));
        }
        passages.push(passage);
    }
    Ok(passages)
}

/// Loads a JSONL passage collection in file order.
pub fn load_passages(path: impl AsRef<Path>) -> Result<Vec<Passage>, CorpusError> {
    parse_passages(&read(path.as_ref())?)
}
