//! Tokenization and readability metrics (FRE, FKGL, Dale–Chall, Coleman–Liau).
//!
//! Word rule: a word is a maximal run of alphanumeric characters and
//! apostrophes, lowercased, with apostrophes trimmed from both ends.
//!
//! Sentence rule: a sentence ends at a run of `.`, `!` or `?` (optionally
//! followed by closing quotes or brackets) that is followed by whitespace or
//! the end of the text. A lone `.` does not end a sentence when the token it
//! closes is a guarded abbreviation or a single-letter initial. Sentences
//! without any word are dropped.

use std::collections::HashSet;
use std::fs;
use std::ops::Range;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    #[error("text is empty or contains no words")]
    EmptyText,
}

/// Abbreviations that never end a sentence. Versioned with the crate.
pub const ABBREVIATION_GUARD: &[&str] = &["dr.", "mr.", "e.g.", "i.e.", "et al.", "fig.", "eq."];

const DEFAULT_FAMILIAR: &str = include_str!("../resources/dale_chall_familiar.txt");

/// The Dale–Chall familiar-word list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FamiliarWords(HashSet<String>);

impl FamiliarWords {
    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(contents: &str) -> Self {
        FamiliarWords(
            contents
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path)?))
    }

    /// The bundled 2,941-word list.
    pub fn bundled() -> &'static FamiliarWords {
        static LIST: OnceLock<FamiliarWords> = OnceLock::new();
        LIST.get_or_init(|| FamiliarWords::parse(DEFAULT_FAMILIAR))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Familiar if the word, or a simple plural / -ed / -ing stem of it, is listed.
    pub fn is_familiar(&self, word: &str) -> bool {
        if self.contains(word) {
            return true;
        }
        inflection_stems(word).iter().any(|s| self.contains(s))
    }
}

impl<S: Into<String>> FromIterator<S> for FamiliarWords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        FamiliarWords(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

fn inflection_stems(word: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut push = |s: &str, suffix: &str| {
        if !s.is_empty() {
            out.push(format!("{s}{suffix}"));
        }
    };
    if let Some(stem) = word.strip_suffix("'s") {
        push(stem, "");
    }
    if let Some(stem) = word.strip_suffix("ies") {
        push(stem, "y");
    }
    if let Some(stem) = word.strip_suffix("es") {
        push(stem, "");
    }
    if let Some(stem) = word.strip_suffix('s') {
        push(stem, "");
    }
    if let Some(stem) = word.strip_suffix("ied") {
        push(stem, "y");
    }
    if let Some(stem) = word.strip_suffix("ed") {
        push(stem, "");
        push(stem, "e");
    }
    if let Some(stem) = word.strip_suffix("ing") {
        push(stem, "");
        push(stem, "e");
    }
    out
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '\u{2019}'
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Splits text into lowercase words. Never fails; returns an empty list for
/// text without words.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !is_word_char(c))
        .map(|run| run.trim_matches(is_apostrophe))
        .filter(|w| !w.is_empty())
        .map(|w| w.replace('\u{2019}', "'").to_lowercase())
        .collect()
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}' | '\u{201d}' | '\u{2019}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '{' | '\u{201c}' | '\u{2018}')
}

/// True when the lone period ending at `dot` closes a guarded token.
fn guarded(text: &str, dot: usize) -> bool {
    let head = &text[..=dot];
    let token_start = head
        .rfind(char::is_whitespace)
        .map(|i| i + head[i..].chars().next().map_or(1, char::len_utf8))
        .unwrap_or(0);
    let token = head[token_start..]
        .trim_start_matches(is_opener)
        .to_lowercase();
    if ABBREVIATION_GUARD.contains(&token.as_str()) {
        return true;
    }
    // multi-token guards such as "et al."
    let before = head[..token_start].trim_end();
    let prev_start = before
        .rfind(char::is_whitespace)
        .map(|i| i + 1)
        .unwrap_or(0);
    let pair = format!(
        "{} {}",
        before[prev_start..]
            .trim_start_matches(is_opener)
            .to_lowercase(),
        token
    );
    if ABBREVIATION_GUARD.contains(&pair.as_str()) {
        return true;
    }
    // single-letter initials: "A.", "J."
    let mut chars = token.chars();
    matches!((chars.next(), chars.next(), chars.next()), (Some(c), Some('.'), None) if c.is_alphabetic())
}

/// Byte ranges of each sentence in `text`, trimmed of surrounding
/// whitespace. Sentences without words are omitted.
pub fn sentence_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start = 0;
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let mut end = i + c.len_utf8();
        let mut lone_period = c == '.';
        while let Some(&(j, next)) = iter.peek() {
            if matches!(next, '.' | '!' | '?') {
                lone_period = false;
            } else if !is_closer(next) {
                break;
            }
            end = j + next.len_utf8();
            iter.next();
        }
        let at_eof = end == text.len();
        let before_space = text[end..].starts_with(char::is_whitespace);
        if !(at_eof || before_space) {
            continue;
        }
        if !at_eof && lone_period && guarded(text, i) {
            continue;
        }
        push_span(text, start..end, &mut spans);
        start = end;
    }
    push_span(text, start..text.len(), &mut spans);
    spans
}

fn push_span(text: &str, range: Range<usize>, spans: &mut Vec<Range<usize>>) {
    let piece = &text[range.clone()];
    let lead = piece.len() - piece.trim_start().len();
    let trimmed = piece.trim();
    if trimmed.chars().any(char::is_alphanumeric) {
        let s = range.start + lead;
        spans.push(s..s + trimmed.len());
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Segmentation {
    pub sentences: Vec<String>,
    pub words: Vec<String>,
}

/// Splits text into sentences and lowercase words.
pub fn segment(text: &str) -> Result<Segmentation, TextError> {
    let words = tokenize(text);
    if words.is_empty() {
        return Err(TextError::EmptyText);
    }
    let sentences = sentence_spans(text)
        .into_iter()
        .map(|r| text[r].to_string())
        .collect();
    Ok(Segmentation { sentences, words })
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group syllable heuristic with a silent-final-e rule; never below 1.
pub fn count_syllables(word: &str) -> usize {
    let chars: Vec<char> = word
        .chars()
        .filter(|c| !is_apostrophe(*c))
        .flat_map(char::to_lowercase)
        .collect();
    let mut groups = 0usize;
    let mut prev_vowel = false;
    for &c in &chars {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let n = chars.len();
    if n >= 2 && chars[n - 1] == 'e' && !is_vowel(chars[n - 2]) {
        // "-le" after a consonant keeps its syllable: "table", "simple"
        let syllabic_le = chars[n - 2] == 'l' && n >= 3 && !is_vowel(chars[n - 3]);
        if !syllabic_le {
            groups = groups.saturating_sub(1);
        }
    }
    groups.max(1)
}

/// Raw counts feeding the readability formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextStats {
    pub sentence_count: usize,
    pub word_count: usize,
    pub syllable_count: usize,
    pub letter_count: usize,
    pub difficult_word_count: usize,
}

impl TextStats {
    fn words_per_sentence(&self) -> f64 {
        self.word_count as f64 / self.sentence_count as f64
    }

    fn syllables_per_word(&self) -> f64 {
        self.syllable_count as f64 / self.word_count as f64
    }
}

pub fn compute_stats(text: &str, familiar: &FamiliarWords) -> Result<TextStats, TextError> {
    let seg = segment(text)?;
    let mut stats = TextStats {
        sentence_count: seg.sentences.len().max(1),
        word_count: seg.words.len(),
        syllable_count: 0,
        letter_count: 0,
        difficult_word_count: 0,
    };
    for w in &seg.words {
        stats.syllable_count += count_syllables(w);
        stats.letter_count += w.chars().filter(|c| c.is_alphabetic()).count();
        if !familiar.is_familiar(w) {
            stats.difficult_word_count += 1;
        }
    }
    Ok(stats)
}

/// Flesch Reading Ease; higher is easier.
pub fn flesch_reading_ease(s: &TextStats) -> f64 {
    206.835 - 1.015 * s.words_per_sentence() - 84.6 * s.syllables_per_word()
}

/// Flesch–Kincaid Grade Level.
pub fn fkgl(s: &TextStats) -> f64 {
    0.39 * s.words_per_sentence() + 11.8 * s.syllables_per_word() - 15.59
}

/// Dale–Chall raw score; the 3.6365 adjustment applies only when strictly
/// more than 5% of words are difficult.
pub fn dale_chall(s: &TextStats) -> f64 {
    let difficult_pct = 100.0 * s.difficult_word_count as f64 / s.word_count as f64;
    let base = 0.1579 * difficult_pct + 0.0496 * s.words_per_sentence();
    // integer comparison keeps the 5% boundary exact
    if 20 * s.difficult_word_count > s.word_count {
        base + 3.6365
    } else {
        base
    }
}

/// Coleman–Liau index from letters and sentences per 100 words.
pub fn coleman_liau(s: &TextStats) -> f64 {
    let letters = 100.0 * s.letter_count as f64 / s.word_count as f64;
    let sentences = 100.0 * s.sentence_count as f64 / s.word_count as f64;
    0.0588 * letters - 0.296 * sentences - 15.8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityReport {
    pub fre: f64,
    pub fkgl: f64,
    pub dcrs: f64,
    pub cli: f64,
}

impl ReadabilityReport {
    pub fn from_stats(s: &TextStats) -> Self {
        ReadabilityReport {
            fre: flesch_reading_ease(s),
            fkgl: fkgl(s),
            dcrs: dale_chall(s),
            cli: coleman_liau(s),
        }
    }
}

pub fn readability_report(
    text: &str,
    familiar: &FamiliarWords,
) -> Result<ReadabilityReport, TextError> {
    Ok(ReadabilityReport::from_stats(&compute_stats(
        text, familiar,
    )?))
}
