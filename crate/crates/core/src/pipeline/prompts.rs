//! Versioned prompt templates for the paraphrasing and summarization LLM calls.

use sha2::{Digest, Sha256};

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: &'static str,
    pub version: u32,
    pub text: &'static str,
    /// Placeholder text, filled left to right.
    pub slot: &'static str,
}

/// One-shot rephrasing prompt; `{first generation}` is the text to rewrite.
pub const PARAPHRASE: PromptTemplate = PromptTemplate {
    name: "paraphrase",
    version: 1,
    text: include_str!("../../resources/prompts/paraphrase.v1.txt"),
    slot: "{first generation}",
};

/// Keyphrase-guided lay summarization prompt; slots are keyphrases, then article.
pub const SUMMARIZE: PromptTemplate = PromptTemplate {
    name: "summarize",
    version: 1,
    text: include_str!("../../resources/prompts/summarize.v1.txt"),
    slot: "{}",
};

impl PromptTemplate {
    /// Literal template text between slots.
    pub fn segments(&self) -> Vec<&'static str> {
        self.text.split(self.slot).collect()
    }

    pub fn slot_count(&self) -> usize {
        self.segments().len() - 1
    }

    /// Substitutes `values` positionally. Slot markers inside values are left
    /// untouched.
    pub fn instantiate(&self, values: &[&str]) -> String {
        let segments = self.segments();
        assert_eq!(
            values.len(),
            segments.len() - 1,
            "slot count mismatch for {}",
            self.name
        );
        let mut out =
            String::with_capacity(self.text.len() + values.iter().map(|v| v.len()).sum::<usize>());
        out.push_str(segments[0]);
        for (value, seg) in values.iter().zip(&segments[1..]) {
            out.push_str(value);
            out.push_str(seg);
        }
        out
    }

    pub fn sha256(&self) -> String {
        sha256_hex(self.text)
    }
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn build_paraphrase_prompt(first_generation: &str) -> Result<String, PipelineError> {
    if first_generation.trim().is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    Ok(PARAPHRASE.instantiate(&[first_generation]))
}

pub fn build_summarize_prompt(
    article: &str,
    keyphrases: &[String],
) -> Result<String, PipelineError> {
    if article.trim().is_empty() {
        return Err(PipelineError::EmptyArticle);
    }
    Ok(SUMMARIZE.instantiate(&[&keyphrases.join(", "), article]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paraphrase_prompt() {
        let p = build_paraphrase_prompt("X.").unwrap();
        assert!(p.starts_with("System: You are a layman rephrase;"));
        assert!(p.contains("rephrase: X.. Make it easier"));
        assert_eq!(PARAPHRASE.slot_count(), 1);
        assert!(matches!(
            build_paraphrase_prompt(" "),
            Err(PipelineError::EmptyInput)
        ));
    }

    #[test]
    fn paraphrase_round_trip() {
        let input = "Some {first generation} looking input.";
        let p = build_paraphrase_prompt(input).unwrap();
        let [head, tail] = PARAPHRASE.segments()[..] else {
            panic!("one slot expected")
        };
        assert_eq!(
            p.strip_prefix(head).and_then(|r| r.strip_suffix(tail)),
            Some(input)
        );
        let rebuilt = format!("{head}{}{tail}", PARAPHRASE.slot);
        assert_eq!(rebuilt, PARAPHRASE.text);
    }

    #[test]
    fn summarize_prompt() {
        let p = build_summarize_prompt("A.", &["p53".into()]).unwrap();
        assert!(p.contains("Keyphrases:p53"));
        assert!(p.ends_with("Keyphrases:p53, Article:A.."));
        assert!(p.starts_with("I will give you a long article in biomedical publications"));

        let p = build_summarize_prompt("Body {} text", &[]).unwrap();
        assert!(p.ends_with("Keyphrases:, Article:Body {} text."));

        let p = build_summarize_prompt("B", &["a".into(), "b c".into()]).unwrap();
        assert!(p.contains("Keyphrases:a, b c, Article:B."));
        assert!(matches!(
            build_summarize_prompt("", &[]),
            Err(PipelineError::EmptyArticle)
        ));
    }
}
