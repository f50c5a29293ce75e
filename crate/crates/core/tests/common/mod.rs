//! Test-only reference implementations, written directly from the
//! definitions rather than from the library code.

#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use laysum_core::corpus::Passage;
use laysum_core::textstats::{segment, FamiliarWords};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Vowel groups (a, e, i, o, u, y), minus one for a silent final `e` after a
/// consonant unless the word ends in consonant + "le"; at least 1.
pub fn syllables_oracle(word: &str) -> usize {
    let w: Vec<char> = word
        .to_lowercase()
        .chars()
        .filter(|c| *c != '\'' && *c != '\u{2019}')
        .collect();
    let vowel = |c: char| "aeiouy".contains(c);
    let mut count = 0;
    for i in 0..w.len() {
        if vowel(w[i]) && (i == 0 || !vowel(w[i - 1])) {
            count += 1;
        }
    }
    let n = w.len();
    let silent_e = n >= 2 && w[n - 1] == 'e' && !vowel(w[n - 2]);
    let syllabic_le = n >= 3 && w[n - 2] == 'l' && !vowel(w[n - 3]);
    if silent_e && !syllabic_le && count > 0 {
        count -= 1;
    }
    count.max(1)
}

/// `[fre, fkgl, dcrs, cli]` from the published formulas, with counts taken
/// from the shared segmenter.
pub fn readability_oracle(text: &str, familiar: &FamiliarWords) -> [f64; 4] {
    let seg = segment(text).expect("nonempty fixture text");
    let s = seg.sentences.len().max(1) as f64;
    let w = seg.words.len() as f64;
    let syl: usize = seg.words.iter().map(|x| syllables_oracle(x)).sum();
    let letters: usize = seg
        .words
        .iter()
        .map(|x| x.chars().filter(|c| c.is_alphabetic()).count())
        .sum();
    let difficult = seg
        .words
        .iter()
        .filter(|x| !familiar.is_familiar(x))
        .count();
    let y = syl as f64;

    let fre = 206.835 - (1.015 * w * w + 84.6 * y * s) / (s * w);
    let fkgl = (0.39 * w * w + 11.8 * y * s) / (s * w) - 15.59;
    let pct = difficult as f64 / w * 100.0;
    let mut dcrs = 0.1579 * pct + 0.0496 * (w / s);
    if difficult as f64 / w > 0.05 {
        dcrs += 3.6365;
    }
    let l = letters as f64 / w * 100.0;
    let sp = s / w * 100.0;
    let cli = 0.0588 * l - 0.296 * sp - 15.8;
    [fre, fkgl, dcrs, cli]
}

/// `(overlap, hyp_total, ref_total)` for ROUGE-N by scanning every window
/// pair.
pub fn rouge_n_counts(hyp: &[String], reference: &[String], n: usize) -> (usize, usize, usize) {
    let windows = |t: &[String]| -> Vec<Vec<String>> {
        if t.len() < n {
            Vec::new()
        } else {
            (0..=t.len() - n).map(|i| t[i..i + n].to_vec()).collect()
        }
    };
    let hw = windows(hyp);
    let rw = windows(reference);
    let mut seen: Vec<&Vec<String>> = Vec::new();
    let mut overlap = 0;
    for g in &hw {
        if seen.contains(&g) {
            continue;
        }
        seen.push(g);
        let in_h = hw.iter().filter(|x| *x == g).count();
        let in_r = rw.iter().filter(|x| *x == g).count();
        overlap += in_h.min(in_r);
    }
    (overlap, hw.len(), rw.len())
}

fn is_subsequence(needle: &[&String], hay: &[String]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == *n))
}

/// LCS length by enumerating every subsequence of the shorter list.
pub fn lcs_oracle(a: &[String], b: &[String]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    assert!(short.len() <= 16, "exhaustive oracle is exponential");
    let mut best = 0;
    for mask in 0u32..(1 << short.len()) {
        let sub: Vec<&String> = (0..short.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| &short[i])
            .collect();
        if sub.len() > best && is_subsequence(&sub, long) {
            best = sub.len();
        }
    }
    best
}

/// `(precision, recall, f1)` from counts, zero when a denominator is zero.
pub fn prf(overlap: usize, hyp_total: usize, ref_total: usize) -> (f64, f64, f64) {
    let p = if hyp_total == 0 {
        0.0
    } else {
        overlap as f64 / hyp_total as f64
    };
    let r = if ref_total == 0 {
        0.0
    } else {
        overlap as f64 / ref_total as f64
    };
    let f = if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    };
    (p, r, f)
}

fn bm25_tokens(text: &str) -> Vec<String> {
    laysum_core::textstats::tokenize(text)
}

/// Scores every passage against `query` and sorts by score, then ordinal.
/// Passages with no query term are left out.
pub fn bm25_oracle(passages: &[Passage], query: &str, k1: f64, b: f64) -> Vec<(String, f64)> {
    let docs: Vec<Vec<String>> = passages.iter().map(|p| bm25_tokens(&p.text)).collect();
    let n = docs.len() as f64;
    let total: usize = docs.iter().map(Vec::len).sum();
    let avg = total as f64 / n;
    let mut terms: Vec<String> = Vec::new();
    for t in bm25_tokens(query).into_iter().take(512) {
        if !terms.contains(&t) {
            terms.push(t);
        }
    }
    let df: HashMap<&String, usize> = terms
        .iter()
        .map(|t| (t, docs.iter().filter(|d| d.contains(t)).count()))
        .collect();
    let mut scored: Vec<(usize, f64)> = Vec::new();
    for (i, d) in docs.iter().enumerate() {
        let mut score = 0.0;
        let mut hit = false;
        for t in &terms {
            let tf = d.iter().filter(|x| *x == t).count();
            if tf == 0 {
                continue;
            }
            hit = true;
            let dfv = df[t] as f64;
            let idf = (1.0 + (n - dfv + 0.5) / (dfv + 0.5)).ln();
            let tf = tf as f64;
            let norm = k1 * (1.0 - b + b * d.len() as f64 / avg);
            score += idf * (tf * (k1 + 1.0)) / (tf + norm);
        }
        if hit {
            scored.push((i, score));
        }
    }
    scored.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
    scored
        .into_iter()
        .map(|(i, s)| (passages[i].id.clone(), s))
        .collect()
}

/// Random token list over a small alphabet so n-grams repeat.
pub fn random_tokens(rng: &mut impl Rng, max_len: usize, alphabet: &[&str]) -> Vec<String> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| alphabet.choose(rng).unwrap().to_string())
        .collect()
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

const SHORT: &[&str] = &[
    "cat", "dog", "sun", "red", "map", "cup", "run", "sit", "box", "hat",
];
const LONG: &[&str] = &[
    "biological",
    "immunology",
    "mitochondrial",
    "phosphorylation",
    "transcriptional",
    "epidemiological",
    "neurodegenerative",
    "cardiovascular",
    "heterogeneity",
    "pharmacokinetic",
];

/// Synthetic text whose sentence length and word complexity vary with the
/// draw, so readability scores spread out.
pub fn random_text(rng: &mut impl Rng) -> String {
    let sentences = rng.gen_range(1..=6);
    let long_rate: f64 = rng.gen_range(0.0..0.8);
    let max_len = rng.gen_range(4..=30);
    let mut out = Vec::new();
    for _ in 0..sentences {
        let len = rng.gen_range(3..=max_len);
        let words: Vec<&str> = (0..len)
            .map(|_| {
                let pool = if rng.gen_bool(long_rate) { LONG } else { SHORT };
                *pool.choose(rng).unwrap()
            })
            .collect();
        let mut s = words.join(" ");
        s.push('.');
        out.push(s);
    }
    out.join(" ")
}
