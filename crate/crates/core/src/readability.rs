//! Eight classic readability formulas over a shared set of surface counts.
//!
//! Tokenization rules:
//! - sentences: split on runs of `.`, `!`, `?`; blank segments dropped; a
//!   nonempty text without terminators is one sentence.
//! - words: whitespace tokens with leading/trailing non-alphanumerics
//!   stripped; tokens without any alphanumeric character are dropped.
//! - syllables: maximal runs of `aeiouy` (case-insensitive), minus one for a
//!   trailing silent `e` (not `le`) when more than one run exists, floored at
//!   one. Words made only of digits count as one syllable.
//!
//! | metric | formula |
//! |--------|---------|
//! | ARI  | 4.71·chars/words + 0.5·words/sentences − 21.43 |
//! | FRE  | 206.835 − 1.015·words/sentences − 84.6·syllables/words |
//! | FKGL | 0.39·words/sentences + 11.8·syllables/words − 15.59 |
//! | GFI  | 0.4·(words/sentences + 100·complex/words) |
//! | SMOG | 1.0430·√(polysyllables·30/sentences) + 3.1291 |
//! | CLI  | 0.0588·L − 0.296·S − 15.8, L = 100·chars/words, S = 100·sentences/words |
//! | LIX  | words/sentences + 100·long/words |
//! | RIX  | long/sentences |
//!
//! `chars` counts alphanumerics inside retained words; complex words and
//! polysyllables have three or more syllables; long words have more than six
//! letters.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const METRIC_NAMES: [&str; 8] = ["ari", "fre", "fkgl", "gfi", "smog", "cli", "lix", "rix"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TextStats {
    pub sentences: usize,
    pub words: usize,
    pub letters_and_digits: usize,
    pub syllables: usize,
    pub complex_words: usize,
    pub long_words: usize,
    pub polysyllables: usize,
}

pub fn tokenize_sentences(text: &str) -> Vec<&str> {
    let segments: Vec<&str> = text
        .split(['.', '!', '?'])
        .filter(|s| !s.trim().is_empty())
        .collect();
    if segments.is_empty() && !text.trim().is_empty() {
        return vec![text];
    }
    segments
}

pub fn tokenize_words(text: &str) -> Vec<&str> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .collect()
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

pub fn count_syllables(word: &str) -> Result<usize> {
    if !word.chars().any(char::is_alphabetic) {
        return Err(Error::Validation(format!("{word:?} has no letters")));
    }
    let lower = word.to_lowercase();
    let mut count = 0;
    let mut prev_vowel = false;
    for c in lower.chars() {
        let v = is_vowel(c);
        if v && !prev_vowel {
            count += 1;
        }
        prev_vowel = v;
    }
    if lower.ends_with('e') && !lower.ends_with("le") && count > 1 {
        count -= 1;
    }
    Ok(count.max(1))
}

fn word_syllables(word: &str) -> usize {
    count_syllables(word).unwrap_or(1)
}

pub fn compute_stats(text: &str) -> Result<TextStats> {
    if text.trim().is_empty() {
        return Err(Error::Validation("cannot score empty text".into()));
    }
    let words = tokenize_words(text);
    let mut s = TextStats {
        sentences: tokenize_sentences(text).len().max(1),
        words: words.len(),
        ..TextStats::default()
    };
    for w in &words {
        s.letters_and_digits += w.chars().filter(|c| c.is_alphanumeric()).count();
        let syl = word_syllables(w);
        s.syllables += syl;
        if syl >= 3 {
            s.complex_words += 1;
        }
        if w.chars().filter(|c| c.is_alphabetic()).count() > 6 {
            s.long_words += 1;
        }
    }
    s.polysyllables = s.complex_words;
    Ok(s)
}

fn ratios(s: &TextStats) -> Result<(f64, f64, f64)> {
    if s.words == 0 || s.sentences == 0 {
        return Err(Error::Validation(format!(
            "readability needs at least one word and sentence (got {} words, {} sentences)",
            s.words, s.sentences
        )));
    }
    let w = s.words as f64;
    Ok((w, s.sentences as f64, w / s.sentences as f64))
}

pub fn ari(s: &TextStats) -> Result<f64> {
    let (w, _, wps) = ratios(s)?;
    Ok(4.71 * (s.letters_and_digits as f64 / w) + 0.5 * wps - 21.43)
}

pub fn fre(s: &TextStats) -> Result<f64> {
    let (w, _, wps) = ratios(s)?;
    Ok(206.835 - 1.015 * wps - 84.6 * (s.syllables as f64 / w))
}

pub fn fkgl(s: &TextStats) -> Result<f64> {
    let (w, _, wps) = ratios(s)?;
    Ok(0.39 * wps + 11.8 * (s.syllables as f64 / w) - 15.59)
}

pub fn gfi(s: &TextStats) -> Result<f64> {
    let (w, _, wps) = ratios(s)?;
    Ok(0.4 * (wps + 100.0 * (s.complex_words as f64 / w)))
}

pub fn smog(s: &TextStats) -> Result<f64> {
    let (_, sent, _) = ratios(s)?;
    Ok(1.0430 * (s.polysyllables as f64 * 30.0 / sent).sqrt() + 3.1291)
}

pub fn cli_index(s: &TextStats) -> Result<f64> {
    let (w, sent, _) = ratios(s)?;
    let l = 100.0 * s.letters_and_digits as f64 / w;
    let ss = 100.0 * sent / w;
    Ok(0.0588 * l - 0.296 * ss - 15.8)
}

pub fn lix(s: &TextStats) -> Result<f64> {
    let (w, _, wps) = ratios(s)?;
    Ok(wps + 100.0 * (s.long_words as f64 / w))
}

pub fn rix(s: &TextStats) -> Result<f64> {
    let (_, sent, _) = ratios(s)?;
    Ok(s.long_words as f64 / sent)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReadabilityReport {
    pub ari: f64,
    pub fre: f64,
    pub fkgl: f64,
    pub gfi: f64,
    pub smog: f64,
    pub cli: f64,
    pub lix: f64,
    pub rix: f64,
}

impl ReadabilityReport {
    pub fn from_stats(s: &TextStats) -> Result<Self> {
        Ok(ReadabilityReport {
            ari: ari(s)?,
            fre: fre(s)?,
            fkgl: fkgl(s)?,
            gfi: gfi(s)?,
            smog: smog(s)?,
            cli: cli_index(s)?,
            lix: lix(s)?,
            rix: rix(s)?,
        })
    }

    /// Scores in [`METRIC_NAMES`] order.
    pub fn values(&self) -> [f64; 8] {
        [
            self.ari, self.fre, self.fkgl, self.gfi, self.smog, self.cli, self.lix, self.rix,
        ]
    }

    pub fn from_values(v: [f64; 8]) -> Self {
        ReadabilityReport {
            ari: v[0],
            fre: v[1],
            fkgl: v[2],
            gfi: v[3],
            smog: v[4],
            cli: v[5],
            lix: v[6],
            rix: v[7],
        }
    }
}

pub fn report(text: &str) -> Result<ReadabilityReport> {
    ReadabilityReport::from_stats(&compute_stats(text)?)
}

/// Per-text reports plus per-metric mean and population standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusReport {
    pub per_text: Vec<ReadabilityReport>,
    pub mean: ReadabilityReport,
    pub std_dev: ReadabilityReport,
}

pub fn corpus_report<S: AsRef<str>>(texts: &[S]) -> Result<CorpusReport> {
    if texts.is_empty() {
        return Err(Error::Validation("empty corpus".into()));
    }
    let per_text = texts
        .iter()
        .map(|t| report(t.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let n = per_text.len() as f64;
    let mut mean = [0.0; 8];
    for r in &per_text {
        for (m, v) in mean.iter_mut().zip(r.values()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; 8];
    for r in &per_text {
        for ((s, v), m) in var.iter_mut().zip(r.values()).zip(mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std_dev = var.map(|s| (s / n).sqrt());
    Ok(CorpusReport {
        per_text,
        mean: ReadabilityReport::from_values(mean),
        std_dev: ReadabilityReport::from_values(std_dev),
    })
}

fn push_row(out: &mut String, label: &str, r: &ReadabilityReport) {
    out.push_str(label);
    for v in r.values() {
        write!(out, ",{v:.6}").unwrap();
    }
    out.push('\n');
}

pub fn csv_header() -> String {
    format!("text,{}\n", METRIC_NAMES.join(","))
}

/// One row per text, numbered from 1.
pub fn rows_csv(reports: &[ReadabilityReport]) -> String {
    let mut out = csv_header();
    for (i, r) in reports.iter().enumerate() {
        push_row(&mut out, &(i + 1).to_string(), r);
    }
    out
}

impl CorpusReport {
    /// Per-text rows followed by a `mean` summary row.
    pub fn to_csv(&self) -> String {
        let mut out = rows_csv(&self.per_text);
        push_row(&mut out, "mean", &self.mean);
        out
    }
}
