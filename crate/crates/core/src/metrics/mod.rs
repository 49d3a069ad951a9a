//! Text normalization, tokenization, edit-distance scoring, and noun recall.
//!
//! Mandarin text is scored per character, English text per whitespace word.
//! Both pipelines share one normalization pass so every scoring entry point
//! sees identical token streams.

mod align;
pub mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{Language, NounLexicon};

pub use self::align::{align_tokens, AlignOp, Alignment, ErrorCounts};

/// Sentence punctuation removed before scoring. Word-internal apostrophes
/// and hyphens survive so contractions and compounds stay single tokens.
const STRIP_CHARS: &[char] = &[
    ',', '.', '!', '?', ';', ':', '"', '(', ')', '[', ']', '{', '}', '<', '>', '/', '\\', '|',
    '@', '#', '%', '^', '&', '*', '_', '=', '+', '~', '`', '，', '。', '！', '？', '；', '：',
    '、', '「', '」', '『', '』', '（', '）', '《', '》', '〈', '〉', '“', '”', '‘', '’', '…',
    '—', '·', '～', '【', '】',
];

/// Granularity a text was split at before alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenMode {
    /// One token per character; used for Mandarin.
    Character,
    /// One token per whitespace-delimited word; used for English.
    Word,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("reference is empty after normalization")]
    EmptyReference,
    #[error("cannot align {0:?} tokens against {1:?} tokens")]
    ModeMismatch(TokenMode, TokenMode),
    #[error("noun lexicon is empty")]
    EmptyLexicon,
    #[error("utterance {0} has no reference")]
    MissingReference(String),
    #[error("corpora do not cover the same utterances: {0}")]
    CorpusMismatch(String),
}

/// Tokens ready for alignment, tagged with the granularity they were split at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub mode: TokenMode,
}

/// Canonical scoring form: NFC, lowercased, punctuation stripped. English
/// keeps single spaces between words; Mandarin drops all whitespace.
pub fn normalize(text: &str, language: Language) -> String {
    let nfc = text.nfc();
    match language {
        Language::English => {
            let mut out = String::with_capacity(text.len());
            for c in nfc {
                if STRIP_CHARS.contains(&c) {
                    out.push(' ');
                } else {
                    out.extend(c.to_lowercase());
                }
            }
            let mut collapsed = String::with_capacity(out.len());
            for word in out.split_whitespace() {
                if !collapsed.is_empty() {
                    collapsed.push(' ');
                }
                collapsed.push_str(word);
            }
            // Removals can splice combining marks into new sequences, so
            // recompose once more to keep the result canonically ordered.
            collapsed.nfc().collect()
        }
        Language::Mandarin => nfc
            .filter(|c| !c.is_whitespace() && !STRIP_CHARS.contains(c))
            .flat_map(|c| c.to_lowercase())
            .nfc()
            .collect(),
    }
}

/// Normalize then split at the language's scoring granularity.
pub fn tokenize(text: &str, language: Language) -> TokenSequence {
    let normalized = normalize(text, language);
    let mode = language.token_mode();
    let tokens = match mode {
        TokenMode::Word => normalized.split_whitespace().map(str::to_string).collect(),
        TokenMode::Character => normalized.chars().map(String::from).collect(),
    };
    TokenSequence { tokens, mode }
}

/// Align two sequences split at the same granularity; mixing modes would
/// compare characters against words, so it is rejected.
pub fn align(
    reference: &TokenSequence,
    hypothesis: &TokenSequence,
) -> Result<Alignment, MetricsError> {
    if reference.mode != hypothesis.mode {
        return Err(MetricsError::ModeMismatch(reference.mode, hypothesis.mode));
    }
    Ok(align_tokens(&reference.tokens, &hypothesis.tokens))
}

/// Token error rate of `hypothesis` against `reference`: CER for Mandarin,
/// WER for English. Errors / reference length; may exceed 1.
pub fn error_rate(
    reference: &str,
    hypothesis: &str,
    language: Language,
) -> Result<(f64, ErrorCounts), MetricsError> {
    let r = tokenize(reference, language);
    if r.tokens.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let h = tokenize(hypothesis, language);
    let alignment = align(&r, &h)?;
    let rate = alignment.counts.total_errors() as f64 / alignment.counts.reference_tokens as f64;
    Ok((rate, alignment.counts))
}

/// Occurrence counts of lexicon entries in `text`, found by a greedy
/// longest-match scan over the token stream.
pub fn noun_occurrences(text: &str, lexicon: &NounLexicon) -> BTreeMap<String, usize> {
    let seq = tokenize(text, lexicon.language);
    let sep = match lexicon.language {
        Language::English => " ",
        Language::Mandarin => "",
    };
    let max_len = lexicon
        .entries
        .iter()
        .map(|e| match lexicon.language {
            Language::English => e.split_whitespace().count(),
            Language::Mandarin => e.chars().count(),
        })
        .max()
        .unwrap_or(0);
    let mut counts = BTreeMap::new();
    let n = seq.tokens.len();
    let mut i = 0;
    while i < n {
        let mut advanced = false;
        for len in (1..=max_len.min(n - i)).rev() {
            let candidate = seq.tokens[i..i + len].join(sep);
            if lexicon.contains(&candidate) {
                *counts.entry(candidate).or_insert(0) += 1;
                i += len;
                advanced = true;
                break;
            }
        }
        if !advanced {
            i += 1;
        }
    }
    counts
}

/// Per-utterance noun tally: of the lexicon nouns in the reference, how many
/// the hypothesis retained (per surface form, capped at the reference count).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NounRecall {
    pub found: usize,
    pub total: usize,
}

impl NounRecall {
    pub fn rate(&self) -> Option<f64> {
        (self.total > 0).then(|| self.found as f64 / self.total as f64)
    }

    pub fn add(&mut self, other: &NounRecall) {
        self.found += other.found;
        self.total += other.total;
    }
}

pub fn noun_recall(
    reference: &str,
    hypothesis: &str,
    lexicon: &NounLexicon,
) -> Result<NounRecall, MetricsError> {
    if lexicon.is_empty() {
        return Err(MetricsError::EmptyLexicon);
    }
    let ref_counts = noun_occurrences(reference, lexicon);
    let hyp_counts = noun_occurrences(hypothesis, lexicon);
    let mut recall = NounRecall::default();
    for (noun, &ref_n) in &ref_counts {
        recall.total += ref_n;
        recall.found += ref_n.min(hyp_counts.get(noun).copied().unwrap_or(0));
    }
    Ok(recall)
}
