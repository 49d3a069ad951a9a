//! Transcript corpora, batching, and noun lexicons.
//!
//! Transcript files follow the Kaldi `text` convention: one utterance per
//! line, `<id><whitespace><transcript>`, where the first run of whitespace
//! separates the id from the text and any interior whitespace is preserved.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::normalize;

/// Corpus language; decides character vs word tokenization downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    #[default]
    Mandarin,
    English,
}

impl Language {
    pub fn as_str(&self) -> &'static str {
        match self {
            Language::Mandarin => "mandarin",
            Language::English => "english",
        }
    }

    /// Scoring granularity: Mandarin per character, English per word.
    pub fn token_mode(&self) -> crate::metrics::TokenMode {
        match self {
            Language::Mandarin => crate::metrics::TokenMode::Character,
            Language::English => crate::metrics::TokenMode::Word,
        }
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "zh" | "mandarin" | "chinese" => Ok(Language::Mandarin),
            "en" | "english" => Ok(Language::English),
            other => Err(format!("unknown language `{other}` (expected zh or en)")),
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One ASR hypothesis, optionally paired with its gold transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    pub hypothesis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(default)]
    pub language: Language,
}

impl Utterance {
    pub fn new(id: impl Into<String>, hypothesis: impl Into<String>, language: Language) -> Self {
        Utterance {
            id: id.into(),
            hypothesis: hypothesis.into(),
            reference: None,
            language,
        }
    }

    pub fn with_reference(mut self, reference: impl Into<String>) -> Self {
        self.reference = Some(reference.into());
        self
    }
}

/// A contiguous slice of the corpus, used for grouped prompting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub utterances: Vec<Utterance>,
    pub batch_index: usize,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate utterance id `{id}` on line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("line {line} has no id/transcript separator")]
    MalformedLine { line: usize },
    #[error("no reference transcript for id `{0}`")]
    MissingReference(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("trace file: bad record on line {0}")]
    TraceParse(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parse a transcript file. One utterance per non-empty line; the first run
/// of whitespace splits id from transcript, which may be empty.
pub fn parse_transcript_file(content: &str, language: Language) -> Result<Vec<Utterance>, CorpusError> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut utterances = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let id_end = line
            .find(|c: char| c.is_whitespace())
            .ok_or(CorpusError::MalformedLine { line: line_no })?;
        if id_end == 0 {
            // Line starts with whitespace: there is no id.
            return Err(CorpusError::MalformedLine { line: line_no });
        }
        let id = &line[..id_end];
        let rest = &line[id_end..];
        // Exactly one separator character is consumed; any further whitespace
        // belongs to the transcript.
        let mut chars = rest.char_indices();
        let sep_len = chars.next().map(|(_, c)| c.len_utf8()).unwrap_or(0);
        let transcript = &rest[sep_len..];
        if let Some(_first) = seen.insert(id.to_string(), line_no) {
            return Err(CorpusError::DuplicateId {
                id: id.to_string(),
                line: line_no,
            });
        }
        utterances.push(Utterance::new(id, transcript, language));
    }
    Ok(utterances)
}

/// Render utterances back into transcript-file form.
pub fn render_transcript_file(utterances: &[Utterance]) -> String {
    let mut out = String::new();
    for u in utterances {
        out.push_str(&u.id);
        out.push(' ');
        out.push_str(&u.hypothesis);
        out.push('\n');
    }
    out
}

/// Fill each hypothesis's `reference` by id join against `refs`.
/// Fails without partial output when any id is missing from `refs`.
pub fn pair_with_references(hyps: &[Utterance], refs: &[Utterance]) -> Result<Vec<Utterance>, CorpusError> {
    let by_id: HashMap<&str, &Utterance> = refs.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut paired = Vec::with_capacity(hyps.len());
    for hyp in hyps {
        let r = by_id
            .get(hyp.id.as_str())
            .ok_or_else(|| CorpusError::MissingReference(hyp.id.clone()))?;
        paired.push(hyp.clone().with_reference(r.hypothesis.clone()));
    }
    Ok(paired)
}

/// Greedy sequential grouping: all batches full except possibly the last.
pub fn make_batches(utterances: &[Utterance], batch_size: usize) -> Result<Vec<Batch>, CorpusError> {
    if batch_size == 0 {
        return Err(CorpusError::InvalidConfig("batch_size must be >= 1".into()));
    }
    Ok(utterances
        .chunks(batch_size)
        .enumerate()
        .map(|(batch_index, chunk)| Batch {
            utterances: chunk.to_vec(),
            batch_index,
        })
        .collect())
}

/// Surface forms counted as nouns for the recall metric. Entries are
/// normalized on load; lookup is exact match after normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NounLexicon {
    pub entries: HashSet<String>,
    pub language: Language,
}

impl NounLexicon {
    pub fn new<I, S>(entries: I, language: Language) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let entries = entries
            .into_iter()
            .map(|e| normalize(e.as_ref(), language))
            .filter(|e| !e.is_empty())
            .collect();
        NounLexicon { entries, language }
    }

    /// Load from a file with one surface form per line; `#` starts a comment.
    pub fn load(path: &Path, language: Language) -> Result<Self, CorpusError> {
        let content = std::fs::read_to_string(path)?;
        Ok(Self::parse(&content, language))
    }

    pub fn parse(content: &str, language: Language) -> Self {
        let entries = content
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        Self::new(entries, language)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.entries.contains(surface)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_input_parses_to_empty_corpus() {
        assert!(parse_transcript_file("", Language::English).unwrap().is_empty());
    }

    #[test]
    fn two_line_file_parses_in_order() {
        let utts = parse_transcript_file("u1 hello world\nu2 bye", Language::English).unwrap();
        assert_eq!(utts.len(), 2);
        assert_eq!(utts[0].id, "u1");
        assert_eq!(utts[0].hypothesis, "hello world");
        assert_eq!(utts[1].id, "u2");
        assert_eq!(utts[1].hypothesis, "bye");
    }

    #[test]
    fn duplicate_id_reports_id_and_line() {
        let err = parse_transcript_file("u1 a\nu1 b", Language::English).unwrap_err();
        match err {
            CorpusError::DuplicateId { id, line } => {
                assert_eq!(id, "u1");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn line_without_separator_is_malformed() {
        let err = parse_transcript_file("u1 ok\njustanid", Language::English).unwrap_err();
        match err {
            CorpusError::MalformedLine { line } => assert_eq!(line, 2),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn tab_separator_and_empty_transcript_are_accepted() {
        let utts = parse_transcript_file("u1\tsome text\nu2 ", Language::English).unwrap();
        assert_eq!(utts[0].hypothesis, "some text");
        assert_eq!(utts[1].hypothesis, "");
    }

    #[test]
    fn interior_whitespace_is_preserved_verbatim() {
        let utts = parse_transcript_file("u1  double  spaced ", Language::English).unwrap();
        assert_eq!(utts[0].hypothesis, " double  spaced ");
    }

    #[test]
    fn pairing_joins_by_id() {
        let hyps = vec![Utterance::new("u1", "a b", Language::English)];
        let refs = vec![Utterance::new("u1", "a c", Language::English)];
        let paired = pair_with_references(&hyps, &refs).unwrap();
        assert_eq!(paired[0].hypothesis, "a b");
        assert_eq!(paired[0].reference.as_deref(), Some("a c"));
    }

    #[test]
    fn pairing_empty_hypothesis_set_is_empty() {
        let refs = vec![Utterance::new("u1", "x", Language::English)];
        assert!(pair_with_references(&[], &refs).unwrap().is_empty());
    }

    #[test]
    fn pairing_missing_id_fails_without_partial_output() {
        let hyps = vec![Utterance::new("u2", "x", Language::English)];
        let refs = vec![Utterance::new("u1", "x", Language::English)];
        match pair_with_references(&hyps, &refs).unwrap_err() {
            CorpusError::MissingReference(id) => assert_eq!(id, "u2"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn batch_sizes_follow_greedy_grouping() {
        let utts: Vec<_> = (0..5)
            .map(|i| Utterance::new(format!("u{i}"), "x", Language::English))
            .collect();
        let batches = make_batches(&utts, 2).unwrap();
        let sizes: Vec<_> = batches.iter().map(|b| b.utterances.len()).collect();
        assert_eq!(sizes, vec![2, 2, 1]);

        let batches = make_batches(&utts[..3], 10).unwrap();
        assert_eq!(batches.len(), 1);
        assert_eq!(batches[0].utterances.len(), 3);

        assert!(make_batches(&[], 4).unwrap().is_empty());
    }

    #[test]
    fn zero_batch_size_is_rejected() {
        let utts = vec![Utterance::new("u1", "x", Language::English)];
        assert!(matches!(make_batches(&utts, 0), Err(CorpusError::InvalidConfig(_))));
    }

    #[test]
    fn lexicon_skips_comments_and_normalizes() {
        let lex = NounLexicon::parse("# animals\nCat\ndog # common\n\n", Language::English);
        assert!(lex.contains("cat"));
        assert!(lex.contains("dog"));
        assert_eq!(lex.entries.len(), 2);
    }

    fn id_strategy() -> impl Strategy<Value = String> {
        "[a-zA-Z0-9_-]{1,12}"
    }

    fn transcript_strategy() -> impl Strategy<Value = String> {
        // No newlines; leading whitespace would be eaten by the separator
        // rule, so keep the first char visible.
        "[a-z][a-z0-9 ']{0,30}"
    }

    proptest! {
        #[test]
        fn round_trip_preserves_id_and_transcript(pairs in proptest::collection::btree_map(id_strategy(), transcript_strategy(), 0..20)) {
            let utts: Vec<_> = pairs
                .iter()
                .map(|(id, text)| Utterance::new(id.clone(), text.clone(), Language::English))
                .collect();
            let rendered = render_transcript_file(&utts);
            let parsed = parse_transcript_file(&rendered, Language::English).unwrap();
            prop_assert_eq!(parsed, utts);
        }

        #[test]
        fn batches_partition_the_corpus(n in 0usize..40, k in 1usize..10) {
            let utts: Vec<_> = (0..n)
                .map(|i| Utterance::new(format!("u{i}"), format!("t{i}"), Language::Mandarin))
                .collect();
            let batches = make_batches(&utts, k).unwrap();
            let flattened: Vec<_> = batches.iter().flat_map(|b| b.utterances.clone()).collect();
            prop_assert_eq!(flattened, utts);
            for (i, b) in batches.iter().enumerate() {
                prop_assert_eq!(b.batch_index, i);
                prop_assert!(b.utterances.len() <= k);
                if i + 1 < batches.len() {
                    prop_assert_eq!(b.utterances.len(), k);
                }
            }
        }
    }
}
