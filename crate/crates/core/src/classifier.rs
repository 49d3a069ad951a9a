//! Rule-based labeling of correction failure modes.
//!
//! Given an (input, output) pair from a correction model, decides how the
//! rewrite deviates from a faithful correction: refusing the task, framing
//! the echo in extra text, continuing the sentence, emitting nothing,
//! looping, fixing grammar the input never got wrong, or introducing a new
//! error. Rules run in a fixed priority order and the first hit wins, so
//! every pair gets exactly one label. The two reference-aware rules are
//! skipped when no reference is given; such pairs fall through to `None`.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Language;
use crate::metrics::{align_tokens, normalize, tokenize};

/// Trailing n-gram repetitions that count as looping.
const MIN_TERMINAL_LOOPS: usize = 3;

/// Shortest shared stem for two tokens to count as inflections of each other.
const MIN_STEM_LEN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HallucinationCategory {
    /// The output answers or refuses instead of correcting.
    InstructionViolation,
    /// The output wraps the input in extra framing text.
    RedundantOutput,
    /// The output keeps writing past the end of the input.
    ContinueWriting,
    /// The output is empty.
    BlankOutput,
    /// The output loops on a token or short phrase.
    RepeatedOutput,
    /// The input already matched the reference; the output rewrote its
    /// grammar anyway.
    GrammarCorrection,
    /// The output has more errors against the reference than the input did.
    MakeMistake,
    None,
}

impl HallucinationCategory {
    pub fn as_str(&self) -> &'static str {
        match self {
            HallucinationCategory::InstructionViolation => "instruction_violation",
            HallucinationCategory::RedundantOutput => "redundant_output",
            HallucinationCategory::ContinueWriting => "continue_writing",
            HallucinationCategory::BlankOutput => "blank_output",
            HallucinationCategory::RepeatedOutput => "repeated_output",
            HallucinationCategory::GrammarCorrection => "grammar_correction",
            HallucinationCategory::MakeMistake => "make_mistake",
            HallucinationCategory::None => "none",
        }
    }
}

impl std::fmt::Display for HallucinationCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HallucinationLabel {
    pub category: HallucinationCategory,
    /// The matched span or measurement that triggered the rule.
    pub evidence: String,
}

impl HallucinationLabel {
    fn new(category: HallucinationCategory, evidence: impl Into<String>) -> Self {
        HallucinationLabel { category, evidence: evidence.into() }
    }
}

/// Thresholds and word lists the rules run against. The defaults reproduce
/// the documented example pairs; all knobs are plain data so they can be
/// tightened per corpus.
#[derive(Debug, Clone)]
pub struct ClassifierConfig {
    pub language: Language,
    /// Consecutive identical tokens that count as looping.
    pub min_repeat_run: usize,
    /// Output/input token ratio beyond which a matching prefix counts as
    /// continuation rather than correction.
    pub expansion_ratio: f64,
    /// Refusals sharing at least this fraction of their tokens with the
    /// input are still treated as on-task.
    pub max_refusal_overlap: f64,
    /// Substrings of normalized output that mark a refusal or apology.
    pub refusal_patterns: Vec<String>,
    /// Tokens whose insertion alone does not change sentence content.
    pub function_words: HashSet<String>,
}

impl ClassifierConfig {
    pub fn for_language(language: Language) -> Self {
        let refusal_patterns = [
            "sorry",
            "i apologize",
            "i cannot",
            "i can not",
            "i can't",
            "cannot answer",
            "can't answer",
            "unable to",
            "as an ai",
            "抱歉",
            "对不起",
            "无法回答",
            "不能回答",
        ];
        let function_words: &[&str] = match language {
            Language::English => &[
                "a", "an", "the", "and", "or", "but", "to", "of", "in", "on", "at", "for",
                "with", "by", "from", "as", "is", "are", "was", "were", "be", "been", "being",
                "am", "it", "its", "this", "that", "these", "those", "i", "me", "my", "we",
                "us", "our", "you", "your", "he", "him", "his", "she", "her", "they", "them",
                "their", "do", "does", "did", "not", "no", "so", "if", "then", "than", "there",
                "here", "when", "where", "who", "whom", "which", "what", "how", "can", "could",
                "will", "would", "shall", "should", "may", "might", "must", "have", "has",
                "had",
            ],
            Language::Mandarin => &[
                "的", "了", "在", "是", "我", "你", "他", "她", "它", "们", "这", "那", "就",
                "都", "而", "及", "与", "和", "或", "吗", "呢", "吧", "啊", "呀", "也", "很",
                "被", "把", "给", "着", "过", "地", "得", "之", "其",
            ],
        };
        ClassifierConfig {
            language,
            min_repeat_run: 4,
            expansion_ratio: 1.25,
            max_refusal_overlap: 0.3,
            refusal_patterns: refusal_patterns.iter().map(|p| p.to_string()).collect(),
            function_words: function_words.iter().map(|w| w.to_string()).collect(),
        }
    }
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::for_language(Language::Mandarin)
    }
}

/// Label one correction pair. Total and deterministic: rules run in priority
/// order and the first hit wins; identical outputs always label `None`.
pub fn classify(
    input: &str,
    output: &str,
    reference: Option<&str>,
    config: &ClassifierConfig,
) -> HallucinationLabel {
    use HallucinationCategory as Cat;

    if input == output {
        return HallucinationLabel::new(Cat::None, "output equals input");
    }

    let language = config.language;
    let in_tokens = tokenize(input, language).tokens;
    let out_tokens = tokenize(output, language).tokens;

    if out_tokens.is_empty() {
        return HallucinationLabel::new(Cat::BlankOutput, "output is empty after normalization");
    }

    if let Some(evidence) = repeat_evidence(&out_tokens, config.min_repeat_run) {
        return HallucinationLabel::new(Cat::RepeatedOutput, evidence);
    }

    let normalized_out = normalize(output, language);
    let overlap = token_overlap(&out_tokens, &in_tokens);
    if overlap < config.max_refusal_overlap {
        let hit = config
            .refusal_patterns
            .iter()
            .find(|p| normalized_out.contains(normalize(p, language).as_str()));
        if let Some(pattern) = hit {
            return HallucinationLabel::new(
                Cat::InstructionViolation,
                format!("matches refusal pattern `{pattern}`, input overlap {:.0}%", overlap * 100.0),
            );
        }
    }

    if let Some(pos) = interior_occurrence(&out_tokens, &in_tokens) {
        return HallucinationLabel::new(
            Cat::RedundantOutput,
            format!("input recurs at token {pos} of a {}-token output", out_tokens.len()),
        );
    }

    if out_tokens.starts_with(&in_tokens)
        && out_tokens.len() as f64 > in_tokens.len() as f64 * config.expansion_ratio
    {
        return HallucinationLabel::new(
            Cat::ContinueWriting,
            format!(
                "output extends a matching prefix from {} to {} tokens",
                in_tokens.len(),
                out_tokens.len()
            ),
        );
    }

    if let Some(reference) = reference {
        let ref_tokens = tokenize(reference, language).tokens;
        if in_tokens == ref_tokens && grammar_rewrite(&ref_tokens, &out_tokens, config) {
            return HallucinationLabel::new(
                Cat::GrammarCorrection,
                "differs from the reference only by casing, punctuation, function words, or inflection",
            );
        }
        let before = align_tokens(&ref_tokens, &in_tokens).counts.total_errors();
        let after = align_tokens(&ref_tokens, &out_tokens).counts.total_errors();
        if after > before {
            return HallucinationLabel::new(
                Cat::MakeMistake,
                format!("errors against the reference rise from {before} to {after}"),
            );
        }
    }

    HallucinationLabel::new(Cat::None, "no rule matched")
}

/// Histogram over a corpus of pairs. `references` is indexed in step with
/// `pairs`; leave it empty to classify without references. Counts sum to
/// `pairs.len()`.
pub fn classify_corpus(
    pairs: &[(String, String)],
    references: &[Option<String>],
    config: &ClassifierConfig,
) -> BTreeMap<HallucinationCategory, usize> {
    let mut histogram = BTreeMap::new();
    for (i, (input, output)) in pairs.iter().enumerate() {
        let reference = references.get(i).and_then(|r| r.as_deref());
        let label = classify(input, output, reference, config);
        *histogram.entry(label.category).or_insert(0) += 1;
    }
    histogram
}

/// Longest identical run, then trailing n-gram loops (n up to 3).
fn repeat_evidence(tokens: &[String], min_run: usize) -> Option<String> {
    let mut i = 0;
    while i < tokens.len() {
        let mut j = i + 1;
        while j < tokens.len() && tokens[j] == tokens[i] {
            j += 1;
        }
        if j - i >= min_run {
            return Some(format!("`{}` repeats {} times in a row", tokens[i], j - i));
        }
        i = j;
    }
    for n in 1..=3usize {
        if tokens.len() < MIN_TERMINAL_LOOPS * n {
            continue;
        }
        let tail = &tokens[tokens.len() - n..];
        let mut reps = 1;
        while tokens.len() >= (reps + 1) * n
            && tokens[tokens.len() - (reps + 1) * n..tokens.len() - reps * n] == *tail
        {
            reps += 1;
        }
        if reps >= MIN_TERMINAL_LOOPS {
            return Some(format!("trailing phrase `{}` loops {reps} times", tail.join(" ")));
        }
    }
    None
}

/// Fraction of output tokens also present in the input (multiset).
fn token_overlap(output: &[String], input: &[String]) -> f64 {
    if output.is_empty() {
        return 1.0;
    }
    let mut budget: HashMap<&str, usize> = HashMap::new();
    for token in input {
        *budget.entry(token.as_str()).or_default() += 1;
    }
    let mut shared = 0usize;
    for token in output {
        if let Some(count) = budget.get_mut(token.as_str()) {
            if *count > 0 {
                *count -= 1;
                shared += 1;
            }
        }
    }
    shared as f64 / output.len() as f64
}

/// First position at or past 1 where `needle` occurs contiguously in
/// `haystack`. Prefix occurrences do not count: leading framing text is what
/// separates an echo wrapped in commentary from a continued sentence.
fn interior_occurrence(haystack: &[String], needle: &[String]) -> Option<usize> {
    if needle.is_empty() || haystack.len() <= needle.len() {
        return None;
    }
    haystack[1..]
        .windows(needle.len())
        .position(|window| window == needle)
        .map(|p| p + 1)
}

/// True when the output walks the reference end to end using only exact
/// matches, inflected forms of reference tokens, and inserted function
/// words. Casing and punctuation were already erased by normalization.
fn grammar_rewrite(reference: &[String], output: &[String], config: &ClassifierConfig) -> bool {
    let mut i = 0;
    for token in output {
        // Consuming the reference (exact first, then inflected) takes
        // priority over skipping the token as an inserted function word.
        if i < reference.len()
            && (*token == reference[i] || inflection_pair(&reference[i], token))
        {
            i += 1;
        } else if config.function_words.contains(token.as_str()) {
            continue;
        } else {
            return false;
        }
    }
    i == reference.len()
}

/// Two tokens sharing a whole-word stem of at least `MIN_STEM_LEN` chars.
fn inflection_pair(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    short.chars().count() >= MIN_STEM_LEN && long.starts_with(short)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn english() -> ClassifierConfig {
        ClassifierConfig::for_language(Language::English)
    }

    fn mandarin() -> ClassifierConfig {
        ClassifierConfig::for_language(Language::Mandarin)
    }

    fn category(
        input: &str,
        output: &str,
        reference: Option<&str>,
        config: &ClassifierConfig,
    ) -> HallucinationCategory {
        classify(input, output, reference, config).category
    }

    #[test]
    fn refusal_with_low_overlap_is_instruction_violation() {
        let got = category(
            "where is the nist hotel",
            "Sorry, i can't answer this question.",
            None,
            &english(),
        );
        assert_eq!(got, HallucinationCategory::InstructionViolation);
    }

    #[test]
    fn framed_echo_is_redundant_output() {
        let got = category(
            "i don't know all of them but i know linden's are",
            "This answer is: i don't know all of them but i know linden's are.",
            None,
            &english(),
        );
        assert_eq!(got, HallucinationCategory::RedundantOutput);
    }

    #[test]
    fn expanded_prefix_is_continue_writing() {
        let input = "stephen leaning back and drawing idly on his scribbler listened to the talk about him which heron checked from time to time by saying";
        let output = "Stephen leaning back and drawing idly on his scribbler listened to the talk about him which heron checked from time to time by saying \"Due to their praise of maiden pure of teeming motherhood.\"";
        assert_eq!(category(input, output, None, &english()), HallucinationCategory::ContinueWriting);
    }

    #[test]
    fn empty_output_is_blank() {
        let input = "i discovered and put out a fire that would have destroyed the whole plant but marshall never even thanked me";
        assert_eq!(category(input, "", None, &english()), HallucinationCategory::BlankOutput);
        assert_eq!(category(input, "  \t ", None, &english()), HallucinationCategory::BlankOutput);
        assert_eq!(category(input, "...", None, &english()), HallucinationCategory::BlankOutput);
    }

    #[test]
    fn looping_token_is_repeated_output() {
        let got = category(
            "reenter butler and three footmen who moved the tea things hostess to two guests",
            "Reenter butler and three footmen who moved the tea things hostess two two two two two two two two two two...",
            None,
            &english(),
        );
        assert_eq!(got, HallucinationCategory::RepeatedOutput);
    }

    #[test]
    fn tense_fix_of_already_correct_text_is_grammar_correction() {
        let input = "it must remember be one or the other";
        let output = "It must be remembered to be one or the other.";
        assert_eq!(
            category(input, output, Some(input), &english()),
            HallucinationCategory::GrammarCorrection
        );
    }

    #[test]
    fn novel_error_against_reference_is_make_mistake() {
        let input = "i believe in the trainin of people to their hask capacity the englishman here heartily seconded him";
        let output = "I believe in the trainin of people to their task capacity the englishman here heartily seconded him.";
        assert_eq!(category(input, output, Some(input), &english()), HallucinationCategory::MakeMistake);
    }

    #[test]
    fn identity_pairs_always_label_none() {
        let config = english();
        let text = "two two two two sorry i cannot";
        assert_eq!(category(text, text, None, &config), HallucinationCategory::None);
        assert_eq!(category(text, text, Some("other words"), &config), HallucinationCategory::None);
        let zh = "今天天气很好";
        assert_eq!(category(zh, zh, None, &mandarin()), HallucinationCategory::None);
    }

    #[test]
    fn punctuation_only_rewrite_without_reference_is_none() {
        let got = category("it is here", "It is here.", None, &english());
        assert_eq!(got, HallucinationCategory::None);
    }

    #[test]
    fn punctuation_only_rewrite_of_correct_text_is_grammar_correction() {
        let input = "it is here";
        let got = category(input, "It is here.", Some(input), &english());
        assert_eq!(got, HallucinationCategory::GrammarCorrection);
    }

    #[test]
    fn looping_beats_refusal_matching() {
        let got = category("hello world", "sorry sorry sorry sorry sorry", None, &english());
        assert_eq!(got, HallucinationCategory::RepeatedOutput);
    }

    #[test]
    fn refusal_beats_framed_echo() {
        let got = category(
            "hi there",
            "sorry i cannot process this request at all right now hi there",
            None,
            &english(),
        );
        assert_eq!(got, HallucinationCategory::InstructionViolation);
    }

    #[test]
    fn continuation_beats_make_mistake() {
        let input = "a quick brown fox";
        let output = "a quick brown fox jumped over dogs";
        assert_eq!(
            category(input, output, Some(input), &english()),
            HallucinationCategory::ContinueWriting
        );
    }

    #[test]
    fn trailing_phrase_loop_is_repeated_output() {
        let got = category(
            "the weather is nice today",
            "the weather is nice the cat the cat the cat",
            None,
            &english(),
        );
        assert_eq!(got, HallucinationCategory::RepeatedOutput);
    }

    #[test]
    fn reference_rules_are_unreachable_without_a_reference() {
        let grammar_input = "it must remember be one or the other";
        let grammar_output = "It must be remembered to be one or the other.";
        assert_eq!(category(grammar_input, grammar_output, None, &english()), HallucinationCategory::None);

        let mistake_input = "i believe in the trainin of people to their hask capacity the englishman here heartily seconded him";
        let mistake_output = "I believe in the trainin of people to their task capacity the englishman here heartily seconded him.";
        assert_eq!(category(mistake_input, mistake_output, None, &english()), HallucinationCategory::None);
    }

    #[test]
    fn character_runs_and_refusals_classify_in_mandarin() {
        let config = mandarin();
        assert_eq!(
            category("今天天气很好", "今天天气好好好好好", None, &config),
            HallucinationCategory::RepeatedOutput
        );
        assert_eq!(
            category("今天天气很好", "抱歉我无法回答这个问题", None, &config),
            HallucinationCategory::InstructionViolation
        );
    }

    #[test]
    fn corpus_histogram_counts_every_pair_once() {
        let pairs: Vec<(String, String)> = vec![
            ("where is the nist hotel".into(), "Sorry, i can't answer this question.".into()),
            ("good morning".into(), "good morning".into()),
            ("good evening".into(), "good evening".into()),
            ("some text here".into(), "".into()),
        ];
        let histogram = classify_corpus(&pairs, &[], &english());
        assert_eq!(histogram[&HallucinationCategory::InstructionViolation], 1);
        assert_eq!(histogram[&HallucinationCategory::None], 2);
        assert_eq!(histogram[&HallucinationCategory::BlankOutput], 1);
        assert_eq!(histogram.values().sum::<usize>(), pairs.len());

        let empty = classify_corpus(&[], &[], &english());
        assert!(empty.is_empty());
    }

    #[test]
    fn corpus_references_line_up_by_index() {
        let input = "it must remember be one or the other";
        let pairs: Vec<(String, String)> =
            vec![(input.into(), "It must be remembered to be one or the other.".into())];
        let references = vec![Some(input.to_string())];
        let histogram = classify_corpus(&pairs, &references, &english());
        assert_eq!(histogram[&HallucinationCategory::GrammarCorrection], 1);
    }
}
