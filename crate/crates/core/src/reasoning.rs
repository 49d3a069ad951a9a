//! Parsing and validation of structured correction replies.
//!
//! A well-formed reply walks four labeled steps in order, localization,
//! pronunciation, candidates, selection, then emits exactly one final text
//! between the answer delimiters. The parser is deliberately forgiving
//! about markdown dressing (numbering, `#`, `*`, `>`) and heading case, and
//! strict about step order and the answer contract.

use serde::{Deserialize, Serialize};

pub const ANSWER_OPEN: &str = "<answer>";
pub const ANSWER_CLOSE: &str = "</answer>";

const CANONICAL_HEADINGS: [&str; 4] = ["localization", "pronunciation", "candidates", "selection"];

/// Accepted alternates per step, on top of the spec's canonical headings.
/// Chinese forms cover replies that label steps in the transcript language.
const SYNONYMS: [&[&str]; 4] = [
    &["error localization", "错误定位", "定位"],
    &["发音", "读音"],
    &["candidate", "候选"],
    &["final selection", "select", "选择", "选定"],
];

/// The reply contract: answer delimiters and required step headings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatSpec {
    pub answer_open: String,
    pub answer_close: String,
    pub step_headings: [String; 4],
}

impl Default for FormatSpec {
    fn default() -> Self {
        FormatSpec {
            answer_open: ANSWER_OPEN.into(),
            answer_close: ANSWER_CLOSE.into(),
            step_headings: CANONICAL_HEADINGS.map(String::from),
        }
    }
}

/// The parsed shape of one reply. `malformed` is set when the reply broke
/// the output contract: step order violated, or not exactly one extractable
/// answer block.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub localization: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pronunciation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default)]
    pub answer_blocks: usize,
    #[serde(default)]
    pub malformed: bool,
}

impl ReasoningTrace {
    /// All four steps carry content and an answer was extracted.
    pub fn complete(&self) -> bool {
        self.localization.is_some()
            && self.pronunciation.is_some()
            && self.candidates.as_ref().is_some_and(|c| !c.is_empty())
            && self.selection.is_some()
            && self.answer.is_some()
    }

    /// Canonical single-line-per-step rendering under the default format.
    /// Parsing the result yields the same trace back, which makes this the
    /// fixpoint form.
    pub fn render(&self) -> String {
        fn oneline(s: &str) -> String {
            s.split_whitespace().collect::<Vec<_>>().join(" ")
        }
        let mut out = String::new();
        if let Some(l) = &self.localization {
            out.push_str("Localization: ");
            out.push_str(&oneline(l));
            out.push('\n');
        }
        if let Some(p) = &self.pronunciation {
            out.push_str("Pronunciation: ");
            out.push_str(&oneline(p));
            out.push('\n');
        }
        if let Some(cs) = &self.candidates {
            out.push_str("Candidates:\n");
            for c in cs {
                out.push_str("- ");
                out.push_str(&oneline(c));
                out.push('\n');
            }
        }
        if let Some(s) = &self.selection {
            out.push_str("Selection: ");
            out.push_str(&oneline(s));
            out.push('\n');
        }
        if let Some(a) = &self.answer {
            out.push_str(ANSWER_OPEN);
            out.push_str(a);
            out.push_str(ANSWER_CLOSE);
            out.push('\n');
        }
        out
    }
}

/// Leading dressing on a heading line: list markers, numbering, quotes.
fn is_marker(c: char) -> bool {
    c.is_whitespace()
        || matches!(c, '#' | '*' | '-' | '>' | '.' | ')' | '(' | '•')
        || c.is_ascii_digit()
}

/// Separator between a heading keyword and its inline content.
fn is_heading_sep(c: char) -> bool {
    c.is_whitespace() || matches!(c, ':' | '：' | '-' | '，' | ',')
}

fn keyword_matches<'a>(body: &'a str, kw: &str) -> Option<&'a str> {
    let matched = if kw.is_ascii() {
        body.get(..kw.len()).is_some_and(|head| head.eq_ignore_ascii_case(kw))
            && !body[kw.len()..].starts_with(|c: char| c.is_ascii_alphanumeric())
    } else {
        body.starts_with(kw)
    };
    matched.then(|| body[kw.len()..].trim_start_matches(is_heading_sep))
}

/// Detect a step heading at the start of `line` (after marker dressing) and
/// return its step index plus any content on the same line.
fn match_heading<'a>(line: &'a str, spec: &FormatSpec) -> Option<(usize, &'a str)> {
    let body = line.trim_start_matches(is_marker);
    for (idx, (heading, synonyms)) in spec.step_headings.iter().zip(SYNONYMS).enumerate() {
        if let Some(rest) = keyword_matches(body, heading) {
            return Some((idx, rest));
        }
        for kw in synonyms {
            if let Some(rest) = keyword_matches(body, kw) {
                return Some((idx, rest));
            }
        }
    }
    None
}

fn strip_enumeration(line: &str) -> &str {
    line.trim_start_matches(is_marker).trim()
}

/// Remove every complete answer block so its interior cannot be mistaken
/// for step content, and report how many opening delimiters appeared.
fn split_answer(text: &str, spec: &FormatSpec) -> (Option<String>, usize, String) {
    let blocks = text.matches(spec.answer_open.as_str()).count();
    let mut answer = None;
    let mut remainder = String::with_capacity(text.len());
    let mut rest = text;
    loop {
        match rest.find(spec.answer_open.as_str()) {
            None => {
                remainder.push_str(rest);
                break;
            }
            Some(open) => {
                remainder.push_str(&rest[..open]);
                let after_open = &rest[open + spec.answer_open.len()..];
                match after_open.find(spec.answer_close.as_str()) {
                    None => {
                        // Unclosed delimiter: nothing extractable past here.
                        break;
                    }
                    Some(close) => {
                        if answer.is_none() {
                            answer = Some(after_open[..close].trim().to_string());
                        }
                        remainder.push('\n');
                        rest = &after_open[close + spec.answer_close.len()..];
                    }
                }
            }
        }
    }
    (answer, blocks, remainder)
}

/// Parse a reply into its step contents and answer. Total: degenerate input
/// yields a malformed trace, never an error.
///
/// Step order is enforced with a monotonic cursor: a heading for a later
/// step may skip ahead, but a heading for an earlier (or repeated) step
/// breaks the contract, and it plus everything after it is dropped.
pub fn parse_trace(text: &str, spec: &FormatSpec) -> ReasoningTrace {
    let (answer, answer_blocks, body) = split_answer(text, spec);
    let mut sections: [Vec<String>; 4] = Default::default();
    let mut current: Option<usize> = None;
    let mut cursor = 0usize;
    let mut order_break = false;

    for line in body.lines() {
        if let Some((idx, inline)) = match_heading(line, spec) {
            if idx < cursor {
                order_break = true;
                break;
            }
            cursor = idx + 1;
            current = Some(idx);
            if !inline.trim().is_empty() {
                sections[idx].push(inline.trim().to_string());
            }
        } else if let Some(idx) = current {
            // Candidates are one entry per line; prose steps concatenate.
            let content = if idx == 2 { strip_enumeration(line) } else { line.trim() };
            if !content.is_empty() {
                sections[idx].push(content.to_string());
            }
        }
    }

    let joined = |idx: usize| -> Option<String> {
        let s = sections[idx].join(" ");
        (!s.is_empty()).then_some(s)
    };
    let candidates = (!sections[2].is_empty()).then(|| sections[2].clone());

    let malformed = answer_blocks != 1 || order_break || answer.is_none();
    ReasoningTrace {
        localization: joined(0),
        pronunciation: joined(1),
        candidates,
        selection: joined(3),
        answer,
        answer_blocks,
        malformed,
    }
}

/// Output-format gate: exactly one answer block, non-empty answer, and the
/// answer itself free of delimiter tokens.
pub fn check_format(trace: &ReasoningTrace, spec: &FormatSpec) -> bool {
    trace.answer_blocks == 1
        && trace.answer.as_ref().is_some_and(|a| {
            !a.is_empty() && !a.contains(spec.answer_open.as_str()) && !a.contains(spec.answer_close.as_str())
        })
}

/// Step-completeness gate: every reasoning step present with content.
pub fn check_steps(trace: &ReasoningTrace) -> bool {
    trace.complete()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(text: &str) -> ReasoningTrace {
        parse_trace(text, &FormatSpec::default())
    }

    fn fmt_ok(trace: &ReasoningTrace) -> bool {
        check_format(trace, &FormatSpec::default())
    }

    const WELL_FORMED: &str = "\
1. Localization: the third character sounds wrong
2. Pronunciation: tian1 qi4
3. Candidates:
   - 天气
   - 天汽
4. Selection: 天气 fits the weather context
<answer>今天天气很好</answer>";

    #[test]
    fn well_formed_reply_parses_completely() {
        let t = pt(WELL_FORMED);
        assert_eq!(t.localization.as_deref(), Some("the third character sounds wrong"));
        assert_eq!(t.pronunciation.as_deref(), Some("tian1 qi4"));
        assert_eq!(t.candidates, Some(vec!["天气".to_string(), "天汽".to_string()]));
        assert_eq!(t.selection.as_deref(), Some("天气 fits the weather context"));
        assert_eq!(t.answer.as_deref(), Some("今天天气很好"));
        assert_eq!(t.answer_blocks, 1);
        assert!(!t.malformed);
        assert!(t.complete());
        assert!(fmt_ok(&t));
        assert!(check_steps(&t));
    }

    #[test]
    fn empty_input_is_malformed_with_all_fields_absent() {
        let t = pt("");
        assert_eq!(t, ReasoningTrace { malformed: true, ..ReasoningTrace::default() });
    }

    #[test]
    fn chinese_headings_are_recognized() {
        let t = pt("错误定位：第三个字\n发音：tian\n候选：\n1) 天气\n选择：天气\n<answer>天气</answer>");
        assert!(t.complete());
        assert!(!t.malformed);
    }

    #[test]
    fn out_of_order_heading_drops_it_and_everything_after() {
        let t = pt(
            "Localization: char 3\nCandidates:\n- 天气\nPronunciation: tian\nSelection: 天气\n<answer>x</answer>",
        );
        assert_eq!(t.localization.as_deref(), Some("char 3"));
        assert_eq!(t.candidates, Some(vec!["天气".to_string()]));
        assert_eq!(t.pronunciation, None);
        assert_eq!(t.selection, None);
        assert!(t.malformed);
        assert!(!check_steps(&t));
        // The answer block was extracted before line scanning, so it is
        // still available even though it sat past the order break.
        assert_eq!(t.answer.as_deref(), Some("x"));
    }

    #[test]
    fn repeated_heading_is_an_order_break() {
        let t = pt("Localization: a\nLocalization: b\n<answer>x</answer>");
        assert_eq!(t.localization.as_deref(), Some("a"));
        assert!(t.malformed);
    }

    #[test]
    fn skipping_ahead_is_allowed_but_incomplete() {
        let t = pt("Localization: a\nSelection: b\n<answer>x</answer>");
        assert_eq!(t.localization.as_deref(), Some("a"));
        assert_eq!(t.selection.as_deref(), Some("b"));
        assert!(!t.malformed);
        assert!(!t.complete());
    }

    #[test]
    fn answer_extraction_takes_first_block_and_counts_all() {
        let t = pt("<answer>first</answer>\nnoise\n<answer>second</answer>");
        assert_eq!(t.answer.as_deref(), Some("first"));
        assert_eq!(t.answer_blocks, 2);
        assert!(t.malformed);
        assert!(!fmt_ok(&t));
    }

    #[test]
    fn missing_or_unclosed_answer_is_malformed() {
        assert!(pt("Selection: x").malformed);
        let t = pt("<answer>never closed");
        assert_eq!(t.answer, None);
        assert!(t.malformed);
    }

    #[test]
    fn answer_interior_is_trimmed_but_not_rewritten() {
        let t = pt("<answer>  两个  词  </answer>");
        assert_eq!(t.answer.as_deref(), Some("两个  词"));
        assert!(fmt_ok(&t));
    }

    #[test]
    fn empty_answer_fails_the_format_gate() {
        let t = pt("<answer></answer>");
        assert_eq!(t.answer.as_deref(), Some(""));
        assert_eq!(t.answer_blocks, 1);
        assert!(!fmt_ok(&t));
    }

    #[test]
    fn answer_content_cannot_leak_into_sections() {
        let t = pt("Localization: a\n<answer>Pronunciation: fake</answer>");
        assert_eq!(t.pronunciation, None);
        assert_eq!(t.answer.as_deref(), Some("Pronunciation: fake"));
    }

    #[test]
    fn markdown_dressing_on_headings_is_ignored() {
        let t = pt("### 1. Localization: a\n> *2.* Pronunciation: b\n- Candidates: c\n<answer>e</answer>");
        assert_eq!(t.localization.as_deref(), Some("a"));
        assert_eq!(t.pronunciation.as_deref(), Some("b"));
        assert_eq!(t.candidates, Some(vec!["c".to_string()]));
    }

    #[test]
    fn selections_plural_does_not_match_the_select_keyword() {
        let t = pt("selectionsXYZ unrelated\n<answer>x</answer>");
        assert_eq!(t.selection, None);
    }

    #[test]
    fn custom_delimiters_and_headings_are_honored() {
        let spec = FormatSpec {
            answer_open: "[[ans]]".into(),
            answer_close: "[[/ans]]".into(),
            step_headings: ["where", "sound", "options", "pick"].map(String::from),
        };
        let t = parse_trace(
            "Where: a\nSound: b\nOptions:\n- c\nPick: d\n[[ans]]fixed[[/ans]]",
            &spec,
        );
        assert!(t.complete());
        assert_eq!(t.answer.as_deref(), Some("fixed"));
        assert!(check_format(&t, &spec));
    }

    /// Oracle for the cursor rule, evaluated over all 24 heading orders.
    #[test]
    fn every_heading_permutation_keeps_the_monotone_prefix() {
        let headings = ["Localization", "Pronunciation", "Candidates", "Selection"];
        let mut perms = Vec::new();
        let mut idx = [0usize, 1, 2, 3];
        permute(&mut idx, 0, &mut perms);
        assert_eq!(perms.len(), 24);
        for perm in perms {
            let text = perm
                .iter()
                .map(|&i| format!("{}: content{}", headings[i], i))
                .collect::<Vec<_>>()
                .join("\n")
                + "\n<answer>x</answer>";
            let t = pt(&text);

            // Reference behavior: accept while indices strictly advance.
            let mut expect = [false; 4];
            let mut cursor = 0usize;
            let mut broke = false;
            for &i in &perm {
                if i < cursor {
                    broke = true;
                    break;
                }
                cursor = i + 1;
                expect[i] = true;
            }

            assert_eq!(t.localization.is_some(), expect[0], "perm {perm:?}");
            assert_eq!(t.pronunciation.is_some(), expect[1], "perm {perm:?}");
            assert_eq!(t.candidates.is_some(), expect[2], "perm {perm:?}");
            assert_eq!(t.selection.is_some(), expect[3], "perm {perm:?}");
            assert_eq!(t.malformed, broke, "perm {perm:?}");
        }
    }

    fn permute(idx: &mut [usize; 4], k: usize, out: &mut Vec<[usize; 4]>) {
        if k == 4 {
            out.push(*idx);
            return;
        }
        for i in k..4 {
            idx.swap(k, i);
            permute(idx, k + 1, out);
            idx.swap(k, i);
        }
    }

    // Starts with 'x' so no generated line can collide with a heading
    // keyword or an enumeration marker.
    fn content() -> impl Strategy<Value = String> {
        "x[a-z0-9]{0,8}( [a-z0-9]{1,8}){0,2}"
    }

    proptest! {
        #[test]
        fn render_then_parse_is_a_fixpoint(
            loc in proptest::option::of(content()),
            pron in proptest::option::of(content()),
            cands in proptest::option::of(proptest::collection::vec(content(), 1..4)),
            sel in proptest::option::of(content()),
            ans in content(),
        ) {
            let trace = ReasoningTrace {
                localization: loc,
                pronunciation: pron,
                candidates: cands,
                selection: sel,
                answer: Some(ans),
                answer_blocks: 1,
                malformed: false,
            };
            let rendered = trace.render();
            let reparsed = pt(&rendered);
            prop_assert_eq!(pt(&reparsed.render()).render(), reparsed.render());
            prop_assert_eq!(&reparsed.answer, &trace.answer);
            prop_assert!(!reparsed.malformed);
        }
    }
}
