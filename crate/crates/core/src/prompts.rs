//! Prompt templates and pure renderers for every pipeline call.
//!
//! Templates are TOML files, one per language, embedded at build time and
//! overridable from a directory at run time. Loading validates the contract
//! the pipeline depends on: decision tokens present, step labels named in
//! order, and exactly three exemplars whose reasoning parses cleanly.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::client::Message;
use crate::corpus::Language;
use crate::reasoning::{parse_trace, ANSWER_CLOSE, ANSWER_OPEN};

pub use crate::reasoning::FormatSpec;

const ENGLISH_TOML: &str = include_str!("../templates/english.toml");
const MANDARIN_TOML: &str = include_str!("../templates/mandarin.toml");

/// Decision tokens the prompts demand and the pipeline scans for.
pub const HAS_ERROR: &str = "HAS_ERROR";
pub const NO_ERROR: &str = "NO_ERROR";
pub const PREFER_NEW: &str = "PREFER_NEW";
pub const PREFER_ORIGINAL: &str = "PREFER_ORIGINAL";
pub const CHECK_PASS: &str = "CHECK_PASS";
pub const CHECK_FAIL: &str = "CHECK_FAIL";

const STEP_LABELS: [&str; 4] = ["localization", "pronunciation", "candidate", "selection"];

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("template read error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid template: {0}")]
    Validation(String),
}

/// The reply-contract paragraph appended to every correction prompt.
fn contract_text(spec: &FormatSpec) -> String {
    format!(
        "Label the steps {}, {}, {}, {} in this order, then give the corrected sentence between \
         {open} and {close}, for example {open}corrected sentence{close}. Emit exactly one answer \
         block, keep the delimiters off every other line, and put nothing after the block.",
        spec.step_headings[0],
        spec.step_headings[1],
        spec.step_headings[2],
        spec.step_headings[3],
        open = spec.answer_open,
        close = spec.answer_close,
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
struct Exemplar {
    input: String,
    reasoning: String,
    output: String,
}

#[derive(Debug, Deserialize)]
struct RawSection {
    system: String,
}

#[derive(Debug, Deserialize)]
struct RawPlain {
    instruction: String,
}

#[derive(Debug, Deserialize)]
struct RawInstructions {
    instructions: String,
}

#[derive(Debug, Deserialize)]
struct RawTemplate {
    plain: RawPlain,
    detect: RawSection,
    correct: RawInstructions,
    confidence: RawSection,
    verify_format: RawSection,
    verify_steps: RawSection,
    #[serde(default, rename = "exemplar")]
    exemplars: Vec<Exemplar>,
}

/// Validated prompt set for one language. All `render_*` methods are pure:
/// output depends only on the template and the arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    language: Language,
    plain_instruction: String,
    detect_system: String,
    correct_instructions: String,
    confidence_system: String,
    verify_format_system: String,
    verify_steps_system: String,
    exemplars: Vec<Exemplar>,
    format: FormatSpec,
}

impl PromptSet {
    /// The template compiled into the binary.
    pub fn builtin(language: Language) -> Result<Self, TemplateError> {
        let toml_text = match language {
            Language::English => ENGLISH_TOML,
            Language::Mandarin => MANDARIN_TOML,
        };
        Self::from_toml(toml_text, language)
    }

    /// Load `<dir>/<language>.toml` instead of the builtin.
    pub fn load(dir: &Path, language: Language) -> Result<Self, TemplateError> {
        let path = dir.join(format!("{}.toml", language.as_str()));
        let toml_text = std::fs::read_to_string(path)?;
        Self::from_toml(&toml_text, language)
    }

    pub fn from_toml(toml_text: &str, language: Language) -> Result<Self, TemplateError> {
        let raw: RawTemplate = toml::from_str(toml_text)?;
        let set = PromptSet {
            language,
            plain_instruction: raw.plain.instruction.trim().to_string(),
            detect_system: raw.detect.system.trim().to_string(),
            correct_instructions: raw.correct.instructions.trim().to_string(),
            confidence_system: raw.confidence.system.trim().to_string(),
            verify_format_system: raw.verify_format.system.trim().to_string(),
            verify_steps_system: raw.verify_steps.system.trim().to_string(),
            exemplars: raw.exemplars,
            format: FormatSpec::default(),
        };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<(), TemplateError> {
        let fail = |msg: String| Err(TemplateError::Validation(msg));
        if self.plain_instruction.is_empty() {
            return fail("plain.instruction is empty".into());
        }
        for (name, text, tokens) in [
            ("detect.system", &self.detect_system, [HAS_ERROR, NO_ERROR]),
            ("confidence.system", &self.confidence_system, [PREFER_NEW, PREFER_ORIGINAL]),
            ("verify_format.system", &self.verify_format_system, [CHECK_PASS, CHECK_FAIL]),
            ("verify_steps.system", &self.verify_steps_system, [CHECK_PASS, CHECK_FAIL]),
        ] {
            for token in tokens {
                if !text.contains(token) {
                    return fail(format!("{name} never names its decision token {token}"));
                }
            }
        }
        let lower = self.correct_instructions.to_lowercase();
        let mut last = 0;
        for label in STEP_LABELS {
            match lower[last..].find(label) {
                Some(pos) => last += pos + label.len(),
                None => {
                    return fail(format!(
                        "correct.instructions must name the steps in order; `{label}` missing or out of place"
                    ));
                }
            }
        }
        if self.exemplars.len() != 3 {
            return fail(format!("expected exactly 3 exemplars, found {}", self.exemplars.len()));
        }
        for (i, ex) in self.exemplars.iter().enumerate() {
            if ex.input.trim().is_empty() || ex.output.trim().is_empty() {
                return fail(format!("exemplar {} has an empty input or output", i + 1));
            }
            if ex.reasoning.contains(ANSWER_OPEN) || ex.reasoning.contains(ANSWER_CLOSE) {
                return fail(format!(
                    "exemplar {} reasoning must leave the answer delimiters to the renderer",
                    i + 1
                ));
            }
            let parsed = parse_trace(&exemplar_reply(ex), &self.format);
            if parsed.malformed || !parsed.complete() {
                return fail(format!(
                    "exemplar {} reasoning does not parse as four complete steps",
                    i + 1
                ));
            }
        }
        Ok(())
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn plain_instruction(&self) -> &str {
        &self.plain_instruction
    }

    /// Delimiters and headings correction replies are parsed against.
    pub fn format(&self) -> &FormatSpec {
        &self.format
    }

    /// Instruction-only correction prompt: one user message holding the
    /// instruction and the payload. One text is passed bare; several become
    /// a numbered list to be answered line by line.
    pub fn render_plain(&self, texts: &[&str]) -> Vec<Message> {
        let content = match texts {
            [single] => format!("{}\n{single}", self.plain_instruction),
            many => {
                let list = many
                    .iter()
                    .enumerate()
                    .map(|(i, t)| format!("{}. {}", i + 1, t))
                    .collect::<Vec<_>>()
                    .join("\n");
                format!(
                    "{}\nThe input contains multiple numbered sentences. Output one numbered \
                     line per sentence, keeping the numbering.\n{list}",
                    self.plain_instruction
                )
            }
        };
        vec![Message::user(content)]
    }

    pub fn render_detect(&self, text: &str) -> Vec<Message> {
        vec![Message::system(&self.detect_system), Message::user(text)]
    }

    /// Full correction prompt: instructions plus format contract, the three
    /// exemplars as worked turns, then the transcript, with previously
    /// rejected candidates listed so the model does not resubmit them.
    pub fn render_correct(&self, text: &str, history: &[String]) -> Vec<Message> {
        let mut messages = Vec::with_capacity(2 * self.exemplars.len() + 2);
        messages.push(Message::system(format!(
            "{}\n\n{}",
            self.correct_instructions,
            contract_text(&self.format)
        )));
        for ex in &self.exemplars {
            messages.push(Message::user(&ex.input));
            messages.push(Message::assistant(exemplar_reply(ex)));
        }
        let mut user = text.to_string();
        if !history.is_empty() {
            user.push_str("\n\nPreviously proposed corrections, do not repeat any of these:");
            for item in history {
                user.push_str("\n- ");
                user.push_str(item);
            }
        }
        messages.push(Message::user(user));
        messages
    }

    /// The original is always position A so the comparison prompt cannot
    /// drift between calls.
    pub fn render_confidence(&self, original: &str, candidate: &str) -> Vec<Message> {
        vec![
            Message::system(&self.confidence_system),
            Message::user(format!("A (original): {original}\nB (candidate): {candidate}")),
        ]
    }

    pub fn render_verify_format(&self, reply: &str) -> Vec<Message> {
        vec![Message::system(&self.verify_format_system), Message::user(reply)]
    }

    pub fn render_verify_steps(&self, reply: &str) -> Vec<Message> {
        vec![Message::system(&self.verify_steps_system), Message::user(reply)]
    }
}

fn exemplar_reply(ex: &Exemplar) -> String {
    format!("{}\n{ANSWER_OPEN}{}{ANSWER_CLOSE}", ex.reasoning.trim_end(), ex.output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::Role;

    const CAPTION: &str = "Please help me correct the text generated by speech recognition. \
                           Please note that only the corrected text needs to be output.";

    #[test]
    fn builtin_templates_load_for_both_languages() {
        PromptSet::builtin(Language::English).unwrap();
        PromptSet::builtin(Language::Mandarin).unwrap();
    }

    #[test]
    fn both_builtins_carry_the_plain_caption_verbatim() {
        for lang in [Language::English, Language::Mandarin] {
            let set = PromptSet::builtin(lang).unwrap();
            assert_eq!(set.plain_instruction(), CAPTION);
        }
    }

    #[test]
    fn plain_prompt_is_one_user_message_with_caption_then_text() {
        let set = PromptSet::builtin(Language::Mandarin).unwrap();
        let msgs = set.render_plain(&["今天天汽很好"]);
        assert_eq!(msgs.len(), 1);
        assert_eq!(msgs[0].role, Role::User);
        assert_eq!(msgs[0].content, format!("{CAPTION}\n今天天汽很好"));
    }

    #[test]
    fn plain_prompt_accepts_an_empty_payload() {
        let set = PromptSet::builtin(Language::English).unwrap();
        let msgs = set.render_plain(&[""]);
        assert_eq!(msgs[0].content, format!("{CAPTION}\n"));
    }

    #[test]
    fn plain_prompt_numbers_grouped_sentences() {
        let set = PromptSet::builtin(Language::Mandarin).unwrap();
        let msgs = set.render_plain(&["第一句", "第二句"]);
        assert_eq!(msgs.len(), 1);
        assert!(msgs[0].content.starts_with(CAPTION));
        assert!(msgs[0].content.ends_with("1. 第一句\n2. 第二句"));
    }

    #[test]
    fn detect_prompt_names_both_decision_tokens() {
        let set = PromptSet::builtin(Language::English).unwrap();
        let msgs = set.render_detect("some text");
        assert!(msgs[0].content.contains(HAS_ERROR));
        assert!(msgs[0].content.contains(NO_ERROR));
        assert_eq!(msgs[1].content, "some text");
    }

    #[test]
    fn correct_prompt_interleaves_three_worked_exemplars() {
        let set = PromptSet::builtin(Language::English).unwrap();
        let msgs = set.render_correct("fix me", &[]);
        // system + 3 user/assistant exemplar pairs + final user.
        assert_eq!(msgs.len(), 8);
        assert_eq!(msgs[0].role, Role::System);
        for pair in msgs[1..7].chunks(2) {
            assert_eq!(pair[0].role, Role::User);
            assert_eq!(pair[1].role, Role::Assistant);
            assert!(pair[1].content.contains(ANSWER_OPEN));
            assert!(pair[1].content.contains(ANSWER_CLOSE));
        }
        assert_eq!(msgs[7].content, "fix me");
        assert!(!msgs[7].content.contains("do not repeat"));
    }

    #[test]
    fn correct_prompt_lists_rejected_candidates() {
        let set = PromptSet::builtin(Language::Mandarin).unwrap();
        let history = vec!["候选一".to_string(), "候选二".to_string()];
        let msgs = set.render_correct("原句", &history);
        let user = &msgs.last().unwrap().content;
        assert!(user.starts_with("原句"));
        assert!(user.contains("do not repeat"));
        assert!(user.contains("- 候选一"));
        assert!(user.contains("- 候选二"));
    }

    #[test]
    fn confidence_prompt_keeps_original_in_position_a() {
        let set = PromptSet::builtin(Language::English).unwrap();
        let msgs = set.render_confidence("orig text", "cand text");
        let user = &msgs[1].content;
        let a = user.find("orig text").unwrap();
        let b = user.find("cand text").unwrap();
        assert!(a < b);
        assert!(user.find("A (original)").unwrap() < user.find("B (candidate)").unwrap());
        assert!(msgs[0].content.contains(PREFER_NEW));
        assert!(msgs[0].content.contains(PREFER_ORIGINAL));
    }

    #[test]
    fn verification_prompts_name_the_check_tokens() {
        let set = PromptSet::builtin(Language::Mandarin).unwrap();
        for msgs in [set.render_verify_format("reply"), set.render_verify_steps("reply")] {
            assert!(msgs[0].content.contains(CHECK_PASS));
            assert!(msgs[0].content.contains(CHECK_FAIL));
            assert_eq!(msgs[1].content, "reply");
        }
    }

    #[test]
    fn rendering_is_pure() {
        let set = PromptSet::builtin(Language::English).unwrap();
        assert_eq!(set.render_correct("x", &["y".into()]), set.render_correct("x", &["y".into()]));
        assert_eq!(set.render_plain(&["a", "b"]), set.render_plain(&["a", "b"]));
    }

    fn valid_toml() -> String {
        ENGLISH_TOML.to_string()
    }

    #[test]
    fn missing_decision_token_fails_validation() {
        let broken = valid_toml().replace(NO_ERROR, "NOPE");
        match PromptSet::from_toml(&broken, Language::English) {
            Err(TemplateError::Validation(msg)) => assert!(msg.contains(NO_ERROR)),
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn wrong_exemplar_count_fails_validation() {
        let toml_text = valid_toml();
        let cut = toml_text.rfind("[[exemplar]]").unwrap();
        match PromptSet::from_toml(&toml_text[..cut], Language::English) {
            Err(TemplateError::Validation(msg)) => assert!(msg.contains("3 exemplars")),
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn delimiters_inside_exemplar_reasoning_fail_validation() {
        let broken = valid_toml().replace(
            "Pronunciation: meat and meet are both pronounced MEET.",
            "Pronunciation: <answer>MEET</answer>",
        );
        assert!(matches!(
            PromptSet::from_toml(&broken, Language::English),
            Err(TemplateError::Validation(_))
        ));
    }

    #[test]
    fn out_of_order_step_labels_fail_validation() {
        let broken = valid_toml()
            .replace("2. Pronunciation:", "2. Zounds:")
            .replace("3. Candidates:", "3. Candidates and pronunciation:");
        assert!(matches!(
            PromptSet::from_toml(&broken, Language::English),
            Err(TemplateError::Validation(_))
        ));
    }

    #[test]
    fn templates_load_from_an_override_directory() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("english.toml"), valid_toml()).unwrap();
        let set = PromptSet::load(dir.path(), Language::English).unwrap();
        assert_eq!(set.plain_instruction(), CAPTION);
        assert!(PromptSet::load(dir.path(), Language::Mandarin).is_err());
    }
}
