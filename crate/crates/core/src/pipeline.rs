//! Three-stage correction: error pre-detection, iterative reasoned
//! correction under a confidence gate, and answer verification.
//!
//! Every gate resolves doubt toward the original transcript: ambiguous
//! detection reads as clean, ambiguous confidence keeps the original, and a
//! failed verification discards the candidate. The framework never emits a
//! candidate that did not pass every enabled gate.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::client::{ChatRequest, Client, ClientError, Message};
use crate::corpus::{CorpusError, Utterance};
use crate::prompts::{self, PromptSet};
use crate::reasoning::{check_format, check_steps, parse_trace, ReasoningTrace};
use crate::trace::TraceWriter;

/// Ablation ladder: each mode enables one more piece of the full pipeline.
/// `base` is the bare one-shot prompt; `pre_detect` adds detection gating;
/// `cot` adds the reasoned prompt (single step); `iterative` adds the retry
/// loop with candidate history; `full` adds answer verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Base,
    PreDetect,
    Cot,
    Iterative,
    #[default]
    Full,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Base => "base",
            Mode::PreDetect => "pre_detect",
            Mode::Cot => "cot",
            Mode::Iterative => "iterative",
            Mode::Full => "full",
        }
    }

    /// Detection runs in every mode above base.
    pub fn uses_detection(&self) -> bool {
        *self != Mode::Base
    }

    /// Reasoned correction with the confidence gate, as opposed to the
    /// plain instruction prompt.
    pub fn uses_reasoning(&self) -> bool {
        matches!(self, Mode::Cot | Mode::Iterative | Mode::Full)
    }

    pub fn uses_verification(&self) -> bool {
        *self == Mode::Full
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "base" => Ok(Mode::Base),
            "pre_detect" => Ok(Mode::PreDetect),
            "cot" => Ok(Mode::Cot),
            "iterative" => Ok(Mode::Iterative),
            "full" => Ok(Mode::Full),
            other => Err(format!(
                "unknown mode `{other}` (expected base, pre_detect, cot, iterative, or full)"
            )),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: Mode,
    /// Correction attempts before giving up on a detected error.
    pub max_steps: usize,
    /// Utterances per request in the plain-prompt modes (base, pre_detect).
    pub batch_size: usize,
    pub max_concurrency: usize,
    /// Adds the two model verification passes on top of the local checks.
    pub verify_with_llm: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::Full,
            max_steps: 3,
            batch_size: 1,
            max_concurrency: 4,
            verify_with_llm: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        for (name, value) in [
            ("max_steps", self.max_steps),
            ("batch_size", self.batch_size),
            ("max_concurrency", self.max_concurrency),
        ] {
            if value == 0 {
                return Err(PipelineError::Config(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    /// Single-step mode caps the loop regardless of max_steps.
    pub fn effective_max_steps(&self) -> usize {
        if self.mode == Mode::Cot {
            1
        } else {
            self.max_steps
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
}

/// Where an utterance ended up. `failed` marks client errors, never model
/// answers; failed utterances are excluded from traces so a rerun retries
/// them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    PassthroughClean,
    Corrected,
    AbandonedNoConfidence,
    RejectedByVerification,
    Failed,
}

impl OutcomeStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutcomeStatus::PassthroughClean => "passthrough_clean",
            OutcomeStatus::Corrected => "corrected",
            OutcomeStatus::AbandonedNoConfidence => "abandoned_no_confidence",
            OutcomeStatus::RejectedByVerification => "rejected_by_verification",
            OutcomeStatus::Failed => "failed",
        }
    }

    pub fn is_failed(&self) -> bool {
        *self == OutcomeStatus::Failed
    }
}

/// Stage-1 verdict plus the raw reply it was read from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionResult {
    pub has_error: bool,
    pub raw: String,
}

/// Candidates already rejected by the confidence gate, in rejection order.
/// Holds no duplicates and never the original hypothesis, so the retry
/// prompt lists only corrections that are genuinely banned.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateHistory(Vec<String>);

impl CandidateHistory {
    pub fn new() -> Self {
        CandidateHistory::default()
    }

    /// Record a rejected candidate. Returns false when it was skipped for
    /// being the original or already present.
    pub fn push(&mut self, candidate: &str, original: &str) -> bool {
        if candidate == original || self.0.iter().any(|c| c == candidate) {
            return false;
        }
        self.0.push(candidate.to_string());
        true
    }

    pub fn contains(&self, candidate: &str) -> bool {
        self.0.iter().any(|c| c == candidate)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Result of one utterance's pass through the pipeline, sufficient to
/// reconstruct what was decided and at what cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionOutcome {
    pub id: String,
    pub original: String,
    #[serde(rename = "final")]
    pub final_text: String,
    pub detected: bool,
    pub confident: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verified: Option<bool>,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<ReasoningTrace>,
    #[serde(default, skip_serializing_if = "CandidateHistory::is_empty")]
    pub history: CandidateHistory,
    pub status: OutcomeStatus,
    pub tokens_in: u64,
    pub tokens_out: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Token cost accrued for one utterance across all of its calls.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TokenTally {
    pub tokens_in: u64,
    pub tokens_out: u64,
}

impl TokenTally {
    fn add(&mut self, tokens_in: u64, tokens_out: u64) {
        self.tokens_in += tokens_in;
        self.tokens_out += tokens_out;
    }
}

/// The detection verdict: the has-error token must appear and the no-error
/// token must not. Anything ambiguous reads as clean, so a mis-parse can
/// never trigger an edit.
pub fn interpret_detection(raw: &str) -> bool {
    raw.contains(prompts::HAS_ERROR) && !raw.contains(prompts::NO_ERROR)
}

/// The confidence verdict: the prefer-new token alone accepts the candidate;
/// ambiguity keeps the original.
pub fn prefer_new(raw: &str) -> bool {
    raw.contains(prompts::PREFER_NEW) && !raw.contains(prompts::PREFER_ORIGINAL)
}

/// The verification verdict: the pass token alone passes; ambiguity fails.
pub fn check_token_pass(raw: &str) -> bool {
    raw.contains(prompts::CHECK_PASS) && !raw.contains(prompts::CHECK_FAIL)
}

fn call(
    client: &Client,
    tag: String,
    messages: Vec<Message>,
    tally: &mut TokenTally,
) -> Result<String, ClientError> {
    let response = client.complete(&ChatRequest::new(tag, messages))?;
    tally.add(response.tokens_in, response.tokens_out);
    Ok(response.content)
}

/// Stage 1: ask whether the transcript contains recognition errors.
pub fn detect(
    utterance: &Utterance,
    client: &Client,
    prompts: &PromptSet,
    tally: &mut TokenTally,
) -> Result<DetectionResult, ClientError> {
    let raw = call(
        client,
        format!("detect:{}", utterance.id),
        prompts.render_detect(&utterance.hypothesis),
        tally,
    )?;
    Ok(DetectionResult { has_error: interpret_detection(&raw), raw })
}

/// Stage 2, one step: request a reasoned correction that avoids `history`,
/// and extract the candidate. An absent or empty answer is an extraction
/// failure: the candidate falls back to the original and the reasoning is
/// marked malformed.
pub fn correct_once(
    utterance: &Utterance,
    history: &CandidateHistory,
    client: &Client,
    prompts: &PromptSet,
    tally: &mut TokenTally,
) -> Result<(String, ReasoningTrace, String), ClientError> {
    let raw = call(
        client,
        format!("correct:{}", utterance.id),
        prompts.render_correct(&utterance.hypothesis, history.as_slice()),
        tally,
    )?;
    let mut reasoning = parse_trace(&raw, prompts.format());
    let candidate = match reasoning.answer.as_deref() {
        Some(answer) if !answer.is_empty() => answer.to_string(),
        _ => {
            reasoning.malformed = true;
            utterance.hypothesis.clone()
        }
    };
    Ok((candidate, reasoning, raw))
}

/// Stage 2 gate: does the model back its own candidate over the original?
pub fn assess_confidence(
    id: &str,
    original: &str,
    candidate: &str,
    client: &Client,
    prompts: &PromptSet,
    tally: &mut TokenTally,
) -> Result<bool, ClientError> {
    let raw = call(
        client,
        format!("confidence:{id}"),
        prompts.render_confidence(original, candidate),
        tally,
    )?;
    Ok(prefer_new(&raw))
}

struct StageFailure {
    stage: &'static str,
    error: ClientError,
}

fn fail(stage: &'static str) -> impl FnOnce(ClientError) -> StageFailure {
    move |error| StageFailure { stage, error }
}

fn outcome_base(utterance: &Utterance, status: OutcomeStatus, tally: TokenTally) -> CorrectionOutcome {
    CorrectionOutcome {
        id: utterance.id.clone(),
        original: utterance.hypothesis.clone(),
        final_text: utterance.hypothesis.clone(),
        detected: false,
        confident: false,
        verified: None,
        iterations: 0,
        reasoning: None,
        history: CandidateHistory::default(),
        status,
        tokens_in: tally.tokens_in,
        tokens_out: tally.tokens_out,
        error: None,
    }
}

fn passthrough_outcome(utterance: &Utterance, tally: TokenTally) -> CorrectionOutcome {
    outcome_base(utterance, OutcomeStatus::PassthroughClean, tally)
}

/// A plain-prompt correction accepted without further gates (base and
/// pre_detect modes). The verdict fields are vacuously positive so the
/// status invariants hold in every mode.
fn plain_outcome(utterance: &Utterance, final_text: String, tally: TokenTally) -> CorrectionOutcome {
    CorrectionOutcome {
        final_text,
        detected: true,
        confident: true,
        verified: Some(true),
        iterations: 1,
        status: OutcomeStatus::Corrected,
        ..outcome_base(utterance, OutcomeStatus::Corrected, tally)
    }
}

fn failed_outcome(
    utterance: &Utterance,
    tally: TokenTally,
    stage: &str,
    error: &ClientError,
) -> CorrectionOutcome {
    CorrectionOutcome {
        error: Some(format!("{stage}: {error}")),
        ..outcome_base(utterance, OutcomeStatus::Failed, tally)
    }
}

/// Run one utterance through the configured pipeline. Total: client failures
/// come back as a `failed` outcome carrying the stage and error text.
pub fn run_utterance(
    utterance: &Utterance,
    config: &PipelineConfig,
    client: &Client,
    prompts: &PromptSet,
) -> CorrectionOutcome {
    let mut tally = TokenTally::default();
    match run_stages(utterance, config, client, prompts, &mut tally) {
        Ok(outcome) => outcome,
        Err(failure) => failed_outcome(utterance, tally, failure.stage, &failure.error),
    }
}

fn plain_correction(
    utterance: &Utterance,
    client: &Client,
    prompts: &PromptSet,
    tally: &mut TokenTally,
) -> Result<String, StageFailure> {
    call(
        client,
        format!("plain:{}", utterance.id),
        prompts.render_plain(&[&utterance.hypothesis]),
        tally,
    )
    .map_err(fail("plain"))
}

fn run_stages(
    utterance: &Utterance,
    config: &PipelineConfig,
    client: &Client,
    prompts: &PromptSet,
    tally: &mut TokenTally,
) -> Result<CorrectionOutcome, StageFailure> {
    if config.mode == Mode::Base {
        let content = plain_correction(utterance, client, prompts, tally)?;
        return Ok(plain_outcome(utterance, content.trim().to_string(), *tally));
    }

    let detection = detect(utterance, client, prompts, tally).map_err(fail("detect"))?;
    if !detection.has_error {
        return Ok(passthrough_outcome(utterance, *tally));
    }

    if config.mode == Mode::PreDetect {
        let content = plain_correction(utterance, client, prompts, tally)?;
        return Ok(plain_outcome(utterance, content.trim().to_string(), *tally));
    }

    let mut history = CandidateHistory::new();
    let max_steps = config.effective_max_steps();
    let mut last_reasoning = None;
    for iteration in 1..=max_steps {
        let (candidate, reasoning, raw) =
            correct_once(utterance, &history, client, prompts, tally).map_err(fail("correct"))?;
        let confident =
            assess_confidence(&utterance.id, &utterance.hypothesis, &candidate, client, prompts, tally)
                .map_err(fail("confidence"))?;
        if confident {
            return conclude(utterance, config, client, prompts, tally, candidate, reasoning, raw, iteration, history);
        }
        history.push(&candidate, &utterance.hypothesis);
        last_reasoning = Some(reasoning);
    }

    Ok(CorrectionOutcome {
        detected: true,
        iterations: max_steps,
        reasoning: last_reasoning,
        history,
        ..outcome_base(utterance, OutcomeStatus::AbandonedNoConfidence, *tally)
    })
}

/// Stage 3 plus outcome assembly for a confident candidate. Modes without
/// verification accept it directly; the verdict is recorded as passed either
/// way so `corrected` always implies a positive verification field.
#[allow(clippy::too_many_arguments)]
fn conclude(
    utterance: &Utterance,
    config: &PipelineConfig,
    client: &Client,
    prompts: &PromptSet,
    tally: &mut TokenTally,
    candidate: String,
    reasoning: ReasoningTrace,
    raw: String,
    iterations: usize,
    history: CandidateHistory,
) -> Result<CorrectionOutcome, StageFailure> {
    let verified = if config.mode.uses_verification() {
        verify_answer(utterance, config, client, prompts, tally, &reasoning, &raw)?
    } else {
        true
    };
    let status = if verified {
        OutcomeStatus::Corrected
    } else {
        OutcomeStatus::RejectedByVerification
    };
    let final_text =
        if verified { candidate } else { utterance.hypothesis.clone() };
    Ok(CorrectionOutcome {
        final_text,
        detected: true,
        confident: true,
        verified: Some(verified),
        iterations,
        reasoning: Some(reasoning),
        history,
        status,
        ..outcome_base(utterance, status, *tally)
    })
}

/// Stage 3: local format and step-completeness checks, optionally followed
/// by the two model passes over the raw reply. The model passes run only
/// when the local checks agree, and short-circuit on the first failure.
fn verify_answer(
    utterance: &Utterance,
    config: &PipelineConfig,
    client: &Client,
    prompts: &PromptSet,
    tally: &mut TokenTally,
    reasoning: &ReasoningTrace,
    raw: &str,
) -> Result<bool, StageFailure> {
    if !(check_steps(reasoning) && check_format(reasoning, prompts.format())) {
        return Ok(false);
    }
    if !config.verify_with_llm {
        return Ok(true);
    }
    let format_raw = call(
        client,
        format!("verify_format:{}", utterance.id),
        prompts.render_verify_format(raw),
        tally,
    )
    .map_err(fail("verify_format"))?;
    if !check_token_pass(&format_raw) {
        return Ok(false);
    }
    let steps_raw = call(
        client,
        format!("verify_steps:{}", utterance.id),
        prompts.render_verify_steps(raw),
        tally,
    )
    .map_err(fail("verify_steps"))?;
    Ok(check_token_pass(&steps_raw))
}

/// Outcome list and bookkeeping for one corpus run.
#[derive(Debug)]
pub struct RunReport {
    /// Newly computed outcomes in corpus order (failed ones included).
    pub outcomes: Vec<CorrectionOutcome>,
    /// Utterances skipped because the trace already contained them.
    pub skipped: usize,
    pub failed: usize,
}

/// One utterance awaiting the plain-prompt path, with cost already accrued
/// during detection.
struct PlainItem<'a> {
    pos: usize,
    utterance: &'a Utterance,
    carry: TokenTally,
}

/// Reorders concurrent completions back to corpus order, appending each
/// completed outcome to the trace as soon as its turn comes.
struct Sink<'w> {
    next: usize,
    pending: BTreeMap<usize, CorrectionOutcome>,
    done: Vec<CorrectionOutcome>,
    writer: Option<&'w mut TraceWriter>,
    write_error: Option<CorpusError>,
}

impl Sink<'_> {
    fn push(&mut self, pos: usize, outcome: CorrectionOutcome) {
        self.pending.insert(pos, outcome);
        while let Some(outcome) = self.pending.remove(&self.next) {
            if self.write_error.is_none() && !outcome.status.is_failed() {
                if let Some(writer) = self.writer.as_deref_mut() {
                    if let Err(error) = writer.append(&outcome) {
                        self.write_error = Some(error);
                    }
                }
            }
            self.done.push(outcome);
            self.next += 1;
        }
    }
}

/// Run `f` over every item from a small worker pool. Items are claimed in
/// order; completion order is arbitrary.
fn parallel_for<T: Sync>(items: &[T], workers: usize, f: impl Fn(usize, &T) + Sync) {
    let next = AtomicUsize::new(0);
    let workers = workers.min(items.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                f(i, &items[i]);
            });
        }
    });
}

/// Even token split across batch members, leftovers to the earliest.
fn split_share(total: u64, count: usize, index: usize) -> u64 {
    let count = count as u64;
    total / count + u64::from((index as u64) < total % count)
}

/// Map a numbered batch reply back to per-member corrections. A single
/// member takes the whole reply; otherwise only lines carrying a number in
/// range count, first occurrence wins, missing numbers yield None.
fn parse_batch_reply(content: &str, members: usize) -> Vec<Option<String>> {
    if members == 1 {
        return vec![Some(content.trim().to_string())];
    }
    let mut out = vec![None; members];
    for line in content.lines() {
        let line = line.trim();
        let digits: &str = &line[..line.bytes().take_while(u8::is_ascii_digit).count()];
        let Ok(number) = digits.parse::<usize>() else { continue };
        if number == 0 || number > members || out[number - 1].is_some() {
            continue;
        }
        let rest = line[digits.len()..].trim_start_matches(['.', ')', ':', '、']).trim();
        out[number - 1] = Some(rest.to_string());
    }
    out
}

/// One grouped plain-prompt request covering `chunk`, every member tagged
/// into the request id. Reply lines map back by number; a member whose line
/// is missing keeps its original. Tokens are split evenly across members.
fn run_plain_chunk(
    chunk: &[PlainItem<'_>],
    client: &Client,
    prompts: &PromptSet,
    sink: &Mutex<Sink<'_>>,
) {
    let texts: Vec<&str> = chunk.iter().map(|item| item.utterance.hypothesis.as_str()).collect();
    let ids: Vec<&str> = chunk.iter().map(|item| item.utterance.id.as_str()).collect();
    let request = ChatRequest::new(format!("plain:{}", ids.join("+")), prompts.render_plain(&texts));
    match client.complete(&request) {
        Err(error) => {
            let mut sink = sink.lock().expect("sink poisoned");
            for item in chunk {
                sink.push(item.pos, failed_outcome(item.utterance, item.carry, "plain", &error));
            }
        }
        Ok(response) => {
            let corrections = parse_batch_reply(&response.content, chunk.len());
            let mut sink = sink.lock().expect("sink poisoned");
            for (i, item) in chunk.iter().enumerate() {
                let final_text = corrections[i]
                    .clone()
                    .unwrap_or_else(|| item.utterance.hypothesis.clone());
                let mut tally = item.carry;
                tally.add(
                    split_share(response.tokens_in, chunk.len(), i),
                    split_share(response.tokens_out, chunk.len(), i),
                );
                sink.push(item.pos, plain_outcome(item.utterance, final_text, tally));
            }
        }
    }
}

/// Run a whole corpus, skipping utterances already recorded in the trace.
/// Outcomes stream into the trace in corpus order while execution runs up to
/// `max_concurrency` utterances (or batches) at a time.
pub fn run_corpus(
    corpus: &[Utterance],
    config: &PipelineConfig,
    client: &Client,
    prompts: &PromptSet,
    mut writer: Option<&mut TraceWriter>,
) -> Result<RunReport, PipelineError> {
    config.validate()?;
    let todo: Vec<&Utterance> = corpus
        .iter()
        .filter(|u| writer.as_ref().is_none_or(|w| !w.contains(&u.id)))
        .collect();
    let skipped = corpus.len() - todo.len();
    let sink = Mutex::new(Sink {
        next: 0,
        pending: BTreeMap::new(),
        done: Vec::new(),
        writer: writer.take(),
        write_error: None,
    });

    if config.mode.uses_reasoning() {
        parallel_for(&todo, config.max_concurrency, |pos, utterance| {
            let outcome = run_utterance(utterance, config, client, prompts);
            sink.lock().expect("sink poisoned").push(pos, outcome);
        });
    } else {
        // Plain-prompt modes group utterances into batched requests. For
        // pre_detect, detection runs per utterance first and only flagged
        // ones enter the batches.
        let flagged = Mutex::new(Vec::new());
        if config.mode.uses_detection() {
            parallel_for(&todo, config.max_concurrency, |pos, utterance| {
                let mut tally = TokenTally::default();
                match detect(utterance, client, prompts, &mut tally) {
                    Err(error) => sink
                        .lock()
                        .expect("sink poisoned")
                        .push(pos, failed_outcome(utterance, tally, "detect", &error)),
                    Ok(detection) if !detection.has_error => sink
                        .lock()
                        .expect("sink poisoned")
                        .push(pos, passthrough_outcome(utterance, tally)),
                    Ok(_) => flagged
                        .lock()
                        .expect("flagged poisoned")
                        .push(PlainItem { pos, utterance, carry: tally }),
                }
            });
        } else {
            flagged.lock().expect("flagged poisoned").extend(
                todo.iter()
                    .enumerate()
                    .map(|(pos, u)| PlainItem { pos, utterance: u, carry: TokenTally::default() }),
            );
        }
        let mut flagged = flagged.into_inner().expect("flagged poisoned");
        flagged.sort_by_key(|item| item.pos);
        let chunks: Vec<&[PlainItem]> = flagged.chunks(config.batch_size).collect();
        parallel_for(&chunks, config.max_concurrency, |_, chunk| {
            run_plain_chunk(chunk, client, prompts, &sink);
        });
    }

    let sink = sink.into_inner().expect("sink poisoned");
    if let Some(error) = sink.write_error {
        return Err(PipelineError::Corpus(error));
    }
    debug_assert_eq!(sink.done.len(), todo.len());
    let failed = sink.done.iter().filter(|o| o.status.is_failed()).count();
    Ok(RunReport { outcomes: sink.done, skipped, failed })
}
