//! Reliable LLM-based correction of speech-recognition transcripts.
//!
//! The pipeline runs three stages over each ASR hypothesis: a binary error
//! pre-detection gate, iterative chain-of-thought correction with a
//! confidence check and a do-not-repeat candidate history, and a final
//! verification of the answer format and reasoning steps. Whenever any gate
//! fails, the original hypothesis is kept, so the pipeline never emits an
//! unverified rewrite.
//!
//! The crate also ships the evaluation side: character/word error rates with
//! substitution/deletion/insertion decomposition, noun recall against a
//! lexicon, sentence-flow accounting, a rule-based hallucination taxonomy,
//! and token-cost bookkeeping. A scripted replay backend makes every stage
//! testable offline.

pub mod classifier;
pub mod client;
pub mod corpus;
pub mod metrics;
pub mod pipeline;
pub mod prompts;
pub mod reasoning;
pub mod trace;

pub use classifier::{classify, classify_corpus, ClassifierConfig, HallucinationCategory, HallucinationLabel};
pub use client::{
    BackendKind, BackendReply, ChatBackend, ChatRequest, ChatResponse, Client, ClientError,
    CostLedger, HttpBackend, HttpConfig, LedgerReport, Message, Role, ScriptReply,
    ScriptedBackend, StageCost, API_KEY_VAR, ENDPOINT_VAR,
};
pub use corpus::{
    make_batches, pair_with_references, parse_transcript_file, render_transcript_file, Batch,
    CorpusError, Language, NounLexicon, Utterance,
};
pub use metrics::report::{
    aggregate, corpus_error_report, sentence_change_analysis, ChangeVsBaseline, CorpusReport,
    FlowCounts, RatePercents, TokenTotals,
};
pub use metrics::{
    align, align_tokens, error_rate, normalize, noun_occurrences, noun_recall, tokenize, AlignOp,
    Alignment, ErrorCounts, MetricsError, NounRecall, TokenMode, TokenSequence,
};
pub use pipeline::{
    run_corpus, run_utterance, CandidateHistory, CorrectionOutcome, DetectionResult, Mode,
    OutcomeStatus, PipelineConfig, PipelineError, RunReport, TokenTally,
};
pub use prompts::{FormatSpec, PromptSet, TemplateError};
pub use reasoning::{check_format, check_steps, parse_trace, ReasoningTrace};
pub use trace::{read_trace, TraceFile, TraceHeader, TraceWriter};
