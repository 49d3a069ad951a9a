//! `correct`: run the correction pipeline and record outcomes in a trace.

use std::path::PathBuf;

use clap::Args;

use rllm_core::{
    pair_with_references, parse_transcript_file, run_corpus, Client, HttpConfig, OutcomeStatus,
    PromptSet, ScriptedBackend, TraceWriter,
};

use crate::config::{ConfigFile, RunConfig};
use crate::{usage, CliError};

#[derive(Args)]
pub struct CorrectArgs {
    /// Hypothesis transcript: one `id<TAB>text` line per utterance
    #[arg(long, value_name = "FILE")]
    pub hyp: PathBuf,

    /// Reference transcript; checked up front to cover every hypothesis id
    #[arg(long = "ref", value_name = "FILE")]
    pub reference: Option<PathBuf>,

    /// Trace file to create, or resume when it already exists
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,

    /// Pipeline mode: base, pre_detect, cot, iterative, or full
    #[arg(long)]
    pub mode: Option<String>,

    /// Correction attempts per utterance before giving up
    #[arg(long, value_name = "N")]
    pub max_steps: Option<usize>,

    /// Utterances per plain-prompt request (base and pre_detect modes)
    #[arg(long, value_name = "N")]
    pub batch_size: Option<usize>,

    /// Utterances corrected concurrently
    #[arg(long, value_name = "N")]
    pub max_concurrency: Option<usize>,

    /// Add model yes/no passes on top of the local answer checks
    #[arg(long)]
    pub verify_with_llm: bool,

    /// Transcript language: zh or en
    #[arg(long)]
    pub language: Option<String>,

    /// Model name sent to the live backend
    #[arg(long)]
    pub model: Option<String>,

    /// Chat-completions endpoint; RLLM_ENDPOINT is the fallback
    #[arg(long)]
    pub endpoint: Option<String>,

    /// Prompt template directory; defaults to the built-in templates
    #[arg(long, value_name = "DIR")]
    pub prompts: Option<PathBuf>,

    /// Replay replies from this script instead of calling a live backend
    #[arg(long, value_name = "FILE")]
    pub script: Option<PathBuf>,
}

pub fn run(args: &CorrectArgs, file: &ConfigFile) -> Result<(), CliError> {
    let rc = RunConfig::resolve(args, &file.correct)?;

    let hyp_text = std::fs::read_to_string(&args.hyp)
        .map_err(|e| usage(&format!("cannot read {}", args.hyp.display()), e))?;
    let corpus = parse_transcript_file(&hyp_text, rc.language)
        .map_err(|e| usage(&format!("{}", args.hyp.display()), e))?;
    if let Some(ref_path) = &args.reference {
        let ref_text = std::fs::read_to_string(ref_path)
            .map_err(|e| usage(&format!("cannot read {}", ref_path.display()), e))?;
        let refs = parse_transcript_file(&ref_text, rc.language)
            .map_err(|e| usage(&format!("{}", ref_path.display()), e))?;
        pair_with_references(&corpus, &refs)
            .map_err(|e| usage(&format!("{}", ref_path.display()), e))?;
    }

    let prompts = match &rc.prompts_dir {
        Some(dir) => PromptSet::load(dir, rc.language),
        None => PromptSet::builtin(rc.language),
    }
    .map_err(|e| usage("prompt templates", e))?;

    let client = match &args.script {
        Some(path) => Client::scripted(
            ScriptedBackend::from_file(path)
                .map_err(|e| usage(&format!("script {}", path.display()), e))?,
        ),
        None => {
            let mut http = HttpConfig::new(&rc.model);
            http.endpoint = rc.endpoint.clone();
            Client::http(http).map_err(|e| usage("backend", e))?
        }
    };

    let header = rc.trace_header(client.kind());
    let (mut writer, _existing) = TraceWriter::open(&args.out, &header)
        .map_err(|e| usage(&format!("trace {}", args.out.display()), e))?;

    let report = run_corpus(&corpus, &rc.pipeline, &client, &prompts, Some(&mut writer))
        .map_err(|e| CliError::Run(e.to_string()))?;

    let mut counts = [0usize; 5];
    for outcome in &report.outcomes {
        let slot = match outcome.status {
            OutcomeStatus::Corrected => 0,
            OutcomeStatus::PassthroughClean => 1,
            OutcomeStatus::AbandonedNoConfidence => 2,
            OutcomeStatus::RejectedByVerification => 3,
            OutcomeStatus::Failed => 4,
        };
        counts[slot] += 1;
    }
    println!(
        "{} utterances: {} corrected, {} passthrough, {} abandoned, {} rejected, {} failed, {} already in trace",
        corpus.len(),
        counts[0],
        counts[1],
        counts[2],
        counts[3],
        counts[4],
        report.skipped,
    );
    let ledger = client.ledger_report();
    println!(
        "tokens: {} in / {} out over {} calls{}",
        ledger.total.tokens_in,
        ledger.total.tokens_out,
        ledger.total.calls,
        if ledger.total.estimated { " (estimated)" } else { "" },
    );

    if report.failed > 0 {
        return Err(CliError::Run(format!(
            "{} utterance(s) failed; rerun with the same --out to retry them",
            report.failed
        )));
    }
    Ok(())
}
