//! `evaluate`: score hypothesis/reference pairs without running a model.

use std::path::{Path, PathBuf};

use clap::Args;

use rllm_core::{
    corpus_error_report, pair_with_references, parse_transcript_file, CorpusReport, Language,
    NounLexicon, Utterance,
};

use crate::config::{resolve_language, ConfigFile};
use crate::table;
use crate::{usage, write_json, CliError};

#[derive(Args)]
pub struct EvaluateArgs {
    /// Hypothesis transcript: one `id<TAB>text` line per utterance
    #[arg(long, value_name = "FILE")]
    pub hyp: PathBuf,

    /// Reference transcript covering every hypothesis id
    #[arg(long = "ref", value_name = "FILE")]
    pub reference: PathBuf,

    /// Transcript language: zh or en
    #[arg(long)]
    pub language: Option<String>,

    /// Noun lexicon, one noun per line, for the recall column
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,

    /// Earlier report file the change column is computed against
    #[arg(long, value_name = "FILE")]
    pub baseline: Option<PathBuf>,

    /// Report file to write: stable key order, rounded rates
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

pub fn run(args: &EvaluateArgs, file: &ConfigFile) -> Result<(), CliError> {
    let language = resolve_language(args.language.as_deref(), file.evaluate.language.as_deref())?;
    let pairs = load_pairs(&args.hyp, &args.reference, language)?;
    let lexicon = args
        .lexicon
        .as_deref()
        .map(|path| {
            NounLexicon::load(path, language)
                .map_err(|e| usage(&format!("lexicon {}", path.display()), e))
        })
        .transpose()?;
    let baseline = args.baseline.as_deref().map(read_report).transpose()?;

    let report = corpus_error_report(&pairs, lexicon.as_ref(), baseline.as_ref())
        .map_err(|e| CliError::Usage(e.to_string()))?;

    write_json(&args.out, &report.rounded())?;
    let name = args.hyp.file_stem().map_or_else(|| "corpus".to_string(), |s| s.to_string_lossy().into_owned());
    print!("{}", table::render_table(&[(name, report)]));
    Ok(())
}

/// Parse both transcripts and attach each reference to its hypothesis.
pub fn load_pairs(
    hyp: &Path,
    reference: &Path,
    language: Language,
) -> Result<Vec<Utterance>, CliError> {
    let hyp_text = std::fs::read_to_string(hyp)
        .map_err(|e| usage(&format!("cannot read {}", hyp.display()), e))?;
    let hyps = parse_transcript_file(&hyp_text, language)
        .map_err(|e| usage(&format!("{}", hyp.display()), e))?;
    let ref_text = std::fs::read_to_string(reference)
        .map_err(|e| usage(&format!("cannot read {}", reference.display()), e))?;
    let refs = parse_transcript_file(&ref_text, language)
        .map_err(|e| usage(&format!("{}", reference.display()), e))?;
    pair_with_references(&hyps, &refs).map_err(|e| usage(&format!("{}", reference.display()), e))
}

fn read_report(path: &Path) -> Result<CorpusReport, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(&format!("cannot read {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| usage(&format!("report {}", path.display()), e))
}
