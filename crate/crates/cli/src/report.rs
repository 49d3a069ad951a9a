//! `report`: render result tables from recorded traces.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use rllm_core::{
    aggregate, parse_transcript_file, read_trace, sentence_change_analysis, CorpusReport,
    NounLexicon, TraceFile,
};

use crate::config::{resolve_language, ConfigFile};
use crate::table;
use crate::{usage, write_json, CliError};

#[derive(Args)]
pub struct ReportArgs {
    /// Trace files, one table row each
    #[arg(value_name = "TRACE", required = true)]
    pub traces: Vec<PathBuf>,

    /// Reference transcript covering every utterance in the traces
    #[arg(long = "ref", value_name = "FILE")]
    pub reference: PathBuf,

    /// Transcript language; defaults to what the trace headers recorded
    #[arg(long)]
    pub language: Option<String>,

    /// Noun lexicon, one noun per line, for the recall column
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,

    /// Trace anchoring the change column and the fixed/broken counts
    #[arg(long, value_name = "FILE")]
    pub baseline: Option<PathBuf>,

    /// Machine-readable report file to write
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SystemReport {
    system: String,
    #[serde(flatten)]
    report: CorpusReport,
}

pub fn run(args: &ReportArgs, file: &ConfigFile) -> Result<(), CliError> {
    let mut traces: Vec<(String, TraceFile)> = Vec::new();
    for path in &args.traces {
        traces.push((stem(path), load_trace(path)?));
    }
    let baseline = args
        .baseline
        .as_deref()
        .map(|path| Ok::<_, CliError>((stem(path), load_trace(path)?)))
        .transpose()?;

    let recorded = recorded_language(traces.iter().chain(baseline.iter()))?;
    let language = resolve_language(
        args.language.as_deref().or(file.report.language.as_deref()),
        recorded.as_deref(),
    )?;

    let ref_text = std::fs::read_to_string(&args.reference)
        .map_err(|e| usage(&format!("cannot read {}", args.reference.display()), e))?;
    let references: BTreeMap<String, String> = parse_transcript_file(&ref_text, language)
        .map_err(|e| usage(&format!("{}", args.reference.display()), e))?
        .into_iter()
        .map(|u| (u.id, u.hypothesis))
        .collect();
    let lexicon = args
        .lexicon
        .as_deref()
        .map(|path| {
            NounLexicon::load(path, language)
                .map_err(|e| usage(&format!("lexicon {}", path.display()), e))
        })
        .transpose()?;

    let score = |name: &str, trace: &TraceFile, base: Option<&CorpusReport>| {
        aggregate(&trace.outcomes, &references, language, lexicon.as_ref(), base)
            .map_err(|e| usage(name, e))
    };

    let mut rows: Vec<(String, CorpusReport)> = Vec::new();
    let baseline_report = match &baseline {
        None => None,
        Some((name, trace)) => {
            let report = score(name, trace, None)?;
            rows.push((name.clone(), report.clone()));
            Some(report)
        }
    };
    for (name, trace) in &traces {
        let mut report = score(name, trace, baseline_report.as_ref())?;
        if let Some((_, baseline_trace)) = &baseline {
            report.flow = sentence_change_analysis(
                Some(&baseline_trace.outcomes),
                &trace.outcomes,
                &references,
                language,
            )
            .map_err(|e| usage(name, e))?;
        }
        rows.push((name.clone(), report));
    }

    print!("{}", table::render_table(&rows));
    println!();
    for (name, report) in &rows {
        println!("{}", table::render_flow(name, &report.flow));
    }

    if let Some(out) = &args.out {
        let machine: Vec<SystemReport> = rows
            .iter()
            .map(|(name, report)| SystemReport { system: name.clone(), report: report.rounded() })
            .collect();
        write_json(out, &machine)?;
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn load_trace(path: &Path) -> Result<TraceFile, CliError> {
    read_trace(path).map_err(|e| usage(&format!("trace {}", path.display()), e))
}

/// The language the traces themselves recorded, when they all agree.
fn recorded_language<'a>(
    traces: impl Iterator<Item = &'a (String, TraceFile)>,
) -> Result<Option<String>, CliError> {
    let mut found: Option<(String, String)> = None;
    for (name, trace) in traces {
        let Some(language) = trace.header.config.get("language") else { continue };
        match &found {
            None => found = Some((name.clone(), language.clone())),
            Some((_, prev)) if prev == language => {}
            Some((prev_name, prev)) => {
                return Err(CliError::Usage(format!(
                    "traces disagree on language ({prev} in {prev_name}, {language} in {name}); pass --language"
                )));
            }
        }
    }
    Ok(found.map(|(_, language)| language))
}
