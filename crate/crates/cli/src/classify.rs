//! `classify`: label correction pairs with failure-mode categories.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;

use rllm_core::classifier::{classify_corpus, ClassifierConfig};
use rllm_core::{parse_transcript_file, read_trace};

use crate::config::{resolve_language, ConfigFile};
use crate::{usage, write_json, CliError};

#[derive(Args)]
pub struct ClassifyArgs {
    /// Pairs to label: `input<TAB>output` lines, or a trace file whose
    /// original/final texts become the pairs
    #[arg(long, value_name = "FILE")]
    pub pairs: PathBuf,

    /// References enabling the reference-aware categories: a transcript
    /// matched by id for traces, one line per pair for tab-separated input
    #[arg(long = "ref", value_name = "FILE")]
    pub reference: Option<PathBuf>,

    /// Text language: zh or en
    #[arg(long)]
    pub language: Option<String>,

    /// Histogram file to write
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn run(args: &ClassifyArgs, file: &ConfigFile) -> Result<(), CliError> {
    let language = resolve_language(args.language.as_deref(), file.classify.language.as_deref())?;
    let text = std::fs::read_to_string(&args.pairs)
        .map_err(|e| usage(&format!("cannot read {}", args.pairs.display()), e))?;

    // A trace starts with its JSON header line; anything else is read as
    // tab-separated pairs.
    let (pairs, references) = if text.trim_start().starts_with('{') {
        let trace = read_trace(&args.pairs)
            .map_err(|e| usage(&format!("trace {}", args.pairs.display()), e))?;
        let outcomes: Vec<_> =
            trace.outcomes.iter().filter(|o| !o.status.is_failed()).collect();
        let by_id: BTreeMap<String, String> = match &args.reference {
            None => BTreeMap::new(),
            Some(path) => {
                let ref_text = std::fs::read_to_string(path)
                    .map_err(|e| usage(&format!("cannot read {}", path.display()), e))?;
                parse_transcript_file(&ref_text, language)
                    .map_err(|e| usage(&format!("{}", path.display()), e))?
                    .into_iter()
                    .map(|u| (u.id, u.hypothesis))
                    .collect()
            }
        };
        let pairs: Vec<(String, String)> =
            outcomes.iter().map(|o| (o.original.clone(), o.final_text.clone())).collect();
        let references: Vec<Option<String>> =
            outcomes.iter().map(|o| by_id.get(&o.id).cloned()).collect();
        (pairs, references)
    } else {
        let mut pairs = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (input, output) = line.split_once('\t').ok_or_else(|| {
                CliError::Usage(format!(
                    "{} line {}: expected input<TAB>output",
                    args.pairs.display(),
                    idx + 1
                ))
            })?;
            pairs.push((input.to_string(), output.to_string()));
        }
        let references: Vec<Option<String>> = match &args.reference {
            None => Vec::new(),
            Some(path) => std::fs::read_to_string(path)
                .map_err(|e| usage(&format!("cannot read {}", path.display()), e))?
                .lines()
                .map(|l| Some(l.to_string()))
                .collect(),
        };
        (pairs, references)
    };

    let config = ClassifierConfig::for_language(language);
    let histogram = classify_corpus(&pairs, &references, &config);

    let width = histogram.keys().map(|c| c.as_str().len()).max().unwrap_or(8).max("category".len());
    println!("{:width$}  count", "category");
    for (category, count) in &histogram {
        println!("{:width$}  {count}", category.as_str());
    }
    println!("{:width$}  {}", "total", pairs.len());

    if let Some(out) = &args.out {
        write_json(out, &histogram)?;
    }
    Ok(())
}
