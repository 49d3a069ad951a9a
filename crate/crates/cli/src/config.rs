//! Settings file schema and flag/env/file precedence.
//!
//! Every knob resolves before any work starts: command-line flags win over
//! environment variables, which win over the settings file, which wins over
//! built-in defaults. The resolved correction settings are echoed into the
//! trace header so a resumed run can prove it matches the original one.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use rllm_core::pipeline::Mode;
use rllm_core::{BackendKind, Language, PipelineConfig, TraceHeader, ENDPOINT_VAR};

use crate::correct::CorrectArgs;
use crate::{usage, CliError};

/// Settings file: one table per subcommand, every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub correct: CorrectSection,
    #[serde(default)]
    pub evaluate: ScoringSection,
    #[serde(default)]
    pub classify: ScoringSection,
    #[serde(default)]
    pub report: ScoringSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectSection {
    pub model: Option<String>,
    pub endpoint: Option<String>,
    pub mode: Option<String>,
    pub max_steps: Option<usize>,
    pub batch_size: Option<usize>,
    pub max_concurrency: Option<usize>,
    pub language: Option<String>,
    pub verify_with_llm: Option<bool>,
    pub prompts: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoringSection {
    pub language: Option<String>,
}

impl ConfigFile {
    pub fn load_optional(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(ConfigFile::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(&format!("cannot read config {}", path.display()), e))?;
        toml::from_str(&text).map_err(|e| usage(&format!("config {}", path.display()), e))
    }
}

/// Parse a flag-or-file string setting, naming the offending value on error.
pub fn parse_setting<T>(value: Option<&str>, what: &str) -> Result<Option<T>, CliError>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    value
        .map(|v| v.parse::<T>().map_err(|e| usage(what, e)))
        .transpose()
}

/// Language with flag > file > Mandarin default.
pub fn resolve_language(flag: Option<&str>, file: Option<&str>) -> Result<Language, CliError> {
    Ok(parse_setting(flag.or(file), "language")?.unwrap_or_default())
}

/// Fully resolved settings for a correction run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub language: Language,
    pub pipeline: PipelineConfig,
    pub model: String,
    /// Resolved endpoint, or `None` when nothing configured it.
    pub endpoint: Option<String>,
    pub prompts_dir: Option<PathBuf>,
}

pub const DEFAULT_MODEL: &str = "default";

impl RunConfig {
    pub fn resolve(args: &CorrectArgs, file: &CorrectSection) -> Result<RunConfig, CliError> {
        let defaults = PipelineConfig::default();
        let mode: Option<Mode> = parse_setting(args.mode.as_deref().or(file.mode.as_deref()), "mode")?;
        let pipeline = PipelineConfig {
            mode: mode.unwrap_or(defaults.mode),
            max_steps: args.max_steps.or(file.max_steps).unwrap_or(defaults.max_steps),
            batch_size: args.batch_size.or(file.batch_size).unwrap_or(defaults.batch_size),
            max_concurrency: args
                .max_concurrency
                .or(file.max_concurrency)
                .unwrap_or(defaults.max_concurrency),
            verify_with_llm: args.verify_with_llm || file.verify_with_llm.unwrap_or(false),
        };
        pipeline.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let endpoint = args
            .endpoint
            .clone()
            .or_else(|| std::env::var(ENDPOINT_VAR).ok())
            .or_else(|| file.endpoint.clone());
        Ok(RunConfig {
            language: resolve_language(args.language.as_deref(), file.language.as_deref())?,
            pipeline,
            model: args
                .model
                .clone()
                .or_else(|| file.model.clone())
                .unwrap_or_else(|| DEFAULT_MODEL.to_string()),
            endpoint,
            prompts_dir: args.prompts.clone().or_else(|| file.prompts.clone()),
        })
    }

    /// Correction-semantics settings, recorded in the trace so a resume can
    /// insist on an identical setup. Concurrency and endpoint are execution
    /// details and stay out: they change where and how fast, never what.
    pub fn trace_header(&self, backend: BackendKind) -> TraceHeader {
        let mut config = BTreeMap::new();
        let backend = match backend {
            BackendKind::Live => "live",
            BackendKind::Scripted => "scripted",
        };
        config.insert("backend".to_string(), backend.to_string());
        config.insert("batch_size".to_string(), self.pipeline.batch_size.to_string());
        config.insert("language".to_string(), self.language.to_string());
        config.insert("max_steps".to_string(), self.pipeline.max_steps.to_string());
        config.insert("mode".to_string(), self.pipeline.mode.to_string());
        config.insert("model".to_string(), self.model.clone());
        config.insert("verify_with_llm".to_string(), self.pipeline.verify_with_llm.to_string());
        TraceHeader::new(config)
    }
}
