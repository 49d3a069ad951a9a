//! Append-only JSONL run traces: one header line, then one outcome per line.
//!
//! The header carries the resolved run configuration as flat strings and no
//! timestamps, so identical runs produce byte-identical files. Failed
//! utterances are never recorded; a rerun over the same trace retries them.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusError;
use crate::pipeline::CorrectionOutcome;

/// First line of every trace file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub tool: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
}

impl TraceHeader {
    pub fn new(config: BTreeMap<String, String>) -> Self {
        TraceHeader {
            tool: "rllm".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
        }
    }
}

/// Distinguishes the header line from outcome lines.
#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: TraceHeader,
}

/// A fully read trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub header: TraceHeader,
    pub outcomes: Vec<CorrectionOutcome>,
}

/// Read and validate a whole trace. Lines are 1-indexed in errors; unknown
/// JSON fields are ignored so older readers accept newer traces.
pub fn read_trace(path: &Path) -> Result<TraceFile, CorpusError> {
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let first = match lines.next() {
        Some(line) => line?,
        None => return Err(CorpusError::TraceParse(1)),
    };
    let header = serde_json::from_str::<HeaderLine>(&first)
        .map_err(|_| CorpusError::TraceParse(1))?
        .header;
    let mut outcomes: Vec<CorrectionOutcome> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let outcome: CorrectionOutcome =
            serde_json::from_str(&line).map_err(|_| CorpusError::TraceParse(line_no))?;
        if !seen.insert(outcome.id.clone()) {
            return Err(CorpusError::DuplicateId { id: outcome.id, line: line_no });
        }
        outcomes.push(outcome);
    }
    Ok(TraceFile { header, outcomes })
}

/// Incremental trace appender. Each record is flushed as soon as it is
/// written so an interrupted run leaves a resumable prefix.
pub struct TraceWriter {
    out: BufWriter<File>,
    written: HashSet<String>,
}

impl TraceWriter {
    /// Start a fresh trace, truncating any existing file.
    pub fn create(path: &Path, header: &TraceHeader) -> Result<Self, CorpusError> {
        let file = File::create(path)?;
        let mut out = BufWriter::new(file);
        let line = serde_json::to_string(&HeaderLine { header: header.clone() })
            .expect("header serializes");
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(TraceWriter { out, written: HashSet::new() })
    }

    /// Reopen an existing trace for appending. The stored header must equal
    /// `header`: resuming under a different configuration would mix
    /// incomparable outcomes in one file.
    pub fn resume(path: &Path, header: &TraceHeader) -> Result<(Self, Vec<CorrectionOutcome>), CorpusError> {
        let existing = read_trace(path)?;
        if existing.header != *header {
            return Err(CorpusError::InvalidConfig(
                "trace header does not match the current run configuration".to_string(),
            ));
        }
        let file = OpenOptions::new().append(true).open(path)?;
        let written = existing.outcomes.iter().map(|o| o.id.clone()).collect();
        Ok((TraceWriter { out: BufWriter::new(file), written }, existing.outcomes))
    }

    /// Open `path` for this run: resume if the file exists, create otherwise.
    pub fn open(path: &Path, header: &TraceHeader) -> Result<(Self, Vec<CorrectionOutcome>), CorpusError> {
        if path.exists() {
            Self::resume(path, header)
        } else {
            Ok((Self::create(path, header)?, Vec::new()))
        }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.written.contains(id)
    }

    /// Append one completed outcome. Failed outcomes must not be recorded:
    /// their absence is what makes a rerun retry them.
    pub fn append(&mut self, outcome: &CorrectionOutcome) -> Result<(), CorpusError> {
        debug_assert!(!outcome.status.is_failed(), "failed outcomes are retried, not recorded");
        let line = serde_json::to_string(outcome).expect("outcome serializes");
        self.out.write_all(line.as_bytes())?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        self.written.insert(outcome.id.clone());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{CandidateHistory, OutcomeStatus};

    fn header() -> TraceHeader {
        let mut config = BTreeMap::new();
        config.insert("mode".to_string(), "full".to_string());
        config.insert("language".to_string(), "mandarin".to_string());
        TraceHeader::new(config)
    }

    fn outcome(id: &str) -> CorrectionOutcome {
        CorrectionOutcome {
            id: id.to_string(),
            original: "原始".to_string(),
            final_text: "最终".to_string(),
            detected: true,
            confident: true,
            verified: Some(true),
            iterations: 1,
            reasoning: None,
            history: CandidateHistory::default(),
            status: OutcomeStatus::Corrected,
            tokens_in: 10,
            tokens_out: 5,
            error: None,
        }
    }

    #[test]
    fn round_trips_header_and_outcomes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let mut writer = TraceWriter::create(&path, &header()).unwrap();
        writer.append(&outcome("u1")).unwrap();
        writer.append(&outcome("u2")).unwrap();
        drop(writer);

        let trace = read_trace(&path).unwrap();
        assert_eq!(trace.header, header());
        assert_eq!(trace.outcomes.len(), 2);
        assert_eq!(trace.outcomes[0], outcome("u1"));
        assert_eq!(trace.outcomes[1].id, "u2");
    }

    #[test]
    fn final_text_serializes_under_the_final_key() {
        let line = serde_json::to_string(&outcome("u1")).unwrap();
        assert!(line.contains("\"final\":\"最终\""), "{line}");
        assert!(!line.contains("final_text"), "{line}");
        // Optional diagnostics stay off the wire when empty.
        assert!(!line.contains("reasoning"), "{line}");
        assert!(!line.contains("history"), "{line}");
        assert!(!line.contains("error"), "{line}");
    }

    #[test]
    fn resume_skips_recorded_ids_and_appends_new_ones() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let mut writer = TraceWriter::create(&path, &header()).unwrap();
        writer.append(&outcome("u1")).unwrap();
        drop(writer);

        let (mut writer, existing) = TraceWriter::resume(&path, &header()).unwrap();
        assert_eq!(existing.len(), 1);
        assert!(writer.contains("u1"));
        assert!(!writer.contains("u2"));
        writer.append(&outcome("u2")).unwrap();
        drop(writer);

        let trace = read_trace(&path).unwrap();
        assert_eq!(trace.outcomes.len(), 2);
    }

    #[test]
    fn resume_rejects_a_different_configuration() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        TraceWriter::create(&path, &header()).unwrap();
        let mut other = header();
        other.config.insert("mode".to_string(), "base".to_string());
        assert!(matches!(
            TraceWriter::resume(&path, &other),
            Err(CorpusError::InvalidConfig(_))
        ));
    }

    #[test]
    fn open_creates_then_resumes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let (mut writer, existing) = TraceWriter::open(&path, &header()).unwrap();
        assert!(existing.is_empty());
        writer.append(&outcome("u1")).unwrap();
        drop(writer);
        let (_, existing) = TraceWriter::open(&path, &header()).unwrap();
        assert_eq!(existing.len(), 1);
    }

    #[test]
    fn corrupt_lines_report_their_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let mut writer = TraceWriter::create(&path, &header()).unwrap();
        writer.append(&outcome("u1")).unwrap();
        drop(writer);
        let mut content = std::fs::read_to_string(&path).unwrap();
        content.push_str("{not json\n");
        std::fs::write(&path, content).unwrap();
        assert!(matches!(read_trace(&path).unwrap_err(), CorpusError::TraceParse(3)));
    }

    #[test]
    fn missing_header_and_duplicate_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("empty.jsonl");
        std::fs::write(&empty, "").unwrap();
        assert!(matches!(read_trace(&empty).unwrap_err(), CorpusError::TraceParse(1)));

        let dup = dir.path().join("dup.jsonl");
        let mut writer = TraceWriter::create(&dup, &header()).unwrap();
        writer.append(&outcome("u1")).unwrap();
        drop(writer);
        let mut content = std::fs::read_to_string(&dup).unwrap();
        let line = content.lines().nth(1).unwrap().to_string();
        content.push_str(&line);
        content.push('\n');
        std::fs::write(&dup, content).unwrap();
        assert!(matches!(
            read_trace(&dup).unwrap_err(),
            CorpusError::DuplicateId { line: 3, .. }
        ));
    }

    #[test]
    fn unknown_fields_are_ignored_on_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let mut writer = TraceWriter::create(&path, &header()).unwrap();
        writer.append(&outcome("u1")).unwrap();
        drop(writer);
        let mut content = std::fs::read_to_string(&path).unwrap();
        content = content.replace("\"tokens_in\":10", "\"tokens_in\":10,\"novel_field\":1");
        std::fs::write(&path, content).unwrap();
        assert_eq!(read_trace(&path).unwrap().outcomes[0], outcome("u1"));
    }
}
