//! Keystroke snapshot logs and the step sequences derived from them.
//!
//! A raw log holds one full program state per keystroke. The pipeline in
//! [`pipeline`] reduces it to the states that matter for hinting: no
//! consecutive duplicates, no syntax errors, no half-typed lines, and no
//! short-lived debugging prints.

mod ingest;
pub mod pipeline;
pub mod synth;
pub mod syntax;

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ingest::{ingest_raw_log, parse_raw_log, LogFormat};
pub use pipeline::{
    build_step_sequence, collapse_line_edits, dedup, filter_syntax_errors,
    remove_transient_prints, PipelineOptions, DEFAULT_PRINT_WINDOW,
};
pub use syntax::{
    CheckerConfig, CheckerError, EmbeddedChecker, SubprocessChecker, SyntaxChecker,
};

/// One saved program state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub seq_index: u64,
    /// Milliseconds since the Unix epoch.
    pub timestamp: i64,
    pub source: String,
}

impl Snapshot {
    pub fn new(seq_index: u64, timestamp: i64, source: impl Into<String>) -> Self {
        Self {
            seq_index,
            timestamp,
            source: source.into(),
        }
    }

    pub fn normalized(&self) -> String {
        normalize_source(&self.source)
    }
}

/// The pipeline stage that dropped a raw snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterRule {
    Duplicate,
    SyntaxError,
    LineEdit,
    TransientPrint,
}

impl fmt::Display for FilterRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterRule::Duplicate => "duplicate",
            FilterRule::SyntaxError => "syntax_error",
            FilterRule::LineEdit => "line_edit",
            FilterRule::TransientPrint => "transient_print",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub index: u64,
    pub rule: FilterRule,
}

/// The cleaned step sequence of one student on one exercise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSequence {
    pub student_id: String,
    pub exercise_id: String,
    pub steps: Vec<Snapshot>,
    /// Raw indices removed by the pipeline, in the order they were removed.
    pub provenance: Vec<Removal>,
}

#[derive(Serialize, Deserialize)]
struct SequenceHeader {
    student_id: String,
    exercise_id: String,
    provenance: Vec<Removal>,
}

impl StepSequence {
    /// Writes the sequence as JSONL: a header object, then one step per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), SnapshotError> {
        let header = SequenceHeader {
            student_id: self.student_id.clone(),
            exercise_id: self.exercise_id.clone(),
            provenance: self.provenance.clone(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for step in &self.steps {
            serde_json::to_writer(&mut out, step)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, SnapshotError> {
        let mut lines = input.lines().enumerate().filter(|(_, l)| match l {
            Ok(l) => !l.trim().is_empty(),
            Err(_) => true,
        });
        let (_, first) = lines.next().ok_or_else(|| SnapshotError::Malformed {
            row: 1,
            detail: "missing step-sequence header".into(),
        })?;
        let header: SequenceHeader =
            serde_json::from_str(&first?).map_err(|e| SnapshotError::Malformed {
                row: 1,
                detail: format!("invalid header: {e}"),
            })?;
        let mut steps = Vec::new();
        for (i, line) in lines {
            let step: Snapshot =
                serde_json::from_str(&line?).map_err(|e| SnapshotError::Malformed {
                    row: i + 1,
                    detail: e.to_string(),
                })?;
            steps.push(step);
        }
        Ok(StepSequence {
            student_id: header.student_id,
            exercise_id: header.exercise_id,
            steps,
            provenance: header.provenance,
        })
    }

    pub fn load(path: &Path) -> Result<Self, SnapshotError> {
        let file = std::fs::File::open(path)?;
        Self::read_jsonl(std::io::BufReader::new(file))
    }
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("row {row}: {detail}")]
    Malformed { row: usize, detail: String },
    #[error("schema error: missing {0}")]
    Schema(String),
    #[error(transparent)]
    Checker(#[from] CheckerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Converts CRLF and lone CR line endings to LF.
pub fn normalize_newlines(text: &str) -> String {
    if !text.contains('\r') {
        return text.to_string();
    }
    text.replace("\r\n", "\n").replace('\r', "\n")
}

/// Canonical form used for duplicate detection: LF newlines, no trailing
/// whitespace on any line, no trailing blank lines.
pub fn normalize_source(source: &str) -> String {
    let text = normalize_newlines(source);
    let mut lines: Vec<&str> = text.split('\n').map(str::trim_end).collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_strips_cosmetic_churn() {
        assert_eq!(normalize_source("x=1  \r\ny=2\t\n\n\n"), "x=1\ny=2");
        assert_eq!(normalize_source(""), "");
        assert_eq!(normalize_source("\n\n"), "");
        assert_eq!(normalize_source("  x"), "  x");
    }

    #[test]
    fn step_sequence_jsonl_round_trip() {
        let seq = StepSequence {
            student_id: "s1".into(),
            exercise_id: "pies".into(),
            steps: vec![Snapshot::new(0, 10, "a = 1"), Snapshot::new(3, 12, "a = 1\nb = \"x\\n\"")],
            provenance: vec![Removal {
                index: 1,
                rule: FilterRule::SyntaxError,
            }],
        };
        let mut buf = Vec::new();
        seq.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().next().unwrap().contains("\"provenance\""));
        let back = StepSequence::read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn reading_empty_sequence_file_fails() {
        assert!(matches!(
            StepSequence::read_jsonl(&b""[..]),
            Err(SnapshotError::Malformed { .. })
        ));
    }
}
