use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

use super::{normalize_newlines, Snapshot, SnapshotError};

const REQUIRED: [&str; 3] = ["index", "timestamp", "source"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Csv,
    Jsonl,
}

impl FromStr for LogFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(LogFormat::Csv),
            "jsonl" | "ndjson" => Ok(LogFormat::Jsonl),
            other => Err(format!("unknown log format `{other}` (expected csv or jsonl)")),
        }
    }
}

/// Reads a raw keystroke log.
///
/// Rows are numbered from 1 starting at the first data row (the CSV header is
/// not counted). The result is sorted by `seq_index`.
pub fn ingest_raw_log(path: &Path, format: LogFormat) -> Result<Vec<Snapshot>, SnapshotError> {
    let file = std::fs::File::open(path)?;
    parse_raw_log(BufReader::new(file), format)
}

pub fn parse_raw_log<R: Read>(input: R, format: LogFormat) -> Result<Vec<Snapshot>, SnapshotError> {
    let mut rows = match format {
        LogFormat::Csv => parse_csv(input)?,
        LogFormat::Jsonl => parse_jsonl(BufReader::new(input))?,
    };
    rows.sort_by_key(|(_, s)| s.seq_index);
    for pair in rows.windows(2) {
        let (_, prev) = &pair[0];
        let (row, cur) = &pair[1];
        if cur.seq_index == prev.seq_index {
            return Err(SnapshotError::Malformed {
                row: *row,
                detail: format!("duplicate index {}", cur.seq_index),
            });
        }
        if cur.timestamp < prev.timestamp {
            return Err(SnapshotError::Malformed {
                row: *row,
                detail: format!(
                    "timestamp {} precedes timestamp {} of index {}",
                    cur.timestamp, prev.timestamp, prev.seq_index
                ),
            });
        }
    }
    Ok(rows.into_iter().map(|(_, s)| s).collect())
}

fn parse_csv<R: Read>(input: R) -> Result<Vec<(usize, Snapshot)>, SnapshotError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| SnapshotError::Schema(format!("readable header ({e})")))?
        .clone();
    let mut columns = [0usize; 3];
    for (slot, name) in columns.iter_mut().zip(REQUIRED) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| SnapshotError::Schema(format!("column `{name}`")))?;
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| SnapshotError::Malformed {
            row,
            detail: e.to_string(),
        })?;
        let field = |c: usize| {
            record.get(c).ok_or_else(|| SnapshotError::Malformed {
                row,
                detail: format!("missing field `{}`", headers.get(c).unwrap_or("?")),
            })
        };
        let seq_index = field(columns[0])?
            .trim()
            .parse::<u64>()
            .map_err(|e| SnapshotError::Malformed {
                row,
                detail: format!("invalid index: {e}"),
            })?;
        let timestamp = field(columns[1])?
            .trim()
            .parse::<i64>()
            .map_err(|e| SnapshotError::Malformed {
                row,
                detail: format!("invalid timestamp: {e}"),
            })?;
        let source = normalize_newlines(field(columns[2])?);
        out.push((row, Snapshot::new(seq_index, timestamp, source)));
    }
    Ok(out)
}

fn parse_jsonl<R: BufRead>(input: R) -> Result<Vec<(usize, Snapshot)>, SnapshotError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let row = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| SnapshotError::Malformed {
            row,
            detail: e.to_string(),
        })?;
        let obj = value.as_object().ok_or_else(|| SnapshotError::Malformed {
            row,
            detail: "expected a JSON object".into(),
        })?;
        for key in REQUIRED {
            if !obj.contains_key(key) {
                return Err(SnapshotError::Schema(format!("key `{key}` on row {row}")));
            }
        }
        let seq_index = obj["index"].as_u64().ok_or_else(|| SnapshotError::Malformed {
            row,
            detail: "invalid index: expected a non-negative integer".into(),
        })?;
        let timestamp = obj["timestamp"]
            .as_i64()
            .ok_or_else(|| SnapshotError::Malformed {
                row,
                detail: "invalid timestamp: expected integer milliseconds".into(),
            })?;
        let source = obj["source"].as_str().ok_or_else(|| SnapshotError::Malformed {
            row,
            detail: "invalid source: expected a string".into(),
        })?;
        out.push((row, Snapshot::new(seq_index, timestamp, normalize_newlines(source))));
    }
    Ok(out)
}
