//! Aggregation of per-program prompt rankings (1 = best, 3 = worst).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingEntry {
    pub program_id: String,
    /// Prompt id → rank in 1..=3. Ties are allowed.
    pub ranks: BTreeMap<String, u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingSheet {
    pub exercise_id: String,
    pub entries: Vec<RankingEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptScore {
    pub per_exercise: BTreeMap<String, u32>,
    pub total: u32,
    /// Set only when this prompt alone has the lowest total.
    pub winner: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct RankingSummary {
    pub scores: BTreeMap<String, PromptScore>,
    /// Prompts sharing the lowest total when more than one does.
    pub tied_for_best: Vec<String>,
}

impl RankingSummary {
    pub fn winner(&self) -> Option<&str> {
        self.scores
            .iter()
            .find(|(_, s)| s.winner)
            .map(|(id, _)| id.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RankingError {
    #[error("sheet `{exercise_id}` has no entries")]
    EmptySheet { exercise_id: String },
    #[error("sheet `{exercise_id}`, program `{program_id}`: rank {rank} for `{prompt_id}` is not in 1..=3")]
    RankOutOfRange {
        exercise_id: String,
        program_id: String,
        prompt_id: String,
        rank: u8,
    },
    #[error("sheet `{exercise_id}`, program `{program_id}`: ranks prompts {found:?}, expected {expected:?}")]
    InconsistentPrompts {
        exercise_id: String,
        program_id: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("{file}: {detail}")]
    File { file: String, detail: String },
}

/// Sums ranks per prompt across all sheets and entries; the lowest total wins.
/// No tiebreak is applied: a shared minimum is reported in `tied_for_best`.
pub fn aggregate_ranking(sheets: &[RankingSheet]) -> Result<RankingSummary, RankingError> {
    let mut expected: Option<BTreeSet<&str>> = None;
    let mut scores: BTreeMap<String, PromptScore> = BTreeMap::new();
    for sheet in sheets {
        if sheet.entries.is_empty() {
            return Err(RankingError::EmptySheet {
                exercise_id: sheet.exercise_id.clone(),
            });
        }
        for entry in &sheet.entries {
            let found: BTreeSet<&str> = entry.ranks.keys().map(String::as_str).collect();
            let expected = expected.get_or_insert_with(|| found.clone());
            if *expected != found {
                return Err(RankingError::InconsistentPrompts {
                    exercise_id: sheet.exercise_id.clone(),
                    program_id: entry.program_id.clone(),
                    expected: expected.iter().map(|s| s.to_string()).collect(),
                    found: found.iter().map(|s| s.to_string()).collect(),
                });
            }
            for (prompt_id, &rank) in &entry.ranks {
                if !(1..=3).contains(&rank) {
                    return Err(RankingError::RankOutOfRange {
                        exercise_id: sheet.exercise_id.clone(),
                        program_id: entry.program_id.clone(),
                        prompt_id: prompt_id.clone(),
                        rank,
                    });
                }
                let score = scores.entry(prompt_id.clone()).or_insert_with(|| PromptScore {
                    per_exercise: BTreeMap::new(),
                    total: 0,
                    winner: false,
                });
                *score.per_exercise.entry(sheet.exercise_id.clone()).or_default() += u32::from(rank);
                score.total += u32::from(rank);
            }
        }
    }
    let best = scores.values().map(|s| s.total).min();
    let leaders: Vec<String> = scores
        .iter()
        .filter(|(_, s)| Some(s.total) == best)
        .map(|(id, _)| id.clone())
        .collect();
    let mut summary = RankingSummary {
        scores,
        tied_for_best: Vec::new(),
    };
    match leaders.as_slice() {
        [only] => summary.scores.get_mut(only).expect("leader exists").winner = true,
        [] => {}
        _ => summary.tied_for_best = leaders,
    }
    Ok(summary)
}

/// Reads every `*.json` sheet in `dir`, in file-name order.
pub fn load_sheets(dir: &Path) -> Result<Vec<RankingSheet>, RankingError> {
    let file_err = |file: &Path, detail: String| RankingError::File {
        file: file.display().to_string(),
        detail,
    };
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| file_err(dir, e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|f| {
            let text = std::fs::read_to_string(f).map_err(|e| file_err(f, e.to_string()))?;
            serde_json::from_str(&text).map_err(|e| file_err(f, e.to_string()))
        })
        .collect()
}
