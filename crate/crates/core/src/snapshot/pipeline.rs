//! The snapshot-cleaning passes and their composition.

use std::collections::HashSet;

use super::syntax::{CheckerError, SyntaxChecker};
use super::{FilterRule, Removal, Snapshot, SnapshotError, StepSequence};

/// How many later snapshots a debugging print may survive and still count as transient.
pub const DEFAULT_PRINT_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineOptions {
    pub print_window: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            print_window: DEFAULT_PRINT_WINDOW,
        }
    }
}

/// Drops every snapshot whose normalized source equals that of the previously
/// retained snapshot. Reverts to an earlier state are kept.
pub fn dedup(snapshots: &[Snapshot]) -> Vec<Snapshot> {
    let mut out: Vec<Snapshot> = Vec::with_capacity(snapshots.len());
    let mut last: Option<String> = None;
    for snap in snapshots {
        let norm = snap.normalized();
        if last.as_deref() == Some(norm.as_str()) {
            continue;
        }
        last = Some(norm);
        out.push(snap.clone());
    }
    out
}

pub fn filter_syntax_errors(
    snapshots: &[Snapshot],
    checker: &dyn SyntaxChecker,
) -> Result<Vec<Snapshot>, CheckerError> {
    let mut out = Vec::with_capacity(snapshots.len());
    for snap in snapshots {
        if checker.is_valid(&snap.source)? {
            out.push(snap.clone());
        }
    }
    Ok(out)
}

/// `Some(None)` for identical line lists, `Some(Some(i))` when exactly line `i`
/// differs and the line count is unchanged, `None` otherwise.
fn single_line_change(a: &[&str], b: &[&str]) -> Option<Option<usize>> {
    if a.len() != b.len() {
        return None;
    }
    let mut changed = None;
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        if x != y {
            if changed.is_some() {
                return None;
            }
            changed = Some(i);
        }
    }
    Some(changed)
}

/// Keeps only the last snapshot of each run of edits confined to one line.
pub fn collapse_line_edits(snapshots: &[Snapshot]) -> Vec<Snapshot> {
    let normalized: Vec<String> = snapshots.iter().map(Snapshot::normalized).collect();
    let lines: Vec<Vec<&str>> = normalized.iter().map(|s| s.split('\n').collect()).collect();
    let mut out = Vec::new();
    let mut run_line: Option<usize> = None;
    for i in 0..snapshots.len() {
        let Some(next) = lines.get(i + 1) else {
            out.push(snapshots[i].clone());
            break;
        };
        match single_line_change(&lines[i], next) {
            Some(None) => {}
            Some(Some(line)) if run_line.is_none_or(|l| l == line) => run_line = Some(line),
            _ => {
                out.push(snapshots[i].clone());
                run_line = None;
            }
        }
    }
    out
}

fn is_trace_line(stripped: &str) -> bool {
    stripped.starts_with("print(")
}

/// Removes snapshots that differ from the previously retained one only by
/// added `print(` lines which vanish within `window` later snapshots and are
/// absent from the final snapshot. A `window` of 0 is treated as 1.
pub fn remove_transient_prints(snapshots: &[Snapshot], window: usize) -> Vec<Snapshot> {
    let window = window.max(1);
    if snapshots.is_empty() {
        return Vec::new();
    }
    let normalized: Vec<String> = snapshots.iter().map(Snapshot::normalized).collect();
    let present: Vec<HashSet<&str>> = normalized
        .iter()
        .map(|s| s.split('\n').map(str::trim).collect())
        .collect();
    let final_lines = &present[snapshots.len() - 1];

    let transient = |line: &str, at: usize| {
        let stripped = line.trim();
        is_trace_line(stripped)
            && !final_lines.contains(stripped)
            && (at + 1..=(at + window).min(snapshots.len() - 1))
                .any(|j| !present[j].contains(stripped))
    };

    let mut out = vec![snapshots[0].clone()];
    let mut prev: Vec<&str> = normalized[0].split('\n').collect();
    for i in 1..snapshots.len() {
        let cur: Vec<&str> = normalized[i].split('\n').collect();
        let mut had_trace = false;
        let kept: Vec<&str> = cur
            .iter()
            .copied()
            .filter(|l| {
                let t = transient(l, i);
                had_trace |= t;
                !t
            })
            .collect();
        if had_trace && kept == prev {
            continue;
        }
        out.push(snapshots[i].clone());
        prev = cur;
    }
    out
}

fn record(before: &[Snapshot], after: &[Snapshot], rule: FilterRule, log: &mut Vec<Removal>) {
    let kept: HashSet<u64> = after.iter().map(|s| s.seq_index).collect();
    log.extend(
        before
            .iter()
            .filter(|s| !kept.contains(&s.seq_index))
            .map(|s| Removal {
                index: s.seq_index,
                rule,
            }),
    );
}

/// Runs the full cleaning pipeline over one raw log.
///
/// Order: dedup, syntax filter, then line-edit collapse, transient-print
/// removal and dedup repeated until a round removes nothing. The output is a
/// fixpoint, so feeding it back in returns it unchanged.
pub fn build_step_sequence(
    raw: &[Snapshot],
    student_id: &str,
    exercise_id: &str,
    checker: &dyn SyntaxChecker,
    options: PipelineOptions,
) -> Result<StepSequence, SnapshotError> {
    let mut provenance = Vec::new();
    let deduped = dedup(raw);
    record(raw, &deduped, FilterRule::Duplicate, &mut provenance);
    let valid = filter_syntax_errors(&deduped, checker)?;
    record(&deduped, &valid, FilterRule::SyntaxError, &mut provenance);

    let mut current = valid;
    loop {
        let collapsed = collapse_line_edits(&current);
        record(&current, &collapsed, FilterRule::LineEdit, &mut provenance);
        let untraced = remove_transient_prints(&collapsed, options.print_window);
        record(&collapsed, &untraced, FilterRule::TransientPrint, &mut provenance);
        let next = dedup(&untraced);
        record(&untraced, &next, FilterRule::Duplicate, &mut provenance);
        let settled = next.len() == current.len();
        current = next;
        if settled {
            break;
        }
    }

    Ok(StepSequence {
        student_id: student_id.to_string(),
        exercise_id: exercise_id.to_string(),
        steps: current,
        provenance,
    })
}
