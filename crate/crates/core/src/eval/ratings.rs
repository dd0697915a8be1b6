//! Student Likert ratings aggregated from the service event log.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::session::{LedgerError, SessionEvent, SessionLedger, RATING_STATEMENTS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementSummary {
    pub statement: String,
    pub label: String,
    /// `histogram[k]` counts score `k + 1`.
    pub histogram: [usize; 5],
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub participant_alias: String,
    pub exercise_id: String,
    pub hints: usize,
    pub rated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingReport {
    /// Number of rated hints.
    pub n: usize,
    pub hints_issued: usize,
    pub statements: Vec<StatementSummary>,
    pub sessions: Vec<SessionSummary>,
}

/// Replays `events` and summarizes every rating in them.
pub fn rating_report(events: &[SessionEvent]) -> Result<RatingReport, LedgerError> {
    let ledger = SessionLedger::replay(events)?;
    let mut histograms = [[0usize; 5]; 3];
    let mut sessions = Vec::new();
    let mut n = 0;
    for sid in ledger.session_order() {
        let record = ledger.session(&sid).expect("listed by the ledger");
        let mut rated = 0;
        for hid in &record.hint_ids {
            let Some(rating) = ledger.hint(hid).and_then(|h| h.rating.as_ref()) else {
                continue;
            };
            rated += 1;
            for (hist, score) in histograms.iter_mut().zip(rating.scores()) {
                hist[usize::from(score) - 1] += 1;
            }
        }
        n += rated;
        sessions.push(SessionSummary {
            session_id: sid.clone(),
            participant_alias: record.session.participant_alias.clone(),
            exercise_id: record.session.exercise_id.clone(),
            hints: record.hint_ids.len(),
            rated,
        });
    }
    let statements = RATING_STATEMENTS
        .iter()
        .zip(histograms)
        .map(|((name, label), histogram)| {
            let total: usize = histogram.iter().enumerate().map(|(k, c)| (k + 1) * c).sum();
            StatementSummary {
                statement: name.to_string(),
                label: label.to_string(),
                histogram,
                mean: (n > 0).then(|| total as f64 / n as f64),
            }
        })
        .collect();
    Ok(RatingReport {
        n,
        hints_issued: ledger.hint_count(),
        statements,
        sessions,
    })
}

impl RatingReport {
    /// `statement,label,n,mean,score_1..score_5`.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["statement", "label", "n", "mean", "score_1", "score_2", "score_3", "score_4", "score_5"])?;
        for s in &self.statements {
            let mut row = vec![
                s.statement.clone(),
                s.label.clone(),
                self.n.to_string(),
                s.mean.map(|m| format!("{m:.3}")).unwrap_or_default(),
            ];
            row.extend(s.histogram.iter().map(usize::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Long format for plotting: `statement,score,count`.
    pub fn write_plot_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["statement", "score", "count"])?;
        for s in &self.statements {
            for (k, count) in s.histogram.iter().enumerate() {
                w.write_record([s.label.as_str(), &(k + 1).to_string(), &count.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_sessions_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.sessions {
            w.serialize(s)?;
        }
        if self.sessions.is_empty() {
            w.write_record(["session_id", "participant_alias", "exercise_id", "hints", "rated"])?;
        }
        w.flush()?;
        Ok(())
    }
}
