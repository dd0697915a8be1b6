//! Tutoring-session records and their append-only event encoding.
//!
//! Every interaction is a [`SessionEvent`]. Folding a session's events into a
//! [`SessionLedger`] reconstructs its sessions, hints and ratings; the ledger
//! also enforces the ordering and referential rules the log must obey.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::Prompt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    /// Random numeric alias; never a name or student number.
    pub participant_alias: String,
    pub exercise_id: String,
    pub started_at: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hint {
    pub hint_id: String,
    pub session_id: String,
    pub code_snapshot: String,
    pub prompt: Prompt,
    pub text: String,
    pub model_id: String,
    pub created_at: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintRating {
    pub hint_id: String,
    /// "The hint is clear", 1 to 5.
    pub clear: u8,
    /// "The hint fits my work", 1 to 5.
    pub fits: u8,
    /// "The hint is helpful", 1 to 5.
    pub helpful: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

/// The three rated statements, in display order.
pub const RATING_STATEMENTS: [(&str, &str); 3] = [
    ("clear", "The hint is clear"),
    ("fits", "The hint fits my work"),
    ("helpful", "The hint is helpful"),
];

impl HintRating {
    pub fn scores(&self) -> [u8; 3] {
        [self.clear, self.fits, self.helpful]
    }

    /// Returns the name of the first score outside 1..=5.
    pub fn validate(&self) -> Result<(), &'static str> {
        for ((name, _), score) in RATING_STATEMENTS.iter().zip(self.scores()) {
            if !(1..=5).contains(&score) {
                return Err(name);
            }
        }
        Ok(())
    }
}

/// Whether `alias` is an acceptable participant alias: 1 to 16 ASCII digits.
pub fn is_valid_alias(alias: &str) -> bool {
    (1..=16).contains(&alias.len()) && alias.bytes().all(|b| b.is_ascii_digit())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotTrigger {
    Hint,
    Check,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventPayload {
    SessionStarted(Session),
    SnapshotLogged {
        source: String,
        trigger: SnapshotTrigger,
    },
    HintIssued {
        hint: Hint,
        latency_ms: u64,
    },
    HintRated(HintRating),
    SolutionChecked {
        source: String,
        passed: bool,
        tests_passed: usize,
        tests_total: usize,
        failed_tests: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SessionStarted,
    SnapshotLogged,
    HintIssued,
    HintRated,
    SolutionChecked,
}

impl EventPayload {
    pub fn kind(&self) -> EventKind {
        match self {
            EventPayload::SessionStarted(_) => EventKind::SessionStarted,
            EventPayload::SnapshotLogged { .. } => EventKind::SnapshotLogged,
            EventPayload::HintIssued { .. } => EventKind::HintIssued,
            EventPayload::HintRated(_) => EventKind::HintRated,
            EventPayload::SolutionChecked { .. } => EventKind::SolutionChecked,
        }
    }
}

/// One line of a session log: `{"session_id", "at", "kind", "payload"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub session_id: String,
    /// Milliseconds since the Unix epoch, strictly increasing within a session.
    pub at: i64,
    #[serde(flatten)]
    pub payload: EventPayload,
}

impl SessionEvent {
    pub fn kind(&self) -> EventKind {
        self.payload.kind()
    }

    pub fn to_json_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("events always serialize");
        line.push('\n');
        line
    }
}

/// Parses a JSONL event stream. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn parse_events(text: &str) -> Result<Vec<SessionEvent>, LedgerError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| LedgerError::Parse {
                line: i + 1,
                detail: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Error, PartialEq)]
pub enum LedgerError {
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("session `{0}` already started")]
    DuplicateSession(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown hint `{0}`")]
    UnknownHint(String),
    #[error("hint `{0}` already rated")]
    AlreadyRated(String),
    #[error("hint `{0}` issued twice")]
    DuplicateHint(String),
    #[error("event for session `{session_id}` at {at} does not follow {previous}")]
    OutOfOrder { session_id: String, at: i64, previous: i64 },
    #[error("event session `{event}` does not match payload session `{payload}`")]
    SessionMismatch { event: String, payload: String },
    #[error("invalid rating: `{0}` must be between 1 and 5")]
    InvalidRating(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub session: Session,
    pub hint_ids: Vec<String>,
    pub checks: usize,
    pub last_at: i64,
    pub events: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HintRecord {
    pub hint: Hint,
    pub rating: Option<HintRating>,
}

/// State reconstructed from events.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionLedger {
    sessions: BTreeMap<String, SessionRecord>,
    hints: HashMap<String, HintRecord>,
}

impl SessionLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn replay<'a>(events: impl IntoIterator<Item = &'a SessionEvent>) -> Result<Self, LedgerError> {
        let mut ledger = Self::new();
        for e in events {
            ledger.apply(e)?;
        }
        Ok(ledger)
    }

    /// Checks `event` against the current state without applying it.
    pub fn check(&self, event: &SessionEvent) -> Result<(), LedgerError> {
        let sid = &event.session_id;
        if let EventPayload::SessionStarted(s) = &event.payload {
            if &s.session_id != sid {
                return Err(LedgerError::SessionMismatch {
                    event: sid.clone(),
                    payload: s.session_id.clone(),
                });
            }
            if self.sessions.contains_key(sid) {
                return Err(LedgerError::DuplicateSession(sid.clone()));
            }
            return Ok(());
        }
        let record = self
            .sessions
            .get(sid)
            .ok_or_else(|| LedgerError::UnknownSession(sid.clone()))?;
        if event.at <= record.last_at {
            return Err(LedgerError::OutOfOrder {
                session_id: sid.clone(),
                at: event.at,
                previous: record.last_at,
            });
        }
        match &event.payload {
            EventPayload::HintIssued { hint, .. } => {
                if &hint.session_id != sid {
                    return Err(LedgerError::SessionMismatch {
                        event: sid.clone(),
                        payload: hint.session_id.clone(),
                    });
                }
                if self.hints.contains_key(&hint.hint_id) {
                    return Err(LedgerError::DuplicateHint(hint.hint_id.clone()));
                }
            }
            EventPayload::HintRated(rating) => {
                rating.validate().map_err(LedgerError::InvalidRating)?;
                let h = self
                    .hints
                    .get(&rating.hint_id)
                    .ok_or_else(|| LedgerError::UnknownHint(rating.hint_id.clone()))?;
                if &h.hint.session_id != sid {
                    return Err(LedgerError::SessionMismatch {
                        event: sid.clone(),
                        payload: h.hint.session_id.clone(),
                    });
                }
                if h.rating.is_some() {
                    return Err(LedgerError::AlreadyRated(rating.hint_id.clone()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn apply(&mut self, event: &SessionEvent) -> Result<(), LedgerError> {
        self.check(event)?;
        let sid = &event.session_id;
        if let EventPayload::SessionStarted(s) = &event.payload {
            self.sessions.insert(
                sid.clone(),
                SessionRecord {
                    session: s.clone(),
                    hint_ids: Vec::new(),
                    checks: 0,
                    last_at: event.at,
                    events: 1,
                },
            );
            return Ok(());
        }
        let record = self.sessions.get_mut(sid).expect("checked above");
        record.last_at = event.at;
        record.events += 1;
        match &event.payload {
            EventPayload::HintIssued { hint, .. } => {
                record.hint_ids.push(hint.hint_id.clone());
                self.hints.insert(
                    hint.hint_id.clone(),
                    HintRecord {
                        hint: hint.clone(),
                        rating: None,
                    },
                );
            }
            EventPayload::HintRated(rating) => {
                self.hints.get_mut(&rating.hint_id).expect("checked above").rating = Some(rating.clone());
            }
            EventPayload::SolutionChecked { .. } => record.checks += 1,
            _ => {}
        }
        Ok(())
    }

    pub fn session(&self, id: &str) -> Option<&SessionRecord> {
        self.sessions.get(id)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &SessionRecord> {
        self.sessions.values()
    }

    pub fn hint(&self, id: &str) -> Option<&HintRecord> {
        self.hints.get(id)
    }

    pub fn hint_count(&self) -> usize {
        self.hints.len()
    }

    pub fn rated_count(&self) -> usize {
        self.hints.values().filter(|h| h.rating.is_some()).count()
    }

    /// Session ids ordered by start time, then id.
    pub fn session_order(&self) -> Vec<String> {
        let mut ids: Vec<(&i64, &String)> = self
            .sessions
            .values()
            .map(|r| (&r.session.started_at, &r.session.session_id))
            .collect();
        ids.sort();
        ids.into_iter().map(|(_, id)| id.clone()).collect()
    }
}
