//! Append-only event storage: one JSONL file per session.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use nexthint_core::session::{parse_events, EventPayload, LedgerError, SessionEvent, SessionLedger};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Corrupt { path: PathBuf, source: LedgerError },
}

#[derive(Default)]
struct State {
    ledger: SessionLedger,
    events: HashMap<String, Vec<SessionEvent>>,
    files: HashMap<String, File>,
}

/// Session events kept in memory and mirrored to `<data_dir>/<session_id>.jsonl`.
///
/// Appends are serialized by one lock, which is held only while the event is
/// validated and its line written; callers do slow work (LLM calls, test runs)
/// before appending.
pub struct EventStore {
    dir: PathBuf,
    state: Mutex<State>,
}

impl EventStore {
    /// Opens `dir`, creating it if needed, and replays every `*.jsonl` file in it.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| StoreError::Io { path, source }
        };
        std::fs::create_dir_all(&dir).map_err(io(&dir))?;
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(io(&dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        let mut state = State::default();
        for path in paths {
            let text = std::fs::read_to_string(&path).map_err(io(&path))?;
            let corrupt = |source| StoreError::Corrupt {
                path: path.clone(),
                source,
            };
            let events = parse_events(&text).map_err(corrupt)?;
            for e in &events {
                state.ledger.apply(e).map_err(corrupt)?;
                state.events.entry(e.session_id.clone()).or_default().push(e.clone());
            }
        }
        Ok(Self {
            dir,
            state: Mutex::new(state),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Appends one event built from its timestamp. The timestamp is the wall
    /// clock, bumped when needed so it is strictly after the session's last event.
    pub fn append(
        &self,
        session_id: &str,
        build: impl FnOnce(i64) -> EventPayload,
    ) -> Result<SessionEvent, StoreError> {
        let mut state = self.state.lock().expect("store lock poisoned");
        let now = nexthint_core::now_millis();
        let at = match state.ledger.session(session_id) {
            Some(r) => now.max(r.last_at + 1),
            None => now,
        };
        let event = SessionEvent {
            session_id: session_id.to_string(),
            at,
            payload: build(at),
        };
        state.ledger.check(&event)?;
        let path = self.dir.join(format!("{session_id}.jsonl"));
        let io = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        if !state.files.contains_key(session_id) {
            let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
            state.files.insert(session_id.to_string(), file);
        }
        let file = state.files.get_mut(session_id).expect("inserted above");
        file.write_all(event.to_json_line().as_bytes()).map_err(io)?;
        file.flush().map_err(io)?;
        state.ledger.apply(&event)?;
        state.events.entry(session_id.to_string()).or_default().push(event.clone());
        Ok(event)
    }

    /// Runs `f` against the current ledger.
    pub fn read<T>(&self, f: impl FnOnce(&SessionLedger) -> T) -> T {
        f(&self.state.lock().expect("store lock poisoned").ledger)
    }

    /// JSONL of one session's events, or of all sessions by start time.
    pub fn export(&self, session_id: Option<&str>) -> Result<String, StoreError> {
        let state = self.state.lock().expect("store lock poisoned");
        let ids = match session_id {
            Some(id) => {
                if state.ledger.session(id).is_none() {
                    return Err(LedgerError::UnknownSession(id.to_string()).into());
                }
                vec![id.to_string()]
            }
            None => state.ledger.session_order(),
        };
        let mut out = String::new();
        for id in ids {
            for e in state.events.get(&id).into_iter().flatten() {
                out.push_str(&e.to_json_line());
            }
        }
        Ok(out)
    }
}
