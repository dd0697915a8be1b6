//! HTTP service for the tutoring front end.
//!
//! Students pick an exercise, ask for hints, rate each hint and check their
//! solution. Every interaction is appended to a per-session event log that
//! the evaluation tools read back through `/api/export`.
//!
//! | Method | Path | Body |
//! |---|---|---|
//! | GET | `/api/exercises` | |
//! | POST | `/api/sessions` | `{exercise_id, participant_alias?}` |
//! | POST | `/api/sessions/{id}/hints` | `{source}` |
//! | POST | `/api/hints/{id}/rating` | `{clear, fits, helpful, comment?}` |
//! | POST | `/api/sessions/{id}/check` | `{source}` |
//! | GET | `/api/export?session={id\|all}` | |

mod api;
mod store;

pub use api::{router, AppState, ApiError, CheckView, ExerciseView, HintView};
pub use store::{EventStore, StoreError};
