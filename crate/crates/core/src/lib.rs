//! Core library for next-step hint generation on introductory Python exercises.
//!
//! The crate is organised around the life cycle of a hint:
//!
//! * [`snapshot`] turns keystroke-level program logs into clean step sequences.
//! * [`catalog`] stores exercises and checks candidate solutions against stdin/stdout tests.
//! * [`prompt`] renders prompts over the instruction × attribute × temperature design space.
//! * [`llm`] talks to a chat-completions endpoint, or to a deterministic mock.
//! * [`session`] holds the tutoring-session domain types and their event encoding.
//! * [`eval`] covers batch generation, prompt ranking, rubric annotation, Cohen's kappa
//!   and student-rating reports.
//!
//! ```
//! use nexthint_core::prompt::{default_spec, InstructionVariant};
//!
//! let spec = default_spec();
//! assert_eq!(spec.instruction, InstructionVariant::V);
//! assert_eq!(spec.temperature, 0.5);
//! assert!(spec.include_description && !spec.include_model_solution);
//! ```

pub mod catalog;
pub mod eval;
pub mod llm;
pub mod prompt;
pub mod session;
pub mod snapshot;

/// Milliseconds since the Unix epoch.
pub fn now_millis() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

/// Lowercase hex SHA-256 of `text`.
pub fn content_hash(text: &str) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(text.as_bytes()))
}
