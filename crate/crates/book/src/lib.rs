//! Doc-tests the snippets in the guide under `book/src`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/step-sequences.md")]
pub mod step_sequences {}

#[doc = include_str!("../../../book/src/prompts.md")]
pub mod prompts {}

#[doc = include_str!("../../../book/src/checking.md")]
pub mod checking {}

#[doc = include_str!("../../../book/src/sessions.md")]
pub mod sessions {}

#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
