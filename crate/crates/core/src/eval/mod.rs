//! Evaluation harness: batch hint generation, prompt ranking, expert rubric
//! annotation with inter-rater agreement, and student-rating reports.

pub mod experiment;
pub mod kappa;
pub mod ranking;
pub mod ratings;
pub mod rubric;
mod sentences;

pub use experiment::{run_experiment, run_manifest, write_records, ExperimentError, ExperimentManifest, ExperimentRecord, ExperimentSummary};
pub use kappa::{cohens_kappa, KappaError, KappaReport, KappaStatus};
pub use ranking::{aggregate_ranking, load_sheets, PromptScore, RankingEntry, RankingError, RankingSheet, RankingSummary};
pub use ratings::{rating_report, RatingReport};
pub use rubric::{annotate, collect_hint_ids, criterion_kappa, AgreementError, rubric_report, AnnotationStore, RubricAnnotation, RubricError, RubricReport};
pub use sentences::count_sentences;
