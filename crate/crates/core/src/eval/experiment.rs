//! Batch hint generation over step sequences and a set of prompt specs.

use std::io::Write;
use std::path::{Path, PathBuf};

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::Catalog;
use crate::eval::count_sentences;
use crate::llm::{LlmClient, DEFAULT_MAX_IN_FLIGHT};
use crate::prompt::{render_prompt, PromptError, PromptSpec};
use crate::snapshot::{SnapshotError, StepSequence};

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub exercise_ids: Vec<String>,
    /// Step-sequence JSONL files. Relative paths resolve against the manifest's directory.
    pub step_sequence_paths: Vec<PathBuf>,
    pub prompt_specs: Vec<PromptSpec>,
    #[serde(default = "one")]
    pub samples_per_state: usize,
    pub output_path: PathBuf,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("prompt spec {index}: {source}")]
    Spec { index: usize, source: PromptError },
    #[error("{path}: {source}")]
    Sequence { path: PathBuf, source: SnapshotError },
    #[error("sequence for `{student}` is on exercise `{exercise}`, which the manifest does not list")]
    ExerciseNotListed { student: String, exercise: String },
    #[error("unknown exercise `{0}`")]
    UnknownExercise(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl ExperimentManifest {
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut manifest: Self =
            serde_json::from_str(&text).map_err(|e| ExperimentError::Manifest(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in manifest.step_sequence_paths.iter_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if manifest.output_path.is_relative() {
            manifest.output_path = base.join(&manifest.output_path);
        }
        Ok(manifest)
    }

    pub fn validate(&self, catalog: &Catalog) -> Result<(), ExperimentError> {
        if self.prompt_specs.is_empty() {
            return Err(ExperimentError::Manifest("prompt_specs is empty".into()));
        }
        if self.samples_per_state == 0 {
            return Err(ExperimentError::Manifest("samples_per_state must be at least 1".into()));
        }
        for (index, spec) in self.prompt_specs.iter().enumerate() {
            spec.validate().map_err(|source| ExperimentError::Spec { index, source })?;
        }
        for id in &self.exercise_ids {
            if catalog.get(id).is_none() {
                return Err(ExperimentError::UnknownExercise(id.clone()));
            }
        }
        Ok(())
    }

    pub fn load_sequences(&self) -> Result<Vec<StepSequence>, ExperimentError> {
        self.step_sequence_paths
            .iter()
            .map(|path| {
                StepSequence::load(path).map_err(|source| ExperimentError::Sequence {
                    path: path.clone(),
                    source,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRef {
    pub student_id: String,
    pub exercise_id: String,
    /// Position in the step sequence.
    pub step: usize,
    /// Index of the snapshot in the raw log.
    pub seq_index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    /// `student/exercise/step/spec/sample`.
    pub hint_id: String,
    pub step_ref: StepRef,
    pub spec_index: usize,
    pub spec: PromptSpec,
    pub sample: usize,
    pub prompt_text: String,
    pub hint_text: Option<String>,
    pub hint_sentences: Option<usize>,
    pub model_id: String,
    pub latency_ms: u64,
    pub status: RecordStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub records: usize,
    pub succeeded: usize,
    /// `(hint_id, error)` for every failed record.
    pub failures: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

struct Job<'a> {
    hint_id: String,
    step_ref: StepRef,
    spec_index: usize,
    spec: &'a PromptSpec,
    sample: usize,
    code: &'a str,
}

/// Generates one record per (step, spec, sample), in that nesting order.
///
/// Backend calls overlap up to the client's in-flight cap; the output order
/// does not depend on completion order.
pub async fn run_experiment(
    manifest: &ExperimentManifest,
    sequences: &[StepSequence],
    catalog: &Catalog,
    client: &LlmClient,
) -> Result<(Vec<ExperimentRecord>, ExperimentSummary), ExperimentError> {
    manifest.validate(catalog)?;
    let mut summary = ExperimentSummary::default();
    let mut jobs = Vec::new();
    for seq in sequences {
        if !manifest.exercise_ids.contains(&seq.exercise_id) {
            return Err(ExperimentError::ExerciseNotListed {
                student: seq.student_id.clone(),
                exercise: seq.exercise_id.clone(),
            });
        }
        if seq.steps.is_empty() {
            let warning = format!("step sequence for `{}` on `{}` is empty", seq.student_id, seq.exercise_id);
            tracing::warn!("{warning}");
            summary.warnings.push(warning);
        }
        for (step, snap) in seq.steps.iter().enumerate() {
            for (spec_index, spec) in manifest.prompt_specs.iter().enumerate() {
                for sample in 0..manifest.samples_per_state {
                    jobs.push(Job {
                        hint_id: format!("{}/{}/{step}/{spec_index}/{sample}", seq.student_id, seq.exercise_id),
                        step_ref: StepRef {
                            student_id: seq.student_id.clone(),
                            exercise_id: seq.exercise_id.clone(),
                            step,
                            seq_index: snap.seq_index,
                        },
                        spec_index,
                        spec,
                        sample,
                        code: &snap.source,
                    });
                }
            }
        }
    }

    let records: Vec<ExperimentRecord> = stream::iter(jobs)
        .map(|job| async move {
            let exercise = catalog.get(&job.step_ref.exercise_id);
            let mut record = ExperimentRecord {
                hint_id: job.hint_id,
                step_ref: job.step_ref,
                spec_index: job.spec_index,
                spec: *job.spec,
                sample: job.sample,
                prompt_text: String::new(),
                hint_text: None,
                hint_sentences: None,
                model_id: client.default_model().to_string(),
                latency_ms: 0,
                status: RecordStatus::Failed,
                error: None,
            };
            let prompt = match exercise {
                None => Err(format!("unknown exercise `{}`", record.step_ref.exercise_id)),
                Some(ex) => render_prompt(job.spec, ex, job.code).map_err(|e| e.to_string()),
            };
            let prompt = match prompt {
                Ok(p) => p,
                Err(e) => {
                    record.error = Some(e);
                    return record;
                }
            };
            record.prompt_text = prompt.text;
            let request = client.request(record.prompt_text.clone(), job.spec.temperature);
            match client.complete(&request).await {
                Ok(response) => {
                    record.hint_sentences = Some(count_sentences(&response.text));
                    record.hint_text = Some(response.text);
                    record.model_id = response.model_id;
                    record.latency_ms = response.latency_ms;
                    record.status = RecordStatus::Ok;
                }
                Err(e) => record.error = Some(e.to_string()),
            }
            record
        })
        .buffered(DEFAULT_MAX_IN_FLIGHT)
        .collect()
        .await;

    summary.records = records.len();
    for r in &records {
        match r.status {
            RecordStatus::Ok => summary.succeeded += 1,
            RecordStatus::Failed => summary
                .failures
                .push((r.hint_id.clone(), r.error.clone().unwrap_or_default())),
        }
    }
    Ok((records, summary))
}

pub fn write_records<W: Write>(records: &[ExperimentRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Loads the manifest's sequences, runs the experiment and writes the records
/// to the manifest's output path.
pub async fn run_manifest(
    manifest: &ExperimentManifest,
    catalog: &Catalog,
    client: &LlmClient,
) -> Result<ExperimentSummary, ExperimentError> {
    manifest.validate(catalog)?;
    let sequences = manifest.load_sequences()?;
    let (records, summary) = run_experiment(manifest, &sequences, catalog, client).await?;
    let io_err = |source| ExperimentError::Io {
        path: manifest.output_path.clone(),
        source,
    };
    if let Some(parent) = manifest.output_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err)?;
    }
    let file = std::fs::File::create(&manifest.output_path).map_err(io_err)?;
    let mut out = std::io::BufWriter::new(file);
    write_records(&records, &mut out).map_err(io_err)?;
    out.flush().map_err(io_err)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{CompletionBackend, CompletionRequest, CompletionResponse, LlmError};
    use crate::prompt::{enumerate_matrix, AttributeCombo, InstructionVariant};
    use crate::snapshot::Snapshot;
    use async_trait::async_trait;
    use std::sync::Arc;

    fn sequence(n: usize) -> StepSequence {
        StepSequence {
            student_id: "st1".into(),
            exercise_id: "clumps".into(),
            steps: (0..n).map(|i| Snapshot::new(i as u64 * 3, i as i64, format!("n = {i}"))).collect(),
            provenance: Vec::new(),
        }
    }

    fn manifest(specs: Vec<PromptSpec>, samples: usize) -> ExperimentManifest {
        ExperimentManifest {
            exercise_ids: vec!["clumps".into()],
            step_sequence_paths: Vec::new(),
            prompt_specs: specs,
            samples_per_state: samples,
            output_path: "out.jsonl".into(),
        }
    }

    fn twelve() -> Vec<PromptSpec> {
        enumerate_matrix(&InstructionVariant::INITIAL, &AttributeCombo::ALL, &[0.5]).unwrap()
    }

    #[tokio::test]
    async fn record_count_is_product() {
        let catalog = Catalog::builtin();
        let client = LlmClient::mock(1);
        let (records, summary) = run_experiment(&manifest(twelve(), 1), &[sequence(10)], &catalog, &client)
            .await
            .unwrap();
        assert_eq!(records.len(), 10 * 12);
        assert_eq!(summary.succeeded, 120);
        let three = twelve().into_iter().take(3).collect();
        let (records, _) = run_experiment(&manifest(three, 2), &[sequence(10)], &catalog, &client)
            .await
            .unwrap();
        assert_eq!(records.len(), 60);
        assert_eq!(records[1].hint_id, "st1/clumps/0/0/1");
    }

    #[tokio::test]
    async fn empty_sequence_warns() {
        let (records, summary) = run_experiment(
            &manifest(twelve(), 1),
            &[sequence(0)],
            &Catalog::builtin(),
            &LlmClient::mock(1),
        )
        .await
        .unwrap();
        assert!(records.is_empty());
        assert_eq!(summary.warnings.len(), 1);
    }

    #[tokio::test]
    async fn manifest_invariants() {
        let catalog = Catalog::builtin();
        let client = LlmClient::mock(1);
        assert!(matches!(
            run_experiment(&manifest(Vec::new(), 1), &[], &catalog, &client).await,
            Err(ExperimentError::Manifest(_))
        ));
        assert!(matches!(
            run_experiment(&manifest(twelve(), 0), &[], &catalog, &client).await,
            Err(ExperimentError::Manifest(_))
        ));
    }

    struct FailEvery3rd;

    #[async_trait]
    impl CompletionBackend for FailEvery3rd {
        async fn complete(&self, r: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
            if r.prompt_text.contains("n = 2\n") {
                return Err(LlmError::Http {
                    status: 400,
                    detail: "bad".into(),
                });
            }
            Ok(CompletionResponse {
                text: "Try a loop.".into(),
                model_id: r.model_id.clone(),
                latency_ms: 1,
                usage: None,
            })
        }
        fn name(&self) -> &str {
            "flaky"
        }
    }

    #[tokio::test]
    async fn failures_recorded_and_run_continues() {
        let client = LlmClient::new(Arc::new(FailEvery3rd), 2);
        let (records, summary) = run_experiment(&manifest(twelve(), 1), &[sequence(4)], &Catalog::builtin(), &client)
            .await
            .unwrap();
        assert_eq!(records.len(), 48);
        assert_eq!(summary.failures.len(), 12);
        assert_eq!(summary.succeeded, 36);
        assert!(records.iter().filter(|r| r.step_ref.step == 2).all(|r| r.status == RecordStatus::Failed));
    }

    #[test]
    fn manifest_json_defaults() {
        let json = r#"{"exercise_ids":["pies"],"step_sequence_paths":["a.jsonl"],
            "prompt_specs":[{"instruction":"v","include_description":true,"include_model_solution":false,"temperature":0.5}],
            "output_path":"out/hints.jsonl"}"#;
        let m: ExperimentManifest = serde_json::from_str(json).unwrap();
        assert_eq!(m.samples_per_state, 1);
        assert_eq!(m.prompt_specs[0].instruction, InstructionVariant::V);
    }
}
