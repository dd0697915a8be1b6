//! Exercises and their stdin/stdout tests.
//!
//! Three exercises ship built in: `pies`, `brackets` and `clumps`. More can be
//! loaded from a directory holding one JSON definition per exercise.

pub mod reference;
mod runner;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use runner::{check_solution, outputs_match, CheckResult, RunnerConfig, RunnerError, TestOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoTest {
    pub name: String,
    pub stdin: String,
    pub expected_stdout: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exercise {
    pub id: String,
    pub title: String,
    pub description: String,
    #[serde(default)]
    pub starter_code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_solution: Option<String>,
    pub tests: Vec<IoTest>,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{}: field `{field}`: {detail}", file.display())]
    Definition {
        file: PathBuf,
        field: String,
        detail: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Exercise {
    /// Checks the structural invariants, returning the offending field and why.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let slug_ok = !self.id.is_empty()
            && self
                .id
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_');
        if !slug_ok {
            return Err(("id", format!("`{}` is not a lowercase slug", self.id)));
        }
        if self.title.trim().is_empty() {
            return Err(("title", "must not be empty".into()));
        }
        if self.description.trim().is_empty() {
            return Err(("description", "must not be empty".into()));
        }
        for label in ["Input", "Output"] {
            if !has_paragraph(&self.description, label) {
                return Err(("description", format!("missing an `{label}:` paragraph")));
            }
        }
        if self.tests.is_empty() {
            return Err(("tests", "at least one test is required".into()));
        }
        if let Some(t) = self.tests.iter().find(|t| t.name.trim().is_empty()) {
            return Err(("tests.name", format!("test with stdin {:?} has no name", t.stdin)));
        }
        Ok(())
    }
}

fn has_paragraph(description: &str, label: &str) -> bool {
    description
        .split("\n\n")
        .map(str::trim_start)
        .any(|p| {
            p.get(..label.len())
                .is_some_and(|head| head.eq_ignore_ascii_case(label))
                && p[label.len()..].trim_start().starts_with(':')
        })
}

const BUILTIN_SOURCES: [(&str, &str); 3] = [
    ("pies.json", include_str!("../../exercises/pies.json")),
    ("brackets.json", include_str!("../../exercises/brackets.json")),
    ("clumps.json", include_str!("../../exercises/clumps.json")),
];

pub fn builtin_exercises() -> Vec<Exercise> {
    BUILTIN_SOURCES
        .iter()
        .map(|(name, text)| {
            parse_definition(Path::new(name), text).expect("built-in exercise definitions are valid")
        })
        .collect()
}

pub fn parse_definition(file: &Path, text: &str) -> Result<Exercise, CatalogError> {
    let exercise: Exercise = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let field = msg
            .split('`')
            .nth(1)
            .filter(|_| msg.contains("field"))
            .unwrap_or("<document>")
            .to_string();
        CatalogError::Definition {
            file: file.to_path_buf(),
            field,
            detail: msg,
        }
    })?;
    exercise
        .validate()
        .map_err(|(field, detail)| CatalogError::Definition {
            file: file.to_path_buf(),
            field: field.to_string(),
            detail,
        })?;
    Ok(exercise)
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    exercises: Vec<Exercise>,
}

impl Catalog {
    pub fn new(exercises: Vec<Exercise>) -> Self {
        Self { exercises }
    }

    pub fn builtin() -> Self {
        Self::new(builtin_exercises())
    }

    pub fn get(&self, id: &str) -> Option<&Exercise> {
        self.exercises.iter().find(|e| e.id == id)
    }

    pub fn exercises(&self) -> &[Exercise] {
        &self.exercises
    }

    pub fn ids(&self) -> Vec<&str> {
        self.exercises.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.exercises.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exercises.is_empty()
    }
}

/// Loads the built-ins (optionally) followed by every `*.json` file in `dir`,
/// in file-name order. Exercise ids must be unique across both.
pub fn load_catalog(dir: Option<&Path>, include_builtins: bool) -> Result<Catalog, CatalogError> {
    let mut exercises = if include_builtins {
        builtin_exercises()
    } else {
        Vec::new()
    };
    if let Some(dir) = dir {
        let io_err = |source| CatalogError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io_err)?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect();
        files.sort();
        for file in files {
            let text = std::fs::read_to_string(&file).map_err(|source| CatalogError::Io {
                path: file.clone(),
                source,
            })?;
            let exercise = parse_definition(&file, &text)?;
            if exercises.iter().any(|e| e.id == exercise.id) {
                return Err(CatalogError::Definition {
                    file,
                    field: "id".into(),
                    detail: format!("duplicate exercise id `{}`", exercise.id),
                });
            }
            exercises.push(exercise);
        }
    }
    Ok(Catalog::new(exercises))
}

#[cfg(test)]
mod tests {
    use super::reference::{bracket_reference, clump_oracle, pies_reference};
    use super::*;

    #[test]
    fn builtin_catalog_has_three_exercises() {
        let catalog = load_catalog(None, true).unwrap();
        assert_eq!(catalog.ids(), ["pies", "brackets", "clumps"]);
        for e in catalog.exercises() {
            assert!(e.model_solution.is_some());
            e.validate().unwrap();
        }
    }

    #[test]
    fn builtin_descriptions_carry_worked_examples() {
        let c = Catalog::builtin();
        assert!(c.get("brackets").unwrap().description.contains("example → e(x(a(m)p)l)e"));
        assert!(c.get("clumps").unwrap().description.contains("[2,2,3,5,6,6,2] has 2 clumps"));
        assert!(c.get("pies").unwrap().description.contains("A dollars and B cents"));
    }

    #[test]
    fn builtin_expected_outputs_match_reference_oracles() {
        let c = Catalog::builtin();
        for t in &c.get("clumps").unwrap().tests {
            let nums: Vec<i64> = t.stdin.split_whitespace().map(|x| x.parse().unwrap()).collect();
            assert_eq!(nums[0] as usize, nums.len() - 1);
            assert_eq!(t.expected_stdout.trim(), clump_oracle(&nums[1..]).to_string(), "{}", t.name);
        }
        for t in &c.get("brackets").unwrap().tests {
            assert_eq!(t.expected_stdout.trim(), bracket_reference(t.stdin.trim()), "{}", t.name);
        }
        for t in &c.get("pies").unwrap().tests {
            let n: Vec<u64> = t.stdin.split_whitespace().map(|x| x.parse().unwrap()).collect();
            let (d, c) = pies_reference(n[0], n[1], n[2]);
            assert_eq!(t.expected_stdout.trim(), format!("{d} {c}"), "{}", t.name);
        }
    }

    #[test]
    fn empty_dir_without_builtins() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_catalog(Some(dir.path()), false).unwrap().is_empty());
    }

    fn definition(description: &str) -> String {
        serde_json::json!({
            "id": "sum",
            "title": "Sum",
            "description": description,
            "tests": [{"name": "t1", "stdin": "1\n2\n", "expected_stdout": "3\n"}]
        })
        .to_string()
    }

    #[test]
    fn missing_output_paragraph_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("sum.json"), definition("Add two numbers.\n\nInput: two integers.")).unwrap();
        match load_catalog(Some(dir.path()), false).unwrap_err() {
            CatalogError::Definition { file, field, detail } => {
                assert!(file.ends_with("sum.json"));
                assert_eq!(field, "description");
                assert!(detail.contains("Output"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn directory_exercises_follow_builtins() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("sum.json"),
            definition("Add two numbers.\n\nInput: two integers.\n\nOutput: their sum."),
        )
        .unwrap();
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let c = load_catalog(Some(dir.path()), true).unwrap();
        assert_eq!(c.ids(), ["pies", "brackets", "clumps", "sum"]);
    }

    #[test]
    fn missing_field_is_named() {
        let err = parse_definition(Path::new("x.json"), r#"{"id":"x","title":"X","description":"d"}"#).unwrap_err();
        assert!(matches!(err, CatalogError::Definition { ref field, .. } if field == "tests"), "{err}");
    }

    #[test]
    fn duplicate_id_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/exercises/pies.json")).unwrap();
        std::fs::write(dir.path().join("pies.json"), text).unwrap();
        assert!(matches!(
            load_catalog(Some(dir.path()), true),
            Err(CatalogError::Definition { ref field, .. }) if field == "id"
        ));
    }

    #[test]
    fn empty_tests_rejected() {
        let e = Exercise {
            id: "x".into(),
            title: "X".into(),
            description: "Input: a\n\nOutput: b".into(),
            starter_code: String::new(),
            model_solution: None,
            tests: vec![],
        };
        assert_eq!(e.validate().unwrap_err().0, "tests");
    }
}
