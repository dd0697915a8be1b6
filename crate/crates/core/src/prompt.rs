//! Prompt rendering over the instruction × attribute × temperature design space.
//!
//! A rendered prompt is a sequence of labelled sections separated by blank
//! lines, always in this order:
//!
//! ```text
//! Problem description:        (optional)
//! <description>
//!
//! Model solution:             (optional)
//! ```python
//! <solution>
//! ```
//!
//! Student code:
//! ```python
//! <code>
//! ```
//!
//! <instruction>
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::Exercise;

/// The five instruction phrasings explored for next-step hints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InstructionVariant {
    #[serde(rename = "i")]
    I,
    #[serde(rename = "ii")]
    Ii,
    #[serde(rename = "iii")]
    Iii,
    #[serde(rename = "iv")]
    Iv,
    #[serde(rename = "v")]
    V,
}

impl InstructionVariant {
    pub const ALL: [InstructionVariant; 5] = [Self::I, Self::Ii, Self::Iii, Self::Iv, Self::V];
    /// The first round of phrasings.
    pub const INITIAL: [InstructionVariant; 3] = [Self::I, Self::Ii, Self::Iii];
    /// The refined phrasings compared in the final ranking.
    pub const REFINED: [InstructionVariant; 3] = [Self::Ii, Self::Iv, Self::V];

    pub fn text(self) -> &'static str {
        match self {
            Self::I => "What is the next step?",
            Self::Ii => "Give a hint for the next step.",
            Self::Iii => "Explain the next step for a student",
            Self::Iv => "Give this student a short hint for the next step.",
            Self::V => "Give this student a hint for the next step. The hint should be one or two sentences.",
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Self::I => "i",
            Self::Ii => "ii",
            Self::Iii => "iii",
            Self::Iv => "iv",
            Self::V => "v",
        }
    }
}

impl fmt::Display for InstructionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for InstructionVariant {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.id() == s)
            .ok_or_else(|| PromptError::UnknownInstruction(s.to_string()))
    }
}

/// Which optional sections a prompt carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeCombo {
    pub include_description: bool,
    pub include_model_solution: bool,
}

impl AttributeCombo {
    /// None, description only, solution only, both.
    pub const ALL: [AttributeCombo; 4] = [
        AttributeCombo::new(false, false),
        AttributeCombo::new(true, false),
        AttributeCombo::new(false, true),
        AttributeCombo::new(true, true),
    ];

    pub const fn new(include_description: bool, include_model_solution: bool) -> Self {
        Self {
            include_description,
            include_model_solution,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub instruction: InstructionVariant,
    pub include_description: bool,
    pub include_model_solution: bool,
    pub temperature: f64,
}

impl PromptSpec {
    pub fn new(instruction: InstructionVariant, attributes: AttributeCombo, temperature: f64) -> Self {
        Self {
            instruction,
            include_description: attributes.include_description,
            include_model_solution: attributes.include_model_solution,
            temperature,
        }
    }

    pub fn attributes(&self) -> AttributeCombo {
        AttributeCombo::new(self.include_description, self.include_model_solution)
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(PromptError::Temperature(self.temperature));
        }
        Ok(())
    }

    /// Short stable label, e.g. `v+desc@0.5`.
    pub fn label(&self) -> String {
        let attrs = match (self.include_description, self.include_model_solution) {
            (false, false) => "none",
            (true, false) => "desc",
            (false, true) => "sol",
            (true, true) => "desc+sol",
        };
        format!("{}+{}@{}", self.instruction, attrs, self.temperature)
    }
}

/// Instruction (v), description only, temperature 0.5.
pub fn default_spec() -> PromptSpec {
    PromptSpec::new(InstructionVariant::V, AttributeCombo::new(true, false), 0.5)
}

/// 0.1 to 0.9 in steps of 0.2.
pub fn temperature_grid() -> Vec<f64> {
    (0..5).map(|i| f64::from(1 + 2 * i) / 10.0).collect()
}

/// Cartesian product, instruction-major, then attributes, then temperature.
pub fn enumerate_matrix(
    instructions: &[InstructionVariant],
    combos: &[AttributeCombo],
    temperatures: &[f64],
) -> Result<Vec<PromptSpec>, PromptError> {
    if instructions.is_empty() || combos.is_empty() || temperatures.is_empty() {
        return Err(PromptError::EmptyAxis);
    }
    let mut specs = Vec::with_capacity(instructions.len() * combos.len() * temperatures.len());
    for &instruction in instructions {
        for &combo in combos {
            for &temperature in temperatures {
                let spec = PromptSpec::new(instruction, combo, temperature);
                spec.validate()?;
                specs.push(spec);
            }
        }
    }
    Ok(specs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prompt {
    pub text: String,
    pub spec: PromptSpec,
    pub exercise_id: String,
    pub code_hash: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("exercise `{0}` has no model solution")]
    MissingModelSolution(String),
    #[error("temperature {0} outside [0, 1]")]
    Temperature(f64),
    #[error("unknown instruction `{0}` (expected one of i, ii, iii, iv, v)")]
    UnknownInstruction(String),
    #[error("design-space axes must be non-empty")]
    EmptyAxis,
}

fn push_fenced(out: &mut String, code: &str) {
    out.push_str("```python\n");
    out.push_str(code);
    if !code.is_empty() && !code.ends_with('\n') {
        out.push('\n');
    }
    out.push_str("```");
}

pub fn render_prompt(spec: &PromptSpec, exercise: &Exercise, student_code: &str) -> Result<Prompt, PromptError> {
    spec.validate()?;
    let mut sections: Vec<String> = Vec::with_capacity(4);
    if spec.include_description {
        sections.push(format!("Problem description:\n{}", exercise.description.trim_end()));
    }
    if spec.include_model_solution {
        let solution = exercise
            .model_solution
            .as_deref()
            .ok_or_else(|| PromptError::MissingModelSolution(exercise.id.clone()))?;
        let mut s = String::from("Model solution:\n");
        push_fenced(&mut s, solution);
        sections.push(s);
    }
    let mut code = String::from("Student code:\n");
    push_fenced(&mut code, student_code);
    sections.push(code);
    sections.push(spec.instruction.text().to_string());

    Ok(Prompt {
        text: sections.join("\n\n"),
        spec: *spec,
        exercise_id: exercise.id.clone(),
        code_hash: crate::content_hash(student_code),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;

    fn clumps() -> Exercise {
        Catalog::builtin().get("clumps").unwrap().clone()
    }

    #[test]
    fn instruction_texts() {
        assert_eq!(InstructionVariant::I.text(), "What is the next step?");
        assert_eq!(InstructionVariant::Ii.text(), "Give a hint for the next step.");
        assert_eq!(InstructionVariant::Iii.text(), "Explain the next step for a student");
        assert_eq!(InstructionVariant::Iv.text(), "Give this student a short hint for the next step.");
        assert_eq!(
            InstructionVariant::V.text(),
            "Give this student a hint for the next step. The hint should be one or two sentences."
        );
    }

    #[test]
    fn default_is_v_description_only_half_temperature() {
        let d = default_spec();
        assert_eq!(d.instruction, InstructionVariant::V);
        assert!(d.include_description);
        assert!(!d.include_model_solution);
        assert_eq!(d.temperature, 0.5);
    }

    #[test]
    fn render_description_only() {
        let spec = PromptSpec::new(InstructionVariant::V, AttributeCombo::new(true, false), 0.5);
        let p = render_prompt(&spec, &clumps(), "x=1").unwrap();
        assert!(p.text.starts_with("Problem description:\nSay that a \"clump\""));
        assert!(p.text.contains("Student code:\n```python\nx=1\n```"));
        assert!(p.text.ends_with(&format!("\n\n{}", InstructionVariant::V.text())));
        assert!(!p.text.contains("Model solution:"));
        assert_eq!(p.exercise_id, "clumps");
        assert_eq!(p.code_hash, crate::content_hash("x=1"));
    }

    #[test]
    fn render_minimal() {
        let spec = PromptSpec::new(InstructionVariant::I, AttributeCombo::new(false, false), 0.1);
        let p = render_prompt(&spec, &clumps(), "x=1").unwrap();
        assert_eq!(p.text, "Student code:\n```python\nx=1\n```\n\nWhat is the next step?");
    }

    #[test]
    fn render_empty_code() {
        let p = render_prompt(&default_spec(), &clumps(), "").unwrap();
        assert!(p.text.contains("Student code:\n```python\n```\n\n"));
    }

    #[test]
    fn missing_model_solution_is_error() {
        let mut ex = clumps();
        ex.model_solution = None;
        let spec = PromptSpec::new(InstructionVariant::Ii, AttributeCombo::new(false, true), 0.5);
        assert_eq!(
            render_prompt(&spec, &ex, "x").unwrap_err(),
            PromptError::MissingModelSolution("clumps".into())
        );
    }

    #[test]
    fn temperature_out_of_range_rejected() {
        let spec = PromptSpec::new(InstructionVariant::Ii, AttributeCombo::new(true, false), 1.2);
        assert!(matches!(render_prompt(&spec, &clumps(), "x"), Err(PromptError::Temperature(_))));
    }

    #[test]
    fn section_presence_matches_attributes_for_all_combos() {
        let ex = clumps();
        let solution = ex.model_solution.clone().unwrap();
        for spec in enumerate_matrix(&InstructionVariant::ALL, &AttributeCombo::ALL, &[0.5]).unwrap() {
            let code = "n = int(input())\nprint(n)";
            let p = render_prompt(&spec, &ex, code).unwrap();
            assert!(p.text.contains(code));
            assert_eq!(p.text.contains("Problem description:"), spec.include_description);
            assert_eq!(p.text.contains(ex.description.trim_end()), spec.include_description);
            assert_eq!(p.text.contains("Model solution:"), spec.include_model_solution);
            assert_eq!(p.text.contains(solution.trim_end()), spec.include_model_solution);
            assert!(p.text.ends_with(spec.instruction.text()));
            assert_eq!(render_prompt(&spec, &ex, code).unwrap(), p);
        }
    }

    #[test]
    fn matrix_sizes() {
        let specs = enumerate_matrix(&InstructionVariant::INITIAL, &AttributeCombo::ALL, &[0.1]).unwrap();
        assert_eq!(specs.len(), 12);
        assert_eq!(specs[0].instruction, InstructionVariant::I);
        assert_eq!(specs[4].instruction, InstructionVariant::Ii);
        let one = enumerate_matrix(&[InstructionVariant::V], &[AttributeCombo::new(true, false)], &[0.5]).unwrap();
        assert_eq!(one, vec![default_spec()]);
        let temps = enumerate_matrix(&InstructionVariant::REFINED, &[AttributeCombo::new(true, false)], &temperature_grid()).unwrap();
        assert_eq!(temps.len(), 15);
        assert_eq!(enumerate_matrix(&[], &AttributeCombo::ALL, &[0.5]), Err(PromptError::EmptyAxis));
    }

    #[test]
    fn grid_values() {
        assert_eq!(temperature_grid(), vec![0.1, 0.3, 0.5, 0.7, 0.9]);
    }

    #[test]
    fn spec_json_shape() {
        let json = serde_json::to_value(default_spec()).unwrap();
        assert_eq!(
            json,
            serde_json::json!({
                "instruction": "v",
                "include_description": true,
                "include_model_solution": false,
                "temperature": 0.5
            })
        );
        let back: PromptSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, default_spec());
        assert_eq!(default_spec().label(), "v+desc@0.5");
    }

    #[test]
    fn golden_render_pies_all_sections() {
        let ex = Catalog::builtin().get("pies").unwrap().clone();
        let spec = PromptSpec::new(InstructionVariant::Ii, AttributeCombo::new(true, true), 0.5);
        let code = "v1 = int(input())\nv2 = int(input())\nv3 = int(input())\n";
        let p = render_prompt(&spec, &ex, code).unwrap();
        let golden = include_str!("../tests/golden/pies_ii_desc_sol.txt");
        assert_eq!(p.text, golden.trim_end_matches('\n'));
    }
}
