//! Synthetic keystroke logs for demos and tests.
//!
//! The generator types a target program one character at a time, the way an
//! editor that saves on every keystroke would record it. Along the way it adds
//! noise seen in real logs: repeated saves, trailing whitespace, debugging
//! prints that are deleted again, and typos that are corrected.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::Snapshot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    /// Chance of inserting a debugging print after a finished line.
    pub print_rate: f64,
    /// Chance of a repeated save after a keystroke.
    pub repeat_rate: f64,
    /// Chance of a typo that is deleted again.
    pub typo_rate: f64,
    pub start_ms: i64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            print_rate: 0.3,
            repeat_rate: 0.05,
            typo_rate: 0.03,
            start_ms: 1_700_000_000_000,
        }
    }
}

struct Recorder {
    rng: StdRng,
    lines: Vec<String>,
    out: Vec<Snapshot>,
    now: i64,
}

impl Recorder {
    fn save(&mut self) {
        self.now += self.rng.random_range(40..1500);
        let mut source = self.lines.join("\n");
        if !source.is_empty() {
            source.push('\n');
        }
        let index = self.out.len() as u64;
        self.out.push(Snapshot::new(index, self.now, source));
    }

    /// Types `text` at the end of line `at`, saving after every character.
    fn type_into(&mut self, at: usize, text: &str) {
        for c in text.chars() {
            self.lines[at].push(c);
            self.save();
        }
    }
}

/// A keystroke log that ends in `program`, deterministic in `seed`.
pub fn keystroke_log(program: &str, seed: u64, options: SynthOptions) -> Vec<Snapshot> {
    let mut r = Recorder {
        rng: StdRng::seed_from_u64(seed),
        lines: Vec::new(),
        out: Vec::new(),
        now: options.start_ms,
    };
    for target in program.lines() {
        r.lines.push(String::new());
        let at = r.lines.len() - 1;
        let indent_len = target.len() - target.trim_start().len();
        let (indent, body) = target.split_at(indent_len);
        r.lines[at].push_str(indent);
        for c in body.chars() {
            if r.rng.random_bool(options.typo_rate) {
                r.lines[at].push('#');
                r.save();
                r.lines[at].pop();
                r.save();
            }
            r.lines[at].push(c);
            r.save();
            if r.rng.random_bool(options.repeat_rate) {
                r.save();
            }
        }
        if r.rng.random_bool(options.repeat_rate) {
            r.lines[at].push_str("  ");
            r.save();
            r.lines[at].truncate(target.len());
        }
        if !body.is_empty() && !body.ends_with(':') && r.rng.random_bool(options.print_rate) {
            let var = body
                .split(|c: char| !c.is_alphanumeric() && c != '_')
                .find(|w| w.chars().next().is_some_and(|c| c.is_alphabetic()) && !is_keyword(w))
                .unwrap_or("'here'")
                .to_string();
            r.lines.push(indent.to_string());
            let print_at = r.lines.len() - 1;
            r.type_into(print_at, &format!("print({var})"));
            r.lines.remove(print_at);
            r.save();
        }
    }
    r.save();
    r.out
}

fn is_keyword(w: &str) -> bool {
    matches!(
        w,
        "for" | "in" | "if" | "else" | "elif" | "while" | "not" | "and" | "or" | "def" | "return" | "int" | "input"
            | "range" | "print" | "True" | "False" | "None"
    )
}
