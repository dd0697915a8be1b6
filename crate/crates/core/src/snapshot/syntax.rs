//! Python 3 syntax validity checks.
//!
//! Two interchangeable checkers: an in-process parser and an external
//! interpreter that runs `ast.parse` on stdin. A checker that cannot run is a
//! configuration error, never an "invalid source" verdict.

use std::io::Write;
use std::process::{Command, Stdio};
use std::str::FromStr;

use rustpython_parser::{ast, Parse};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CheckerError {
    #[error("syntax checker unavailable: {0}")]
    Unavailable(String),
}

pub trait SyntaxChecker: Send + Sync {
    fn is_valid(&self, source: &str) -> Result<bool, CheckerError>;
}

/// In-process Python 3 parser.
#[derive(Debug, Default, Clone, Copy)]
pub struct EmbeddedChecker;

impl SyntaxChecker for EmbeddedChecker {
    fn is_valid(&self, source: &str) -> Result<bool, CheckerError> {
        Ok(ast::Suite::parse(source, "<student>").is_ok())
    }
}

const VALIDATOR_SCRIPT: &str = "\
import ast, sys
src = sys.stdin.buffer.read().decode('utf-8')
try:
    ast.parse(src)
except (SyntaxError, ValueError):
    sys.exit(3)
";

/// Runs `ast.parse` in an external Python interpreter.
#[derive(Debug, Clone)]
pub struct SubprocessChecker {
    interpreter: String,
}

impl SubprocessChecker {
    /// Fails if the interpreter cannot be started or cannot parse an empty program.
    pub fn new(interpreter: impl Into<String>) -> Result<Self, CheckerError> {
        let checker = Self {
            interpreter: interpreter.into(),
        };
        if !checker.is_valid("")? {
            return Err(CheckerError::Unavailable(format!(
                "`{}` rejected an empty program",
                checker.interpreter
            )));
        }
        Ok(checker)
    }
}

impl SyntaxChecker for SubprocessChecker {
    fn is_valid(&self, source: &str) -> Result<bool, CheckerError> {
        let mut child = Command::new(&self.interpreter)
            .args(["-c", VALIDATOR_SCRIPT])
            .stdin(Stdio::piped())
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| CheckerError::Unavailable(format!("{}: {e}", self.interpreter)))?;
        {
            let mut stdin = child.stdin.take().expect("stdin is piped");
            // A broken pipe here means the interpreter died early; the exit code tells us why.
            let _ = stdin.write_all(source.as_bytes());
        }
        let output = child
            .wait_with_output()
            .map_err(|e| CheckerError::Unavailable(format!("{}: {e}", self.interpreter)))?;
        match output.status.code() {
            Some(0) => Ok(true),
            Some(3) => Ok(false),
            _ => Err(CheckerError::Unavailable(format!(
                "{} exited with {}: {}",
                self.interpreter,
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            ))),
        }
    }
}

/// Which checker to use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CheckerConfig {
    #[default]
    Embedded,
    Subprocess { interpreter: String },
}

impl CheckerConfig {
    pub fn build(&self) -> Result<Box<dyn SyntaxChecker>, CheckerError> {
        Ok(match self {
            CheckerConfig::Embedded => Box::new(EmbeddedChecker),
            CheckerConfig::Subprocess { interpreter } => {
                Box::new(SubprocessChecker::new(interpreter.clone())?)
            }
        })
    }
}

impl FromStr for CheckerConfig {
    type Err = String;

    /// `embedded`, `python` (subprocess via `python3`), or `subprocess:<interpreter>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "embedded" => Ok(CheckerConfig::Embedded),
            "python" | "subprocess" => Ok(CheckerConfig::Subprocess {
                interpreter: "python3".into(),
            }),
            other => match other.strip_prefix("subprocess:") {
                Some(interp) if !interp.is_empty() => Ok(CheckerConfig::Subprocess {
                    interpreter: interp.into(),
                }),
                _ => Err(format!("unknown syntax checker `{other}`")),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_examples() {
        let c = EmbeddedChecker;
        assert!(c.is_valid("x = 1").unwrap());
        assert!(!c.is_valid("x = (").unwrap());
        assert!(c.is_valid("for i in range(3):\n    print(i)").unwrap());
        assert!(c.is_valid("").unwrap());
    }

    #[test]
    fn missing_interpreter_is_configuration_error() {
        let err = SubprocessChecker::new("/nonexistent/python-xyz").unwrap_err();
        assert!(matches!(err, CheckerError::Unavailable(_)));
    }

    #[test]
    fn config_parsing() {
        assert_eq!("embedded".parse::<CheckerConfig>().unwrap(), CheckerConfig::Embedded);
        assert_eq!(
            "subprocess:python3.11".parse::<CheckerConfig>().unwrap(),
            CheckerConfig::Subprocess {
                interpreter: "python3.11".into()
            }
        );
        assert!("pyflakes".parse::<CheckerConfig>().is_err());
    }

    #[test]
    fn subprocess_checker_agrees_when_python_present() {
        let Ok(c) = SubprocessChecker::new("python3") else {
            eprintln!("python3 not available; skipping");
            return;
        };
        assert!(c.is_valid("x = 1").unwrap());
        assert!(!c.is_valid("x = (").unwrap());
        assert!(!c.is_valid("if x:\nprint(1)").unwrap());
    }
}
