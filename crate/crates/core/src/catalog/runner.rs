//! Executes candidate programs against stdin/stdout tests.

use std::io::{Read, Write};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

use super::Exercise;

pub const ENV_RUNNER_COMMAND: &str = "STAP_RUNNER_COMMAND";
pub const ENV_RUNNER_TIMEOUT: &str = "STAP_RUNNER_TIMEOUT";
pub const ENV_RUNNER_MAX_OUTPUT: &str = "STAP_RUNNER_MAX_OUTPUT";

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("runner configuration: {0}")]
    Config(String),
    #[error("runner i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// How to execute a submission. `{file}` in `command` is replaced by the path
/// of the saved source file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunnerConfig {
    pub command: String,
    pub timeout_seconds: f64,
    pub max_output_bytes: usize,
}

impl Default for RunnerConfig {
    fn default() -> Self {
        Self {
            command: "python3 {file}".into(),
            timeout_seconds: 5.0,
            max_output_bytes: 64 * 1024,
        }
    }
}

impl RunnerConfig {
    /// Reads a TOML file; keys may sit at the top level or under `[runner]`.
    pub fn from_file(path: &Path) -> Result<Self, RunnerError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunnerError::Config(format!("{}: {e}", path.display())))?;
        let value: toml::Table = toml::from_str(&text)
            .map_err(|e| RunnerError::Config(format!("{}: {e}", path.display())))?;
        let table = match value.get("runner") {
            Some(toml::Value::Table(t)) => t.clone(),
            _ => value,
        };
        let config: RunnerConfig = table
            .try_into()
            .map_err(|e| RunnerError::Config(format!("{}: {e}", path.display())))?;
        config.validated()
    }

    /// Applies `STAP_RUNNER_*` overrides from the environment.
    pub fn with_env_overrides(self) -> Result<Self, RunnerError> {
        self.with_overrides(|k| std::env::var(k).ok())
    }

    fn with_overrides(mut self, get: impl Fn(&str) -> Option<String>) -> Result<Self, RunnerError> {
        if let Some(cmd) = get(ENV_RUNNER_COMMAND) {
            self.command = cmd;
        }
        if let Some(t) = get(ENV_RUNNER_TIMEOUT) {
            self.timeout_seconds = t
                .parse()
                .map_err(|_| RunnerError::Config(format!("{ENV_RUNNER_TIMEOUT}={t} is not a number")))?;
        }
        if let Some(m) = get(ENV_RUNNER_MAX_OUTPUT) {
            self.max_output_bytes = m
                .parse()
                .map_err(|_| RunnerError::Config(format!("{ENV_RUNNER_MAX_OUTPUT}={m} is not an integer")))?;
        }
        self.validated()
    }

    /// Defaults, then the optional file, then the environment.
    pub fn resolve(file: Option<&Path>) -> Result<Self, RunnerError> {
        let base = match file {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        base.with_env_overrides()
    }

    fn validated(self) -> Result<Self, RunnerError> {
        if !(self.timeout_seconds > 0.0 && self.timeout_seconds.is_finite()) {
            return Err(RunnerError::Config("timeout_seconds must be positive".into()));
        }
        if self.max_output_bytes == 0 {
            return Err(RunnerError::Config("max_output_bytes must be positive".into()));
        }
        self.argv(Path::new("x"))?;
        Ok(self)
    }

    fn argv(&self, file: &Path) -> Result<Vec<String>, RunnerError> {
        let parts = shlex::split(&self.command)
            .filter(|p| !p.is_empty())
            .ok_or_else(|| RunnerError::Config(format!("cannot parse command `{}`", self.command)))?;
        let file = file.to_string_lossy();
        Ok(parts.into_iter().map(|p| p.replace("{file}", &file)).collect())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_seconds)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub name: String,
    pub passed: bool,
    pub actual_stdout: String,
    pub stderr: String,
    pub timed_out: bool,
    /// Output exceeded the runner's cap; the program was stopped.
    #[serde(default)]
    pub output_truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub passed: bool,
    pub per_test: Vec<TestOutcome>,
}

/// Whitespace-token equality. Separators and trailing newlines do not matter.
pub fn outputs_match(actual: &str, expected: &str) -> bool {
    actual.split_whitespace().eq(expected.split_whitespace())
}

/// Runs `source` once per test of `exercise` in a fresh temporary directory.
///
/// A timeout fails the test; only an unusable runner is an error.
pub fn check_solution(
    exercise: &Exercise,
    source: &str,
    runner: &RunnerConfig,
) -> Result<CheckResult, RunnerError> {
    let dir = tempfile::tempdir()?;
    let file = dir.path().join("solution.py");
    std::fs::write(&file, source)?;
    let argv = runner.argv(&file)?;
    let mut per_test = Vec::with_capacity(exercise.tests.len());
    for test in &exercise.tests {
        let run = run_once(&argv, dir.path(), &test.stdin, runner)?;
        let passed = !run.timed_out && !run.truncated && outputs_match(&run.stdout, &test.expected_stdout);
        per_test.push(TestOutcome {
            name: test.name.clone(),
            passed,
            actual_stdout: run.stdout,
            stderr: run.stderr,
            timed_out: run.timed_out,
            output_truncated: run.truncated,
        });
    }
    Ok(CheckResult {
        passed: per_test.iter().all(|t| t.passed),
        per_test,
    })
}

struct RunOutput {
    stdout: String,
    stderr: String,
    timed_out: bool,
    truncated: bool,
}

fn run_once(argv: &[String], cwd: &Path, stdin: &str, runner: &RunnerConfig) -> Result<RunOutput, RunnerError> {
    let mut cmd = Command::new(&argv[0]);
    cmd.args(&argv[1..])
        .current_dir(cwd)
        .env("PYTHONIOENCODING", "utf-8")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let mut child = cmd.spawn().map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => {
            RunnerError::Config(format!("cannot execute `{}`: {e}", argv[0]))
        }
        _ => RunnerError::Io(e),
    })?;

    let mut input = child.stdin.take().expect("stdin is piped");
    let stdin = stdin.to_owned();
    let writer = thread::spawn(move || {
        let _ = input.write_all(stdin.as_bytes());
    });
    let cap = runner.max_output_bytes;
    let out_reader = spawn_capped_reader(child.stdout.take().expect("stdout is piped"), cap);
    let err_reader = spawn_capped_reader(child.stderr.take().expect("stderr is piped"), cap);

    let timed_out = child.wait_timeout(runner.timeout())?.is_none();
    kill_tree(&mut child);
    let _ = child.wait();
    let _ = writer.join();
    let (stdout, out_truncated) = out_reader.join().unwrap_or_default();
    let (stderr, err_truncated) = err_reader.join().unwrap_or_default();
    Ok(RunOutput {
        stdout,
        stderr,
        timed_out,
        truncated: out_truncated || err_truncated,
    })
}

/// Reads up to `cap` bytes, then closes the pipe so the writer fails fast.
fn spawn_capped_reader<R: Read + Send + 'static>(mut pipe: R, cap: usize) -> thread::JoinHandle<(String, bool)> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let mut chunk = [0u8; 8192];
        let mut truncated = false;
        loop {
            match pipe.read(&mut chunk) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    let room = cap - buf.len();
                    if n > room {
                        buf.extend_from_slice(&chunk[..room]);
                        truncated = true;
                        break;
                    }
                    buf.extend_from_slice(&chunk[..n]);
                }
            }
        }
        (String::from_utf8_lossy(&buf).into_owned(), truncated)
    })
}

fn kill_tree(child: &mut Child) {
    #[cfg(unix)]
    {
        // The child leads its own process group; take down anything it spawned.
        let pgid = child.id() as libc::pid_t;
        unsafe {
            libc::kill(-pgid, libc::SIGKILL);
        }
    }
    let _ = child.kill();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::IoTest;

    fn exercise(tests: Vec<(&str, &str)>) -> Exercise {
        Exercise {
            id: "echo".into(),
            title: "Echo".into(),
            description: "Input: text\n\nOutput: text".into(),
            starter_code: String::new(),
            model_solution: None,
            tests: tests
                .into_iter()
                .enumerate()
                .map(|(i, (stdin, out))| IoTest {
                    name: format!("t{i}"),
                    stdin: stdin.into(),
                    expected_stdout: out.into(),
                })
                .collect(),
        }
    }

    fn sh_runner() -> RunnerConfig {
        RunnerConfig {
            command: "sh {file}".into(),
            timeout_seconds: 2.0,
            max_output_bytes: 1024,
        }
    }

    #[test]
    fn token_comparison() {
        assert!(outputs_match("7 0\n", "7 0"));
        assert!(outputs_match("7\n0\n", "7 0\n"));
        assert!(!outputs_match("70", "7 0"));
        assert!(!outputs_match("", "2"));
        assert!(outputs_match("", "\n"));
    }

    #[test]
    fn shell_program_passes_and_fails() {
        let ex = exercise(vec![("a\n", "a"), ("b\n", "a")]);
        let res = check_solution(&ex, "read x; echo $x", &sh_runner()).unwrap();
        assert!(!res.passed);
        assert!(res.per_test[0].passed);
        assert!(!res.per_test[1].passed);
        assert_eq!(res.per_test[1].actual_stdout, "b\n");
    }

    #[test]
    fn empty_output_never_passes_nonempty_expectation() {
        let ex = exercise(vec![("x\n", "x")]);
        let res = check_solution(&ex, "true", &sh_runner()).unwrap();
        assert!(!res.passed);
    }

    #[test]
    fn missing_executable_is_configuration_error() {
        let runner = RunnerConfig {
            command: "/definitely/not/here {file}".into(),
            ..sh_runner()
        };
        let err = check_solution(&exercise(vec![("", "")]), "", &runner).unwrap_err();
        assert!(matches!(err, RunnerError::Config(_)));
    }

    #[test]
    fn timeout_marks_test_failed() {
        let runner = RunnerConfig {
            timeout_seconds: 0.3,
            ..sh_runner()
        };
        let start = std::time::Instant::now();
        let res = check_solution(&exercise(vec![("", "")]), "while true; do :; done", &runner).unwrap();
        assert!(start.elapsed() < Duration::from_millis(600));
        assert!(res.per_test[0].timed_out);
        assert!(!res.passed);
    }

    #[test]
    fn output_cap_stops_runaway_output() {
        let res = check_solution(&exercise(vec![("", "y")]), "yes", &sh_runner()).unwrap();
        let t = &res.per_test[0];
        assert!(t.output_truncated);
        assert!(!t.passed);
        assert!(t.actual_stdout.len() <= 1024);
    }

    #[test]
    fn config_overrides() {
        let cfg = RunnerConfig::default()
            .with_overrides(|k| match k {
                ENV_RUNNER_COMMAND => Some("python3 -I {file}".into()),
                ENV_RUNNER_TIMEOUT => Some("1.5".into()),
                _ => None,
            })
            .unwrap();
        assert_eq!(cfg.command, "python3 -I {file}");
        assert_eq!(cfg.timeout_seconds, 1.5);
        assert_eq!(cfg.max_output_bytes, 64 * 1024);
        assert!(RunnerConfig::default()
            .with_overrides(|k| (k == ENV_RUNNER_TIMEOUT).then(|| "soon".into()))
            .is_err());
    }

    #[test]
    fn config_file_with_runner_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runner.toml");
        std::fs::write(&path, "[runner]\ncommand = \"python3 {file}\"\ntimeout_seconds = 2\n").unwrap();
        let cfg = RunnerConfig::from_file(&path).unwrap();
        assert_eq!(cfg.timeout_seconds, 2.0);
        std::fs::write(&path, "timeout_seconds = -1\n").unwrap();
        assert!(RunnerConfig::from_file(&path).is_err());
    }
}
