use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nexthint_cli as cmd;
use nexthint_core::llm::LlmClient;
use nexthint_core::snapshot::{CheckerConfig, LogFormat, DEFAULT_PRINT_WINDOW};
use tracing_subscriber::EnvFilter;

/// Preprocess snapshot logs, generate hints in bulk and evaluate them.
#[derive(Parser)]
#[command(name = "nexthint", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct BackendChoice {
    /// Deterministic offline backend.
    #[arg(long)]
    mock: bool,
    /// OpenAI-compatible endpoint configured by STAP_API_KEY, STAP_API_BASE, STAP_MODEL.
    #[arg(long)]
    live: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a raw keystroke log into a step sequence (JSONL).
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "csv")]
        format: LogFormat,
        #[arg(long)]
        student: String,
        #[arg(long)]
        exercise: String,
        /// embedded, python, or subprocess:<interpreter>
        #[arg(long, default_value = "embedded")]
        checker: CheckerConfig,
        #[arg(long, default_value_t = DEFAULT_PRINT_WINDOW)]
        print_window: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic keystroke log (CSV) for an exercise.
    Synth {
        #[arg(long)]
        exercise: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        catalog_dir: Option<PathBuf>,
    },
    /// Generate hints for every step, prompt spec and sample in a manifest.
    Generate {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        backend: BackendChoice,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        catalog_dir: Option<PathBuf>,
    },
    /// Sum prompt ranks over a directory of ranking sheets.
    Rank {
        #[arg(long)]
        sheets: PathBuf,
    },
    /// Validate a rubric sheet (JSONL or CSV) and add it to an annotation store.
    Annotate {
        /// Experiment records or exported events holding the hint ids.
        #[arg(long)]
        hints: PathBuf,
        #[arg(long)]
        entries: PathBuf,
        #[arg(long)]
        annotator: String,
        /// Defaults to annotations-<annotator>.jsonl next to the entries file.
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Cohen's kappa between two annotators on one criterion, or `all`.
    Kappa {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value = "all")]
        criterion: String,
        #[arg(long)]
        annotator_a: Option<String>,
        #[arg(long)]
        annotator_b: Option<String>,
    },
    /// Student rating tables from an event export.
    Report {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Annotation store for the rubric tables.
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
}

async fn run(cli: Cli) -> anyhow::Result<String> {
    match cli.command {
        Command::Preprocess {
            input,
            format,
            student,
            exercise,
            checker,
            print_window,
            out,
        } => cmd::preprocess(&cmd::PreprocessArgs {
            input,
            format,
            student,
            exercise,
            checker,
            print_window,
            out,
        }),
        Command::Synth {
            exercise,
            seed,
            out,
            catalog_dir,
        } => cmd::synth(&cmd::catalog(catalog_dir.as_deref())?, &exercise, seed, &out),
        Command::Generate {
            manifest,
            backend,
            seed,
            catalog_dir,
        } => {
            let client = if backend.live {
                LlmClient::from_env()?
            } else {
                LlmClient::mock(seed)
            };
            cmd::generate(&manifest, &cmd::catalog(catalog_dir.as_deref())?, &client).await
        }
        Command::Rank { sheets } => cmd::rank(&sheets),
        Command::Annotate {
            hints,
            entries,
            annotator,
            store,
        } => {
            let store = store.unwrap_or_else(|| {
                entries
                    .parent()
                    .unwrap_or(std::path::Path::new("."))
                    .join(format!("annotations-{annotator}.jsonl"))
            });
            cmd::annotate_cmd(&hints, &entries, &annotator, &store)
        }
        Command::Kappa {
            a,
            b,
            criterion,
            annotator_a,
            annotator_b,
        } => cmd::kappa(&cmd::KappaArgs {
            a,
            b,
            criterion,
            annotator_a,
            annotator_b,
        }),
        Command::Report {
            events,
            out,
            annotations,
        } => cmd::report(&events, &out, annotations.as_deref()),
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .init();
    match run(Cli::parse()).await {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("nexthint: {e:#}");
            ExitCode::FAILURE
        }
    }
}
