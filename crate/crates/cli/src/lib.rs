//! Subcommand implementations for the `nexthint` binary.
//!
//! Each function reads its inputs from files, writes any output files and
//! returns the text to print.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nexthint_core::catalog::{load_catalog, Catalog};
use nexthint_core::eval::rubric::{parse_entries_csv, parse_entries_jsonl, CRITERIA};
use nexthint_core::eval::{
    annotate, collect_hint_ids, criterion_kappa, load_sheets, rating_report, rubric_report, run_manifest,
    aggregate_ranking, AnnotationStore, ExperimentManifest, KappaReport, KappaStatus,
};
use nexthint_core::llm::LlmClient;
use nexthint_core::session::parse_events;
use nexthint_core::snapshot::synth::{keystroke_log, SynthOptions};
use nexthint_core::snapshot::{build_step_sequence, ingest_raw_log, CheckerConfig, LogFormat, PipelineOptions};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

pub struct PreprocessArgs {
    pub input: PathBuf,
    pub format: LogFormat,
    pub student: String,
    pub exercise: String,
    pub checker: CheckerConfig,
    pub print_window: usize,
    pub out: PathBuf,
}

pub fn preprocess(args: &PreprocessArgs) -> Result<String> {
    let raw = ingest_raw_log(&args.input, args.format)?;
    let checker = args.checker.build()?;
    let options = PipelineOptions {
        print_window: args.print_window,
    };
    let seq = build_step_sequence(&raw, &args.student, &args.exercise, checker.as_ref(), options)?;
    seq.write_jsonl(create(&args.out)?)?;
    Ok(format!(
        "{} raw snapshots -> {} steps ({} removed), written to {}",
        raw.len(),
        seq.steps.len(),
        seq.provenance.len(),
        args.out.display()
    ))
}

/// Writes a synthetic keystroke log (CSV) that ends in the exercise's model solution.
pub fn synth(catalog: &Catalog, exercise: &str, seed: u64, out: &Path) -> Result<String> {
    let ex = catalog.get(exercise).with_context(|| format!("unknown exercise `{exercise}`"))?;
    let program = ex
        .model_solution
        .as_deref()
        .with_context(|| format!("exercise `{exercise}` has no model solution to type"))?;
    let log = keystroke_log(program, seed, SynthOptions::default());
    let mut w = csv::Writer::from_writer(create(out)?);
    w.write_record(["index", "timestamp", "source"])?;
    for s in &log {
        w.write_record([s.seq_index.to_string(), s.timestamp.to_string(), s.source.clone()])?;
    }
    w.flush()?;
    Ok(format!("{} snapshots written to {}", log.len(), out.display()))
}

pub async fn generate(manifest_path: &Path, catalog: &Catalog, client: &LlmClient) -> Result<String> {
    let manifest = ExperimentManifest::load(manifest_path)?;
    let summary = run_manifest(&manifest, catalog, client).await?;
    let mut out = format!(
        "{} records ({} ok, {} failed) written to {}",
        summary.records,
        summary.succeeded,
        summary.failures.len(),
        manifest.output_path.display()
    );
    for w in &summary.warnings {
        write!(out, "\nwarning: {w}")?;
    }
    for (id, e) in &summary.failures {
        write!(out, "\nfailed: {id}: {e}")?;
    }
    Ok(out)
}

pub fn rank(sheets_dir: &Path) -> Result<String> {
    let sheets = load_sheets(sheets_dir)?;
    let summary = aggregate_ranking(&sheets)?;
    let exercises: Vec<String> = sheets.iter().map(|s| s.exercise_id.clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let mut out = String::from("prompt");
    for ex in &exercises {
        write!(out, "\t{ex}")?;
    }
    out.push_str("\ttotal\n");
    for (prompt, score) in &summary.scores {
        write!(out, "{prompt}")?;
        for ex in &exercises {
            write!(out, "\t{}", score.per_exercise.get(ex).copied().unwrap_or(0))?;
        }
        writeln!(out, "\t{}{}", score.total, if score.winner { "\t(best)" } else { "" })?;
    }
    if !summary.tied_for_best.is_empty() {
        write!(out, "tie for best: {}", summary.tied_for_best.join(", "))?;
    }
    Ok(out.trim_end().to_string())
}

fn parse_sheet(path: &Path) -> Result<Vec<serde_json::Map<String, serde_json::Value>>> {
    let text = read(path)?;
    let entries = if path.extension().is_some_and(|e| e == "csv") {
        parse_entries_csv(&text)?
    } else {
        parse_entries_jsonl(&text)?
    };
    Ok(entries)
}

/// Validates a sheet and appends it to the store file, which is created if missing.
pub fn annotate_cmd(hints: &Path, entries: &Path, annotator: &str, store_path: &Path) -> Result<String> {
    let known: HashSet<String> = collect_hint_ids(&read(hints)?)?;
    let mut store = if store_path.exists() {
        AnnotationStore::from_jsonl(&read(store_path)?)?
    } else {
        AnnotationStore::new()
    };
    let entries = parse_sheet(entries)?;
    let added = annotate(&known, annotator, &entries, &mut store)
        .with_context(|| format!("{}: sheet rejected, nothing stored", annotator))?;
    let mut buf = Vec::new();
    store.write_jsonl(&mut buf)?;
    fs::write(store_path, buf).with_context(|| format!("writing {}", store_path.display()))?;
    Ok(format!(
        "{added} annotations by `{annotator}` accepted; {} in {}",
        store.len(),
        store_path.display()
    ))
}

fn load_store(path: &Path) -> Result<AnnotationStore> {
    AnnotationStore::from_jsonl(&read(path)?).with_context(|| format!("reading {}", path.display()))
}

fn single_annotator(store: &AnnotationStore, path: &Path) -> Result<String> {
    let ids: std::collections::BTreeSet<&str> = store.iter().map(|a| a.annotator_id.as_str()).collect();
    match ids.len() {
        1 => Ok(ids.into_iter().next().unwrap().to_string()),
        0 => bail!("{} holds no annotations", path.display()),
        _ => bail!(
            "{} holds annotations by {:?}; pass --annotator-a/--annotator-b to pick one",
            path.display(),
            ids
        ),
    }
}

pub struct KappaArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    pub criterion: String,
    pub annotator_a: Option<String>,
    pub annotator_b: Option<String>,
}

pub fn format_kappa(r: &KappaReport) -> String {
    let kappa = match (r.kappa, r.status) {
        (Some(k), KappaStatus::Defined) => format!("{k:.3}"),
        (Some(k), KappaStatus::Degenerate) => format!("{k:.3} (degenerate: one category only)"),
        _ => "undefined (chance agreement is 1)".to_string(),
    };
    format!(
        "{}\tn={}\tagreements={}/{}\tp_o={:.3}\tkappa={kappa}",
        r.criterion, r.n, r.agreements, r.n, r.observed_agreement
    )
}

pub fn kappa(args: &KappaArgs) -> Result<String> {
    let a = load_store(&args.a)?;
    let b = load_store(&args.b)?;
    let ann_a = match &args.annotator_a {
        Some(id) => id.clone(),
        None => single_annotator(&a, &args.a)?,
    };
    let ann_b = match &args.annotator_b {
        Some(id) => id.clone(),
        None => single_annotator(&b, &args.b)?,
    };
    let criteria: Vec<&str> = if args.criterion == "all" {
        CRITERIA.to_vec()
    } else {
        vec![args.criterion.as_str()]
    };
    let mut lines = Vec::new();
    for c in criteria {
        let r = criterion_kappa(a.by_annotator(&ann_a), b.by_annotator(&ann_b), c)?;
        lines.push(format_kappa(&r));
    }
    Ok(lines.join("\n"))
}

/// Rating CSVs from an event export, plus rubric tables when annotations are given.
pub fn report(events: &Path, out_dir: &Path, annotations: Option<&Path>) -> Result<String> {
    let events = parse_events(&read(events)?).context("parsing events")?;
    let r = rating_report(&events)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    r.write_summary_csv(create(&out_dir.join("ratings_summary.csv"))?)?;
    r.write_plot_csv(create(&out_dir.join("ratings_plot.csv"))?)?;
    r.write_sessions_csv(create(&out_dir.join("sessions.csv"))?)?;
    let mut out = format!("n = {} rated hints ({} issued)\n", r.n, r.hints_issued);
    for s in &r.statements {
        let mean = s.mean.map(|m| format!("{m:.2}")).unwrap_or_else(|| "-".into());
        writeln!(out, "{:<24} {:?} mean {mean}", s.label, s.histogram)?;
    }
    if let Some(path) = annotations {
        let store = load_store(path)?;
        let rubric = rubric_report(store.iter());
        rubric.write_csv(create(&out_dir.join("rubric.csv"))?)?;
        writeln!(out, "rubric: {} annotations", rubric.n)?;
    }
    write!(out, "written to {}", out_dir.display())?;
    Ok(out)
}

pub fn catalog(dir: Option<&Path>) -> Result<Catalog> {
    Ok(load_catalog(dir, true)?)
}
