//! Nine-criterion expert rubric for generated hints.
//!
//! Annotations are written by hand into a JSONL or CSV sheet and validated in
//! bulk: a sheet is accepted whole or not at all.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::kappa::{cohens_kappa, KappaReport};

/// Criterion names, in sheet column order.
pub const CRITERIA: [&str; 9] = [
    "feedback_type",
    "information",
    "level_of_detail",
    "personalised",
    "appropriate",
    "specific",
    "misleading",
    "tone",
    "length_sentences",
];

macro_rules! label_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $label)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn label(self) -> &'static str {
                match self { $($name::$variant => $label),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($label => Ok($name::$variant),)+
                    other => Err(format!(
                        "`{other}` is not one of {}",
                        [$($label),+].join(", ")
                    )),
                }
            }
        }
    };
}

label_enum!(
    /// What kind of feedback the hint gives.
    FeedbackType {
        TaskConstraints => "task_constraints",
        Concepts => "concepts",
        Mistakes => "mistakes",
        HowToProceed => "how_to_proceed",
        MetaCognition => "meta_cognition",
    }
);

label_enum!(
    /// Additional information beyond the next step itself.
    InformationKind {
        Compliment => "compliment",
        Tip => "tip",
        Explanation => "explanation",
    }
);

label_enum!(LevelOfDetail {
    BottomOut => "bottom_out",
    HighLevel => "high_level",
});

label_enum!(Tone {
    Direct => "direct",
    Neutral => "neutral",
    Friendly => "friendly",
});

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricAnnotation {
    pub hint_id: String,
    pub annotator_id: String,
    pub feedback_type: FeedbackType,
    pub information: BTreeSet<InformationKind>,
    pub level_of_detail: LevelOfDetail,
    /// Refers to the student's code or approach.
    pub personalised: bool,
    /// A suitable next step for the current program state.
    pub appropriate: bool,
    /// Limited to a single next step.
    pub specific: bool,
    pub misleading: bool,
    pub tone: Tone,
    pub length_sentences: u32,
}

/// Short name for an information set: letters C, T, E joined by `&`, or `none`.
pub fn information_combo(set: &BTreeSet<InformationKind>) -> String {
    if set.is_empty() {
        return "none".into();
    }
    set.iter()
        .map(|k| match k {
            InformationKind::Compliment => "C",
            InformationKind::Tip => "T",
            InformationKind::Explanation => "E",
        })
        .collect::<Vec<_>>()
        .join("&")
}

impl RubricAnnotation {
    /// Flat categorical label for one criterion, used for agreement statistics.
    pub fn label(&self, criterion: &str) -> Option<String> {
        Some(match criterion {
            "feedback_type" => self.feedback_type.to_string(),
            "information" => {
                if self.information.is_empty() {
                    "none".into()
                } else {
                    self.information.iter().map(|k| k.label()).collect::<Vec<_>>().join("+")
                }
            }
            "level_of_detail" => self.level_of_detail.to_string(),
            "personalised" => self.personalised.to_string(),
            "appropriate" => self.appropriate.to_string(),
            "specific" => self.specific.to_string(),
            "misleading" => self.misleading.to_string(),
            "tone" => self.tone.to_string(),
            "length_sentences" => self.length_sentences.to_string(),
            _ => return None,
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RubricError {
    #[error("entry {entry} (hint `{hint_id}`): criterion `{criterion}`: {detail}")]
    Invalid {
        entry: usize,
        hint_id: String,
        criterion: String,
        detail: String,
    },
    #[error("entry {entry}: {detail}")]
    Malformed { entry: usize, detail: String },
    #[error("entry {entry}: unknown hint `{hint_id}`")]
    UnknownHint { entry: usize, hint_id: String },
    #[error("entry {entry}: hint `{hint_id}` already annotated by `{annotator_id}`")]
    Conflict {
        entry: usize,
        hint_id: String,
        annotator_id: String,
    },
}

fn parse_bool(v: &Value) -> Result<bool, String> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
            "true" | "yes" | "y" | "1" => Ok(true),
            "false" | "no" | "n" | "0" => Ok(false),
            other => Err(format!("`{other}` is not a yes/no value")),
        },
        other => Err(format!("expected a boolean, found {other}")),
    }
}

fn parse_label<T: FromStr<Err = String>>(v: &Value) -> Result<T, String> {
    match v {
        Value::String(s) => s.trim().parse(),
        other => Err(format!("expected a string, found {other}")),
    }
}

fn parse_information(v: &Value) -> Result<BTreeSet<InformationKind>, String> {
    let items: Vec<String> = match v {
        Value::Array(items) => items
            .iter()
            .map(|i| i.as_str().map(str::to_string).ok_or_else(|| format!("expected strings, found {i}")))
            .collect::<Result<_, _>>()?,
        Value::String(s) if s.trim() == "none" => Vec::new(),
        Value::String(s) => s.split([';', '+', '|']).map(|p| p.trim().to_string()).collect(),
        other => return Err(format!("expected a list, found {other}")),
    };
    items.iter().map(|i| i.parse()).collect()
}

fn parse_length(v: &Value) -> Result<u32, String> {
    let n = match v {
        Value::Number(n) => n.as_u64().ok_or_else(|| format!("`{n}` is not a positive integer"))?,
        Value::String(s) => s.trim().parse::<u64>().map_err(|_| format!("`{s}` is not a positive integer"))?,
        other => return Err(format!("expected a positive integer, found {other}")),
    };
    if n == 0 || n > u64::from(u32::MAX) {
        return Err(format!("`{n}` is not a positive integer"));
    }
    Ok(n as u32)
}

/// Validates one sheet entry. `annotator_id` fills in a missing annotator field
/// and must match one that is present.
pub fn validate_entry(entry: usize, obj: &Map<String, Value>, annotator_id: &str) -> Result<RubricAnnotation, RubricError> {
    let hint_id = match obj.get("hint_id") {
        Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_string(),
        _ => {
            return Err(RubricError::Malformed {
                entry,
                detail: "missing `hint_id`".into(),
            })
        }
    };
    if let Some(v) = obj.get("annotator_id") {
        if v.as_str() != Some(annotator_id) {
            return Err(RubricError::Malformed {
                entry,
                detail: format!("annotator_id {v} does not match `{annotator_id}`"),
            });
        }
    }
    let invalid = |criterion: &str, detail: String| RubricError::Invalid {
        entry,
        hint_id: hint_id.clone(),
        criterion: criterion.to_string(),
        detail,
    };
    let field = |criterion: &'static str| obj.get(criterion).ok_or_else(|| invalid(criterion, "missing".into()));
    macro_rules! get {
        ($name:literal, $parse:expr) => {
            $parse(field($name)?).map_err(|d| invalid($name, d))?
        };
    }
    let known: HashSet<&str> = CRITERIA.iter().copied().chain(["hint_id", "annotator_id", "comment"]).collect();
    if let Some(extra) = obj.keys().find(|k| !known.contains(k.as_str())) {
        return Err(RubricError::Malformed {
            entry,
            detail: format!("unknown field `{extra}`"),
        });
    }
    Ok(RubricAnnotation {
        feedback_type: get!("feedback_type", parse_label::<FeedbackType>),
        information: get!("information", parse_information),
        level_of_detail: get!("level_of_detail", parse_label::<LevelOfDetail>),
        personalised: get!("personalised", parse_bool),
        appropriate: get!("appropriate", parse_bool),
        specific: get!("specific", parse_bool),
        misleading: get!("misleading", parse_bool),
        tone: get!("tone", parse_label::<Tone>),
        length_sentences: get!("length_sentences", parse_length),
        hint_id,
        annotator_id: annotator_id.to_string(),
    })
}

/// Parses a JSONL sheet into raw entry objects.
pub fn parse_entries_jsonl(text: &str) -> Result<Vec<Map<String, Value>>, RubricError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        match serde_json::from_str::<Value>(line) {
            Ok(Value::Object(m)) => out.push(m),
            Ok(_) => {
                return Err(RubricError::Malformed {
                    entry: i + 1,
                    detail: "expected a JSON object".into(),
                })
            }
            Err(e) => {
                return Err(RubricError::Malformed {
                    entry: i + 1,
                    detail: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

/// Parses a CSV sheet with a header row. Empty cells count as missing;
/// write `none` for an empty information set.
pub fn parse_entries_csv(text: &str) -> Result<Vec<Map<String, Value>>, RubricError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| RubricError::Malformed {
            entry: 0,
            detail: e.to_string(),
        })?
        .clone();
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| RubricError::Malformed {
            entry: i + 1,
            detail: e.to_string(),
        })?;
        let obj: Map<String, Value> = headers
            .iter()
            .zip(rec.iter())
            .filter(|(_, v)| !v.trim().is_empty())
            .map(|(k, v)| (k.trim().to_string(), Value::String(v.trim().to_string())))
            .collect();
        out.push(obj);
    }
    Ok(out)
}

/// Collects hint ids from a JSONL file of experiment records or service
/// events. Lines carrying a top-level `hint_id` and `hint_issued` events both count.
pub fn collect_hint_ids(text: &str) -> Result<HashSet<String>, RubricError> {
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: Value = serde_json::from_str(line).map_err(|e| RubricError::Malformed {
            entry: i + 1,
            detail: e.to_string(),
        })?;
        if let Some(id) = v.get("hint_id").and_then(Value::as_str) {
            ids.insert(id.to_string());
        } else if v.get("kind").and_then(Value::as_str) == Some("hint_issued") {
            if let Some(id) = v.pointer("/payload/hint/hint_id").and_then(Value::as_str) {
                ids.insert(id.to_string());
            }
        }
    }
    Ok(ids)
}

/// Validated annotations keyed by (hint, annotator).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationStore {
    items: BTreeMap<(String, String), RubricAnnotation>,
}

impl AnnotationStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, hint_id: &str, annotator_id: &str) -> Option<&RubricAnnotation> {
        self.items.get(&(hint_id.to_string(), annotator_id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &RubricAnnotation> {
        self.items.values()
    }

    pub fn by_annotator<'a>(&'a self, annotator_id: &'a str) -> impl Iterator<Item = &'a RubricAnnotation> {
        self.items.values().filter(move |a| a.annotator_id == annotator_id)
    }

    pub fn from_jsonl(text: &str) -> Result<Self, RubricError> {
        let mut store = Self::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let a: RubricAnnotation = serde_json::from_str(line).map_err(|e| RubricError::Malformed {
                entry: i + 1,
                detail: e.to_string(),
            })?;
            let key = (a.hint_id.clone(), a.annotator_id.clone());
            if store.items.contains_key(&key) {
                return Err(RubricError::Conflict {
                    entry: i + 1,
                    hint_id: key.0,
                    annotator_id: key.1,
                });
            }
            store.items.insert(key, a);
        }
        Ok(store)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for a in self.items.values() {
            serde_json::to_writer(&mut out, a)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Validates every entry against the known hint ids and adds them to `store`.
/// Nothing is stored unless every entry is valid. Returns the number added.
pub fn annotate(
    known_hints: &HashSet<String>,
    annotator_id: &str,
    entries: &[Map<String, Value>],
    store: &mut AnnotationStore,
) -> Result<usize, RubricError> {
    let mut staged: BTreeMap<(String, String), RubricAnnotation> = BTreeMap::new();
    for (i, obj) in entries.iter().enumerate() {
        let entry = i + 1;
        let a = validate_entry(entry, obj, annotator_id)?;
        if !known_hints.contains(&a.hint_id) {
            return Err(RubricError::UnknownHint {
                entry,
                hint_id: a.hint_id,
            });
        }
        let key = (a.hint_id.clone(), a.annotator_id.clone());
        if store.items.contains_key(&key) || staged.contains_key(&key) {
            return Err(RubricError::Conflict {
                entry,
                hint_id: key.0,
                annotator_id: key.1,
            });
        }
        staged.insert(key, a);
    }
    let added = staged.len();
    store.items.extend(staged);
    Ok(added)
}

#[derive(Debug, Error, PartialEq)]
pub enum AgreementError {
    #[error("unknown criterion `{0}` (expected one of {known})", known = CRITERIA.join(", "))]
    UnknownCriterion(String),
    #[error("the two annotation sets share no hints")]
    NoOverlap,
}

/// Cohen's kappa on one criterion over the hints both annotators labelled,
/// paired by hint id.
pub fn criterion_kappa<'a>(
    a: impl IntoIterator<Item = &'a RubricAnnotation>,
    b: impl IntoIterator<Item = &'a RubricAnnotation>,
    criterion: &str,
) -> Result<KappaReport, AgreementError> {
    if !CRITERIA.contains(&criterion) {
        return Err(AgreementError::UnknownCriterion(criterion.to_string()));
    }
    let b: BTreeMap<&str, &RubricAnnotation> = b.into_iter().map(|x| (x.hint_id.as_str(), x)).collect();
    let mut pairs: Vec<(&str, String, String)> = a
        .into_iter()
        .filter_map(|x| {
            let y = b.get(x.hint_id.as_str())?;
            Some((x.hint_id.as_str(), x.label(criterion)?, y.label(criterion)?))
        })
        .collect();
    pairs.sort();
    let (la, lb): (Vec<String>, Vec<String>) = pairs.into_iter().map(|(_, x, y)| (x, y)).unzip();
    let report = cohens_kappa(&la, &lb).map_err(|_| AgreementError::NoOverlap)?;
    Ok(report.with_criterion(criterion))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BinaryCount {
    pub yes: usize,
    pub no: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RubricReport {
    pub n: usize,
    pub feedback_type: BTreeMap<String, usize>,
    pub level_of_detail: BTreeMap<String, usize>,
    pub tone: BTreeMap<String, usize>,
    /// Keyed by [`information_combo`] names such as `T`, `C&T`, `T&E`.
    pub information: BTreeMap<String, usize>,
    pub binary: BTreeMap<String, BinaryCount>,
    pub length_sentences: BTreeMap<u32, usize>,
}

pub fn rubric_report<'a>(annotations: impl IntoIterator<Item = &'a RubricAnnotation>) -> RubricReport {
    let mut r = RubricReport::default();
    for a in annotations {
        r.n += 1;
        *r.feedback_type.entry(a.feedback_type.to_string()).or_default() += 1;
        *r.level_of_detail.entry(a.level_of_detail.to_string()).or_default() += 1;
        *r.tone.entry(a.tone.to_string()).or_default() += 1;
        *r.information.entry(information_combo(&a.information)).or_default() += 1;
        *r.length_sentences.entry(a.length_sentences).or_default() += 1;
        for (name, value) in [
            ("personalised", a.personalised),
            ("appropriate", a.appropriate),
            ("specific", a.specific),
            ("misleading", a.misleading),
        ] {
            let c = r.binary.entry(name.to_string()).or_default();
            if value {
                c.yes += 1;
            } else {
                c.no += 1;
            }
        }
    }
    r
}

impl RubricReport {
    /// Long-format CSV: `criterion,value,count`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["criterion", "value", "count"])?;
        let tables = [
            ("feedback_type", &self.feedback_type),
            ("level_of_detail", &self.level_of_detail),
            ("tone", &self.tone),
            ("information", &self.information),
        ];
        for (name, table) in tables {
            for (value, count) in table {
                w.write_record([name, value.as_str(), &count.to_string()])?;
            }
        }
        for (name, c) in &self.binary {
            w.write_record([name.as_str(), "yes", &c.yes.to_string()])?;
            w.write_record([name.as_str(), "no", &c.no.to_string()])?;
        }
        for (len, count) in &self.length_sentences {
            w.write_record(["length_sentences", &len.to_string(), &count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
