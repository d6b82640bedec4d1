//! File formats: scene graphs, examples, predictions, alias dictionaries,
//! contrast rules, coherency pairs and execution outcomes.
//!
//! Line-oriented files (examples, predictions, pairs, outcomes) hold one JSON
//! record per line; blank lines are ignored on read.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use clfkit_core::clf::{GoldProgram, ParseError};
use clfkit_core::exec::{BatchOutcome, TraceEntry, ValueSummary};
use clfkit_core::metrics::PredictionRecord;
use clfkit_core::scene::{graph_map, Alignments, SceneError};
use clfkit_core::testgen::{CoherencyPair, ContrastRule};
use clfkit_core::{AliasDictionary, GraphMap, ObjectNode, QaExample, SceneGraph};
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}{}: malformed file: {detail}", path.display(), line_suffix(*line))]
    MalformedFile {
        path: PathBuf,
        line: Option<usize>,
        detail: String,
    },
    #[error("{}: {source}", path.display())]
    Scene { path: PathBuf, source: SceneError },
    #[error("{}: duplicate image id {image_id}", path.display())]
    DuplicateImage { path: PathBuf, image_id: String },
    #[error("{}:{line}: example {example_id}: {source}", path.display())]
    Program {
        path: PathBuf,
        line: usize,
        example_id: String,
        source: Box<ParseError>,
    },
    #[error("{}: duplicate example id {example_id}", path.display())]
    DuplicateExample { path: PathBuf, example_id: String },
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(":{l}")).unwrap_or_default()
}

pub fn read_text(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.into(),
        source,
    })
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

fn malformed(path: &Path, line: Option<usize>, detail: impl fmt::Display) -> LoadError {
    LoadError::MalformedFile {
        path: path.into(),
        line,
        detail: detail.to_string(),
    }
}

/// Parses every non-blank line of `text` as a `T`, with 1-based line numbers.
pub fn parse_jsonl<T: serde::de::DeserializeOwned>(
    path: &Path,
    text: &str,
) -> Result<Vec<(usize, T)>, LoadError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|r| (i + 1, r))
                .map_err(|e| malformed(path, Some(i + 1), e))
        })
        .collect()
}

pub fn to_jsonl<T: Serialize>(records: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&r).expect("records serialize"));
        out.push('\n');
    }
    out
}

// ---- scene graphs ----

/// JSON object entries in file order, duplicates kept.
struct Entries<V>(Vec<(String, V)>);

impl<'de, V: Deserialize<'de>> Deserialize<'de> for Entries<V> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V_<V>(PhantomData<V>);
        impl<'de, V: Deserialize<'de>> Visitor<'de> for V_<V> {
            type Value = Entries<V>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON object")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut m: A) -> Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some(kv) = m.next_entry::<String, V>()? {
                    out.push(kv);
                }
                Ok(Entries(out))
            }
        }
        d.deserialize_map(V_(PhantomData))
    }
}

#[derive(Deserialize)]
struct RawGraph {
    objects: Entries<RawObject>,
}

#[derive(Deserialize)]
struct RawObject {
    name: String,
    #[serde(default)]
    attributes: Vec<String>,
    #[serde(default)]
    relations: Vec<RawRelation>,
}

#[derive(Deserialize, Serialize)]
struct RawRelation {
    name: String,
    object: String,
}

/// Parses a GQA-style scene-graph document. Graphs come back in file order,
/// objects in key order. Extra fields (boxes, sizes) are ignored.
pub fn parse_scene_graphs(path: &Path, text: &str) -> Result<Vec<SceneGraph>, LoadError> {
    let raw: Entries<RawGraph> =
        serde_json::from_str(text).map_err(|e| malformed(path, Some(e.line()), e))?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(raw.0.len());
    for (image_id, g) in raw.0 {
        if !seen.insert(image_id.clone()) {
            return Err(LoadError::DuplicateImage {
                path: path.into(),
                image_id,
            });
        }
        let mut objects = Vec::with_capacity(g.objects.0.len());
        for (oid, o) in g.objects.0 {
            let rels = o.relations.into_iter().map(|r| (r.name, r.object));
            let node = ObjectNode::new(&oid, &o.name, o.attributes, rels).map_err(|e| {
                LoadError::Scene {
                    path: path.into(),
                    source: SceneError::BadToken {
                        image_id: image_id.clone(),
                        object_id: oid.clone(),
                        source: e,
                    },
                }
            })?;
            objects.push(node);
        }
        let graph = SceneGraph::new(image_id, objects).map_err(|source| LoadError::Scene {
            path: path.into(),
            source,
        })?;
        out.push(graph);
    }
    Ok(out)
}

pub fn load_scene_graphs(path: &Path) -> Result<GraphMap, LoadError> {
    Ok(graph_map(parse_scene_graphs(path, &read_text(path)?)?))
}

struct GraphDoc<'a>(&'a [&'a SceneGraph]);
struct ObjectsDoc<'a>(&'a SceneGraph);

#[derive(Serialize)]
struct ObjectDoc<'a> {
    name: &'a str,
    attributes: &'a [String],
    relations: Vec<RawRelation>,
}

#[derive(Serialize)]
struct GraphBody<'a> {
    objects: ObjectsDoc<'a>,
}

impl Serialize for GraphDoc<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for g in self.0 {
            m.serialize_entry(
                g.image_id(),
                &GraphBody {
                    objects: ObjectsDoc(g),
                },
            )?;
        }
        m.end()
    }
}

impl Serialize for ObjectsDoc<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for o in self.0.objects() {
            let doc = ObjectDoc {
                name: &o.name,
                attributes: &o.attributes,
                relations: o
                    .relations
                    .iter()
                    .map(|r| RawRelation {
                        name: r.predicate.clone(),
                        object: r.target.clone(),
                    })
                    .collect(),
            };
            m.serialize_entry(&o.object_id, &doc)?;
        }
        m.end()
    }
}

/// The scene-graph document for `graphs`, in the given order.
pub fn scene_graphs_to_json(graphs: &[&SceneGraph]) -> String {
    serde_json::to_string_pretty(&GraphDoc(graphs)).expect("graphs serialize")
}

// ---- examples ----

/// Where a generated example came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion: Option<String>,
    /// Segment index for segment-combine queries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
    /// Set on records appended by few-shot augmentation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augment: Option<String>,
}

/// Scalars in answer fields are read as their JSON text (`3`, `true`).
fn scalar_string<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    scalar_opt(d)?.ok_or_else(|| de::Error::custom("answer is null"))
}

fn scalar_opt<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    match serde_json::Value::deserialize(d)? {
        serde_json::Value::Null => Ok(None),
        serde_json::Value::String(s) => Ok(Some(s)),
        serde_json::Value::Bool(b) => Ok(Some(if b { "yes" } else { "no" }.into())),
        serde_json::Value::Number(n) => Ok(Some(n.to_string())),
        other => Err(de::Error::custom(format!(
            "expected a scalar answer, found {other}"
        ))),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub example_id: String,
    pub question: String,
    pub image_ids: Vec<String>,
    #[serde(deserialize_with = "scalar_string")]
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<Box<RawValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// Program text from an embedded step list or a JSON string holding one.
fn program_text(raw: &RawValue) -> Result<String, serde_json::Error> {
    let t = raw.get();
    if t.trim_start().starts_with('"') {
        serde_json::from_str::<String>(t)
    } else {
        Ok(t.to_string())
    }
}

fn raw_program(p: &GoldProgram) -> Box<RawValue> {
    RawValue::from_string(p.to_text()).expect("program text is JSON")
}

impl ExampleRecord {
    pub fn from_example(ex: &QaExample, provenance: Option<Provenance>) -> Self {
        ExampleRecord {
            example_id: ex.example_id.clone(),
            question: ex.question.clone(),
            image_ids: ex.image_ids.clone(),
            answer: ex.gold_answer.clone(),
            program: ex.gold_program.as_ref().map(raw_program),
            template_id: ex.template_id.clone(),
            provenance,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedExample {
    pub example: QaExample,
    pub provenance: Option<Provenance>,
}

pub fn parse_examples(path: &Path, text: &str) -> Result<Vec<LoadedExample>, LoadError> {
    let mut ids = BTreeSet::new();
    let mut out = Vec::new();
    for (line, r) in parse_jsonl::<ExampleRecord>(path, text)? {
        if !ids.insert(r.example_id.clone()) {
            return Err(LoadError::DuplicateExample {
                path: path.into(),
                example_id: r.example_id,
            });
        }
        let mut ex = QaExample::new(r.example_id, r.question, r.image_ids, &r.answer);
        ex.template_id = r.template_id;
        if let Some(raw) = r.program {
            let text = program_text(&raw).map_err(|e| malformed(path, Some(line), e))?;
            let p = GoldProgram::parse(&text).map_err(|source| LoadError::Program {
                path: path.into(),
                line,
                example_id: ex.example_id.clone(),
                source: Box::new(source),
            })?;
            ex.gold_program = Some(p);
        }
        out.push(LoadedExample {
            example: ex,
            provenance: r.provenance,
        });
    }
    Ok(out)
}

pub fn load_examples(path: &Path) -> Result<Vec<QaExample>, LoadError> {
    Ok(parse_examples(path, &read_text(path)?)?
        .into_iter()
        .map(|l| l.example)
        .collect())
}

pub fn examples_to_jsonl<'a>(
    items: impl IntoIterator<Item = (&'a QaExample, Option<Provenance>)>,
) -> String {
    to_jsonl(
        items
            .into_iter()
            .map(|(ex, p)| ExampleRecord::from_example(ex, p)),
    )
}

// ---- predictions ----

#[derive(Debug, Deserialize)]
struct PredictionLine {
    example_id: String,
    #[serde(default)]
    program: Option<Box<RawValue>>,
    #[serde(default, deserialize_with = "scalar_opt")]
    answer: Option<String>,
    #[serde(default)]
    system: String,
}

/// Predicted programs are kept as text; they are parsed at scoring time so
/// that unparseable predictions count against the system, not the loader.
pub fn parse_predictions(path: &Path, text: &str) -> Result<Vec<PredictionRecord>, LoadError> {
    parse_jsonl::<PredictionLine>(path, text)?
        .into_iter()
        .map(|(line, p)| {
            let program = p
                .program
                .filter(|raw| raw.get().trim() != "null")
                .map(|raw| program_text(&raw))
                .transpose()
                .map_err(|e| malformed(path, Some(line), e))?;
            Ok(PredictionRecord {
                example_id: p.example_id,
                program,
                answer: p.answer,
                system: p.system,
            })
        })
        .collect()
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>, LoadError> {
    parse_predictions(path, &read_text(path)?)
}

#[derive(Serialize)]
struct PredictionOut<'a> {
    example_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    program: Option<Box<RawValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    answer: Option<&'a str>,
    system: &'a str,
}

/// Program text that is not JSON is written as a string.
pub fn predictions_to_jsonl(preds: &[PredictionRecord]) -> String {
    to_jsonl(preds.iter().map(|p| PredictionOut {
        example_id: &p.example_id,
        program: p.program.as_ref().map(|t| {
            RawValue::from_string(t.clone()).unwrap_or_else(|_| {
                RawValue::from_string(serde_json::to_string(t).unwrap()).unwrap()
            })
        }),
        answer: p.answer.as_deref(),
        system: &p.system,
    }))
}

// ---- dictionaries, alignments, rules, pairs ----

pub fn parse_alias_dictionary(path: &Path, text: &str) -> Result<AliasDictionary, LoadError> {
    let raw: BTreeMap<String, Vec<(String, u32)>> =
        serde_json::from_str(text).map_err(|e| malformed(path, None, e))?;
    Ok(AliasDictionary::from_entries(raw))
}

pub fn load_alias_dictionary(path: &Path) -> Result<AliasDictionary, LoadError> {
    parse_alias_dictionary(path, &read_text(path)?)
}

pub fn alias_dictionary_to_json(d: &AliasDictionary) -> String {
    let mut s = serde_json::to_string_pretty(d).expect("dictionary serializes");
    s.push('\n');
    s
}

pub fn load_alignments(path: &Path) -> Result<Alignments, LoadError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| malformed(path, None, e))
}

/// A JSON list of rules; every rule must pass its own consistency check.
pub fn parse_rules(path: &Path, text: &str) -> Result<Vec<ContrastRule>, LoadError> {
    let rules: Vec<ContrastRule> =
        serde_json::from_str(text).map_err(|e| malformed(path, None, e))?;
    for (i, r) in rules.iter().enumerate() {
        r.check()
            .map_err(|e| malformed(path, None, format!("rule {i}: {e}")))?;
    }
    Ok(rules)
}

pub fn load_rules(path: &Path) -> Result<Vec<ContrastRule>, LoadError> {
    parse_rules(path, &read_text(path)?)
}

pub fn rules_to_json(rules: &[ContrastRule]) -> String {
    let mut s = serde_json::to_string_pretty(rules).expect("rules serialize");
    s.push('\n');
    s
}

pub fn load_pairs(path: &Path) -> Result<Vec<CoherencyPair>, LoadError> {
    Ok(parse_jsonl(path, &read_text(path)?)?
        .into_iter()
        .map(|(_, p)| p)
        .collect())
}

// ---- outcomes ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "value")]
pub enum TraceValue {
    Objects(Vec<(String, String)>),
    Groups(Vec<(String, usize)>),
    Integer(i64),
    Boolean(bool),
    Str(String),
    Tokens(Vec<String>),
}

impl From<&ValueSummary> for TraceValue {
    fn from(v: &ValueSummary) -> Self {
        match v {
            ValueSummary::Objects(x) => TraceValue::Objects(x.clone()),
            ValueSummary::Groups(x) => TraceValue::Groups(x.clone()),
            ValueSummary::Integer(n) => TraceValue::Integer(*n),
            ValueSummary::Boolean(b) => TraceValue::Boolean(*b),
            ValueSummary::Str(s) => TraceValue::Str(s.clone()),
            ValueSummary::Tokens(t) => TraceValue::Tokens(t.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub op: String,
    pub value: TraceValue,
}

impl From<&TraceEntry> for TraceRecord {
    fn from(t: &TraceEntry) -> Self {
        TraceRecord {
            step: t.step,
            op: t.op.to_string(),
            value: (&t.value).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub kind: String,
    pub step: usize,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub example_id: String,
    pub answer: Option<String>,
    pub fatal: bool,
    pub events: Vec<String>,
    pub graphs_source: String,
    /// Set when the program could not run at all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_detail: Option<Vec<EventRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceRecord>>,
}

impl OutcomeRecord {
    pub fn from_outcome(o: &BatchOutcome, trace: bool) -> Self {
        let mut r = OutcomeRecord {
            example_id: o.example_id.clone(),
            answer: None,
            fatal: false,
            events: Vec::new(),
            graphs_source: o.source.as_str().into(),
            error: None,
            event_detail: None,
            trace: None,
        };
        match &o.result {
            Ok(out) => {
                r.answer = out.answer.clone();
                r.fatal = out.fatal;
                r.events = out
                    .events
                    .iter()
                    .map(|e| e.kind.as_str().to_string())
                    .collect();
                if trace {
                    r.event_detail = Some(
                        out.events
                            .iter()
                            .map(|e| EventRecord {
                                kind: e.kind.as_str().into(),
                                step: e.step_index,
                                path: e.path.to_string(),
                            })
                            .collect(),
                    );
                    r.trace = Some(out.trace.iter().map(TraceRecord::from).collect());
                }
            }
            Err(e) => r.error = Some(e.to_string()),
        }
        r
    }
}
