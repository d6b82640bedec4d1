//! Scoring of predictions against gold examples.
//!
//! Every metric is a [`Rate`] of integer counts so aggregation is exact and
//! order-independent. A rate over zero items is undefined, never 0.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clf::{exact_match, GoldProgram};
use crate::exec::{execute_batch, BatchError, BatchItem, BatchOutcome, ExecOptions, GraphSource};
use crate::scene::{AliasDictionary, GraphMap, QaExample};
use crate::seed;
use crate::testgen::CoherencyPair;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rate {
    pub hits: u64,
    pub total: u64,
}

impl Rate {
    pub fn new(hits: u64, total: u64) -> Self {
        debug_assert!(hits <= total);
        Rate { hits, total }
    }

    pub fn record(&mut self, hit: bool) {
        self.total += 1;
        self.hits += u64::from(hit);
    }

    pub fn merge(self, other: Rate) -> Rate {
        Rate::new(self.hits + other.hits, self.total + other.total)
    }

    /// `None` when nothing was scored.
    pub fn value(self) -> Option<f64> {
        (self.total > 0).then(|| self.hits as f64 / self.total as f64)
    }

    /// Exact comparison with `num/den`.
    pub fn equals_ratio(self, num: u64, den: u64) -> bool {
        self.total > 0 && den > 0 && self.hits * den == num * self.total
    }
}

/// One system output for one example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub example_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default)]
    pub system: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredictionError {
    #[error("prediction for {0} has neither a program nor an answer")]
    Empty(String),
    #[error("duplicate prediction for {0}")]
    Duplicate(String),
    #[error("prediction for unknown example {0}")]
    UnknownExample(String),
}

pub type PredictionIndex = BTreeMap<String, PredictionRecord>;

/// Indexes predictions by example id, checking they are non-empty, unique
/// and refer to `examples`.
pub fn index_predictions(
    preds: impl IntoIterator<Item = PredictionRecord>,
    examples: &[QaExample],
) -> Result<PredictionIndex, PredictionError> {
    let known: BTreeSet<&str> = examples.iter().map(|e| e.example_id.as_str()).collect();
    let mut out = PredictionIndex::new();
    for p in preds {
        if p.program.is_none() && p.answer.is_none() {
            return Err(PredictionError::Empty(p.example_id));
        }
        if !known.contains(p.example_id.as_str()) {
            return Err(PredictionError::UnknownExample(p.example_id));
        }
        if out.contains_key(&p.example_id) {
            return Err(PredictionError::Duplicate(p.example_id));
        }
        out.insert(p.example_id.clone(), p);
    }
    Ok(out)
}

/// Whose program is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProgramChoice {
    #[default]
    Predicted,
    Gold,
}

/// The program to execute for each example, in example order. `None` marks
/// an example that is skipped: no predicted program, or no gold program when
/// gold programs are requested.
pub fn exec_items(
    examples: &[QaExample],
    preds: &PredictionIndex,
    choice: ProgramChoice,
) -> Vec<Option<BatchItem>> {
    examples
        .iter()
        .map(|ex| match choice {
            ProgramChoice::Gold => ex.gold_program.as_ref().map(|_| BatchItem::gold(ex)),
            ProgramChoice::Predicted => {
                let text = preds.get(&ex.example_id)?.program.as_deref()?;
                let program = GoldProgram::parse(text)
                    .map_err(|e| BatchError::Translate(e.into()))
                    .and_then(|g| g.to_clf().map_err(BatchError::from));
                Some(BatchItem {
                    example_id: ex.example_id.clone(),
                    image_ids: ex.image_ids.clone(),
                    program,
                })
            }
        })
        .collect()
}

/// How one executed program fared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecJudgement {
    pub correct: bool,
    /// Stopped by `ObjectNotFound`.
    pub fatal: bool,
    /// The program text did not parse or translate.
    pub unparseable: bool,
}

pub fn judge(ex: &QaExample, outcome: &BatchOutcome) -> ExecJudgement {
    match &outcome.result {
        Ok(o) => ExecJudgement {
            correct: o.answer.as_deref() == Some(ex.gold_answer.as_str()),
            fatal: o.fatal,
            unparseable: false,
        },
        Err(e) => ExecJudgement {
            correct: false,
            fatal: false,
            unparseable: matches!(e, BatchError::Translate(_)),
        },
    }
}

/// Execution accuracy with the missing-object ratio alongside.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExecScore {
    pub accuracy: Rate,
    /// Fatal runs over scored examples.
    pub missing_objects: Rate,
    pub unparseable: u64,
    pub skipped: u64,
}

impl ExecScore {
    pub fn add(&mut self, j: Option<ExecJudgement>) {
        match j {
            None => self.skipped += 1,
            Some(j) => {
                self.accuracy.record(j.correct);
                self.missing_objects.record(j.fatal);
                self.unparseable += u64::from(j.unparseable);
            }
        }
    }
}

/// Judges pre-computed outcomes. `outcomes[i]` belongs to `examples[i]`.
pub fn judge_all(
    examples: &[QaExample],
    outcomes: &[Option<BatchOutcome>],
) -> Vec<Option<ExecJudgement>> {
    examples
        .iter()
        .zip(outcomes)
        .map(|(ex, o)| o.as_ref().map(|o| judge(ex, o)))
        .collect()
}

/// Runs `items` one by one; the std crate supplies a parallel equivalent.
pub fn run_serial(
    items: &[Option<BatchItem>],
    graphs: &GraphMap,
    source: GraphSource,
    dict: Option<&AliasDictionary>,
) -> Vec<Option<BatchOutcome>> {
    items
        .iter()
        .map(|it| {
            it.as_ref().map(|it| {
                execute_batch(
                    core::slice::from_ref(it),
                    graphs,
                    source,
                    dict,
                    ExecOptions::default(),
                )
                .remove(0)
            })
        })
        .collect()
}

/// GenExec or GTExec, depending on which graphs are passed.
pub fn score_exec(
    preds: &PredictionIndex,
    examples: &[QaExample],
    graphs: &GraphMap,
    source: GraphSource,
    dict: Option<&AliasDictionary>,
    choice: ProgramChoice,
) -> ExecScore {
    let items = exec_items(examples, preds, choice);
    let outcomes = run_serial(&items, graphs, source, dict);
    let mut score = ExecScore::default();
    for j in judge_all(examples, &outcomes) {
        score.add(j);
    }
    score
}

/// Exact-match of predicted against gold programs for one example. `None`
/// when the example has no usable gold program or no predicted program.
pub fn exact_one(ex: &QaExample, pred: Option<&PredictionRecord>) -> Option<bool> {
    let text = pred?.program.as_deref()?;
    let gold = match ex.clf_program()? {
        Ok(g) => g,
        Err(e) => {
            log::warn!("{}: gold program does not translate: {e}", ex.example_id);
            return None;
        }
    };
    let predicted = GoldProgram::parse(text).ok().and_then(|g| g.to_clf().ok());
    Some(predicted.is_some_and(|p| exact_match(&p, &gold)))
}

pub fn score_exact(preds: &PredictionIndex, examples: &[QaExample]) -> Rate {
    let mut r = Rate::default();
    for ex in examples {
        if ex.gold_program.is_none() {
            log::warn!(
                "{}: no gold program, skipped for exact match",
                ex.example_id
            );
        }
        if let Some(hit) = exact_one(ex, preds.get(&ex.example_id)) {
            r.record(hit);
        }
    }
    r
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoherencyError {
    #[error("pair ({original}, {contrast}) has no prediction for {missing}")]
    UnpairedRecord {
        original: String,
        contrast: String,
        missing: String,
    },
    #[error("answer lists differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Fraction of positions where the two answer lists agree.
pub fn local_coherency<S: AsRef<str>>(
    original: &[S],
    contrast: &[S],
) -> Result<Rate, CoherencyError> {
    if original.len() != contrast.len() {
        return Err(CoherencyError::LengthMismatch(
            original.len(),
            contrast.len(),
        ));
    }
    let mut r = Rate::default();
    for (a, b) in original.iter().zip(contrast) {
        r.record(a.as_ref() == b.as_ref());
    }
    Ok(r)
}

/// Local coherency over linked pairs, with answers keyed by example id.
pub fn score_local_coherency(
    original: &BTreeMap<String, String>,
    contrast: &BTreeMap<String, String>,
    pairs: &[CoherencyPair],
) -> Result<Rate, CoherencyError> {
    let mut r = Rate::default();
    for p in pairs {
        let missing = |id: &String| CoherencyError::UnpairedRecord {
            original: p.original_id.clone(),
            contrast: p.contrast_id.clone(),
            missing: id.clone(),
        };
        let a = original
            .get(&p.original_id)
            .ok_or_else(|| missing(&p.original_id))?;
        let b = contrast
            .get(&p.contrast_id)
            .ok_or_else(|| missing(&p.contrast_id))?;
        r.record(a == b);
    }
    Ok(r)
}

/// Keeps the examples of each side whose gold answer occurs on both sides.
pub fn cross_benchmark_filter(
    a: &[QaExample],
    b: &[QaExample],
) -> (Vec<QaExample>, Vec<QaExample>) {
    let la: BTreeSet<&str> = a.iter().map(|e| e.gold_answer.as_str()).collect();
    let lb: BTreeSet<&str> = b.iter().map(|e| e.gold_answer.as_str()).collect();
    let shared: BTreeSet<&str> = la.intersection(&lb).copied().collect();
    let keep = |xs: &[QaExample]| {
        xs.iter()
            .filter(|e| shared.contains(e.gold_answer.as_str()))
            .cloned()
            .collect::<Vec<_>>()
    };
    (keep(a), keep(b))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot sample {k} of {available} contrast examples")]
pub struct KTooLarge {
    pub k: usize,
    pub available: usize,
}

/// A seeded sample of `k` contrast examples, in their input order.
pub fn few_shot_sample(
    contrast: &[QaExample],
    k: usize,
    seed: u64,
) -> Result<Vec<QaExample>, KTooLarge> {
    if k > contrast.len() {
        return Err(KTooLarge {
            k,
            available: contrast.len(),
        });
    }
    let mut rng = seed::stream(seed, "few-shot", k as u64);
    let mut picked = rand::seq::index::sample(&mut rng, contrast.len(), k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| contrast[i].clone()).collect())
}

/// Per-example results feeding a report. Absent fields are not scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExampleScore {
    /// Final predicted answer correct: the direct answer when given, else
    /// the program's answer on generated graphs.
    pub answer: Option<bool>,
    pub gen_exec: Option<ExecJudgement>,
    pub gt_exec: Option<ExecJudgement>,
    pub exact: Option<bool>,
}

/// One table row, keyed by split and template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricRow {
    pub split: String,
    pub template: String,
    pub n: u64,
    pub accuracy: Rate,
    pub gen_exec: Rate,
    pub gt_exec: Rate,
    pub exact: Rate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_coherency: Option<Rate>,
    /// From generated-graph runs when present, else ground-truth runs.
    pub missing_object_ratio: Rate,
}

impl MetricRow {
    fn empty(split: &str, template: &str) -> Self {
        MetricRow {
            split: split.into(),
            template: template.into(),
            n: 0,
            accuracy: Rate::default(),
            gen_exec: Rate::default(),
            gt_exec: Rate::default(),
            exact: Rate::default(),
            local_coherency: None,
            missing_object_ratio: Rate::default(),
        }
    }

    fn add(&mut self, s: &ExampleScore) {
        self.n += 1;
        if let Some(a) = s.answer {
            self.accuracy.record(a);
        }
        if let Some(j) = s.gen_exec {
            self.gen_exec.record(j.correct);
        }
        if let Some(j) = s.gt_exec {
            self.gt_exec.record(j.correct);
        }
        if let Some(e) = s.exact {
            self.exact.record(e);
        }
        if let Some(j) = s.gen_exec.or(s.gt_exec) {
            self.missing_object_ratio.record(j.fatal);
        }
    }
}

/// Label used for the whole-split row.
pub const ALL_TEMPLATES: &str = "all";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricReport {
    /// The `all` row first, then one row per template in name order. A
    /// single-template split has just its template row.
    pub rows: Vec<MetricRow>,
}

/// Aggregates per-example scores. `scores[i]` belongs to `examples[i]`.
/// Local coherency, when given, is attached to the `all` row only.
pub fn build_report(
    split: &str,
    examples: &[QaExample],
    scores: &[ExampleScore],
    coherency: Option<Rate>,
) -> MetricReport {
    let mut all = MetricRow::empty(split, ALL_TEMPLATES);
    let mut per: BTreeMap<&str, MetricRow> = BTreeMap::new();
    for (ex, s) in examples.iter().zip(scores) {
        all.add(s);
        per.entry(ex.template_or_default())
            .or_insert_with(|| MetricRow::empty(split, ex.template_or_default()))
            .add(s);
    }
    if per.len() == 1 {
        // The `all` row would repeat the only template row.
        let mut only = per.into_values().next().expect("one row");
        only.local_coherency = coherency;
        return MetricReport {
            rows: alloc::vec![only],
        };
    }
    all.local_coherency = coherency;
    let mut rows = Vec::with_capacity(per.len() + 1);
    rows.push(all);
    rows.extend(per.into_values());
    MetricReport { rows }
}

/// Combines gen/gt judgements, exact match and direct answers into
/// per-example scores.
pub fn example_scores(
    examples: &[QaExample],
    preds: &PredictionIndex,
    gen: Option<&[Option<ExecJudgement>]>,
    gt: Option<&[Option<ExecJudgement>]>,
) -> Vec<ExampleScore> {
    examples
        .iter()
        .enumerate()
        .map(|(i, ex)| {
            let pred = preds.get(&ex.example_id);
            let gen_exec = gen.and_then(|g| g[i]);
            let gt_exec = gt.and_then(|g| g[i]);
            let direct = pred
                .and_then(|p| p.answer.as_deref())
                .map(|a| crate::token::normalize_lossy(a) == ex.gold_answer);
            ExampleScore {
                answer: direct
                    .or(gen_exec.map(|j| j.correct))
                    .or(gt_exec.map(|j| j.correct)),
                gen_exec,
                gt_exec,
                exact: exact_one(ex, pred),
            }
        })
        .collect()
}
