//! The work behind each subcommand, free of argument parsing and file IO.

use std::collections::BTreeMap;

use anyhow::{bail, Context};
use clfkit_core::clf::{serialize_program, validate, GoldProgram};
use clfkit_core::exec::{BatchItem, BatchOutcome, ExecOptions, GraphSource};
use clfkit_core::metrics::{
    build_report, example_scores, exec_items, few_shot_sample, judge_all, score_local_coherency,
    ExecJudgement, MetricReport, PredictionIndex, ProgramChoice,
};
use clfkit_core::testgen::{
    gen_contrast_set, gen_segment_combine, verify_segment_combine, CoherencyPair, ContrastError,
    ContrastRule, SegCombError,
};
use clfkit_core::{token, AliasDictionary, ClfProgram, GraphMap, QaExample};

use crate::io::{self, ExampleRecord, LoadedExample, OutcomeRecord, Provenance};
use crate::par::run_parallel;

/// Translates OLF to CLF. Accepts a single program (a JSON step list), a
/// JSON list of programs, or an examples file; returns the same shape.
/// Programs already in CLF pass through in canonical form.
pub fn translate_text(text: &str) -> anyhow::Result<String> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        let v: serde_json::Value = serde_json::from_str(text).context("input is not JSON")?;
        let list = v.as_array().expect("starts with [");
        let many = !list.is_empty() && list.iter().all(|x| x.is_array());
        let one = |v: &serde_json::Value| -> anyhow::Result<String> {
            let p = GoldProgram::parse(&v.to_string())?.to_clf()?;
            check_executable(&p)?;
            Ok(serialize_program(&p))
        };
        if many {
            let out: Vec<String> = list.iter().map(one).collect::<anyhow::Result<_>>()?;
            return Ok(format!("[{}]\n", out.join(",\n")));
        }
        return Ok(one(&v)? + "\n");
    }
    let loaded = io::parse_examples(std::path::Path::new("<input>"), text)?;
    let mut records = Vec::with_capacity(loaded.len());
    for LoadedExample {
        mut example,
        provenance,
    } in loaded
    {
        if let Some(r) = example.clf_program() {
            let p = r.with_context(|| format!("example {}", example.example_id))?;
            check_executable(&p).with_context(|| format!("example {}", example.example_id))?;
            example.gold_program = Some(GoldProgram::Clf(p));
        }
        records.push(ExampleRecord::from_example(&example, provenance));
    }
    Ok(io::to_jsonl(records))
}

fn check_executable(p: &ClfProgram) -> anyhow::Result<()> {
    let r = validate(p);
    if let Some(f) = r.errors().next() {
        bail!(
            "translated program fails validation at step {}: {}",
            f.path,
            f.message
        );
    }
    Ok(())
}

/// Executes gold programs, or predicted ones when `preds` is given.
pub fn execute_examples(
    examples: &[QaExample],
    preds: Option<&PredictionIndex>,
    graphs: &GraphMap,
    source: GraphSource,
    dict: Option<&AliasDictionary>,
    trace: bool,
) -> Vec<OutcomeRecord> {
    let items: Vec<Option<BatchItem>> = match preds {
        Some(p) => exec_items(examples, p, ProgramChoice::Predicted),
        None => examples.iter().map(|e| Some(BatchItem::gold(e))).collect(),
    };
    run_parallel(&items, graphs, source, dict, ExecOptions { trace })
        .iter()
        .flatten()
        .map(|o| OutcomeRecord::from_outcome(o, trace))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SegCombStats {
    pub cases: usize,
    pub verified: usize,
    pub unsupported: usize,
    pub failed: usize,
    pub out_of_range: usize,
}

/// Builds the segment-combine split: every derived query of every supported
/// example, with provenance. Cases are verified as they are built.
pub fn segcomb_split(
    examples: &[QaExample],
    pool: &GraphMap,
    seed: u64,
    dict: Option<&AliasDictionary>,
) -> (String, SegCombStats) {
    use rayon::prelude::*;
    let results: Vec<_> = examples
        .par_iter()
        .map(|ex| {
            gen_segment_combine(ex, pool, seed, dict)
                .map(|c| (verify_segment_combine(&c, pool, dict), c))
        })
        .collect();
    let mut stats = SegCombStats::default();
    let mut out = String::new();
    for (ex, r) in examples.iter().zip(results) {
        match r {
            Err(SegCombError::UnsupportedTemplate(_)) => stats.unsupported += 1,
            Err(e) => {
                log::warn!("{}: {e}", ex.example_id);
                stats.failed += 1;
            }
            Ok((ok, case)) => {
                stats.cases += 1;
                if ok {
                    stats.verified += 1;
                } else {
                    log::warn!(
                        "{}: fused answer disagrees with the gold answer",
                        ex.example_id
                    );
                }
                if case.out_of_range {
                    log::warn!("{}: fused count is outside the label range", ex.example_id);
                    stats.out_of_range += 1;
                }
                out.push_str(&io::examples_to_jsonl(case.derived.iter().enumerate().map(
                    |(i, d)| {
                        let p = Provenance {
                            source_id: ex.example_id.clone(),
                            seed: Some(seed),
                            fusion: Some(case.fusion.as_str().into()),
                            position: Some(i),
                            ..Provenance::default()
                        };
                        (d, Some(p))
                    },
                )));
            }
        }
    }
    (out, stats)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ContrastStats {
    pub sources: usize,
    pub generated: usize,
    pub skipped: usize,
}

pub struct ContrastSplit {
    pub examples: String,
    pub pairs: String,
    pub stats: ContrastStats,
}

/// Builds the contrast split and its coherency pairs. Examples without a
/// matching rule or phrase are skipped; a label conflict or an altering rule
/// on a counting question aborts.
pub fn contrast_split(
    examples: &[QaExample],
    rules: &[ContrastRule],
    graphs: &GraphMap,
    dict: Option<&AliasDictionary>,
) -> anyhow::Result<ContrastSplit> {
    let mut ex_out = String::new();
    let mut pairs = Vec::new();
    let mut stats = ContrastStats::default();
    for ex in examples {
        match gen_contrast_set(ex, rules, graphs, dict) {
            Ok(set) => {
                stats.sources += 1;
                stats.generated += set.len();
                for c in set {
                    ex_out.push_str(&io::examples_to_jsonl([(
                        &c.example,
                        Some(Provenance {
                            source_id: c.source_id.clone(),
                            rule: Some(c.rule.clone()),
                            ..Provenance::default()
                        }),
                    )]));
                    pairs.push(CoherencyPair {
                        original_id: c.source_id,
                        contrast_id: c.example.example_id,
                        rule: Some(c.rule),
                    });
                }
            }
            Err(ContrastError::NoMatchingRule(_) | ContrastError::PhraseNotFound(_)) => {
                stats.skipped += 1
            }
            Err(
                e @ (ContrastError::LabelTransformConflict { .. }
                | ContrastError::ForbiddenAlteringOnCounting(_)),
            ) => return Err(anyhow::Error::new(e).context(format!("example {}", ex.example_id))),
            Err(e) => {
                log::warn!("{}: {e}", ex.example_id);
                stats.skipped += 1;
            }
        }
    }
    Ok(ContrastSplit {
        examples: ex_out,
        pairs: io::to_jsonl(pairs),
        stats,
    })
}

pub struct EvalInput<'a> {
    pub split: &'a str,
    pub examples: &'a [QaExample],
    pub preds: &'a PredictionIndex,
    pub gold_graphs: Option<&'a GraphMap>,
    pub generated_graphs: Option<&'a GraphMap>,
    pub dict: Option<&'a AliasDictionary>,
    pub choice: ProgramChoice,
    pub pairs: Option<&'a [CoherencyPair]>,
}

/// Outcomes and their judgements, per example.
type SourceRun = (Vec<Option<BatchOutcome>>, Vec<Option<ExecJudgement>>);

fn run_source(
    input: &EvalInput,
    graphs: Option<&GraphMap>,
    source: GraphSource,
) -> Option<SourceRun> {
    let graphs = graphs?;
    let items = exec_items(input.examples, input.preds, input.choice);
    let outcomes = run_parallel(&items, graphs, source, input.dict, ExecOptions::default());
    let judged = judge_all(input.examples, &outcomes);
    Some((outcomes, judged))
}

/// Scores a split. Local coherency, when pairs are given, compares final
/// predicted answers; an unanswered example agrees with nothing.
pub fn evaluate(input: &EvalInput) -> anyhow::Result<MetricReport> {
    let gen = run_source(input, input.generated_graphs, GraphSource::Generated);
    let gt = run_source(input, input.gold_graphs, GraphSource::Gold);
    let scores = example_scores(
        input.examples,
        input.preds,
        gen.as_ref().map(|g| g.1.as_slice()),
        gt.as_ref().map(|g| g.1.as_slice()),
    );
    let coherency = match input.pairs {
        None => None,
        Some(pairs) => {
            let answers =
                final_answers(input, gen.as_ref().map(|g| &g.0), gt.as_ref().map(|g| &g.0));
            Some(score_local_coherency(&answers, &answers, pairs)?)
        }
    };
    Ok(build_report(
        input.split,
        input.examples,
        &scores,
        coherency,
    ))
}

fn final_answers(
    input: &EvalInput,
    gen: Option<&Vec<Option<BatchOutcome>>>,
    gt: Option<&Vec<Option<BatchOutcome>>>,
) -> BTreeMap<String, String> {
    let exec_answer = |o: Option<&Vec<Option<BatchOutcome>>>, i: usize| {
        o.and_then(|v| v[i].as_ref())
            .and_then(|o| o.result.as_ref().ok())
            .and_then(|r| r.answer.clone())
    };
    input
        .examples
        .iter()
        .enumerate()
        .map(|(i, ex)| {
            let direct = input
                .preds
                .get(&ex.example_id)
                .and_then(|p| p.answer.as_deref())
                .map(token::normalize_lossy);
            let a = direct
                .or_else(|| exec_answer(gen, i))
                .or_else(|| exec_answer(gt, i))
                // Control characters never occur in normalized answers.
                .unwrap_or_else(|| format!("\u{0}{}", ex.example_id));
            (ex.example_id.clone(), a)
        })
        .collect()
}

/// Appends `k` seeded contrast examples to the training file text. The
/// training lines are copied byte for byte.
pub fn few_shot_text(
    train_text: &str,
    contrast: &[LoadedExample],
    k: usize,
    seed: u64,
) -> anyhow::Result<String> {
    let pool: Vec<QaExample> = contrast.iter().map(|c| c.example.clone()).collect();
    let picked = few_shot_sample(&pool, k, seed)?;
    if picked.is_empty() {
        return Ok(train_text.to_string());
    }
    let by_id: BTreeMap<&str, &LoadedExample> = contrast
        .iter()
        .map(|c| (c.example.example_id.as_str(), c))
        .collect();
    let mut out = train_text.to_string();
    if !out.is_empty() && !out.ends_with('\n') {
        out.push('\n');
    }
    out.push_str(&io::examples_to_jsonl(picked.iter().map(|ex| {
        let prior = by_id[ex.example_id.as_str()].provenance.clone();
        let p = Provenance {
            source_id: prior
                .as_ref()
                .map_or_else(|| ex.example_id.clone(), |p| p.source_id.clone()),
            rule: prior.and_then(|p| p.rule),
            seed: Some(seed),
            augment: Some("few_shot".into()),
            ..Provenance::default()
        };
        (ex, Some(p))
    })));
    Ok(out)
}
