use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use super::fusion::{fuse_answers, FusionFn};
use crate::clf::{ClfProgram, GoldProgram, TranslateError};
use crate::exec::{execute_with, ExecOptions};
use crate::scene::{AliasDictionary, GraphMap, ImageSet, ImageSetError, QaExample, SceneGraph};
use crate::seed;

/// Draws allowed per distractor slot before giving up.
pub const DISTRACTOR_RETRIES: u32 = 100;

/// Largest fused count that is still a regular counting label.
pub const MAX_COUNT_LABEL: u64 = 5;

/// A multi-image query split into one query per original image, each padded
/// with unrelated distractor images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentCombineCase {
    pub source: QaExample,
    /// The i-th query keeps original image i at position i.
    pub derived: Vec<QaExample>,
    pub fusion: FusionFn,
    pub seed: u64,
    /// Candidate draws spent per derived query.
    pub attempts: Vec<u32>,
    /// SUM cases whose fused answer exceeds the label range.
    pub out_of_range: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegCombError {
    #[error("template {0:?} has no fusion function")]
    UnsupportedTemplate(Option<String>),
    #[error("example has no gold program")]
    MissingGoldProgram,
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Images(#[from] ImageSetError),
    #[error("example {example_id}, query {position}: no unrelated distractor within {DISTRACTOR_RETRIES} draws")]
    PoolExhausted { example_id: String, position: usize },
    #[error("example {example_id}, query {position}: gold program does not execute: {detail}")]
    SourceNotExecutable {
        example_id: String,
        position: usize,
        detail: String,
    },
}

fn run(
    program: &ClfProgram,
    images: Vec<Arc<SceneGraph>>,
    dict: Option<&AliasDictionary>,
) -> Result<String, String> {
    let set = ImageSet::new(images).map_err(|e| alloc::format!("{e}"))?;
    let out = execute_with(program, &set, dict, ExecOptions::default())
        .map_err(|e| alloc::format!("{e}"))?;
    out.answer.ok_or_else(|| "object not found".into())
}

/// Builds the segment-combine case for `ex`, sampling distractors from
/// `pool` (which must also hold the example's own images).
///
/// Every accepted distractor is checked by running the gold program on the
/// distractors chosen so far: it must yield the fusion's neutral answer.
/// Sampling for query `i` draws from a stream keyed by
/// `(seed, example_id, i)`.
pub fn gen_segment_combine(
    ex: &QaExample,
    pool: &GraphMap,
    seed: u64,
    dict: Option<&AliasDictionary>,
) -> Result<SegmentCombineCase, SegCombError> {
    let fusion = ex
        .template_id
        .as_deref()
        .and_then(FusionFn::for_template)
        .ok_or_else(|| SegCombError::UnsupportedTemplate(ex.template_id.clone()))?;
    let program = ex.clf_program().ok_or(SegCombError::MissingGoldProgram)??;
    let originals = ImageSet::resolve(&ex.image_ids, pool)?;
    let k = originals.len();
    let candidates: Vec<&Arc<SceneGraph>> = pool
        .values()
        .filter(|g| !ex.image_ids.iter().any(|id| id == g.image_id()))
        .collect();

    let mut derived = Vec::with_capacity(k);
    let mut attempts = Vec::with_capacity(k);
    for (position, original) in originals.images().iter().enumerate() {
        let mut rng = seed::stream(seed, &ex.example_id, position as u64);
        let mut picks: Vec<Arc<SceneGraph>> = Vec::with_capacity(k - 1);
        let mut draws = 0u32;
        for _slot in 1..k {
            let mut tries = 0u32;
            loop {
                if tries == DISTRACTOR_RETRIES || candidates.is_empty() {
                    return Err(SegCombError::PoolExhausted {
                        example_id: ex.example_id.clone(),
                        position,
                    });
                }
                tries += 1;
                let c = candidates[rng.random_range(0..candidates.len())];
                if picks.iter().any(|p| p.image_id() == c.image_id()) {
                    continue;
                }
                let mut trial = picks.clone();
                trial.push(Arc::clone(c));
                if run(&program, trial, dict).as_deref() == Ok(fusion.neutral()) {
                    picks.push(Arc::clone(c));
                    break;
                }
            }
            draws += tries;
        }
        attempts.push(draws);

        let mut images = picks;
        images.insert(position, Arc::clone(original));
        let image_ids: Vec<String> = images.iter().map(|g| g.image_id().into()).collect();
        let answer =
            run(&program, images, dict).map_err(|detail| SegCombError::SourceNotExecutable {
                example_id: ex.example_id.clone(),
                position,
                detail,
            })?;
        let mut d = QaExample::new(
            alloc::format!("{}/seg{position}", ex.example_id),
            ex.question.clone(),
            image_ids,
            &answer,
        )
        .with_program(GoldProgram::Clf(program.clone()));
        d.template_id = ex.template_id.clone();
        derived.push(d);
    }

    let out_of_range = fusion == FusionFn::Sum
        && derived
            .iter()
            .map(|d| d.gold_answer.parse::<u64>().unwrap_or(0))
            .sum::<u64>()
            > MAX_COUNT_LABEL;
    if out_of_range {
        log::warn!("{}: fused count exceeds {MAX_COUNT_LABEL}", ex.example_id);
    }
    Ok(SegmentCombineCase {
        source: ex.clone(),
        derived,
        fusion,
        seed,
        attempts,
        out_of_range,
    })
}

/// Executes the source's gold program on every derived image set (resolved
/// in `graphs`), fuses the answers and compares with the source label.
/// Any execution failure counts as a failed verification.
pub fn verify_segment_combine(
    case: &SegmentCombineCase,
    graphs: &GraphMap,
    dict: Option<&AliasDictionary>,
) -> bool {
    let Some(Ok(program)) = case.source.clf_program() else {
        return false;
    };
    let mut answers = Vec::with_capacity(case.derived.len());
    for d in &case.derived {
        let Ok(set) = ImageSet::resolve(&d.image_ids, graphs) else {
            return false;
        };
        match run(&program, set.images().to_vec(), dict) {
            Ok(a) => answers.push(a),
            Err(_) => return false,
        }
    }
    fuse_answers(&answers, case.fusion).is_ok_and(|fused| fused == case.source.gold_answer)
}
