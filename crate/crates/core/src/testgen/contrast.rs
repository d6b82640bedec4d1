use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::templates;
use crate::clf::{ClfProgram, ClfStep, GoldProgram, OperationTag, Qualifier, TranslateError};
use crate::exec::{execute_with, ExecOptions};
use crate::scene::{AliasDictionary, GraphMap, ImageSet, QaExample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Meaning {
    Preserving,
    Altering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelTransform {
    Identity,
    Flip,
    ReExecute,
}

/// Program edit paired with a question substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ProgramRewrite {
    Identity,
    /// Changes the qualifier of the last top-level `compare` carrying `from`.
    CompareQualifier {
        from: Qualifier,
        to: Qualifier,
    },
    /// Appends `logic_not` over the final Boolean.
    WrapLogicNot,
    /// Drops a final `logic_not` whose input is the step before it.
    StripLogicNot,
    /// `logic_not(map(or, s, group_by_images(S)))` with `s` ending in
    /// `exists(x)` becomes `compare(geq, count(x[scene := S]), 1)`.
    NoToAtLeastOne,
}

impl Serialize for Qualifier {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Qualifier {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse()
            .map_err(|_| serde::de::Error::custom(alloc::format!("unknown qualifier {s:?}")))
    }
}

/// A quantifier phrase substitution and how it changes the label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContrastRule {
    pub template_id: String,
    pub source_phrase: String,
    pub replacement_phrase: String,
    pub meaning: Meaning,
    pub label_transform: LabelTransform,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program_rewrite: Option<ProgramRewrite>,
}

impl ContrastRule {
    pub fn new(
        template_id: &str,
        source: &str,
        replacement: &str,
        meaning: Meaning,
        label_transform: LabelTransform,
        rewrite: ProgramRewrite,
    ) -> Self {
        ContrastRule {
            template_id: template_id.into(),
            source_phrase: source.into(),
            replacement_phrase: replacement.into(),
            meaning,
            label_transform,
            program_rewrite: Some(rewrite),
        }
    }

    /// Short identifier, e.g. `at_least->no_less_than`.
    pub fn slug(&self) -> String {
        let s = |p: &str| p.trim().to_ascii_lowercase().replace(' ', "_");
        alloc::format!(
            "{}->{}",
            s(&self.source_phrase),
            s(&self.replacement_phrase)
        )
    }

    pub fn check(&self) -> Result<(), ContrastError> {
        if self.meaning == Meaning::Preserving && self.label_transform != LabelTransform::Identity {
            return Err(ContrastError::InvalidRule {
                rule: self.slug(),
                detail: "meaning-preserving rules keep the label".into(),
            });
        }
        if self.source_phrase.trim().is_empty() {
            return Err(ContrastError::InvalidRule {
                rule: self.slug(),
                detail: "empty source phrase".into(),
            });
        }
        Ok(())
    }
}

/// The quantifier substitutions shipped by default.
pub fn builtin_rules() -> Vec<ContrastRule> {
    use LabelTransform::*;
    use Meaning::*;
    use ProgramRewrite as R;
    let lt = R::CompareQualifier {
        from: Qualifier::Geq,
        to: Qualifier::Lt,
    };
    alloc::vec![
        ContrastRule::new(
            templates::COUNT_GROUP_BY,
            "at least",
            "no less than",
            Preserving,
            Identity,
            R::Identity
        ),
        ContrastRule::new(
            templates::VERIFY_COUNT,
            "at least",
            "no less than",
            Preserving,
            Identity,
            R::Identity
        ),
        ContrastRule::new(
            templates::VERIFY_COUNT,
            "at least",
            "less than",
            Altering,
            Flip,
            lt
        ),
        ContrastRule::new(
            templates::VERIFY_COUNT_GROUP_BY,
            "at least",
            "no less than",
            Preserving,
            Identity,
            R::Identity
        ),
        ContrastRule::new(
            templates::VERIFY_COUNT_GROUP_BY,
            "at least",
            "less than",
            Altering,
            Flip,
            lt
        ),
        ContrastRule::new(
            templates::QUANTIFIER,
            "no",
            "some",
            Altering,
            Flip,
            R::StripLogicNot
        ),
        ContrastRule::new(
            templates::QUANTIFIER,
            "some",
            "no",
            Altering,
            Flip,
            R::WrapLogicNot
        ),
        ContrastRule::new(
            templates::QUANTIFIER,
            "no",
            "at least one",
            Altering,
            Flip,
            R::NoToAtLeastOne
        ),
        ContrastRule::new(
            templates::QUANTIFIER,
            "some",
            "none of the",
            Altering,
            Flip,
            R::WrapLogicNot
        ),
        ContrastRule::new(
            templates::QUANTIFIER,
            "all",
            "either none or only some",
            Altering,
            Flip,
            R::WrapLogicNot
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContrastError {
    #[error("no rule for template {0:?}")]
    NoMatchingRule(Option<String>),
    #[error("question contains none of the rule phrases: {0:?}")]
    PhraseNotFound(String),
    #[error("rule {rule}: re-executed label {reexecuted:?} disagrees with transformed label {expected:?}")]
    LabelTransformConflict {
        rule: String,
        expected: String,
        reexecuted: String,
    },
    #[error("rule {0}: meaning-altering substitution on a counting question")]
    ForbiddenAlteringOnCounting(String),
    #[error("rule {rule}: {detail}")]
    InvalidRule { rule: String, detail: String },
    #[error("rule {rule}: program rewrite does not apply: {detail}")]
    RewriteNotApplicable { rule: String, detail: String },
    #[error("label {0:?} cannot be flipped")]
    NonBinaryLabel(String),
    #[error("example has no gold program")]
    MissingGoldProgram,
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error("gold execution failed: {0}")]
    Execution(String),
}

/// A generated contrast example with its provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContrastExample {
    pub example: QaExample,
    pub source_id: String,
    pub rule: String,
}

fn word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

/// Case-insensitive whole-phrase substitution of the first occurrence. A
/// capitalized match yields a capitalized replacement.
pub fn replace_phrase(question: &str, source: &str, replacement: &str) -> Option<String> {
    let hay = question.to_ascii_lowercase();
    let needle = source.trim().to_ascii_lowercase();
    if needle.is_empty() {
        return None;
    }
    let mut from = 0;
    while let Some(off) = hay[from..].find(&needle) {
        let start = from + off;
        let end = start + needle.len();
        let before_ok = hay[..start]
            .chars()
            .next_back()
            .is_none_or(|c| !word_char(c));
        let after_ok = hay[end..].chars().next().is_none_or(|c| !word_char(c));
        if before_ok && after_ok {
            let capital = question[start..]
                .chars()
                .next()
                .is_some_and(char::is_uppercase);
            let mut rep = String::from(replacement.trim());
            if capital {
                if let Some(first) = rep.chars().next() {
                    let upper: String = first.to_uppercase().collect();
                    rep.replace_range(..first.len_utf8(), &upper);
                }
            }
            let mut out = String::with_capacity(question.len() + rep.len());
            out.push_str(&question[..start]);
            out.push_str(&rep);
            out.push_str(&question[end..]);
            return Some(out);
        }
        from = start + needle.chars().next().map_or(1, char::len_utf8);
    }
    None
}

fn is_counting(ex: &QaExample, program: &ClfProgram) -> bool {
    ex.template_id.as_deref() == Some(templates::COUNT_GROUP_BY)
        || ex.gold_answer.parse::<i64>().is_ok()
        || program
            .steps()
            .last()
            .is_some_and(|s| s.op == OperationTag::Count)
}

fn flip(label: &str) -> Result<String, ContrastError> {
    match label {
        "yes" => Ok("no".into()),
        "no" => Ok("yes".into()),
        other => Err(ContrastError::NonBinaryLabel(other.into())),
    }
}

/// Applies a program rewrite.
pub fn apply_rewrite(p: &ClfProgram, rewrite: ProgramRewrite) -> Result<ClfProgram, String> {
    let mut steps = p.clone().into_steps();
    match rewrite {
        ProgramRewrite::Identity => {}
        ProgramRewrite::CompareQualifier { from, to } => {
            let step = steps
                .iter_mut()
                .rev()
                .find(|s| s.op == OperationTag::Compare && s.qualifier == Some(from))
                .ok_or_else(|| alloc::format!("no compare({from}) step"))?;
            step.qualifier = Some(to);
        }
        ProgramRewrite::WrapLogicNot => {
            let last = steps.len() - 1;
            steps.push(ClfStep::new(OperationTag::LogicNot).dep(last));
        }
        ProgramRewrite::StripLogicNot => {
            let n = steps.len();
            match steps.last() {
                Some(s) if s.op == OperationTag::LogicNot && n >= 2 && s.deps == [n - 2] => {
                    steps.pop();
                }
                _ => return Err("program does not end in logic_not of the preceding step".into()),
            }
        }
        ProgramRewrite::NoToAtLeastOne => steps = no_to_at_least_one(steps)?,
    }
    ClfProgram::new(steps).map_err(|e| alloc::format!("{e}"))
}

fn no_to_at_least_one(mut steps: Vec<ClfStep>) -> Result<Vec<ClfStep>, String> {
    let n = steps.len();
    let shape_err = || {
        String::from("expected logic_not(map(or, s, group_by_images(S))) with s ending in exists")
    };
    if n < 3 {
        return Err(shape_err());
    }
    let not = &steps[n - 1];
    let map = &steps[n - 2];
    if not.op != OperationTag::LogicNot
        || not.deps != [n - 2]
        || map.op != OperationTag::Map
        || map.qualifier != Some(Qualifier::Or)
    {
        return Err(shape_err());
    }
    let grouped = *map.deps.first().ok_or_else(shape_err)?;
    let group_step = &steps[grouped];
    if group_step.op != OperationTag::GroupByImages {
        return Err(shape_err());
    }
    let source_set = *group_step.deps.first().ok_or_else(shape_err)?;
    let sub = map.sub.clone().ok_or_else(shape_err)?;
    let last = sub.last().ok_or_else(shape_err)?;
    if last.op != OperationTag::Exists {
        return Err(shape_err());
    }
    steps.truncate(n - 2);

    // Inline the subprogram with its bound input replaced by S.
    let mut remap: Vec<usize> = Vec::with_capacity(sub.len());
    for (i, s) in sub.iter().enumerate() {
        if s.op == OperationTag::Scene {
            remap.push(source_set);
            continue;
        }
        let mut s = s.clone();
        s.deps = s.deps.iter().map(|&d| remap[d]).collect();
        if i == sub.len() - 1 {
            s.op = OperationTag::Count;
        }
        steps.push(s);
        remap.push(steps.len() - 1);
    }
    let count = steps.len() - 1;
    steps.push(
        ClfStep::qualified(OperationTag::Compare, Qualifier::Geq)
            .dep(count)
            .arg(1u32),
    );
    Ok(steps)
}

fn gold_answer(
    p: &ClfProgram,
    ex: &QaExample,
    graphs: &GraphMap,
    dict: Option<&AliasDictionary>,
) -> Result<String, ContrastError> {
    let images = ImageSet::resolve(&ex.image_ids, graphs)
        .map_err(|e| ContrastError::Execution(alloc::format!("{e}")))?;
    let out = execute_with(p, &images, dict, ExecOptions::default())
        .map_err(|e| ContrastError::Execution(alloc::format!("{e}")))?;
    out.answer
        .ok_or_else(|| ContrastError::Execution("object not found".into()))
}

/// Applies every rule for `ex`'s template whose source phrase occurs in the
/// question. Labels follow each rule's transform; when a rule rewrites the
/// program, the rewritten program is re-executed on `graphs` and must agree.
pub fn gen_contrast_set(
    ex: &QaExample,
    rules: &[ContrastRule],
    graphs: &GraphMap,
    dict: Option<&AliasDictionary>,
) -> Result<Vec<ContrastExample>, ContrastError> {
    let matching: Vec<&ContrastRule> = rules
        .iter()
        .filter(|r| ex.template_id.as_deref() == Some(r.template_id.as_str()))
        .collect();
    if matching.is_empty() {
        return Err(ContrastError::NoMatchingRule(ex.template_id.clone()));
    }
    let program = ex
        .clf_program()
        .ok_or(ContrastError::MissingGoldProgram)??;
    let counting = is_counting(ex, &program);
    let mut out = Vec::new();
    for rule in matching {
        rule.check()?;
        let Some(question) =
            replace_phrase(&ex.question, &rule.source_phrase, &rule.replacement_phrase)
        else {
            continue;
        };
        if rule.meaning == Meaning::Altering && counting {
            return Err(ContrastError::ForbiddenAlteringOnCounting(rule.slug()));
        }
        let rewritten = match rule.program_rewrite {
            Some(rw) => apply_rewrite(&program, rw).map_err(|detail| {
                ContrastError::RewriteNotApplicable {
                    rule: rule.slug(),
                    detail,
                }
            })?,
            None => program.clone(),
        };
        let label = match rule.label_transform {
            LabelTransform::Identity => ex.gold_answer.clone(),
            LabelTransform::Flip => flip(&ex.gold_answer)?,
            LabelTransform::ReExecute => gold_answer(&rewritten, ex, graphs, dict)?,
        };
        if rule.program_rewrite.is_some() && rule.label_transform != LabelTransform::ReExecute {
            let reexecuted = gold_answer(&rewritten, ex, graphs, dict)?;
            if reexecuted != label {
                return Err(ContrastError::LabelTransformConflict {
                    rule: rule.slug(),
                    expected: label,
                    reexecuted,
                });
            }
        }
        let mut example = QaExample::new(
            alloc::format!("{}/{}", ex.example_id, rule.slug()),
            question,
            ex.image_ids.clone(),
            &label,
        )
        .with_program(GoldProgram::Clf(rewritten));
        example.template_id = ex.template_id.clone();
        out.push(ContrastExample {
            example,
            source_id: ex.example_id.clone(),
            rule: rule.slug(),
        });
    }
    if out.is_empty() {
        return Err(ContrastError::PhraseNotFound(ex.question.clone()));
    }
    Ok(out)
}

/// Links an original example with one of its contrast examples for local
/// coherency scoring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoherencyPair {
    pub original_id: String,
    pub contrast_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{original_id} and {contrast_id} do not share an image set")]
pub struct PairError {
    pub original_id: String,
    pub contrast_id: String,
}

pub fn pair_for_coherency(
    original: &QaExample,
    contrast: &QaExample,
) -> Result<CoherencyPair, PairError> {
    if original.image_ids != contrast.image_ids {
        return Err(PairError {
            original_id: original.example_id.clone(),
            contrast_id: contrast.example_id.clone(),
        });
    }
    Ok(CoherencyPair {
        original_id: original.example_id.clone(),
        contrast_id: contrast.example_id.clone(),
        rule: None,
    })
}
