use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::op::OperationTag;
use super::program::{check_shape, ClfProgram, ClfStep, ShapeError, StepPath};

/// Static type of a step's output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueType {
    ObjectSet,
    GroupedObjects,
    Integer,
    Boolean,
    String,
    TokenSet,
}

impl ValueType {
    pub fn is_answer(self) -> bool {
        matches!(
            self,
            ValueType::Integer | ValueType::Boolean | ValueType::String
        )
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueType::ObjectSet => "ObjectSet",
            ValueType::GroupedObjects => "GroupedObjects",
            ValueType::Integer => "Integer",
            ValueType::Boolean => "Boolean",
            ValueType::String => "String",
            ValueType::TokenSet => "TokenSet",
        })
    }
}

pub fn result_type(op: OperationTag) -> ValueType {
    use OperationTag::*;
    match op {
        Find | Scene | Filter => ValueType::ObjectSet,
        GroupByImages | KeepIfValuesCount => ValueType::GroupedObjects,
        Keys | UniqueImages => ValueType::TokenSet,
        Count => ValueType::Integer,
        Exists | Map | LogicNot | LogicOr | LogicAnd | Verify | Compare => ValueType::Boolean,
        Choose | Query => ValueType::String,
    }
}

/// Types accepted for each dependency of `op`.
pub fn accepted_dep_types(op: OperationTag) -> &'static [ValueType] {
    use OperationTag::*;
    use ValueType as T;
    match op {
        Find | Filter | Choose | Query | Verify | UniqueImages | GroupByImages => &[T::ObjectSet],
        Map | Keys | KeepIfValuesCount => &[T::GroupedObjects],
        LogicNot | LogicOr | LogicAnd => &[T::Boolean],
        Count | Exists => &[T::ObjectSet, T::TokenSet],
        Compare => &[T::Integer],
        Scene => &[],
    }
}

/// Number of operands the grammar checker fills with a default, and the
/// default's type.
pub fn missing_defaults(step: &ClfStep) -> Option<(usize, ValueType)> {
    use OperationTag::*;
    let deps = step.deps.len();
    let ints = step.ints().count();
    let (missing, ty) = match step.op {
        LogicNot => (1usize.saturating_sub(deps), ValueType::Boolean),
        LogicOr | LogicAnd => (2usize.saturating_sub(deps), ValueType::Boolean),
        KeepIfValuesCount => (1usize.saturating_sub(ints), ValueType::Integer),
        Compare => (2usize.saturating_sub(deps + ints), ValueType::Integer),
        _ => (0, ValueType::Integer),
    };
    (missing > 0).then_some((missing, ty))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FindingKind {
    TypeError,
    MissingArgument,
    IllegalQualifier,
    Arity,
    NonAnswerFinal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub path: StepPath,
    pub kind: FindingKind,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
    /// Inferred output type per top-level step, `None` where inference failed.
    pub types: Vec<Option<ValueType>>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Warning)
    }

    /// Executable when the only findings are defaultable missing arguments.
    pub fn is_executable(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn answer_type(&self) -> Option<ValueType> {
        self.types.last().copied().flatten()
    }
}

/// Static checks: qualifier legality, arity, the type table and the final
/// answer type. Missing Integer/Boolean operands are warnings because the
/// grammar checker defaults them at run time.
pub fn validate(p: &ClfProgram) -> ValidationReport {
    let mut report = ValidationReport::default();
    let types = check_steps(p.steps(), &StepPath::default(), &mut report.findings);
    if let Some(Some(t)) = types.last() {
        if !t.is_answer() {
            report.findings.push(Finding {
                path: StepPath::top(types.len() - 1),
                kind: FindingKind::NonAnswerFinal,
                severity: Severity::Error,
                message: alloc::format!("final step produces {t}, not an answer"),
            });
        }
    }
    report.types = types;
    report
}

fn check_steps(steps: &[ClfStep], at: &StepPath, out: &mut Vec<Finding>) -> Vec<Option<ValueType>> {
    let mut types: Vec<Option<ValueType>> = Vec::with_capacity(steps.len());
    for (i, step) in steps.iter().enumerate() {
        let path = at.child(i);
        let mut err = |kind, message: String| {
            out.push(Finding {
                path: path.clone(),
                kind,
                severity: Severity::Error,
                message,
            })
        };
        match check_shape(step) {
            Ok(()) => {}
            Err(e @ ShapeError::BadQualifier { .. }) => {
                err(FindingKind::IllegalQualifier, alloc::format!("{e}"))
            }
            Err(e) => err(FindingKind::Arity, alloc::format!("{e}")),
        }
        let accepted = accepted_dep_types(step.op);
        let mut ok = true;
        for (n, &d) in step.deps.iter().enumerate() {
            match types.get(d).copied().flatten() {
                Some(t) if accepted.contains(&t) => {}
                Some(t) => {
                    ok = false;
                    err(
                        FindingKind::TypeError,
                        alloc::format!(
                            "{} operand {n} (step {d}) is {t}, expected one of {accepted:?}",
                            step.op
                        ),
                    );
                }
                None => ok = false,
            }
        }
        if let Some(sub) = &step.sub {
            let sub_types = check_steps(sub, &path, out);
            match sub_types.last().copied().flatten() {
                Some(ValueType::Boolean) | None => {}
                Some(t) => {
                    ok = false;
                    out.push(Finding {
                        path: path.clone(),
                        kind: FindingKind::TypeError,
                        severity: Severity::Error,
                        message: alloc::format!("map subprogram yields {t}, expected Boolean"),
                    });
                }
            }
        }
        if let Some((n, ty)) = missing_defaults(step) {
            let default = if ty == ValueType::Boolean {
                "false"
            } else {
                "0"
            };
            out.push(Finding {
                path: path.clone(),
                kind: FindingKind::MissingArgument,
                severity: Severity::Warning,
                message: alloc::format!("{n} missing argument(s), defaults to {default}"),
            });
        }
        types.push(ok.then(|| result_type(step.op)));
    }
    types
}
