//! JSON step-list text form. Canonical output fixes key order
//! (`op`, `qualifier`, `args`, `deps`, `sub`), omits absent optional keys,
//! and has no whitespace, so string equality is structural equality.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::op::{OperationTag, Qualifier};
use super::program::{check_shape, Arg, ClfProgram, ClfStep, ShapeError, StepPath, StructureError};
use crate::token;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed program text: {0}")]
    Syntax(String),
    #[error("step {path}: unknown operation {op:?}")]
    UnknownOperation { path: StepPath, op: String },
    #[error("step {path}: {op} does not accept qualifier {qualifier:?}")]
    BadQualifier {
        path: StepPath,
        op: String,
        qualifier: Option<String>,
    },
    #[error("step {path}: {detail}")]
    Arity { path: StepPath, detail: String },
    #[error("step {path}: dependency {dep} does not precede it")]
    ForwardDependency { path: StepPath, dep: i64 },
    #[error("program has no steps")]
    EmptyProgram,
    #[error("step {path}: integer literal {value} outside 0..=20")]
    LiteralOutOfRange { path: StepPath, value: i64 },
    #[error("step {path}: empty token")]
    BadToken { path: StepPath },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawStep {
    pub op: String,
    #[serde(default)]
    pub qualifier: Option<String>,
    #[serde(default)]
    pub args: Vec<RawArg>,
    #[serde(default)]
    pub deps: Vec<i64>,
    #[serde(default)]
    pub sub: Option<Vec<RawStep>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub(crate) enum RawArg {
    Int(i64),
    Token(String),
}

pub(crate) fn parse_raw(text: &str) -> Result<Vec<RawStep>, ParseError> {
    serde_json::from_str(text).map_err(|e| ParseError::Syntax(alloc::format!("{e}")))
}

pub(crate) fn convert_args(args: &[RawArg], path: &StepPath) -> Result<Vec<Arg>, ParseError> {
    args.iter()
        .map(|a| match a {
            RawArg::Int(n) => {
                u32::try_from(*n)
                    .map(Arg::Int)
                    .map_err(|_| ParseError::LiteralOutOfRange {
                        path: path.clone(),
                        value: *n,
                    })
            }
            RawArg::Token(t) => token::normalize(t)
                .map(Arg::Token)
                .map_err(|_| ParseError::BadToken { path: path.clone() }),
        })
        .collect()
}

pub(crate) fn convert_deps(
    deps: &[i64],
    index: usize,
    path: &StepPath,
) -> Result<Vec<usize>, ParseError> {
    deps.iter()
        .map(|&d| match usize::try_from(d) {
            Ok(u) if u < index => Ok(u),
            _ => Err(ParseError::ForwardDependency {
                path: path.clone(),
                dep: d,
            }),
        })
        .collect()
}

fn convert_steps(raw: &[RawStep], at: &StepPath) -> Result<Vec<ClfStep>, ParseError> {
    if raw.is_empty() && at.0.is_empty() {
        return Err(ParseError::EmptyProgram);
    }
    raw.iter()
        .enumerate()
        .map(|(i, r)| {
            let path = at.child(i);
            let op_name = token::normalize_lossy(&r.op);
            let op: OperationTag = op_name.parse().map_err(|_| ParseError::UnknownOperation {
                path: path.clone(),
                op: r.op.clone(),
            })?;
            let qualifier =
                match &r.qualifier {
                    None => None,
                    Some(q) => Some(token::normalize_lossy(q).parse::<Qualifier>().map_err(
                        |_| ParseError::BadQualifier {
                            path: path.clone(),
                            op: op_name.clone(),
                            qualifier: Some(q.clone()),
                        },
                    )?),
                };
            let sub = match &r.sub {
                Some(s) if s.is_empty() => {
                    return Err(ParseError::Arity {
                        path,
                        detail: "map subprogram is empty".into(),
                    })
                }
                Some(s) => Some(convert_steps(s, &path)?),
                None => None,
            };
            let step = ClfStep {
                op,
                qualifier,
                args: convert_args(&r.args, &path)?,
                deps: convert_deps(&r.deps, i, &path)?,
                sub,
            };
            check_shape(&step).map_err(|e| shape_to_parse(e, &path, r))?;
            Ok(step)
        })
        .collect()
}

fn shape_to_parse(e: ShapeError, path: &StepPath, raw: &RawStep) -> ParseError {
    match e {
        ShapeError::BadQualifier { op, .. } => ParseError::BadQualifier {
            path: path.clone(),
            op: op.as_str().into(),
            qualifier: raw.qualifier.clone(),
        },
        ShapeError::Arity { .. } => ParseError::Arity {
            path: path.clone(),
            detail: alloc::format!("{e}"),
        },
        ShapeError::LiteralOutOfRange(n) => ParseError::LiteralOutOfRange {
            path: path.clone(),
            value: n.into(),
        },
    }
}

/// Parses a CLF step list. Tokens are normalized to lowercase.
pub fn parse_program(text: &str) -> Result<ClfProgram, ParseError> {
    let raw = parse_raw(text)?;
    let steps = convert_steps(&raw, &StepPath::default())?;
    ClfProgram::new(steps).map_err(|e| match e {
        StructureError::EmptyProgram => ParseError::EmptyProgram,
        StructureError::ForwardDependency { path, dep } => ParseError::ForwardDependency {
            path,
            dep: dep as i64,
        },
        StructureError::EmptySubprogram { path } => ParseError::Arity {
            path,
            detail: "map subprogram is empty".into(),
        },
    })
}

#[derive(Serialize)]
struct CanonStep<'a> {
    op: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    qualifier: Option<&'a str>,
    args: Vec<CanonArg<'a>>,
    deps: &'a [usize],
    #[serde(skip_serializing_if = "Option::is_none")]
    sub: Option<Vec<CanonStep<'a>>>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum CanonArg<'a> {
    Int(u32),
    Token(&'a str),
}

fn canon(steps: &[ClfStep]) -> Vec<CanonStep<'_>> {
    steps
        .iter()
        .map(|s| CanonStep {
            op: s.op.as_str(),
            qualifier: s.qualifier.map(Qualifier::as_str),
            args: s
                .args
                .iter()
                .map(|a| match a {
                    Arg::Int(n) => CanonArg::Int(*n),
                    Arg::Token(t) => CanonArg::Token(t),
                })
                .collect(),
            deps: &s.deps,
            sub: s.sub.as_deref().map(canon),
        })
        .collect()
}

/// Canonical text of a program.
pub fn serialize_program(p: &ClfProgram) -> String {
    serialize_steps(p.steps())
}

pub(crate) fn serialize_steps(steps: &[ClfStep]) -> String {
    // Serializing plain structs of strings and integers cannot fail.
    serde_json::to_string(&canon(steps)).unwrap_or_default()
}
