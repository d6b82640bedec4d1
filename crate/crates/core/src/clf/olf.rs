//! Original logical forms and their rewrite into CLF.
//!
//! OLF steps use the same JSON shape as CLF without a `qualifier` key.
//! Argument convention: literal tokens/integers first (in `args`), then
//! dependencies (in `deps`).

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use super::codec::{convert_args, convert_deps, parse_raw, ParseError, RawStep};
use super::op::{OperationTag, Qualifier};
use super::program::{check_shape, Arg, ClfProgram, ClfStep, StepPath};
use super::validate::validate;

macro_rules! olf_ops {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// Operations of the original logical forms.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum OlfOp { $($variant),* }

        impl OlfOp {
            pub const ALL: &'static [OlfOp] = &[$(OlfOp::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self { $(OlfOp::$variant => $name),* }
            }
        }
    };
}

olf_ops! {
    Some => "some",
    All => "all",
    None => "none",
    ChooseName => "choose_name",
    ChooseAttr => "choose_attr",
    ChooseRelation => "choose_relation",
    QueryName => "query_name",
    QueryAttr => "query_attr",
    VerifyAttr => "verify_attr",
    WithRelation => "with_relation",
    WithRelationObject => "with_relation_object",
    Filter => "filter",
    RelationBetweenNouns => "relation_between_nouns",
    Find => "find",
    Count => "count",
    Keys => "keys",
    UniqueImages => "unique_images",
    GroupByImages => "group_by_images",
    Scene => "scene",
    Exists => "exists",
    LogicOr => "logic_or",
    LogicAnd => "logic_and",
    KeepIfValuesCountEq => "keep_if_values_count_eq",
    KeepIfValuesCountGeq => "keep_if_values_count_geq",
    KeepIfValuesCountLeq => "keep_if_values_count_leq",
    Eq => "eq",
    Geq => "geq",
    Leq => "leq",
    Lt => "lt",
    Gt => "gt",
    Unique => "unique",
    AssertUnique => "assert_unique",
}

impl OlfOp {
    pub fn is_quantifier(self) -> bool {
        matches!(self, OlfOp::Some | OlfOp::All | OlfOp::None)
    }

    /// The CLF tag and qualifier this operation rewrites to; `None` for the
    /// sanity operations that the grammar checker replaces.
    pub fn clf(self) -> Option<(OperationTag, Option<Qualifier>)> {
        use OperationTag as T;
        use Qualifier as Q;
        let q = |t, q| Some((t, Some(q)));
        let bare = |t| Some((t, Option::None));
        match self {
            OlfOp::Some | OlfOp::None => q(T::Map, Q::Or),
            OlfOp::All => q(T::Map, Q::And),
            OlfOp::ChooseName => q(T::Choose, Q::Name),
            OlfOp::ChooseAttr => q(T::Choose, Q::Attr),
            OlfOp::ChooseRelation | OlfOp::RelationBetweenNouns => q(T::Choose, Q::Rel),
            OlfOp::QueryName => q(T::Query, Q::Name),
            OlfOp::QueryAttr => q(T::Query, Q::Attr),
            OlfOp::VerifyAttr => q(T::Verify, Q::Attr),
            OlfOp::WithRelation | OlfOp::WithRelationObject => q(T::Filter, Q::Rel),
            OlfOp::Filter => q(T::Filter, Q::Attr),
            OlfOp::Find => bare(T::Find),
            OlfOp::Count => bare(T::Count),
            OlfOp::Keys => bare(T::Keys),
            OlfOp::UniqueImages => bare(T::UniqueImages),
            OlfOp::GroupByImages => bare(T::GroupByImages),
            OlfOp::Scene => bare(T::Scene),
            OlfOp::Exists => bare(T::Exists),
            OlfOp::LogicOr => bare(T::LogicOr),
            OlfOp::LogicAnd => bare(T::LogicAnd),
            OlfOp::KeepIfValuesCountEq => q(T::KeepIfValuesCount, Q::Eq),
            OlfOp::KeepIfValuesCountGeq => q(T::KeepIfValuesCount, Q::Geq),
            OlfOp::KeepIfValuesCountLeq => q(T::KeepIfValuesCount, Q::Leq),
            OlfOp::Eq => q(T::Compare, Q::Eq),
            OlfOp::Geq => q(T::Compare, Q::Geq),
            OlfOp::Leq => q(T::Compare, Q::Leq),
            OlfOp::Lt => q(T::Compare, Q::Lt),
            OlfOp::Gt => q(T::Compare, Q::Gt),
            OlfOp::Unique | OlfOp::AssertUnique => Option::None,
        }
    }
}

impl fmt::Display for OlfOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OlfOp {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        OlfOp::ALL
            .iter()
            .copied()
            .find(|o| o.as_str() == s)
            .ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OlfStep {
    pub op: OlfOp,
    pub args: Vec<Arg>,
    pub deps: Vec<usize>,
    pub sub: Option<Vec<OlfStep>>,
}

impl OlfStep {
    pub fn new(op: OlfOp) -> Self {
        OlfStep {
            op,
            args: Vec::new(),
            deps: Vec::new(),
            sub: Option::None,
        }
    }

    pub fn arg(mut self, a: impl Into<Arg>) -> Self {
        self.args.push(a.into());
        self
    }

    pub fn dep(mut self, d: usize) -> Self {
        self.deps.push(d);
        self
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(mut self, steps: Vec<OlfStep>) -> Self {
        self.sub = Some(steps);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OlfProgram {
    pub steps: Vec<OlfStep>,
}

impl OlfProgram {
    pub fn new(steps: Vec<OlfStep>) -> Self {
        OlfProgram { steps }
    }

    pub fn ops(&self) -> alloc::collections::BTreeSet<OlfOp> {
        fn walk(steps: &[OlfStep], out: &mut alloc::collections::BTreeSet<OlfOp>) {
            for s in steps {
                out.insert(s.op);
                if let Some(sub) = &s.sub {
                    walk(sub, out);
                }
            }
        }
        let mut out = alloc::collections::BTreeSet::new();
        walk(&self.steps, &mut out);
        out
    }
}

/// Parses an OLF step list.
pub fn parse_olf(text: &str) -> Result<OlfProgram, ParseError> {
    fn convert(raw: &[RawStep], at: &StepPath) -> Result<Vec<OlfStep>, ParseError> {
        if raw.is_empty() {
            return Err(if at.0.is_empty() {
                ParseError::EmptyProgram
            } else {
                ParseError::Arity {
                    path: at.clone(),
                    detail: "quantifier subprogram is empty".into(),
                }
            });
        }
        raw.iter()
            .enumerate()
            .map(|(i, r)| {
                let path = at.child(i);
                let op: OlfOp = crate::token::normalize_lossy(&r.op).parse().map_err(|_| {
                    ParseError::UnknownOperation {
                        path: path.clone(),
                        op: r.op.clone(),
                    }
                })?;
                if r.qualifier.is_some() {
                    return Err(ParseError::BadQualifier {
                        path,
                        op: op.as_str().into(),
                        qualifier: r.qualifier.clone(),
                    });
                }
                let sub = match &r.sub {
                    Some(s) => Some(convert(s, &path)?),
                    Option::None => Option::None,
                };
                Ok(OlfStep {
                    op,
                    args: convert_args(&r.args, &path)?,
                    deps: convert_deps(&r.deps, i, &path)?,
                    sub,
                })
            })
            .collect()
    }
    Ok(OlfProgram::new(convert(
        &parse_raw(text)?,
        &StepPath::default(),
    )?))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("unknown OLF operation {0:?}")]
    UnknownOlfOperation(String),
    #[error("step {path}: {detail}")]
    MalformedOlf { path: StepPath, detail: String },
    #[error("translation produced an invalid CLF program: {0}")]
    Invalid(String),
}

impl From<ParseError> for TranslateError {
    fn from(e: ParseError) -> Self {
        match e {
            ParseError::UnknownOperation { op, .. } => TranslateError::UnknownOlfOperation(op),
            other => TranslateError::MalformedOlf {
                path: StepPath::default(),
                detail: alloc::format!("{other}"),
            },
        }
    }
}

/// Rewrites an OLF program into CLF.
///
/// Fused operation names become a CLF tag plus qualifier; `none` becomes
/// `logic_not(map(or, ..))`; `unique`/`assert_unique` are deleted and their
/// consumers rewired to the deleted step's sole input.
pub fn translate_olf_to_clf(p: &OlfProgram) -> Result<ClfProgram, TranslateError> {
    let steps = translate_steps(&p.steps, &StepPath::default())?;
    let program =
        ClfProgram::new(steps).map_err(|e| TranslateError::Invalid(alloc::format!("{e}")))?;
    let report = validate(&program);
    if let Some(f) = report.errors().next() {
        return Err(TranslateError::Invalid(alloc::format!(
            "step {}: {}",
            f.path,
            f.message
        )));
    }
    Ok(program)
}

fn translate_steps(steps: &[OlfStep], at: &StepPath) -> Result<Vec<ClfStep>, TranslateError> {
    let mut out: Vec<ClfStep> = Vec::with_capacity(steps.len() + 1);
    // OLF index -> CLF index of the step that now produces its value.
    let mut remap: Vec<usize> = Vec::with_capacity(steps.len());
    for (i, s) in steps.iter().enumerate() {
        let path = at.child(i);
        let malformed = |detail: &str| TranslateError::MalformedOlf {
            path: path.clone(),
            detail: detail.into(),
        };
        let deps: Vec<usize> = s
            .deps
            .iter()
            .map(|&d| {
                remap
                    .get(d)
                    .copied()
                    .ok_or_else(|| malformed("dependency does not precede step"))
            })
            .collect::<Result<_, _>>()?;
        let Some((tag, qualifier)) = s.op.clf() else {
            match deps.as_slice() {
                [only] => {
                    remap.push(*only);
                    continue;
                }
                _ => return Err(malformed("sanity step must have exactly one dependency")),
            }
        };
        let sub = match (&s.sub, s.op.is_quantifier()) {
            (Some(sub), true) => Some(translate_steps(sub, &path)?),
            (Option::None, true) => return Err(malformed("quantifier without subprogram")),
            (Some(_), false) => return Err(malformed("subprogram on a non-quantifier step")),
            (Option::None, false) => Option::None,
        };
        let step = ClfStep {
            op: tag,
            qualifier,
            args: s.args.clone(),
            deps,
            sub,
        };
        check_shape(&step).map_err(|e| malformed(&alloc::format!("{e}")))?;
        out.push(step);
        if s.op == OlfOp::None {
            out.push(ClfStep::new(OperationTag::LogicNot).dep(out.len() - 1));
        }
        remap.push(out.len() - 1);
    }
    if remap.last() != Some(&(out.len().wrapping_sub(1))) {
        return Err(TranslateError::MalformedOlf {
            path: at.clone(),
            detail: "program ends in a deleted sanity step".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clf::codec::serialize_program;
    use alloc::vec;

    #[test]
    fn thirty_two_documented_operations() {
        assert_eq!(OlfOp::ALL.len(), 32);
        let mut names: Vec<_> = OlfOp::ALL.iter().map(|o| o.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 32);
    }

    #[test]
    fn choose_name_keeps_candidates() {
        let p = OlfProgram::new(vec![
            OlfStep::new(OlfOp::Find).arg("child"),
            OlfStep::new(OlfOp::ChooseName)
                .arg("branch")
                .arg("swing")
                .dep(0),
        ]);
        let c = translate_olf_to_clf(&p).unwrap();
        let s = &c.steps()[1];
        assert_eq!(
            (s.op, s.qualifier),
            (OperationTag::Choose, Some(Qualifier::Name))
        );
        assert_eq!(s.args, vec![Arg::token("branch"), Arg::token("swing")]);
    }

    #[test]
    fn none_gets_logic_not() {
        let sub = vec![
            OlfStep::new(OlfOp::Scene),
            OlfStep::new(OlfOp::Exists).dep(0),
        ];
        let p = OlfProgram::new(vec![
            OlfStep::new(OlfOp::Find).arg("bottle"),
            OlfStep::new(OlfOp::GroupByImages).dep(0),
            OlfStep::new(OlfOp::None).dep(1).sub(sub),
        ]);
        let c = translate_olf_to_clf(&p).unwrap();
        let tail: Vec<_> = c.steps()[2..]
            .iter()
            .map(|s| (s.op, s.qualifier, s.deps.clone()))
            .collect();
        assert_eq!(
            tail,
            vec![
                (OperationTag::Map, Some(Qualifier::Or), vec![1]),
                (OperationTag::LogicNot, Option::None, vec![2]),
            ]
        );
    }

    #[test]
    fn unique_deleted_and_rewired() {
        let p = OlfProgram::new(vec![
            OlfStep::new(OlfOp::Find).arg("boy"),
            OlfStep::new(OlfOp::Unique).dep(0),
            OlfStep::new(OlfOp::QueryName).dep(1),
        ]);
        let c = translate_olf_to_clf(&p).unwrap();
        assert_eq!(
            serialize_program(&c),
            r#"[{"op":"find","args":["boy"],"deps":[]},{"op":"query","qualifier":"name","args":[],"deps":[0]}]"#
        );
    }

    #[test]
    fn none_rewiring_reaches_consumers() {
        // logic_and consumes the translated `none`, which must point at logic_not.
        let sub = vec![
            OlfStep::new(OlfOp::Scene),
            OlfStep::new(OlfOp::Exists).dep(0),
        ];
        let p = OlfProgram::new(vec![
            OlfStep::new(OlfOp::Find).arg("bottle"),
            OlfStep::new(OlfOp::GroupByImages).dep(0),
            OlfStep::new(OlfOp::None).dep(1).sub(sub),
            OlfStep::new(OlfOp::Exists).dep(0),
            OlfStep::new(OlfOp::LogicAnd).dep(2).dep(3),
        ]);
        let c = translate_olf_to_clf(&p).unwrap();
        assert_eq!(c.steps()[5].deps, vec![3, 4]);
    }

    #[test]
    fn malformed_sanity_step() {
        let p = OlfProgram::new(vec![
            OlfStep::new(OlfOp::Find).arg("a"),
            OlfStep::new(OlfOp::Find).arg("b"),
            OlfStep::new(OlfOp::Unique).dep(0).dep(1),
            OlfStep::new(OlfOp::QueryName).dep(2),
        ]);
        assert!(matches!(
            translate_olf_to_clf(&p),
            Err(TranslateError::MalformedOlf { .. })
        ));
    }

    #[test]
    fn parse_unknown_olf() {
        let e = parse_olf(r#"[{"op":"select","args":["x"]}]"#).unwrap_err();
        assert!(matches!(
            TranslateError::from(e),
            TranslateError::UnknownOlfOperation(ref s) if s == "select"
        ));
    }
}
