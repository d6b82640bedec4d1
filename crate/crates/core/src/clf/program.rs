use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use super::op::{OperationTag, Qualifier};

/// Integer literals in programs must lie in `0..=MAX_LITERAL`.
pub const MAX_LITERAL: u32 = 20;

/// A literal argument: a lowercase token or a small integer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Arg {
    Token(String),
    Int(u32),
}

impl Arg {
    pub fn token(s: &str) -> Self {
        Arg::Token(crate::token::normalize_lossy(s))
    }

    pub fn as_token(&self) -> Option<&str> {
        match self {
            Arg::Token(t) => Some(t),
            Arg::Int(_) => None,
        }
    }

    pub fn as_int(&self) -> Option<u32> {
        match self {
            Arg::Int(n) => Some(*n),
            Arg::Token(_) => None,
        }
    }
}

impl From<&str> for Arg {
    fn from(s: &str) -> Self {
        Arg::token(s)
    }
}

impl From<u32> for Arg {
    fn from(n: u32) -> Self {
        Arg::Int(n)
    }
}

/// One program step. `deps` index earlier steps of the same step list; a
/// `map` step carries its per-group subprogram in `sub`, whose `scene`
/// evaluates to the group being visited.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClfStep {
    pub op: OperationTag,
    pub qualifier: Option<Qualifier>,
    pub args: Vec<Arg>,
    pub deps: Vec<usize>,
    pub sub: Option<Vec<ClfStep>>,
}

impl ClfStep {
    pub fn new(op: OperationTag) -> Self {
        ClfStep {
            op,
            qualifier: None,
            args: Vec::new(),
            deps: Vec::new(),
            sub: None,
        }
    }

    pub fn qualified(op: OperationTag, q: Qualifier) -> Self {
        ClfStep {
            qualifier: Some(q),
            ..Self::new(op)
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
    pub fn sub(mut self, steps: Vec<ClfStep>) -> Self {
        self.sub = Some(steps);
        self
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Arg::as_token)
    }

    pub fn ints(&self) -> impl Iterator<Item = u32> + '_ {
        self.args.iter().filter_map(Arg::as_int)
    }
}

/// Location of a step, descending through `map` subprograms.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepPath(pub Vec<usize>);

impl StepPath {
    pub fn top(i: usize) -> Self {
        StepPath(alloc::vec![i])
    }

    pub fn child(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        v.push(i);
        StepPath(v)
    }

    /// Index of the enclosing top-level step.
    pub fn root(&self) -> usize {
        self.0.first().copied().unwrap_or(0)
    }
}

impl fmt::Display for StepPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, i) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(".sub.")?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("program has no steps")]
    EmptyProgram,
    #[error("step {path}: dependency {dep} does not precede it")]
    ForwardDependency { path: StepPath, dep: usize },
    #[error("step {path}: map subprogram is empty")]
    EmptySubprogram { path: StepPath },
}

/// A dependency-ordered, non-empty step list. The last step produces the
/// answer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClfProgram {
    steps: Vec<ClfStep>,
}

impl ClfProgram {
    pub fn new(steps: Vec<ClfStep>) -> Result<Self, StructureError> {
        check_structure(&steps, &StepPath::default())?;
        Ok(ClfProgram { steps })
    }

    pub fn steps(&self) -> &[ClfStep] {
        &self.steps
    }

    pub fn into_steps(self) -> Vec<ClfStep> {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Every operation tag used, subprograms included.
    pub fn tags(&self) -> alloc::collections::BTreeSet<OperationTag> {
        let mut out = alloc::collections::BTreeSet::new();
        collect_tags(&self.steps, &mut out);
        out
    }
}

fn collect_tags(steps: &[ClfStep], out: &mut alloc::collections::BTreeSet<OperationTag>) {
    for s in steps {
        out.insert(s.op);
        if let Some(sub) = &s.sub {
            collect_tags(sub, out);
        }
    }
}

fn check_structure(steps: &[ClfStep], at: &StepPath) -> Result<(), StructureError> {
    if steps.is_empty() {
        return Err(if at.0.is_empty() {
            StructureError::EmptyProgram
        } else {
            StructureError::EmptySubprogram { path: at.clone() }
        });
    }
    for (i, s) in steps.iter().enumerate() {
        let path = at.child(i);
        if let Some(&dep) = s.deps.iter().find(|&&d| d >= i) {
            return Err(StructureError::ForwardDependency { path, dep });
        }
        if let Some(sub) = &s.sub {
            check_structure(sub, &path)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("{op} does not accept qualifier {found:?}")]
    BadQualifier {
        op: OperationTag,
        found: Option<Qualifier>,
    },
    #[error("{op}: {detail}")]
    Arity { op: OperationTag, detail: String },
    #[error("integer literal {0} outside 0..={MAX_LITERAL}")]
    LiteralOutOfRange(u32),
}

struct Shape {
    tokens: (usize, usize),
    ints: (usize, usize),
    deps: (usize, usize),
    sub: bool,
}

const fn shape(tokens: (usize, usize), ints: (usize, usize), deps: (usize, usize)) -> Shape {
    Shape {
        tokens,
        ints,
        deps,
        sub: false,
    }
}

fn shape_of(op: OperationTag, q: Option<Qualifier>) -> Shape {
    use OperationTag::*;
    match (op, q) {
        (Scene, _) => shape((0, 0), (0, 0), (0, 0)),
        (Find, _) => shape((1, 1), (0, 0), (0, 1)),
        (Filter, Some(Qualifier::Rel)) => shape((1, 1), (0, 0), (1, 2)),
        (Filter, _) => shape((1, 1), (0, 0), (1, 1)),
        (Choose, Some(Qualifier::Rel)) => shape((2, 2), (0, 0), (1, 2)),
        (Choose, _) => shape((2, 2), (0, 0), (1, 1)),
        (Query, Some(Qualifier::Attr)) => shape((0, 1), (0, 0), (1, 1)),
        (Query, _) => shape((0, 0), (0, 0), (1, 1)),
        (Verify, _) => shape((1, 1), (0, 0), (1, 1)),
        (Map, _) => Shape {
            sub: true,
            ..shape((0, 0), (0, 0), (1, 1))
        },
        (LogicNot, _) => shape((0, 0), (0, 0), (0, 1)),
        (LogicOr | LogicAnd, _) => shape((0, 0), (0, 0), (0, 2)),
        (Count | Exists | Keys | UniqueImages | GroupByImages, _) => shape((0, 0), (0, 0), (1, 1)),
        (KeepIfValuesCount, _) => shape((0, 0), (0, 1), (1, 1)),
        (Compare, _) => shape((0, 0), (0, 2), (0, 2)),
    }
}

/// Checks qualifier legality, argument/dependency counts and literal range
/// for a single step (not its subprogram).
pub fn check_shape(step: &ClfStep) -> Result<(), ShapeError> {
    let op = step.op;
    let legal = op.qualifiers();
    let ok_qualifier = match step.qualifier {
        None => legal.is_empty(),
        Some(q) => legal.contains(&q),
    };
    if !ok_qualifier {
        return Err(ShapeError::BadQualifier {
            op,
            found: step.qualifier,
        });
    }
    let sh = shape_of(op, step.qualifier);
    let n_tok = step.tokens().count();
    let n_int = step.ints().count();
    let n_dep = step.deps.len();
    let within = |n: usize, (lo, hi): (usize, usize)| n >= lo && n <= hi;
    let arity = |detail: String| Err(ShapeError::Arity { op, detail });
    if !within(n_tok, sh.tokens) {
        return arity(alloc::format!(
            "expects {}..={} token arguments, got {n_tok}",
            sh.tokens.0,
            sh.tokens.1
        ));
    }
    if !within(n_int, sh.ints) {
        return arity(alloc::format!(
            "expects {}..={} integer arguments, got {n_int}",
            sh.ints.0,
            sh.ints.1
        ));
    }
    if !within(n_dep, sh.deps) {
        return arity(alloc::format!(
            "expects {}..={} dependencies, got {n_dep}",
            sh.deps.0,
            sh.deps.1
        ));
    }
    if op == OperationTag::Compare && n_dep + n_int > 2 {
        return arity(alloc::format!(
            "takes at most 2 operands, got {}",
            n_dep + n_int
        ));
    }
    if sh.sub != step.sub.is_some() {
        return arity(if sh.sub {
            "requires a subprogram".into()
        } else {
            "does not take a subprogram".into()
        });
    }
    if let Some(n) = step.ints().find(|&n| n > MAX_LITERAL) {
        return Err(ShapeError::LiteralOutOfRange(n));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use OperationTag::*;

    #[test]
    fn forward_dependency_rejected() {
        let steps = vec![ClfStep::new(Count).dep(1), ClfStep::new(Find).arg("bottle")];
        assert_eq!(
            ClfProgram::new(steps),
            Err(StructureError::ForwardDependency {
                path: StepPath::top(0),
                dep: 1
            })
        );
    }

    #[test]
    fn self_dependency_rejected() {
        let steps = vec![ClfStep::new(Find).arg("a").dep(0)];
        assert!(matches!(
            ClfProgram::new(steps),
            Err(StructureError::ForwardDependency { .. })
        ));
    }

    #[test]
    fn empty_program_and_subprogram() {
        assert_eq!(ClfProgram::new(vec![]), Err(StructureError::EmptyProgram));
        let steps = vec![
            ClfStep::new(Scene),
            ClfStep::new(GroupByImages).dep(0),
            ClfStep::qualified(Map, Qualifier::Or).dep(1).sub(vec![]),
        ];
        assert!(matches!(
            ClfProgram::new(steps),
            Err(StructureError::EmptySubprogram { .. })
        ));
    }

    #[test]
    fn shapes() {
        assert!(check_shape(&ClfStep::new(Find).arg("bottle")).is_ok());
        assert!(check_shape(&ClfStep::new(Find)).is_err());
        assert!(matches!(
            check_shape(&ClfStep::qualified(Verify, Qualifier::Rel).arg("red").dep(0)),
            Err(ShapeError::BadQualifier { .. })
        ));
        assert!(matches!(
            check_shape(&ClfStep::new(Filter).arg("red").dep(0)),
            Err(ShapeError::BadQualifier { found: None, .. })
        ));
        assert!(check_shape(&ClfStep::qualified(Compare, Qualifier::Geq).dep(0).arg(2u32)).is_ok());
        assert!(check_shape(
            &ClfStep::qualified(Compare, Qualifier::Geq)
                .dep(0)
                .dep(1)
                .arg(2u32)
        )
        .is_err());
        assert_eq!(
            check_shape(&ClfStep::qualified(Compare, Qualifier::Geq).arg(21u32)),
            Err(ShapeError::LiteralOutOfRange(21))
        );
        assert!(check_shape(&ClfStep::new(Count).dep(0).sub(vec![ClfStep::new(Scene)])).is_err());
    }

    #[test]
    fn path_display() {
        assert_eq!(alloc::format!("{}", StepPath(vec![3, 1])), "3.sub.1");
    }
}
