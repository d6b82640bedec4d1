use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use super::lexicon;
use super::value::{
    normalize_answer, Group, NonAnswerValue, ObjectRef, ObjectSet, Value, ValueSummary,
};
use crate::clf::{validate, ClfProgram, ClfStep, OperationTag, Qualifier, StepPath, ValueType};
use crate::scene::{resolve_positions, AliasDictionary, ImageSet, ObjectNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GrammarEventKind {
    /// A single-object operation received several objects; the first in
    /// graph order was used.
    NonUniqueAutoFix,
    /// A missing Integer/Boolean operand was filled with 0/false, or a
    /// `choose`/`query` had nothing to return and fell back to a default.
    DefaultValueInserted,
    /// A single-object operation received no objects. Fatal.
    ObjectNotFound,
}

impl GrammarEventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GrammarEventKind::NonUniqueAutoFix => "non_unique_auto_fix",
            GrammarEventKind::DefaultValueInserted => "default_value_inserted",
            GrammarEventKind::ObjectNotFound => "object_not_found",
        }
    }
}

impl fmt::Display for GrammarEventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrammarEvent {
    pub kind: GrammarEventKind,
    /// Top-level step; for events inside a `map` subprogram, the map step.
    pub step_index: usize,
    pub path: StepPath,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub step: usize,
    pub op: OperationTag,
    pub value: ValueSummary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecOutcome {
    /// Normalized answer; `None` iff the run was fatal.
    pub answer: Option<String>,
    pub events: Vec<GrammarEvent>,
    pub trace: Vec<TraceEntry>,
    pub fatal: bool,
}

impl ExecOutcome {
    pub fn event_kinds(&self) -> Vec<GrammarEventKind> {
        self.events.iter().map(|e| e.kind).collect()
    }
}

/// Program faults that the grammar checker does not repair.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("program is not executable: {0}")]
    Invalid(String),
    #[error("step {path}: expected {expected}, found {found}")]
    TypeMismatch {
        path: StepPath,
        expected: &'static str,
        found: ValueType,
    },
    #[error(transparent)]
    NonAnswer(#[from] NonAnswerValue),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExecOptions {
    pub trace: bool,
}

/// Runs `p` over `images` with the default-value grammar checker, recording
/// a trace of top-level step values.
pub fn execute(
    p: &ClfProgram,
    images: &ImageSet,
    dict: Option<&AliasDictionary>,
) -> Result<ExecOutcome, ExecError> {
    execute_with(p, images, dict, ExecOptions { trace: true })
}

pub fn execute_with(
    p: &ClfProgram,
    images: &ImageSet,
    dict: Option<&AliasDictionary>,
    opts: ExecOptions,
) -> Result<ExecOutcome, ExecError> {
    let report = validate(p);
    if let Some(f) = report.errors().next() {
        return Err(ExecError::Invalid(alloc::format!(
            "step {}: {}",
            f.path,
            f.message
        )));
    }
    let all: ObjectSet = images
        .images()
        .iter()
        .enumerate()
        .flat_map(|(i, g)| {
            (0..g.len()).map(move |o| ObjectRef {
                image: i,
                object: o,
            })
        })
        .collect();
    let mut run = Run {
        images,
        dict,
        events: Vec::new(),
        trace: opts.trace.then(Vec::new),
    };
    let result = run.steps(p.steps(), &all, &StepPath::default());
    let Run { events, trace, .. } = run;
    let trace = trace.unwrap_or_default();
    match result {
        Ok(v) => Ok(ExecOutcome {
            answer: Some(normalize_answer(&v)?),
            events,
            trace,
            fatal: false,
        }),
        Err(Halt::Fatal) => Ok(ExecOutcome {
            answer: None,
            events,
            trace,
            fatal: true,
        }),
        Err(Halt::Error(e)) => Err(e),
    }
}

enum Halt {
    Fatal,
    Error(ExecError),
}

impl From<ExecError> for Halt {
    fn from(e: ExecError) -> Self {
        Halt::Error(e)
    }
}

struct Run<'a> {
    images: &'a ImageSet,
    dict: Option<&'a AliasDictionary>,
    events: Vec<GrammarEvent>,
    trace: Option<Vec<TraceEntry>>,
}

impl<'a> Run<'a> {
    fn node(&self, r: ObjectRef) -> &'a ObjectNode {
        &self.images.images()[r.image].objects()[r.object]
    }

    fn event(&mut self, kind: GrammarEventKind, path: &StepPath, detail: String) {
        self.events.push(GrammarEvent {
            kind,
            step_index: path.root(),
            path: path.clone(),
            detail,
        });
    }

    /// Evaluates a step list with `scope` as the value of `scene`; returns
    /// the last step's value.
    fn steps(
        &mut self,
        steps: &[ClfStep],
        scope: &ObjectSet,
        at: &StepPath,
    ) -> Result<Value, Halt> {
        let mut values: Vec<Value> = Vec::with_capacity(steps.len());
        for (i, step) in steps.iter().enumerate() {
            let path = at.child(i);
            let v = self.step(step, &values, scope, &path)?;
            if at.0.is_empty() {
                if let Some(t) = &mut self.trace {
                    t.push(TraceEntry {
                        step: i,
                        op: step.op,
                        value: v.summarize(self.images),
                    });
                }
            }
            values.push(v);
        }
        // Structure checks guarantee a non-empty list.
        Ok(values.pop().unwrap_or(Value::Boolean(false)))
    }

    fn step(
        &mut self,
        step: &ClfStep,
        values: &[Value],
        scope: &ObjectSet,
        path: &StepPath,
    ) -> Result<Value, Halt> {
        use OperationTag::*;
        let dep = |n: usize| step.deps.get(n).map(|&d| &values[d]);
        let objects = |n: usize| -> Result<&ObjectSet, Halt> {
            match dep(n) {
                Some(Value::Objects(s)) => Ok(s),
                other => Err(mismatch(path, "ObjectSet", other)),
            }
        };
        let groups = |n: usize| -> Result<&[Group], Halt> {
            match dep(n) {
                Some(Value::Groups(g)) => Ok(g),
                other => Err(mismatch(path, "GroupedObjects", other)),
            }
        };
        let token = |n: usize| step.tokens().nth(n).unwrap_or_default();

        Ok(match step.op {
            Scene => Value::Objects(scope.clone()),
            Find => {
                let name = token(0);
                let mut found = ObjectSet::new();
                for (i, g) in self.images.images().iter().enumerate() {
                    found.extend(resolve_positions(self.dict, name, g).into_iter().map(|o| {
                        ObjectRef {
                            image: i,
                            object: o,
                        }
                    }));
                }
                if step.deps.is_empty() {
                    Value::Objects(found)
                } else {
                    let within = objects(0)?;
                    Value::Objects(found.intersection(within).copied().collect())
                }
            }
            Filter => {
                let s = objects(0)?;
                let arg = token(0);
                let kept: ObjectSet = match step.qualifier {
                    Some(Qualifier::Rel) => {
                        let targets = if step.deps.len() > 1 {
                            Some(objects(1)?)
                        } else {
                            None
                        };
                        s.iter()
                            .copied()
                            .filter(|&r| self.relates(r, arg, targets))
                            .collect()
                    }
                    _ => s
                        .iter()
                        .copied()
                        .filter(|&r| self.node(r).has_attribute(arg))
                        .collect(),
                };
                Value::Objects(kept)
            }
            Choose => {
                let o = self.single(objects(0)?, path)?;
                let targets = if step.deps.len() > 1 {
                    Some(objects(1)?)
                } else {
                    None
                };
                let node = self.node(o);
                let holds = |c: &str| match step.qualifier {
                    Some(Qualifier::Name) => AliasDictionary::matches(self.dict, c, &node.name),
                    Some(Qualifier::Attr) => node.has_attribute(c),
                    _ => self.relates(o, c, targets),
                };
                let (c1, c2) = (token(0), token(1));
                let picked = match (holds(c1), holds(c2)) {
                    (true, false) => c1,
                    (false, true) => c2,
                    (true, true) => {
                        self.event(
                            GrammarEventKind::NonUniqueAutoFix,
                            path,
                            alloc::format!("both {c1:?} and {c2:?} hold; taking {c1:?}"),
                        );
                        c1
                    }
                    (false, false) => {
                        self.event(
                            GrammarEventKind::DefaultValueInserted,
                            path,
                            alloc::format!("neither {c1:?} nor {c2:?} holds; defaulting to {c1:?}"),
                        );
                        c1
                    }
                };
                Value::Str(picked.into())
            }
            Query => {
                let o = self.single(objects(0)?, path)?;
                let node = self.node(o);
                match step.qualifier {
                    Some(Qualifier::Attr) => {
                        let kind = step.tokens().next();
                        let mut hits = node
                            .attributes
                            .iter()
                            .filter(|a| lexicon::kind_matches(kind, a));
                        match (hits.next(), hits.count()) {
                            (Some(a), 0) => Value::Str(a.clone()),
                            (Some(a), more) => {
                                self.event(
                                    GrammarEventKind::NonUniqueAutoFix,
                                    path,
                                    alloc::format!(
                                        "{} matching attributes; taking {a:?}",
                                        more + 1
                                    ),
                                );
                                Value::Str(a.clone())
                            }
                            (None, _) => {
                                self.event(
                                    GrammarEventKind::DefaultValueInserted,
                                    path,
                                    alloc::format!(
                                        "object {} has no {} attribute",
                                        node.object_id,
                                        kind.unwrap_or("")
                                    ),
                                );
                                Value::Str(String::new())
                            }
                        }
                    }
                    _ => Value::Str(node.name.clone()),
                }
            }
            Verify => {
                let o = self.single(objects(0)?, path)?;
                Value::Boolean(self.node(o).has_attribute(token(0)))
            }
            Map => {
                let gs = groups(0)?;
                let sub = step.sub.as_deref().unwrap_or_default();
                let and = step.qualifier == Some(Qualifier::And);
                let mut acc = and;
                for g in gs {
                    let b = match self.steps(sub, &g.members, path)? {
                        Value::Boolean(b) => b,
                        other => return Err(mismatch(path, "Boolean", Some(&other))),
                    };
                    acc = if and { acc && b } else { acc || b };
                }
                Value::Boolean(acc)
            }
            LogicNot | LogicOr | LogicAnd => {
                let mut operands = Vec::with_capacity(2);
                for n in 0..step.deps.len() {
                    match dep(n) {
                        Some(Value::Boolean(b)) => operands.push(*b),
                        other => return Err(mismatch(path, "Boolean", other)),
                    }
                }
                self.fill_defaults(step, path);
                let arity = if step.op == LogicNot { 1 } else { 2 };
                operands.resize(arity, false);
                Value::Boolean(match step.op {
                    LogicNot => !operands[0],
                    LogicOr => operands[0] || operands[1],
                    _ => operands[0] && operands[1],
                })
            }
            Count | Exists => {
                let n = match dep(0) {
                    Some(Value::Objects(s)) => s.len(),
                    Some(Value::Tokens(t)) => t.len(),
                    other => return Err(mismatch(path, "ObjectSet or TokenSet", other)),
                };
                if step.op == Count {
                    Value::Integer(n as i64)
                } else {
                    Value::Boolean(n > 0)
                }
            }
            Keys => Value::Tokens(
                groups(0)?
                    .iter()
                    .map(|g| String::from(self.images.images()[g.image].image_id()))
                    .collect(),
            ),
            UniqueImages => {
                let s = objects(0)?;
                let mut ids: Vec<String> = Vec::new();
                for r in s {
                    let id = self.images.images()[r.image].image_id();
                    if ids.last().map(String::as_str) != Some(id) {
                        ids.push(id.into());
                    }
                }
                Value::Tokens(ids)
            }
            GroupByImages => {
                let s = objects(0)?;
                Value::Groups(
                    (0..self.images.len())
                        .map(|i| Group {
                            image: i,
                            members: s.iter().copied().filter(|r| r.image == i).collect(),
                        })
                        .collect(),
                )
            }
            KeepIfValuesCount => {
                let gs = groups(0)?;
                self.fill_defaults(step, path);
                let n = i64::from(step.ints().next().unwrap_or(0));
                let q = step.qualifier.unwrap_or(Qualifier::Eq);
                Value::Groups(
                    gs.iter()
                        .filter(|g| q.compare(g.members.len() as i64, n).unwrap_or(false))
                        .cloned()
                        .collect(),
                )
            }
            Compare => {
                let mut lhs_rhs: Vec<i64> = Vec::with_capacity(2);
                for n in 0..step.deps.len() {
                    match dep(n) {
                        Some(Value::Integer(v)) => lhs_rhs.push(*v),
                        other => return Err(mismatch(path, "Integer", other)),
                    }
                }
                self.fill_defaults(step, path);
                // Missing operands sit between the dependencies and the literals.
                let literals: Vec<i64> = step.ints().map(i64::from).collect();
                let missing = 2usize.saturating_sub(lhs_rhs.len() + literals.len());
                lhs_rhs.extend(core::iter::repeat_n(0, missing));
                lhs_rhs.extend(literals);
                let q = step.qualifier.unwrap_or(Qualifier::Eq);
                Value::Boolean(q.compare(lhs_rhs[0], lhs_rhs[1]).unwrap_or(false))
            }
        })
    }

    fn fill_defaults(&mut self, step: &ClfStep, path: &StepPath) {
        if let Some((n, ty)) = crate::clf::missing_defaults(step) {
            let default = if ty == ValueType::Boolean {
                "false"
            } else {
                "0"
            };
            self.event(
                GrammarEventKind::DefaultValueInserted,
                path,
                alloc::format!("{} missing operand(s) set to {default}", n),
            );
        }
    }

    /// The grammar checker's single-object rule.
    fn single(&mut self, s: &ObjectSet, path: &StepPath) -> Result<ObjectRef, Halt> {
        let mut it = s.iter();
        match it.next() {
            None => {
                self.event(
                    GrammarEventKind::ObjectNotFound,
                    path,
                    "object not found".into(),
                );
                Err(Halt::Fatal)
            }
            Some(&first) => {
                if it.next().is_some() {
                    let node = self.node(first);
                    self.event(
                        GrammarEventKind::NonUniqueAutoFix,
                        path,
                        alloc::format!(
                            "{} objects; taking {} ({})",
                            s.len(),
                            node.object_id,
                            node.name
                        ),
                    );
                }
                Ok(first)
            }
        }
    }

    fn relates(&self, r: ObjectRef, predicate: &str, targets: Option<&ObjectSet>) -> bool {
        let graph = &self.images.images()[r.image];
        self.node(r).relations.iter().any(|rel| {
            rel.predicate == predicate
                && targets.is_none_or(|t| {
                    graph.position(&rel.target).is_some_and(|o| {
                        t.contains(&ObjectRef {
                            image: r.image,
                            object: o,
                        })
                    })
                })
        })
    }
}

fn mismatch(path: &StepPath, expected: &'static str, found: Option<&Value>) -> Halt {
    Halt::Error(ExecError::TypeMismatch {
        path: path.clone(),
        expected,
        found: found.map_or(ValueType::Boolean, Value::value_type),
    })
}
