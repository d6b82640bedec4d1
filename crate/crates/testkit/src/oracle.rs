//! Reference evaluator over bitmask object universes.
//!
//! Shares no code with the engine: objects of the image set are numbered
//! image-major in graph order and every object set is a `u64` mask over that
//! numbering, so a set's first object is its lowest bit.

use clfkit_core::clf::{ClfStep, OperationTag as Op, Qualifier as Q};
use clfkit_core::scene::{AliasDictionary, ImageSet, ObjectNode};
use clfkit_core::{ClfProgram, GrammarEventKind};

const COLORS: &[&str] = &[
    "beige", "black", "blue", "brown", "gold", "gray", "green", "grey", "orange", "pink", "purple",
    "red", "silver", "tan", "white", "yellow",
];
const MATERIALS: &[&str] = &[
    "brick", "cloth", "concrete", "glass", "leather", "metal", "metallic", "paper", "plastic",
    "stone", "wood", "wooden",
];
const SIZES: &[&str] = &[
    "big", "huge", "large", "little", "short", "small", "tall", "tiny",
];
const SHAPES: &[&str] = &["circular", "rectangular", "round", "square", "triangular"];

fn kind_of(attr: &str) -> Option<&'static str> {
    [
        ("color", COLORS),
        ("material", MATERIALS),
        ("size", SIZES),
        ("shape", SHAPES),
    ]
    .into_iter()
    .find(|(_, ws)| ws.contains(&attr))
    .map(|(k, _)| k)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OValue {
    Set(u64),
    Groups(Vec<(usize, u64)>),
    Int(i64),
    Bool(bool),
    Str(String),
    Tokens(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleOutcome {
    pub answer: Option<String>,
    /// `(kind, top-level step, full path)` in emission order.
    pub events: Vec<(GrammarEventKind, usize, Vec<usize>)>,
    pub fatal: bool,
}

struct Universe<'a> {
    nodes: Vec<(usize, &'a ObjectNode)>,
    image_ids: Vec<String>,
    dict: Option<&'a AliasDictionary>,
}

struct Fatal;

type Events = Vec<(GrammarEventKind, usize, Vec<usize>)>;

pub fn oracle_execute(
    p: &ClfProgram,
    images: &ImageSet,
    dict: Option<&AliasDictionary>,
) -> Result<OracleOutcome, String> {
    let mut nodes = Vec::new();
    for (i, g) in images.images().iter().enumerate() {
        for o in g.objects() {
            nodes.push((i, o));
        }
    }
    if nodes.len() > 64 {
        return Err("universe larger than 64 objects".into());
    }
    let u = Universe {
        nodes,
        image_ids: images
            .images()
            .iter()
            .map(|g| g.image_id().to_string())
            .collect(),
        dict,
    };
    let full = if u.nodes.len() == 64 {
        u64::MAX
    } else {
        (1u64 << u.nodes.len()) - 1
    };
    let mut events = Vec::new();
    match u.run(p.steps(), full, &[], &mut events) {
        Ok(Ok(v)) => Ok(OracleOutcome {
            answer: Some(answer(&v)?),
            events,
            fatal: false,
        }),
        Ok(Err(e)) => Err(e),
        Err(Fatal) => Ok(OracleOutcome {
            answer: None,
            events,
            fatal: true,
        }),
    }
}

fn answer(v: &OValue) -> Result<String, String> {
    match v {
        OValue::Bool(true) => Ok("yes".into()),
        OValue::Bool(false) => Ok("no".into()),
        OValue::Int(n) => Ok(n.to_string()),
        OValue::Str(s) => Ok(s.to_lowercase()),
        other => Err(format!("not an answer: {other:?}")),
    }
}

fn bits(m: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| m >> i & 1 == 1)
}

fn push(events: &mut Events, kind: GrammarEventKind, path: &[usize]) {
    events.push((kind, path[0], path.to_vec()));
}

impl Universe<'_> {
    fn mask_where(&self, f: impl Fn(usize, &ObjectNode) -> bool) -> u64 {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, (img, n))| f(*img, n))
            .fold(0, |m, (i, _)| m | 1 << i)
    }

    fn image_mask(&self, img: usize) -> u64 {
        self.mask_where(|i, _| i == img)
    }

    fn find(&self, mention: &str) -> u64 {
        let mut out = 0;
        for img in 0..self.image_ids.len() {
            let exact = self.mask_where(|i, n| i == img && n.name == mention);
            if exact != 0 {
                out |= exact;
                continue;
            }
            if let Some(d) = self.dict {
                for (alias, _) in d.aliases(mention) {
                    out |= self.mask_where(|i, n| i == img && &n.name == alias);
                }
            }
        }
        out
    }

    fn relates(&self, idx: usize, pred: &str, targets: Option<u64>) -> bool {
        let (img, node) = self.nodes[idx];
        node.relations.iter().any(|r| {
            r.predicate == pred
                && match targets {
                    None => true,
                    Some(t) => bits(t)
                        .any(|j| self.nodes[j].0 == img && self.nodes[j].1.object_id == r.target),
                }
        })
    }

    fn single(&self, s: u64, path: &[usize], ev: &mut Events) -> Result<usize, Fatal> {
        match s.count_ones() {
            0 => {
                push(ev, GrammarEventKind::ObjectNotFound, path);
                Err(Fatal)
            }
            1 => Ok(s.trailing_zeros() as usize),
            _ => {
                push(ev, GrammarEventKind::NonUniqueAutoFix, path);
                Ok(s.trailing_zeros() as usize)
            }
        }
    }

    fn run(
        &self,
        steps: &[ClfStep],
        scope: u64,
        at: &[usize],
        ev: &mut Events,
    ) -> Result<Result<OValue, String>, Fatal> {
        let mut vals: Vec<OValue> = Vec::new();
        for (i, s) in steps.iter().enumerate() {
            let mut path = at.to_vec();
            path.push(i);
            match self.step(s, &vals, scope, &path, ev)? {
                Ok(v) => vals.push(v),
                Err(e) => return Ok(Err(e)),
            }
        }
        Ok(vals.pop().ok_or_else(|| "empty".to_string()))
    }

    fn step(
        &self,
        s: &ClfStep,
        vals: &[OValue],
        scope: u64,
        path: &[usize],
        ev: &mut Events,
    ) -> Result<Result<OValue, String>, Fatal> {
        let toks: Vec<&str> = s.args.iter().filter_map(|a| a.as_token()).collect();
        let ints: Vec<i64> = s
            .args
            .iter()
            .filter_map(|a| a.as_int())
            .map(i64::from)
            .collect();
        let set = |n: usize| match s.deps.get(n).map(|&d| &vals[d]) {
            Some(OValue::Set(m)) => Ok(*m),
            other => Err(format!("{path:?}: expected set, got {other:?}")),
        };
        let groups = |n: usize| match s.deps.get(n).map(|&d| &vals[d]) {
            Some(OValue::Groups(g)) => Ok(g.clone()),
            other => Err(format!("{path:?}: expected groups, got {other:?}")),
        };
        let bools = || -> Result<Vec<bool>, String> {
            s.deps
                .iter()
                .map(|&d| match &vals[d] {
                    OValue::Bool(b) => Ok(*b),
                    other => Err(format!("expected bool, got {other:?}")),
                })
                .collect()
        };
        macro_rules! tri {
            ($e:expr) => {
                match $e {
                    Ok(v) => v,
                    Err(e) => return Ok(Err(e)),
                }
            };
        }
        let v = match s.op {
            Op::Scene => OValue::Set(scope),
            Op::Find => {
                let m = self.find(toks[0]);
                if s.deps.is_empty() {
                    OValue::Set(m)
                } else {
                    OValue::Set(m & tri!(set(0)))
                }
            }
            Op::Filter => {
                let src = tri!(set(0));
                let keep = if s.qualifier == Some(Q::Rel) {
                    let t = if s.deps.len() > 1 {
                        Some(tri!(set(1)))
                    } else {
                        None
                    };
                    bits(src)
                        .filter(|&i| self.relates(i, toks[0], t))
                        .fold(0, |m, i| m | 1 << i)
                } else {
                    bits(src)
                        .filter(|&i| self.nodes[i].1.attributes.iter().any(|a| a == toks[0]))
                        .fold(0, |m, i| m | 1 << i)
                };
                OValue::Set(keep)
            }
            Op::Choose => {
                let o = self.single(tri!(set(0)), path, ev)?;
                let t = if s.deps.len() > 1 {
                    Some(tri!(set(1)))
                } else {
                    None
                };
                let node = self.nodes[o].1;
                let holds = |c: &str| match s.qualifier {
                    Some(Q::Name) => {
                        c == node.name
                            || self.dict.is_some_and(|d| {
                                d.aliases(c).iter().any(|(n, k)| n == &node.name && *k > 0)
                            })
                    }
                    Some(Q::Attr) => node.attributes.iter().any(|a| a == c),
                    _ => self.relates(o, c, t),
                };
                let (h1, h2) = (holds(toks[0]), holds(toks[1]));
                if h1 == h2 {
                    let kind = if h1 {
                        GrammarEventKind::NonUniqueAutoFix
                    } else {
                        GrammarEventKind::DefaultValueInserted
                    };
                    push(ev, kind, path);
                }
                OValue::Str(if h2 && !h1 { toks[1] } else { toks[0] }.to_string())
            }
            Op::Query => {
                let o = self.single(tri!(set(0)), path, ev)?;
                let node = self.nodes[o].1;
                if s.qualifier == Some(Q::Attr) {
                    let kind = toks.first().copied();
                    let hits: Vec<&String> = node
                        .attributes
                        .iter()
                        .filter(|a| kind.is_none() || kind_of(a) == kind)
                        .collect();
                    match hits.len() {
                        0 => {
                            push(ev, GrammarEventKind::DefaultValueInserted, path);
                            OValue::Str(String::new())
                        }
                        1 => OValue::Str(hits[0].clone()),
                        _ => {
                            push(ev, GrammarEventKind::NonUniqueAutoFix, path);
                            OValue::Str(hits[0].clone())
                        }
                    }
                } else {
                    OValue::Str(node.name.clone())
                }
            }
            Op::Verify => {
                let o = self.single(tri!(set(0)), path, ev)?;
                OValue::Bool(self.nodes[o].1.attributes.iter().any(|a| a == toks[0]))
            }
            Op::Map => {
                let gs = tri!(groups(0));
                let sub = s.sub.as_deref().unwrap_or_default();
                let mut results = Vec::new();
                for (_, m) in gs {
                    match self.run(sub, m, path, ev)? {
                        Ok(OValue::Bool(b)) => results.push(b),
                        Ok(other) => return Ok(Err(format!("map sub gave {other:?}"))),
                        Err(e) => return Ok(Err(e)),
                    }
                }
                OValue::Bool(if s.qualifier == Some(Q::And) {
                    results.iter().all(|&b| b)
                } else {
                    results.iter().any(|&b| b)
                })
            }
            Op::LogicNot | Op::LogicOr | Op::LogicAnd => {
                let mut b = tri!(bools());
                let arity = if s.op == Op::LogicNot { 1 } else { 2 };
                if b.len() < arity {
                    push(ev, GrammarEventKind::DefaultValueInserted, path);
                    b.resize(arity, false);
                }
                OValue::Bool(match s.op {
                    Op::LogicNot => !b[0],
                    Op::LogicOr => b[0] || b[1],
                    _ => b[0] && b[1],
                })
            }
            Op::Count | Op::Exists => {
                let n = match s.deps.first().map(|&d| &vals[d]) {
                    Some(OValue::Set(m)) => m.count_ones() as usize,
                    Some(OValue::Tokens(t)) => t.len(),
                    other => return Ok(Err(format!("count of {other:?}"))),
                };
                if s.op == Op::Count {
                    OValue::Int(n as i64)
                } else {
                    OValue::Bool(n > 0)
                }
            }
            Op::Keys => OValue::Tokens(
                tri!(groups(0))
                    .into_iter()
                    .map(|(i, _)| self.image_ids[i].clone())
                    .collect(),
            ),
            Op::UniqueImages => {
                let m = tri!(set(0));
                OValue::Tokens(
                    (0..self.image_ids.len())
                        .filter(|&i| m & self.image_mask(i) != 0)
                        .map(|i| self.image_ids[i].clone())
                        .collect(),
                )
            }
            Op::GroupByImages => {
                let m = tri!(set(0));
                OValue::Groups(
                    (0..self.image_ids.len())
                        .map(|i| (i, m & self.image_mask(i)))
                        .collect(),
                )
            }
            Op::KeepIfValuesCount => {
                let gs = tri!(groups(0));
                if ints.is_empty() {
                    push(ev, GrammarEventKind::DefaultValueInserted, path);
                }
                let n = ints.first().copied().unwrap_or(0);
                let q = s.qualifier.unwrap_or(Q::Eq);
                OValue::Groups(
                    gs.into_iter()
                        .filter(|(_, m)| cmp(q, m.count_ones() as i64, n))
                        .collect(),
                )
            }
            Op::Compare => {
                let mut xs: Vec<i64> = Vec::new();
                for &d in &s.deps {
                    match &vals[d] {
                        OValue::Int(n) => xs.push(*n),
                        other => return Ok(Err(format!("compare of {other:?}"))),
                    }
                }
                let given = xs.len() + ints.len();
                if given < 2 {
                    push(ev, GrammarEventKind::DefaultValueInserted, path);
                    xs.extend(std::iter::repeat_n(0, 2 - given));
                }
                xs.extend(ints.iter().copied());
                OValue::Bool(cmp(s.qualifier.unwrap_or(Q::Eq), xs[0], xs[1]))
            }
        };
        Ok(Ok(v))
    }
}

fn cmp(q: Q, a: i64, b: i64) -> bool {
    match q {
        Q::Eq => a == b,
        Q::Geq => a >= b,
        Q::Leq => a <= b,
        Q::Lt => a < b,
        Q::Gt => a > b,
        _ => false,
    }
}
