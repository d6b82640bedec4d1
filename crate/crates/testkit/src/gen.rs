//! Random image sets and well-typed CLF programs for property tests.

use std::sync::Arc;

use clfkit_core::clf::{ClfStep, OperationTag as Op, Qualifier as Q, ValueType as T};
use clfkit_core::scene::{AliasDictionary, ImageSet, ObjectNode, SceneGraph};
use clfkit_core::ClfProgram;
use rand::seq::IndexedRandom;
use rand::Rng;

pub const NAMES: &[&str] = &["bottle", "cup", "table", "dog", "parrot", "mug", "chair"];
/// Mentions that only resolve through the alias dictionary, or not at all.
pub const ALIAS_MENTIONS: &[&str] = &["bird", "glass", "unicorn"];
pub const ATTRS: &[&str] = &[
    "red", "blue", "wooden", "metal", "large", "small", "round", "shiny",
];
pub const KINDS: &[&str] = &["color", "material", "size", "shape", "mood"];
pub const PREDICATES: &[&str] = &["on", "near", "holding"];

pub const MAX_IMAGES: usize = 5;
pub const MAX_OBJECTS: usize = 8;
pub const MAX_ATTRS: usize = 4;
pub const MAX_RELATIONS: usize = 3;
pub const MAX_STEPS: usize = 8;

pub fn random_graph<R: Rng>(rng: &mut R, image_id: &str) -> SceneGraph {
    let n = rng.random_range(0..=MAX_OBJECTS);
    let ids: Vec<String> = (0..n).map(|i| format!("{image_id}o{i}")).collect();
    let objects = (0..n)
        .map(|i| {
            let name = NAMES.choose(rng).unwrap();
            let k = rng.random_range(0..=MAX_ATTRS);
            let attrs: Vec<&str> = ATTRS.choose_multiple(rng, k).copied().collect();
            let r = if n > 1 {
                rng.random_range(0..=MAX_RELATIONS)
            } else {
                0
            };
            let rels: Vec<(String, String)> = (0..r)
                .map(|_| {
                    let mut t = rng.random_range(0..n);
                    if t == i {
                        t = (t + 1) % n;
                    }
                    (PREDICATES.choose(rng).unwrap().to_string(), ids[t].clone())
                })
                .collect();
            ObjectNode::new(&ids[i], name, attrs, rels).unwrap()
        })
        .collect();
    SceneGraph::new(image_id, objects).unwrap()
}

pub fn random_image_set<R: Rng>(rng: &mut R) -> ImageSet {
    let k = rng.random_range(1..=MAX_IMAGES);
    let graphs = (0..k)
        .map(|i| Arc::new(random_graph(rng, &format!("img{i}"))))
        .collect();
    ImageSet::new(graphs).unwrap()
}

/// A small dictionary mapping the alias mentions onto graph names.
pub fn random_dictionary<R: Rng>(rng: &mut R) -> AliasDictionary {
    let mut d = AliasDictionary::new();
    d.observe_n("bird", "parrot", rng.random_range(1..4));
    if rng.random_bool(0.5) {
        d.observe_n("glass", "cup", rng.random_range(1..4));
        d.observe_n("glass", "mug", rng.random_range(1..4));
    }
    d
}

fn mention<R: Rng>(rng: &mut R) -> &'static str {
    if rng.random_bool(0.2) {
        ALIAS_MENTIONS.choose(rng).unwrap()
    } else {
        NAMES.choose(rng).unwrap()
    }
}

struct Builder<'r, R> {
    rng: &'r mut R,
    steps: Vec<ClfStep>,
    types: Vec<T>,
}

impl<R: Rng> Builder<'_, R> {
    /// A recent step of type `t`, if any.
    fn pick(&mut self, t: T) -> Option<usize> {
        let c: Vec<usize> = (0..self.types.len())
            .filter(|&i| self.types[i] == t)
            .collect();
        if c.is_empty() {
            return None;
        }
        // Favour the newest candidates.
        let j = c.len()
            - 1
            - self
                .rng
                .random_range(0..c.len())
                .min(self.rng.random_range(0..c.len()));
        Some(c[j])
    }

    fn push(&mut self, s: ClfStep, t: T) {
        self.steps.push(s);
        self.types.push(t);
    }

    fn objects(&mut self, in_map: bool) -> usize {
        if let Some(i) = self.pick(T::ObjectSet) {
            if self.rng.random_bool(0.7) {
                return i;
            }
        }
        if in_map || self.rng.random_bool(0.3) {
            self.push(ClfStep::new(Op::Scene), T::ObjectSet);
        } else {
            let m = mention(self.rng);
            self.push(ClfStep::new(Op::Find).arg(m), T::ObjectSet);
        }
        self.steps.len() - 1
    }

    fn random_step(&mut self, in_map: bool) {
        let r = self.rng.random_range(0..17);
        match r {
            0 => {
                self.push(ClfStep::new(Op::Scene), T::ObjectSet);
            }
            1 => {
                let m = mention(self.rng);
                let mut s = ClfStep::new(Op::Find).arg(m);
                if let Some(d) = self
                    .pick(T::ObjectSet)
                    .filter(|_| self.rng.random_bool(0.4))
                {
                    s = s.dep(d);
                }
                self.push(s, T::ObjectSet);
            }
            2 => {
                let d = self.objects(in_map);
                let a = *ATTRS.choose(self.rng).unwrap();
                self.push(
                    ClfStep::qualified(Op::Filter, Q::Attr).arg(a).dep(d),
                    T::ObjectSet,
                );
            }
            3 => {
                let d = self.objects(in_map);
                let p = *PREDICATES.choose(self.rng).unwrap();
                let mut s = ClfStep::qualified(Op::Filter, Q::Rel).arg(p).dep(d);
                if self.rng.random_bool(0.6) {
                    let t = self.objects(in_map);
                    s = s.dep(t);
                }
                self.push(s, T::ObjectSet);
            }
            4 => {
                let d = self.objects(in_map);
                let q = *[Q::Name, Q::Attr, Q::Rel].choose(self.rng).unwrap();
                let pool: &[&str] = match q {
                    Q::Name => &["bottle", "cup", "bird", "parrot", "dog"],
                    Q::Attr => ATTRS,
                    _ => PREDICATES,
                };
                let c: Vec<&str> = pool.choose_multiple(self.rng, 2).copied().collect();
                let mut s = ClfStep::qualified(Op::Choose, q).arg(c[0]).arg(c[1]).dep(d);
                if q == Q::Rel && self.rng.random_bool(0.5) {
                    let t = self.objects(in_map);
                    s = s.dep(t);
                }
                self.push(s, T::String);
            }
            5 => {
                let d = self.objects(in_map);
                let s = if self.rng.random_bool(0.4) {
                    ClfStep::qualified(Op::Query, Q::Name).dep(d)
                } else {
                    let mut s = ClfStep::qualified(Op::Query, Q::Attr);
                    if self.rng.random_bool(0.7) {
                        s = s.arg(*KINDS.choose(self.rng).unwrap());
                    }
                    s.dep(d)
                };
                self.push(s, T::String);
            }
            6 => {
                let d = self.objects(in_map);
                let a = *ATTRS.choose(self.rng).unwrap();
                self.push(
                    ClfStep::qualified(Op::Verify, Q::Attr).arg(a).dep(d),
                    T::Boolean,
                );
            }
            7 if !in_map => {
                let g = self.groups();
                let q = if self.rng.random_bool(0.5) {
                    Q::Or
                } else {
                    Q::And
                };
                let sub = self.sub_program();
                self.push(ClfStep::qualified(Op::Map, q).dep(g).sub(sub), T::Boolean);
            }
            8..=10 => {
                let op = [Op::LogicNot, Op::LogicOr, Op::LogicAnd][r - 8];
                let arity = if op == Op::LogicNot { 1 } else { 2 };
                let n = self.rng.random_range(0..=arity);
                let mut s = ClfStep::new(op);
                for _ in 0..n {
                    match self.pick(T::Boolean) {
                        Some(b) => s = s.dep(b),
                        None => break,
                    }
                }
                self.push(s, T::Boolean);
            }
            11 | 12 => {
                let op = if r == 11 { Op::Count } else { Op::Exists };
                let d = match self.pick(T::TokenSet).filter(|_| self.rng.random_bool(0.3)) {
                    Some(t) => t,
                    None => self.objects(in_map),
                };
                let t = if op == Op::Count {
                    T::Integer
                } else {
                    T::Boolean
                };
                self.push(ClfStep::new(op).dep(d), t);
            }
            13 => {
                let g = self.groups();
                self.push(ClfStep::new(Op::Keys).dep(g), T::TokenSet);
            }
            14 => {
                let d = self.objects(in_map);
                self.push(ClfStep::new(Op::UniqueImages).dep(d), T::TokenSet);
            }
            15 => {
                let g = self.groups();
                let q = *[Q::Eq, Q::Geq, Q::Leq].choose(self.rng).unwrap();
                let mut s = ClfStep::qualified(Op::KeepIfValuesCount, q);
                if self.rng.random_bool(0.8) {
                    s = s.arg(self.rng.random_range(0..4u32));
                }
                self.push(s.dep(g), T::GroupedObjects);
            }
            _ => {
                let q = *[Q::Eq, Q::Geq, Q::Leq, Q::Lt, Q::Gt]
                    .choose(self.rng)
                    .unwrap();
                let mut s = ClfStep::qualified(Op::Compare, q);
                let deps = self.rng.random_range(0..=2);
                let mut used = 0;
                for _ in 0..deps {
                    if let Some(d) = self.pick(T::Integer) {
                        s = s.dep(d);
                        used += 1;
                    }
                }
                let lits = self.rng.random_range(0..=2 - used);
                for _ in 0..lits {
                    s = s.arg(self.rng.random_range(0..4u32));
                }
                self.push(s, T::Boolean);
            }
        }
    }

    fn groups(&mut self) -> usize {
        if let Some(g) = self
            .pick(T::GroupedObjects)
            .filter(|_| self.rng.random_bool(0.6))
        {
            return g;
        }
        let d = self.objects(false);
        self.push(ClfStep::new(Op::GroupByImages).dep(d), T::GroupedObjects);
        self.steps.len() - 1
    }

    fn sub_program(&mut self) -> Vec<ClfStep> {
        let mut b = Builder {
            rng: &mut *self.rng,
            steps: vec![ClfStep::new(Op::Scene)],
            types: vec![T::ObjectSet],
        };
        let extra = b.rng.random_range(0..3);
        for _ in 0..extra {
            b.random_step(true);
        }
        b.finish_boolean(true);
        b.steps
    }

    fn finish_boolean(&mut self, in_map: bool) {
        match self.types.last() {
            Some(T::Boolean) => {}
            Some(T::Integer) => {
                let last = self.steps.len() - 1;
                let n = self.rng.random_range(0..3u32);
                self.push(
                    ClfStep::qualified(Op::Compare, Q::Geq).dep(last).arg(n),
                    T::Boolean,
                );
            }
            Some(T::ObjectSet) | Some(T::TokenSet) => {
                let last = self.steps.len() - 1;
                self.push(ClfStep::new(Op::Exists).dep(last), T::Boolean);
            }
            _ => {
                let d = self.objects(in_map);
                self.push(ClfStep::new(Op::Exists).dep(d), T::Boolean);
            }
        }
    }

    fn finish_answer(&mut self) {
        let last = self.steps.len() - 1;
        match self.types[last] {
            T::Boolean | T::Integer | T::String => {}
            T::ObjectSet | T::TokenSet => {
                let op = if self.rng.random_bool(0.5) {
                    Op::Count
                } else {
                    Op::Exists
                };
                let t = if op == Op::Count {
                    T::Integer
                } else {
                    T::Boolean
                };
                self.push(ClfStep::new(op).dep(last), t);
            }
            T::GroupedObjects => {
                self.push(ClfStep::new(Op::Keys).dep(last), T::TokenSet);
                self.push(ClfStep::new(Op::Count).dep(last + 1), T::Integer);
            }
        }
    }
}

/// A program that passes validation and ends in an answer type. Missing
/// operands, non-unique and empty references all occur.
pub fn random_program<R: Rng>(rng: &mut R) -> ClfProgram {
    loop {
        let mut b = Builder {
            rng: &mut *rng,
            steps: Vec::new(),
            types: Vec::new(),
        };
        let target = b.rng.random_range(1..=MAX_STEPS - 2);
        while b.steps.len() < target {
            b.random_step(false);
        }
        b.finish_answer();
        if b.steps.len() <= MAX_STEPS {
            let p = ClfProgram::new(b.steps).expect("generator emits backward dependencies");
            debug_assert!(clfkit_core::clf::validate(&p).is_executable());
            return p;
        }
    }
}
