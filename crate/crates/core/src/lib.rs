//! Program engine and out-of-distribution test generation for scene-graph
//! visual question answering.
//!
//! The crate is `no_std` with `alloc`. File formats, IO and the command line
//! live in the `clfkit` companion crate.
//!
//! * [`scene`] holds scene graphs, image sets, QA examples and the
//!   mention-to-node alias dictionary.
//! * [`clf`] defines compositional logical forms (CLF): the 17-operation
//!   program language, its canonical text form, static validation and the
//!   translation from the original 32-operation logical forms (OLF).
//! * [`exec`] runs CLF programs over image sets with the default-value
//!   grammar checker.
//! * [`testgen`] builds segment-combine cases and quantifier contrast sets.
//! * [`metrics`] scores predictions (execution accuracy, exact match, local
//!   coherency, missing-object ratio).
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod clf;
pub mod exec;
pub mod metrics;
pub mod scene;
pub mod seed;
pub mod testgen;
pub mod token;

pub use clf::{ClfProgram, ClfStep, OlfProgram, OperationTag, Qualifier};
pub use exec::{execute, normalize_answer, ExecOutcome, GrammarEvent, GrammarEventKind, Value};
pub use scene::{AliasDictionary, GraphMap, ImageSet, ObjectNode, QaExample, SceneGraph};
