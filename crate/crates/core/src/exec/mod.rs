//! CLF execution over image sets.
//!
//! Steps run in order. `scene` yields every object of the image set, or the
//! visited group inside a `map` subprogram; `find` resolves names per image
//! through the alias dictionary. The grammar checker takes the first object
//! (graph order) when a single-object operation (`choose`, `query`,
//! `verify`) receives several, fills missing Integer/Boolean operands with
//! 0/false, and stops the run with `ObjectNotFound` when such an operation
//! receives none. Set-valued operations carry empty sets along silently.

mod batch;
mod engine;
pub mod lexicon;
mod value;

pub use batch::{execute_batch, run_item, BatchError, BatchItem, BatchOutcome, GraphSource};
pub use engine::{
    execute, execute_with, ExecError, ExecOptions, ExecOutcome, GrammarEvent, GrammarEventKind,
    TraceEntry,
};
pub use value::{
    normalize_answer, Group, NonAnswerValue, ObjectRef, ObjectSet, Value, ValueSummary,
};
