//! File formats, parallel execution and the command line for `clfkit-core`.
//!
//! * [`io`] reads and writes scene graphs, examples, predictions, alias
//!   dictionaries, contrast rules, coherency pairs and execution outcomes.
//! * [`pipeline`] holds the work behind each subcommand.
//! * [`report`] renders metric reports as CSV, JSON or a text table.
//! * [`cli`] parses arguments and maps failures to exit codes.

pub mod cli;
pub mod io;
pub mod par;
pub mod pipeline;
pub mod report;

pub use clfkit_core as core;
