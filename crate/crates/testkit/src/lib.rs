//! Test support: an independent reference evaluator, random generators and
//! synthetic corpora.

pub mod fixtures;
pub mod gen;
pub mod oracle;

pub use oracle::{oracle_execute, OracleOutcome};
