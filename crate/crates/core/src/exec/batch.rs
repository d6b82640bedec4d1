use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use super::engine::{execute_with, ExecError, ExecOptions, ExecOutcome};
use crate::clf::{ClfProgram, TranslateError};
use crate::scene::{AliasDictionary, GraphMap, ImageSet, ImageSetError, QaExample};

/// Which scene graphs a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphSource {
    Gold,
    Generated,
}

impl GraphSource {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphSource::Gold => "gold",
            GraphSource::Generated => "generated",
        }
    }
}

impl fmt::Display for GraphSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BatchError {
    #[error(transparent)]
    MissingGraph(#[from] ImageSetError),
    #[error("example has no program")]
    NoProgram,
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

/// One program to run over one example's images.
#[derive(Debug, Clone)]
pub struct BatchItem {
    pub example_id: String,
    pub image_ids: Vec<String>,
    pub program: Result<ClfProgram, BatchError>,
}

impl BatchItem {
    /// The example's own gold program.
    pub fn gold(ex: &QaExample) -> Self {
        BatchItem {
            example_id: ex.example_id.clone(),
            image_ids: ex.image_ids.clone(),
            program: match ex.clf_program() {
                Some(r) => r.map_err(BatchError::from),
                None => Err(BatchError::NoProgram),
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub example_id: String,
    pub source: GraphSource,
    pub result: Result<ExecOutcome, BatchError>,
}

pub fn run_item(
    item: &BatchItem,
    graphs: &GraphMap,
    source: GraphSource,
    dict: Option<&AliasDictionary>,
    opts: ExecOptions,
) -> BatchOutcome {
    let result = (|| {
        let program = item.program.as_ref().map_err(Clone::clone)?;
        let images = ImageSet::resolve(&item.image_ids, graphs)?;
        Ok(execute_with(program, &images, dict, opts)?)
    })();
    BatchOutcome {
        example_id: item.example_id.clone(),
        source,
        result,
    }
}

/// Runs every item in input order. Items whose images are missing from
/// `graphs` get a `MissingGraph` error and are otherwise skipped.
pub fn execute_batch(
    items: &[BatchItem],
    graphs: &GraphMap,
    source: GraphSource,
    dict: Option<&AliasDictionary>,
    opts: ExecOptions,
) -> Vec<BatchOutcome> {
    items
        .iter()
        .map(|it| run_item(it, graphs, source, dict, opts))
        .collect()
}
