//! Parallel batch execution. Results always come back in input order.

use clfkit_core::exec::{run_item, BatchItem, BatchOutcome, ExecOptions, GraphSource};
use clfkit_core::{AliasDictionary, GraphMap};
use rayon::prelude::*;

/// Runs `f` on a pool of `jobs` threads; `None` uses all available cores.
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> anyhow::Result<R> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        anyhow::ensure!(j > 0, "--jobs must be positive");
        b = b.num_threads(j);
    }
    Ok(b.build()?.install(f))
}

pub fn run_parallel(
    items: &[Option<BatchItem>],
    graphs: &GraphMap,
    source: GraphSource,
    dict: Option<&AliasDictionary>,
    opts: ExecOptions,
) -> Vec<Option<BatchOutcome>> {
    items
        .par_iter()
        .map(|it| {
            it.as_ref()
                .map(|it| run_item(it, graphs, source, dict, opts))
        })
        .collect()
}
