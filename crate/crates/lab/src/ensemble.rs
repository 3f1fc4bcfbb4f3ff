use rayon::prelude::*;

use crate::error::{LabError, LabResult};

/// Evaluates `job(i)` for i in 0..n on a pool of `parallelism` workers
/// (0 means one per core). Results come back in index order; on failure the
/// error with the lowest index wins, so the outcome never depends on
/// scheduling.
pub fn run_indexed<T, F>(n: usize, parallelism: usize, job: F) -> LabResult<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> LabResult<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| LabError::config("ensemble.parallelism", e.to_string()))?;
    let results: Vec<LabResult<T>> = pool.install(|| (0..n).into_par_iter().map(&job).collect());
    results.into_iter().collect()
}
