//! Seeded ensembles on a worker pool.
//!
//! Each member is a pure function of `(problem, config, seed)`, so the result
//! does not depend on the number of workers; results are collected in seed
//! order.

use rayon::prelude::*;
use snorelab_core::solvers::run_with_reference;
use snorelab_core::{RunTrace, SolverConfig};

use crate::error::{Error, Result};
use crate::problem::Problem;

/// Worker pool with `threads` workers (`0` = one per core).
pub fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Pool(e.to_string()))
}

/// Runs `config` once per seed; the seed in `config` is ignored.
pub fn run_ensemble(
    problem: &Problem,
    config: &SolverConfig,
    seeds: &[u64],
    threads: usize,
) -> Result<Vec<RunTrace>> {
    pool(threads)?.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let cfg = config.clone().with_seed(seed);
                run_with_reference(&cfg, &problem.fid, &problem.den, &problem.x0, Some(&problem.truth))
                    .map_err(Error::from)
            })
            .collect()
    })
}
