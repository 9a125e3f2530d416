//! Deterministic parallel execution of per-iterate simulation batches.
//!
//! Every job carries its own seed, derived from `(master, iterate,
//! replicate)` by [`derive_seed`], and results are gathered in replicate
//! order. Output is therefore bitwise identical for any worker count.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// splitmix64 finaliser; a bijection on `u64`.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for job `(iterate, replicate)` of the stream identified by `master`.
///
/// The counter `iterate << 32 | replicate` is combined with a mixed master
/// seed and passed through a bijective finaliser, so distinct
/// `(iterate, replicate)` pairs below `2^32` never share a seed.
pub fn derive_seed(master: u64, iterate: u64, replicate: u64) -> u64 {
    debug_assert!(iterate < 1 << 32 && replicate < 1 << 32);
    let counter = (iterate << 32) | (replicate & 0xffff_ffff);
    mix64(mix64(master.wrapping_add(0x9e37_79b9_7f4a_7c15)) ^ counter)
}

/// Generator used for every simulation job.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Number of hardware threads, used as the default worker count.
pub fn available_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// One unit of simulation work.
#[derive(Debug, Clone, PartialEq)]
pub struct SimJob<T> {
    pub iterate: u64,
    pub replicate: u64,
    pub seed: u64,
    pub task: T,
}

impl<T: Clone> SimJob<T> {
    /// `count` jobs for one iterate sharing the same task descriptor.
    pub fn batch(master: u64, iterate: u64, count: usize, task: T) -> Vec<Self> {
        (0..count as u64)
            .map(|k| SimJob {
                iterate,
                replicate: k,
                seed: derive_seed(master, iterate, k),
                task: task.clone(),
            })
            .collect()
    }
}

/// A fixed-size worker pool.
pub struct Executor {
    workers: usize,
    pool: Option<rayon::ThreadPool>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("workers", &self.workers).finish()
    }
}

impl Executor {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        let pool = if workers == 1 {
            None
        } else {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?,
            )
        };
        Ok(Self { workers, pool })
    }

    pub fn serial() -> Self {
        Self {
            workers: 1,
            pool: None,
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Run `f` on every job and return the results in job order.
    ///
    /// A job that panics or returns an error is retried once; a second
    /// failure aborts the batch with [`Error::JobFailed`].
    pub fn run<T, R, F>(&self, jobs: &[SimJob<T>], f: F) -> Result<Vec<R>>
    where
        T: Sync,
        R: Send,
        F: Fn(&SimJob<T>) -> Result<R> + Sync,
    {
        let attempt = |job: &SimJob<T>| -> Result<R> {
            let mut reason = String::new();
            for _ in 0..2 {
                match catch_unwind(AssertUnwindSafe(|| f(job))) {
                    Ok(Ok(r)) => return Ok(r),
                    Ok(Err(e)) => reason = e.to_string(),
                    Err(payload) => reason = panic_message(payload.as_ref()),
                }
            }
            Err(Error::JobFailed {
                iterate: job.iterate,
                replicate: job.replicate,
                reason,
            })
        };
        let results: Vec<Result<R>> = match &self.pool {
            None => jobs.iter().map(attempt).collect(),
            Some(pool) => {
                // Contiguous chunks keep stealing overhead low for short jobs.
                let min_len = jobs.len().div_ceil(self.workers * 4).max(1);
                pool.install(|| jobs.par_iter().with_min_len(min_len).map(attempt).collect())
            }
        };
        results.into_iter().collect()
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = payload.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".to_string()
    }
}

/// One-shot convenience wrapper around [`Executor::run`].
pub fn run_parallel<T, R, F>(jobs: &[SimJob<T>], worker_count: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&SimJob<T>) -> Result<R> + Sync,
{
    Executor::new(worker_count)?.run(jobs, f)
}
