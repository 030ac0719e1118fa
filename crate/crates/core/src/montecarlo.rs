//! Path-parallel Monte Carlo driver.
//!
//! Every path `i` gets the stream `(master_seed, i)`; per-path results are
//! collected in index order and reduced sequentially, so estimates are
//! bit-identical for any worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{derive_stream, RngStream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub n_paths: u64,
    pub master_seed: u64,
    /// Worker cap; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl McSettings {
    pub fn new(n_paths: u64, master_seed: u64) -> Self {
        Self {
            n_paths,
            master_seed,
            threads: None,
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
}

impl Estimate {
    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I) -> Self {
        // Welford, in the given (path-index) order
        let mut n = 0u64;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for x in samples {
            n += 1;
            let d = x - mean;
            mean += d / n as f64;
            m2 += d * (x - mean);
        }
        let std_error = if n >= 2 {
            (m2 / (n - 1) as f64 / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Self { mean, std_error, n }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            mean: k * self.mean,
            std_error: k.abs() * self.std_error,
            n: self.n,
        }
    }
}

/// Runs `path_fn(i, stream_i)` for `i in 0..n_paths` and returns the results
/// in path-index order. The first failing path (by index) wins.
pub fn run_paths<T, F>(settings: &McSettings, path_fn: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut RngStream) -> Result<T> + Sync,
{
    let seed = settings.master_seed;
    let job = || -> Result<Vec<T>> {
        (0..settings.n_paths)
            .into_par_iter()
            .map(|i| path_fn(i, &mut derive_stream(seed, i)))
            .collect::<Vec<Result<T>>>()
            .into_iter()
            .collect()
    };
    match settings.threads {
        None => job(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(job),
    }
}
