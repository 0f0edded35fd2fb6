//! Keyed random streams and batch-parallel Monte Carlo.
//!
//! Every batch of work draws from its own ChaCha stream keyed by
//! `(seed, task, replicate)`. Batches run on the rayon pool and results are
//! reduced in batch order, so estimates do not depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Random number generator used by all samplers.
pub type SimRng = ChaCha8Rng;

/// Number of batches used for batch-means standard errors.
pub const DEFAULT_BATCHES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub seed: u64,
    pub task: u64,
    pub replicate: u64,
}

impl StreamKey {
    pub fn new(seed: u64, task: u64, replicate: u64) -> Self {
        StreamKey { seed, task, replicate }
    }

    pub fn rng(&self) -> SimRng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.task.to_le_bytes());
        key[16..24].copy_from_slice(&self.replicate.to_le_bytes());
        key[24..].copy_from_slice(b"mmtail\0\x01");
        SimRng::from_seed(key)
    }
}

/// Stable 64-bit id for a task name (FNV-1a).
pub fn task_id(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// A seed plus task name; derives per-batch streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Streams {
    pub seed: u64,
    pub task: u64,
}

impl Streams {
    pub fn new(seed: u64, task: &str) -> Self {
        Streams {
            seed,
            task: task_id(task),
        }
    }

    /// Derives an independent family for a sub-task.
    pub fn child(&self, name: &str) -> Self {
        Streams {
            seed: self.seed,
            task: self.task ^ task_id(name).rotate_left(17),
        }
    }

    pub fn rng(&self, replicate: u64) -> SimRng {
        StreamKey::new(self.seed, self.task, replicate).rng()
    }

    /// Runs `f(batch_index, batch_size, rng)` for each batch in parallel and
    /// returns the results in batch order.
    pub fn run_batches<T, F>(&self, total: usize, batches: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, usize, &mut SimRng) -> T + Sync,
    {
        let sizes = split_counts(total, batches);
        sizes
            .into_par_iter()
            .enumerate()
            .map(|(b, size)| {
                let mut rng = self.rng(b as u64);
                f(b, size, &mut rng)
            })
            .collect()
    }

    /// Draws `total` values with `f` and returns them in a deterministic order.
    pub fn collect<T, F>(&self, total: usize, batches: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut SimRng) -> T + Sync,
    {
        self.run_batches(total, batches, |_, size, rng| {
            (0..size).map(|_| f(rng)).collect::<Vec<T>>()
        })
        .into_iter()
        .flatten()
        .collect()
    }

    /// Mean of `f` over `total` draws with a batch-means standard error.
    pub fn estimate<F>(&self, total: usize, batches: usize, f: F) -> Estimate
    where
        F: Fn(&mut SimRng) -> f64 + Sync,
    {
        let sums = self.run_batches(total, batches, |_, size, rng| {
            let s: f64 = (0..size).map(|_| f(rng)).sum();
            (s, size)
        });
        Estimate::from_batch_sums(&sums)
    }
}

/// Splits `total` into `batches` nearly equal parts.
pub fn split_counts(total: usize, batches: usize) -> Vec<usize> {
    let batches = batches.max(1);
    (0..batches)
        .map(|b| total / batches + usize::from(b < total % batches))
        .collect()
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            mean: value,
            stderr: 0.0,
            samples: 0,
        }
    }

    /// Batch-means estimate from per-batch `(sum, count)` pairs.
    pub fn from_batch_sums(sums: &[(f64, usize)]) -> Self {
        let n: usize = sums.iter().map(|s| s.1).sum();
        let total: f64 = sums.iter().map(|s| s.0).sum();
        let means: Vec<f64> = sums
            .iter()
            .filter(|s| s.1 > 0)
            .map(|s| s.0 / s.1 as f64)
            .collect();
        Estimate {
            mean: total / n.max(1) as f64,
            stderr: stderr_of_means(&means),
            samples: n,
        }
    }

    /// Estimate of a statistic computed once per batch: the mean of the batch
    /// values and their standard deviation over `sqrt(batches)`.
    pub fn from_batch_values(values: &[f64], samples: usize) -> Self {
        let b = values.len().max(1) as f64;
        Estimate {
            mean: values.iter().sum::<f64>() / b,
            stderr: stderr_of_means(values),
            samples,
        }
    }

    /// Mean and iid standard error of a sample.
    pub fn from_sample(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Estimate {
            mean,
            stderr: (var / n).sqrt(),
            samples: xs.len(),
        }
    }

    /// `|self - target| <= k * stderr`, with a tiny absolute floor so exact
    /// zero-variance estimators compare cleanly.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr + 1e-12 * (1.0 + target.abs())
    }

    /// Agreement of two independent estimates within `k` combined errors.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        let se = self.stderr.hypot(other.stderr);
        (self.mean - other.mean).abs() <= k * se + 1e-12 * (1.0 + self.mean.abs())
    }
}

fn stderr_of_means(means: &[f64]) -> f64 {
    let b = means.len();
    if b < 2 {
        return f64::NAN;
    }
    let m = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}
