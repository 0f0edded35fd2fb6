//! Regeneration cycles at a fixed state and the occupation-measure identity.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmlifs::kernel::MmlifsSpec;
use crate::mmlifs::stationary::StationarySampler;
use crate::stream::{Estimate, Streams};

/// Affine map of one excursion from `i` back to `i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleSample {
    pub a: f64,
    pub b: f64,
    pub tau: usize,
}

/// Longest excursion followed before giving up.
const MAX_CYCLE: usize = 10_000_000;

fn one_cycle<R: Rng + ?Sized>(spec: &MmlifsSpec, i: usize, rng: &mut R) -> CycleSample {
    let (mut state, mut a, mut b, mut tau) = (i, 1.0, 0.0, 0);
    loop {
        let (j, ak, bk) = spec.sample_step(state, rng);
        a *= ak;
        b = ak * b + bk;
        tau += 1;
        state = j;
        if state == i || tau >= MAX_CYCLE {
            return CycleSample { a, b, tau };
        }
    }
}

/// `n_cycles` i.i.d. draws of `(A^{(i)}, B^{(i)}, τ(i))`.
pub fn return_time_embed<R: Rng + ?Sized>(spec: &MmlifsSpec, i: usize, n_cycles: usize, rng: &mut R) -> Result<Vec<CycleSample>> {
    if i >= spec.len() {
        return Err(Error::validation("state", format!("index {i} out of range")));
    }
    Ok((0..n_cycles).map(|_| one_cycle(spec, i, rng)).collect())
}

/// Batch-means estimate of `E_i|A^{(i)}|^θ`.
pub fn cycle_moment(spec: &MmlifsSpec, i: usize, theta: f64, n_cycles: usize, streams: &Streams) -> Estimate {
    streams.estimate(n_cycles, crate::stream::DEFAULT_BATCHES, |rng| {
        one_cycle(spec, i, rng).a.abs().powf(theta)
    })
}

/// The two sides of the occupation-measure formula for one test function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupationReport {
    /// `E_i Σ_{n<τ} h(ξ_n, R_n) / E_i τ`.
    pub cycle: Estimate,
    /// `E_π h(ξ_0, R_0)` from stationary draws.
    pub direct: Estimate,
    pub mean_return_time: Estimate,
}

impl OccupationReport {
    pub fn agrees(&self, k: f64) -> bool {
        self.cycle.agrees_with(&self.direct, k)
    }
}

/// Test function over `(state, value)`.
pub type TestFunction<'f> = &'f (dyn Fn(usize, f64) -> f64 + Sync);

/// Compares the cycle and the direct estimates of `E_π h`.
pub fn occupation_check(
    sampler: &StationarySampler<'_>,
    i: usize,
    h: TestFunction<'_>,
    n_cycles: usize,
    n_direct: usize,
    streams: &Streams,
) -> Result<OccupationReport> {
    let spec = sampler.spec();
    if i >= spec.len() {
        return Err(Error::validation("state", format!("index {i} out of range")));
    }
    let batches = crate::stream::DEFAULT_BATCHES;
    let parts = streams.child("cycles").run_batches(n_cycles, batches, |_, size, rng| {
        let (mut total, mut steps) = (0.0, 0usize);
        for _ in 0..size {
            let (mut state, mut r) = (i, sampler.value(i, rng));
            loop {
                total += h(state, r);
                steps += 1;
                let (j, a, b) = spec.sample_step(state, rng);
                r = a * r + b;
                state = j;
                if state == i {
                    break;
                }
            }
        }
        (total, steps, size)
    });
    let ratios: Vec<f64> = parts.iter().map(|p| p.0 / p.1 as f64).collect();
    let total: f64 = parts.iter().map(|p| p.0).sum();
    let steps: usize = parts.iter().map(|p| p.1).sum();
    let cycle = Estimate {
        mean: total / steps as f64,
        stderr: Estimate::from_batch_values(&ratios, n_cycles).stderr,
        samples: n_cycles,
    };
    let taus: Vec<(f64, usize)> = parts.iter().map(|p| (p.1 as f64, p.2)).collect();
    let direct = streams.child("direct").estimate(n_direct, batches, |rng| {
        let (s, r) = sampler.sample_stationary_pair(rng);
        h(s, r)
    });
    Ok(OccupationReport {
        cycle,
        direct,
        mean_return_time: Estimate::from_batch_sums(&taus),
    })
}
