//! The sign chain `(ξ_{-n}, sign Π_{-n})` under the dual tilted measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::sample_index;
use crate::mmlifs::kernel::MmlifsSpec;
use crate::spectral::cramer::{dual_cramer, CramerSystem};
use crate::stream::{Estimate, Streams, DEFAULT_BATCHES};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignChainStats {
    /// Mean of the first `n >= 1` with `Π_{-n} >= 0`, started from `π(κ)`.
    pub mean_sigma: Estimate,
    pub occupancy_plus: Vec<Estimate>,
    pub occupancy_minus: Vec<Estimate>,
    /// `π_i(κ)/2`, the common limit of both occupancies.
    pub target: Vec<f64>,
    /// Every transition of the dual tilted chain carries both signs with
    /// positive probability.
    pub positivity: bool,
}

/// Estimates the sign-chain statistics from `n` excursions and a run of
/// `n` steps.
pub fn sign_chain_stats(spec: &MmlifsSpec, system: &CramerSystem<f64>, n: usize, streams: &Streams) -> Result<SignChainStats> {
    if !spec.has_negative_a() {
        return Err(Error::Inapplicable("P[A < 0] = 0: every product stays positive".into()));
    }
    let dim = spec.len();
    let kappa = system.theta();
    let dual = dual_cramer(system);
    let kernel = dual.p_norm().clone();
    // Dual step a -> b uses the coefficient law of the forward transition b -> a.
    let neg = |a: usize, b: usize| spec.cell(b, a).map_or(0.0, |c| c.prob_negative(kappa));
    let mut positivity = true;
    for a in 0..dim {
        for b in 0..dim {
            if kernel[(a, b)] > 0.0 {
                let p = neg(a, b);
                positivity &= p > 0.0 && p < 1.0;
            }
        }
    }
    let pi = system.pi_theta().to_vec();
    let step = |state: usize, rng: &mut crate::stream::SimRng| {
        let next = sample_index(kernel.row(state), rng);
        let flip = rand::Rng::random::<f64>(rng) < neg(state, next);
        (next, flip)
    };
    let mean_sigma = streams.child("sigma").estimate(n, DEFAULT_BATCHES, |rng| {
        let mut state = sample_index(&pi, rng);
        let mut positive = true;
        let mut sigma = 0u64;
        loop {
            let (next, flip) = step(state, rng);
            state = next;
            positive ^= flip;
            sigma += 1;
            if positive {
                return sigma as f64;
            }
        }
    });
    let counts = streams.child("occupancy").run_batches(n, DEFAULT_BATCHES, |_, size, rng| {
        let mut c = vec![0usize; 2 * dim];
        let mut state = sample_index(&pi, rng);
        let mut positive = true;
        for _ in 0..size {
            c[2 * state + usize::from(!positive)] += 1;
            let (next, flip) = step(state, rng);
            state = next;
            positive ^= flip;
        }
        (c, size)
    });
    let occupancy = |k: usize| {
        let sums: Vec<(f64, usize)> = counts.iter().map(|(c, s)| (c[k] as f64, *s)).collect();
        Estimate::from_batch_sums(&sums)
    };
    Ok(SignChainStats {
        mean_sigma,
        occupancy_plus: (0..dim).map(|i| occupancy(2 * i)).collect(),
        occupancy_minus: (0..dim).map(|i| occupancy(2 * i + 1)).collect(),
        target: pi.iter().map(|p| p / 2.0).collect(),
        positivity,
    })
}
