//! Implicit-renewal tail constants from coupled one-step differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::sample_index;
use crate::mmlifs::StationarySampler;
use crate::spectral::cramer::{CramerSystem, Orientation};
use crate::stream::{Estimate, Streams, DEFAULT_BATCHES};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldieConstants {
    pub kappa: f64,
    /// `C_i^+` per state.
    pub plus: Vec<Estimate>,
    /// `C_i^-` per state.
    pub minus: Vec<Estimate>,
    /// `Σ π_i C_i^±` under the stationary law of the chain.
    pub aggregate_plus: Estimate,
    pub aggregate_minus: Estimate,
    /// Some `A` is negative with positive probability; both sides are then
    /// the common value.
    pub mixed_sign: bool,
    pub samples_per_state: usize,
}

/// Estimates `C_i^±` at the tail index `system.theta()`.
///
/// For each state `j`, `ξ_{-1}` is drawn from the dual row of `j`, `R_{-1}`
/// from the stationary law at `ξ_{-1}` and `(A_0, B_0)` from the kernel of
/// `ξ_{-1} -> j`. Both `κ`-powers in
/// `I_j = E_j[(R_0^+)^κ - ((A_0 R_{-1})^+)^κ]` use the same draw. With
/// `w = u/π`, the right Perron vector of the dual-chain transform
/// `π_j 𝖯_ji(κ) / π_i`, the constants are
/// `C_i^+ = w_i / (κ ρ'(κ)) Σ_j π_j(κ) I_j^+ / w_j`.
pub fn goldie_constant(
    sampler: &StationarySampler<'_>,
    system: &CramerSystem<f64>,
    drift: f64,
    n: usize,
    streams: &Streams,
) -> Result<GoldieConstants> {
    let spec = sampler.spec();
    if system.orientation() != Orientation::Primal || system.dim() != spec.len() {
        return Err(Error::Contract("expected the primal Cramér system of the model".into()));
    }
    if !(drift > 0.0 && drift.is_finite()) {
        return Err(Error::Unavailable(format!(
            "tail constants need a finite positive drift at kappa, got {drift}"
        )));
    }
    let kappa = system.theta();
    let dim = spec.len();
    let mixed = spec.has_negative_a();
    let dual = spec.dual_p();
    // Per state: estimates of I_j^+ and I_j^- (or the |.|^κ version twice).
    let mut parts = Vec::with_capacity(dim);
    for j in 0..dim {
        let sums = streams.child(&format!("state{j}")).run_batches(n, DEFAULT_BATCHES, |_, size, rng| {
            let (mut p, mut m) = (0.0, 0.0);
            for _ in 0..size {
                let prev = sample_index(dual.row(j), rng);
                let r = sampler.value(prev, rng);
                let (a, b) = spec.sample_coefficients(prev, j, rng);
                let (ar, r0) = (a * r, a * r + b);
                if mixed {
                    p += r0.abs().powf(kappa) - ar.abs().powf(kappa);
                } else {
                    p += r0.max(0.0).powf(kappa) - ar.max(0.0).powf(kappa);
                    m += (-r0).max(0.0).powf(kappa) - (-ar).max(0.0).powf(kappa);
                }
            }
            (p, m, size)
        });
        let plus = Estimate::from_batch_sums(&sums.iter().map(|s| (s.0, s.2)).collect::<Vec<_>>());
        let minus = Estimate::from_batch_sums(&sums.iter().map(|s| (s.1, s.2)).collect::<Vec<_>>());
        if !(plus.mean.is_finite() && plus.stderr.is_finite() && minus.mean.is_finite() && minus.stderr.is_finite()) {
            return Err(Error::Unavailable(format!(
                "coupled differences overflowed in state {j} with n = {n}; increase n or lower the tolerance"
            )));
        }
        parts.push((plus, minus));
    }
    let pi = spec.pi();
    let w: Vec<f64> = system.u().iter().zip(pi).map(|(u, p)| u / p).collect();
    let pi_k = system.pi_theta();
    let scale = if mixed { 2.0 } else { 1.0 } * kappa * drift;
    // S^± = Σ_j π_j(κ) I_j^± / (w_j κ ρ'), C_i^± = w_i S^±.
    let combine = |pick: &dyn Fn(&(Estimate, Estimate)) -> Estimate| {
        let mean: f64 = (0..dim).map(|j| pi_k[j] / w[j] * pick(&parts[j]).mean).sum::<f64>() / scale;
        let var: f64 = (0..dim)
            .map(|j| (pi_k[j] / w[j] * pick(&parts[j]).stderr / scale).powi(2))
            .sum();
        (mean, var.sqrt())
    };
    let s_plus = combine(&|p| p.0);
    let s_minus = if mixed { s_plus } else { combine(&|p| p.1) };
    let per_state = |s: (f64, f64)| -> Vec<Estimate> {
        w.iter()
            .map(|wi| Estimate {
                mean: s.0 * wi,
                stderr: s.1 * wi,
                samples: n,
            })
            .collect()
    };
    let aggregate = |c: &[Estimate]| Estimate {
        mean: c.iter().zip(pi).map(|(e, p)| p * e.mean).sum(),
        stderr: c.iter().zip(pi).map(|(e, p)| p * e.stderr).sum(),
        samples: n * dim,
    };
    let (plus, minus) = (per_state(s_plus), per_state(s_minus));
    Ok(GoldieConstants {
        kappa,
        aggregate_plus: aggregate(&plus),
        aggregate_minus: aggregate(&minus),
        plus,
        minus,
        mixed_sign: mixed,
        samples_per_state: n,
    })
}
