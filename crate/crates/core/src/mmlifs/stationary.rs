//! Stationary perpetuity sampling by walking the dual chain.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::sample_index;
use crate::mmlifs::kernel::MmlifsSpec;
use crate::spectral::cramer::CramerSource;
use crate::spectral::kappa::{solve_kappa, KappaOutcome};
use crate::spectral::perron::perron;
use crate::stream::Streams;

/// Largest number of dual steps per draw.
pub const MAX_DEPTH: usize = 100_000;
const PILOT_DRAWS: usize = 4000;

/// One draw of `R_0` given `ξ_0 = state`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarySample {
    pub state: usize,
    pub value: f64,
    pub truncation_depth: usize,
    /// Bound on `E|R_0 - value|^θ*` for the tail left out.
    pub residual_bound: f64,
    pub capped: bool,
}

/// Truncated series `Σ_{k<K} Π(k) B_{-k}` with `K` fixed per model from
/// the analytic residual bound.
#[derive(Clone, Debug)]
pub struct StationarySampler<'a> {
    spec: &'a MmlifsSpec,
    theta_star: f64,
    rho_star: f64,
    b_moment: f64,
    spread: f64,
    depth: usize,
    residual_bound: f64,
    capped: bool,
}

impl<'a> StationarySampler<'a> {
    pub fn new(spec: &'a MmlifsSpec, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::validation("tol", "must be positive"));
        }
        let theta_star = match solve_kappa(spec, 64.0)? {
            KappaOutcome::Found(s) => s.kappa.min(1.0) / 2.0,
            KappaOutcome::NoTailIndex { theta_max, .. } => (theta_max / 2.0).min(0.5),
            KappaOutcome::NonContractive { drift_at_zero } => {
                return Err(Error::Precondition(format!(
                    "stationary sampling needs a contractive model; drift at 0 is {drift_at_zero}"
                )))
            }
        };
        let pd = perron(&spec.cramer_matrix(theta_star)?)?;
        if pd.rho >= 1.0 {
            return Err(Error::Precondition(format!("rho({theta_star}) = {} is not below 1", pd.rho)));
        }
        // The dual transform Π^{-1} 𝖯(θ)^T Π has right eigenvector u/π.
        let w: Vec<f64> = pd.u.iter().zip(spec.pi()).map(|(u, p)| u / p).collect();
        let spread = w.iter().cloned().fold(0.0, f64::max) / w.iter().cloned().fold(f64::INFINITY, f64::min);
        let b_moment = if spec.is_derived() {
            pilot_b_moment(spec, theta_star)
        } else {
            spec.max_b_abs_moment(theta_star).map_err(|e| {
                Error::Precondition(format!("E|B|^{theta_star} is not finite: {e}"))
            })?
        };
        let mut s = StationarySampler {
            spec,
            theta_star,
            rho_star: pd.rho,
            b_moment,
            spread,
            depth: 0,
            residual_bound: 0.0,
            capped: false,
        };
        s.depth = s.depth_for(tol);
        s.capped = s.depth > MAX_DEPTH;
        s.depth = s.depth.min(MAX_DEPTH);
        s.residual_bound = s.bound_after(s.depth);
        Ok(s)
    }

    fn bound_after(&self, k: usize) -> f64 {
        self.b_moment * self.spread * self.rho_star.powi(k as i32) / (1.0 - self.rho_star)
    }

    fn depth_for(&self, tol: f64) -> usize {
        if self.b_moment == 0.0 {
            return 0;
        }
        let k = ((tol / self.bound_after(0)).ln() / self.rho_star.ln()).ceil();
        if k <= 0.0 {
            0
        } else if k > MAX_DEPTH as f64 {
            MAX_DEPTH + 1
        } else {
            k as usize
        }
    }

    pub fn spec(&self) -> &MmlifsSpec {
        self.spec
    }

    pub fn theta_star(&self) -> f64 {
        self.theta_star
    }

    pub fn rho_star(&self) -> f64 {
        self.rho_star
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn residual_bound(&self) -> f64 {
        self.residual_bound
    }

    pub fn capped(&self) -> bool {
        self.capped
    }

    /// Draws `R_0` given `ξ_0 = i`.
    pub fn sample<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> StationarySample {
        StationarySample {
            state: i,
            value: self.value(i, rng),
            truncation_depth: self.depth,
            residual_bound: self.residual_bound,
            capped: self.capped,
        }
    }

    /// The value of [`Self::sample`] alone.
    pub fn value<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> f64 {
        self.value_with_depth(i, self.depth, rng)
    }

    pub(crate) fn value_with_depth<R: Rng + ?Sized>(&self, i: usize, depth: usize, rng: &mut R) -> f64 {
        let dual = self.spec.dual_p();
        let (mut state, mut prod, mut acc) = (i, 1.0, 0.0);
        for _ in 0..depth {
            let prev = sample_index(dual.row(state), rng);
            let (a, b) = self.spec.sample_coefficients(prev, state, rng);
            acc += prod * b;
            prod *= a;
            state = prev;
            if prod == 0.0 {
                break;
            }
        }
        acc
    }

    /// Draws `(ξ_0, R_0)` with `ξ_0 ~ π`.
    pub fn sample_stationary_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let i = sample_index(self.spec.pi(), rng);
        (i, self.value(i, rng))
    }
}

/// Upper estimate of `max_ij E[|B|^θ | i -> j]` for derived kernels, from a
/// fixed-seed pilot run, inflated by a factor 2.
fn pilot_b_moment(spec: &MmlifsSpec, theta: f64) -> f64 {
    let n = spec.len();
    let mut rng = Streams::new(0, "stationary-pilot").rng(0);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut sums = vec![(0.0, 0usize); n];
        for _ in 0..PILOT_DRAWS {
            let (j, _, b) = spec.sample_step(i, &mut rng);
            sums[j].0 += b.abs().powf(theta);
            sums[j].1 += 1;
        }
        for (s, c) in sums {
            if c > 0 {
                worst = worst.max(s / c as f64);
            }
        }
    }
    2.0 * worst
}

/// One draw of the stationary value at state `i` to tolerance `tol`.
pub fn sample_stationary<R: Rng + ?Sized>(spec: &MmlifsSpec, i: usize, tol: f64, rng: &mut R) -> Result<StationarySample> {
    Ok(StationarySampler::new(spec, tol)?.sample(i, rng))
}
