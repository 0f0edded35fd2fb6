//! The exponential functional: the stationary law of the MMGOU process.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::MapSpec;
use crate::linalg::Matrix;
use crate::markov::{sample_index, MarkovChain};
use crate::mmgou::segment::simulate_segment;
use crate::mmlifs::{MmlifsSpec, StationarySampler};
use crate::spectral::kappa::{solve_kappa, KappaOutcome};
use crate::stream::{Estimate, Streams, DEFAULT_BATCHES};

/// Epoch cap of the continuous route.
pub const MAX_EPOCHS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionalRoute {
    /// Stationary value of the jump-epoch perpetuity plus the current age.
    Perpetuity,
    /// Backward walk of the time-reversed regime chain.
    Continuous,
}

/// One draw of `V_∞` given the initial dual state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpFunctionalSample {
    pub state: usize,
    pub value: f64,
    /// Backward time covered (continuous route) or the age segment length
    /// (perpetuity route).
    pub horizon: f64,
    /// Switch epochs used.
    pub epochs: usize,
    /// Bound on the omitted tail: the analytic `L^θ*` bound of the
    /// perpetuity route, or the last cycle's largest discount factor.
    pub residual: f64,
    pub capped: bool,
}

/// Samplers of `V_∞` for one MAP.
pub struct ExpFunctional {
    map: MapSpec,
    derived: MmlifsSpec,
    dual_weights: Matrix<f64>,
    dt: f64,
    tol: f64,
}

impl ExpFunctional {
    /// Fails with a precondition error unless the first-switch walk drifts
    /// to `-∞`.
    pub fn new(map: &MapSpec, dt: f64, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::validation("tol", "must be positive"));
        }
        let derived = MmlifsSpec::derived(map, dt)?;
        if let KappaOutcome::NonContractive { drift_at_zero } = solve_kappa(map, 64.0)? {
            return Err(Error::Precondition(format!(
                "the exponential functional diverges: drift at 0 is {drift_at_zero}"
            )));
        }
        let chain = map.chain();
        let pi = chain.stationary_law()?;
        let pi = pi.probabilities();
        let n = map.len();
        let dual_weights = Matrix::from_fn(n, n, |i, k| pi[k] * chain.epoch_weight(k, i) / pi[i]);
        Ok(ExpFunctional {
            map: map.clone(),
            derived,
            dual_weights,
            dt,
            tol,
        })
    }

    pub fn map(&self) -> &MapSpec {
        &self.map
    }

    /// The MMLIFS of the coefficients at the switch epochs.
    pub fn derived(&self) -> &MmlifsSpec {
        &self.derived
    }

    pub fn perpetuity(&self) -> Result<PerpetuityRoute<'_>> {
        Ok(PerpetuityRoute {
            f: self,
            sampler: StationarySampler::new(&self.derived, self.tol)?,
        })
    }

    /// Continuous route: accumulates `∫ e^{-(ζ_0 - ζ_{s-})} dη_s` backwards
    /// in time, one regime segment at a time, and stops at a return to the
    /// initial state once the largest discount of the last cycle is below
    /// `tol (1 + |V|)`.
    pub fn continuous_sample<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> ExpFunctionalSample {
        let map = &self.map;
        let chain = map.chain();
        let (mut state, mut discount, mut acc, mut time) = (i, 1.0f64, 0.0, 0.0);
        let mut cycle_max = 1.0f64;
        let mut epochs = 0;
        loop {
            let hold = Exp::new(chain.epoch_rate(state)).expect("positive epoch rate").sample(rng);
            let seg = simulate_segment(map, state, hold, self.dt, rng);
            acc += discount * seg.b;
            discount *= (-seg.dz).exp();
            time += hold;
            let prev = sample_index(self.dual_weights.row(state), rng);
            let (zz, ze) = map.switch_jump(prev, state).sample(rng);
            discount *= (-zz).exp();
            acc += discount * ze;
            cycle_max = cycle_max.max(discount);
            epochs += 1;
            state = prev;
            if state == i {
                if cycle_max < self.tol * (1.0 + acc.abs()) || epochs >= MAX_EPOCHS {
                    return ExpFunctionalSample {
                        state: i,
                        value: acc,
                        horizon: time,
                        epochs,
                        residual: cycle_max,
                        capped: epochs >= MAX_EPOCHS,
                    };
                }
                cycle_max = 0.0;
            }
        }
    }
}

/// Perpetuity route bound to its stationary sampler.
pub struct PerpetuityRoute<'a> {
    f: &'a ExpFunctional,
    sampler: StationarySampler<'a>,
}

impl PerpetuityRoute<'_> {
    pub fn sampler(&self) -> &StationarySampler<'_> {
        &self.sampler
    }

    /// `V = e^{-Δζ} R + b` where `R` is the stationary epoch value in state
    /// `i` and `(Δζ, b)` come from an `Exp(q_i)` age segment without a
    /// switch jump.
    pub fn sample<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> ExpFunctionalSample {
        let map = &self.f.map;
        let r = self.sampler.value(i, rng);
        let age = Exp::new(map.chain().epoch_rate(i)).expect("positive epoch rate").sample(rng);
        let seg = simulate_segment(map, i, age, self.f.dt, rng);
        ExpFunctionalSample {
            state: i,
            value: (-seg.dz).exp() * r + seg.b,
            horizon: age,
            epochs: self.sampler.depth(),
            residual: self.sampler.residual_bound(),
            capped: self.sampler.capped(),
        }
    }
}

/// One draw of `V_∞` started from dual state `i`.
pub fn sample_exponential_functional<R: Rng + ?Sized>(
    map: &MapSpec,
    i: usize,
    tol: f64,
    dt: f64,
    route: FunctionalRoute,
    rng: &mut R,
) -> Result<ExpFunctionalSample> {
    let f = ExpFunctional::new(map, dt, tol)?;
    Ok(match route {
        FunctionalRoute::Perpetuity => f.perpetuity()?.sample(i, rng),
        FunctionalRoute::Continuous => f.continuous_sample(i, rng),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyVerdict {
    pub degenerate_suspect: bool,
    /// Conditional means of `V_∞`; the constants `c_i` when degenerate.
    pub means: Vec<Estimate>,
    pub variances: Vec<f64>,
}

/// Flags a model whose stationary law is a point mass in every state.
pub fn degeneracy_probe(map: &MapSpec, n: usize, dt: f64, tol: f64, streams: &Streams) -> Result<DegeneracyVerdict> {
    let f = ExpFunctional::new(map, dt, tol)?;
    let route = f.perpetuity()?;
    let mut means = Vec::new();
    let mut variances = Vec::new();
    for i in 0..map.len() {
        let xs = streams
            .child(&format!("state{i}"))
            .collect(n, DEFAULT_BATCHES, |rng| route.sample(i, rng).value);
        means.push(Estimate::from_sample(&xs));
        variances.push(crate::stats::mean_var(&xs).1);
    }
    let degenerate_suspect = means
        .iter()
        .zip(&variances)
        .all(|(m, v)| *v < 1e-12 * (1.0 + m.mean * m.mean));
    Ok(DegeneracyVerdict {
        degenerate_suspect,
        means,
        variances,
    })
}
