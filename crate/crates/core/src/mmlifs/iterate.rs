//! Forward iterations under the base and the tilted measure.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{sample_index, Initial};
use crate::mmlifs::kernel::{CellLaw, MmlifsSpec};
use crate::spectral::cramer::CramerSystem;

/// A realized forward iteration.
///
/// `states`, `values`, `products` and `log_walk` have length `n + 1`;
/// `a[k - 1]`, `b[k - 1]` hold `(A_k, B_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IfsPath {
    pub states: Vec<usize>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub values: Vec<f64>,
    pub products: Vec<f64>,
    pub log_walk: Vec<f64>,
    /// Log of the likelihood ratio carried by the path (zero when exact).
    pub log_weight: f64,
}

impl IfsPath {
    fn start(state: usize, r0: f64, capacity: usize) -> Self {
        let mut p = IfsPath {
            states: Vec::with_capacity(capacity + 1),
            a: Vec::with_capacity(capacity),
            b: Vec::with_capacity(capacity),
            values: Vec::with_capacity(capacity + 1),
            products: Vec::with_capacity(capacity + 1),
            log_walk: Vec::with_capacity(capacity + 1),
            log_weight: 0.0,
        };
        p.states.push(state);
        p.values.push(r0);
        p.products.push(1.0);
        p.log_walk.push(0.0);
        p
    }

    fn push(&mut self, state: usize, a: f64, b: f64) {
        let r = *self.values.last().expect("nonempty");
        let pr = *self.products.last().expect("nonempty");
        let s = *self.log_walk.last().expect("nonempty");
        self.states.push(state);
        self.a.push(a);
        self.b.push(b);
        self.values.push(a * r + b);
        self.products.push(pr * a);
        self.log_walk.push(s + a.abs().ln());
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn last_value(&self) -> f64 {
        *self.values.last().expect("nonempty")
    }

    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }
}

/// Runs `R_k = A_k R_{k-1} + B_k` for `n` steps.
pub fn forward_iterate<R: Rng + ?Sized>(
    spec: &MmlifsSpec,
    r0: f64,
    initial: &Initial,
    n: usize,
    rng: &mut R,
) -> Result<IfsPath> {
    if n == 0 {
        return Err(Error::validation("n", "must be at least 1"));
    }
    let mut path = IfsPath::start(initial.draw(rng), r0, n);
    for _ in 0..n {
        let i = *path.states.last().expect("nonempty");
        let (j, a, b) = spec.sample_step(i, rng);
        path.push(j, a, b);
    }
    Ok(path)
}

/// Whether tilted sampling may fall back to importance weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiltPolicy {
    #[default]
    ExactOnly,
    AllowWeights,
}

enum TiltedCell {
    Exact(CellLaw),
    /// Draw from the base law and weight by `|A|^θ / norm`.
    Weighted { norm: f64 },
}

/// Sampler of the chain and coefficients under `P^{(θ)}`.
pub struct TiltedSampler<'a> {
    spec: &'a MmlifsSpec,
    system: &'a CramerSystem<f64>,
    cells: Vec<Option<TiltedCell>>,
}

impl<'a> TiltedSampler<'a> {
    pub fn new(spec: &'a MmlifsSpec, system: &'a CramerSystem<f64>, policy: TiltPolicy) -> Result<Self> {
        let n = spec.len();
        if system.dim() != n {
            return Err(Error::Contract("Cramér system does not match the model".into()));
        }
        let theta = system.theta();
        let mut cells: Vec<Option<TiltedCell>> = (0..n * n).map(|_| None).collect();
        for (i, j) in spec.support().collect::<Vec<_>>() {
            let exact = spec.cell(i, j).and_then(|c| c.tilt(theta));
            cells[i * n + j] = Some(match exact {
                Some(c) => TiltedCell::Exact(c),
                None if policy == TiltPolicy::AllowWeights => TiltedCell::Weighted {
                    norm: system.p_theta()[(i, j)] / spec.chain().p()[(i, j)],
                },
                None => {
                    return Err(Error::Configuration(format!(
                        "coefficient law of {} -> {} has no closed-form tilt at theta = {theta}; enable importance weights",
                        spec.chain().states().label(i),
                        spec.chain().states().label(j)
                    )))
                }
            });
        }
        Ok(TiltedSampler { spec, system, cells })
    }

    /// Whether any transition needs importance weights.
    pub fn weighted(&self) -> bool {
        self.cells.iter().flatten().any(|c| matches!(c, TiltedCell::Weighted { .. }))
    }

    /// One tilted step from `i`: `(j, A, B, log weight)`.
    pub fn step<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> (usize, f64, f64, f64) {
        let n = self.spec.len();
        let j = sample_index(self.system.p_norm().row(i), rng);
        match self.cells[i * n + j].as_ref().expect("transition in support") {
            TiltedCell::Exact(c) => {
                let (a, b) = c.sample(rng);
                (j, a, b, 0.0)
            }
            TiltedCell::Weighted { norm } => {
                let (a, b) = self.spec.sample_coefficients(i, j, rng);
                (j, a, b, self.system.theta() * a.abs().ln() - norm.ln())
            }
        }
    }

    pub fn path<R: Rng + ?Sized>(&self, n: usize, i: usize, rng: &mut R) -> Result<IfsPath> {
        if n == 0 {
            return Err(Error::validation("n", "must be at least 1"));
        }
        let mut path = IfsPath::start(i, 0.0, n);
        for _ in 0..n {
            let s = *path.states.last().expect("nonempty");
            let (j, a, b, lw) = self.step(s, rng);
            path.log_weight += lw;
            path.push(j, a, b);
        }
        Ok(path)
    }
}

/// `n` steps from state `i` under the measure tilted at `system.theta()`.
pub fn tilted_forward<R: Rng + ?Sized>(
    spec: &MmlifsSpec,
    system: &CramerSystem<f64>,
    n: usize,
    i: usize,
    policy: TiltPolicy,
    rng: &mut R,
) -> Result<IfsPath> {
    TiltedSampler::new(spec, system, policy)?.path(n, i, rng)
}
