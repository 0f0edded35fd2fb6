//! Coefficient kernels and the MMLIFS specification.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{DistributionSpec, MapSpec, MgfDomain};
use crate::linalg::Matrix;
use crate::markov::{sample_index, time_reverse_dtmc, DtmcSpec, MarkovChain, StateSpace};
use crate::mmgou::segment::{coefficients_for, epoch_target};
use crate::spectral::cramer::CramerSource;
use crate::spectral::upsilon::{upsilon_derivative, upsilon_in_domain, MatrixEstimate};
use crate::stream::Streams;

/// One atom of a joint law of `(A, B)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientAtom {
    pub a: f64,
    pub b: f64,
    pub prob: f64,
}

/// Law of `(A, B)` attached to one transition.
///
/// In the independent form `A = sign · e^G` with `P[sign = -1] = p_negative`
/// and `G`, `B` and the sign mutually independent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dependence", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CellLaw {
    Independent {
        #[serde(default)]
        p_negative: f64,
        log_abs_a: DistributionSpec,
        #[serde(default)]
        b: DistributionSpec,
    },
    Joint { atoms: Vec<CoefficientAtom> },
}

impl CellLaw {
    pub fn independent(log_abs_a: DistributionSpec, b: DistributionSpec) -> Self {
        CellLaw::Independent {
            p_negative: 0.0,
            log_abs_a,
            b,
        }
    }

    pub fn with_sign(self, p_negative: f64) -> Self {
        match self {
            CellLaw::Independent { log_abs_a, b, .. } => CellLaw::Independent {
                p_negative,
                log_abs_a,
                b,
            },
            joint => joint,
        }
    }

    /// The constant map `x -> a x + b`.
    pub fn constant(a: f64, b: f64) -> Self {
        CellLaw::Joint {
            atoms: vec![CoefficientAtom { a, b, prob: 1.0 }],
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        match self {
            CellLaw::Independent {
                p_negative,
                log_abs_a,
                b,
            } => {
                if !(0.0..=1.0).contains(p_negative) {
                    return Err(Error::validation(format!("{field}.p_negative"), "must lie in [0, 1]"));
                }
                log_abs_a.validate(&format!("{field}.log_abs_a"))?;
                b.validate(&format!("{field}.b"))
            }
            CellLaw::Joint { atoms } => {
                let f = format!("{field}.atoms");
                if atoms.is_empty() {
                    return Err(Error::validation(f, "must be nonempty"));
                }
                if atoms.iter().any(|a| a.a == 0.0) {
                    return Err(Error::validation(f, "A must be nonzero"));
                }
                if atoms
                    .iter()
                    .any(|a| !(a.a.is_finite() && a.b.is_finite() && a.prob >= 0.0))
                {
                    return Err(Error::validation(f, "atoms need finite values and nonnegative probabilities"));
                }
                let total: f64 = atoms.iter().map(|a| a.prob).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::validation(f, format!("probabilities sum to {total}, expected 1")));
                }
                Ok(())
            }
        }
    }

    /// `E|A|^θ`.
    pub fn abs_a_moment(&self, theta: f64) -> Result<f64> {
        match self {
            CellLaw::Independent { log_abs_a, .. } => log_abs_a.mgf(theta),
            CellLaw::Joint { atoms } => Ok(atoms.iter().map(|a| a.prob * a.a.abs().powf(theta)).sum()),
        }
    }

    /// `E|A|^θ log|A|`.
    pub fn abs_a_moment_derivative(&self, theta: f64) -> Result<f64> {
        match self {
            CellLaw::Independent { log_abs_a, .. } => log_abs_a.mgf_derivative(theta),
            CellLaw::Joint { atoms } => Ok(atoms
                .iter()
                .map(|a| a.prob * a.a.abs().powf(theta) * a.a.abs().ln())
                .sum()),
        }
    }

    pub fn abs_a_domain(&self) -> MgfDomain {
        match self {
            CellLaw::Independent { log_abs_a, .. } => log_abs_a.mgf_domain(),
            CellLaw::Joint { .. } => MgfDomain::REAL_LINE,
        }
    }

    /// `E|B|^p`.
    pub fn b_abs_moment(&self, p: f64) -> Result<f64> {
        match self {
            CellLaw::Independent { b, .. } => b.abs_moment(p),
            CellLaw::Joint { atoms } => Ok(atoms.iter().map(|a| a.prob * a.b.abs().powf(p)).sum()),
        }
    }

    /// `P[A < 0]` under the law tilted by `|A|^θ`.
    pub fn prob_negative(&self, theta: f64) -> f64 {
        match self {
            CellLaw::Independent { p_negative, .. } => *p_negative,
            CellLaw::Joint { atoms } => {
                let w = |a: &CoefficientAtom| a.prob * a.a.abs().powf(theta);
                let total: f64 = atoms.iter().map(w).sum();
                atoms.iter().filter(|a| a.a < 0.0).map(w).sum::<f64>() / total
            }
        }
    }

    /// `P[B = 0]`.
    pub fn prob_b_zero(&self) -> f64 {
        match self {
            CellLaw::Independent { b, .. } => b.atoms().iter().filter(|a| a.0 == 0.0).map(|a| a.1).sum(),
            CellLaw::Joint { atoms } => atoms.iter().filter(|a| a.b == 0.0).map(|a| a.prob).sum(),
        }
    }

    /// Whether `log|A|` has a continuous law.
    pub fn log_abs_a_continuous(&self) -> bool {
        match self {
            CellLaw::Independent { log_abs_a, .. } => log_abs_a.is_continuous(),
            CellLaw::Joint { .. } => false,
        }
    }

    /// The law reweighted by `|A|^θ / E|A|^θ`, when it stays in the family set.
    pub fn tilt(&self, theta: f64) -> Option<CellLaw> {
        match self {
            CellLaw::Independent {
                p_negative,
                log_abs_a,
                b,
            } => log_abs_a.tilt(theta).map(|g| CellLaw::Independent {
                p_negative: *p_negative,
                log_abs_a: g,
                b: b.clone(),
            }),
            CellLaw::Joint { atoms } => {
                let w: Vec<f64> = atoms.iter().map(|a| a.prob * a.a.abs().powf(theta)).collect();
                let total: f64 = w.iter().sum();
                Some(CellLaw::Joint {
                    atoms: atoms
                        .iter()
                        .zip(&w)
                        .map(|(a, w)| CoefficientAtom {
                            a: a.a,
                            b: a.b,
                            prob: w / total,
                        })
                        .collect(),
                })
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match self {
            CellLaw::Independent {
                p_negative,
                log_abs_a,
                b,
            } => {
                let sign = if *p_negative > 0.0 && rng.random::<f64>() < *p_negative {
                    -1.0
                } else {
                    1.0
                };
                (sign * log_abs_a.sample(rng).exp(), b.sample(rng))
            }
            CellLaw::Joint { atoms } => {
                let w: Vec<f64> = atoms.iter().map(|a| a.prob).collect();
                let a = &atoms[sample_index(&w, rng)];
                (a.a, a.b)
            }
        }
    }
}

/// Coefficient laws of an MMLIFS.
#[derive(Clone, Debug, PartialEq)]
pub enum AffineKernel {
    /// One closed-form law per transition with `p_ij > 0`.
    Explicit { n: usize, cells: Vec<Option<CellLaw>> },
    /// Coefficients at the switch epochs of a MAP, simulated with sub-step
    /// at most `dt`. Transforms of `|A|` are closed-form, laws of `B` are
    /// available only by simulation.
    Derived { map: Box<MapSpec>, dt: f64 },
}

/// A Markov-modulated linear iterated function system
/// `R_n = A_n R_{n-1} + B_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct MmlifsSpec {
    chain: DtmcSpec<f64>,
    kernel: AffineKernel,
    pi: Vec<f64>,
    dual: Matrix<f64>,
}

impl MmlifsSpec {
    /// `cells[i][j]` must be present exactly when `p_ij > 0`.
    pub fn new(chain: DtmcSpec<f64>, cells: Vec<Vec<Option<CellLaw>>>) -> Result<Self> {
        let n = chain.len();
        if cells.len() != n || cells.iter().any(|r| r.len() != n) {
            return Err(Error::validation("kernel", format!("expected an {n}x{n} table of cell laws")));
        }
        let states = chain.states();
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in cells.into_iter().enumerate() {
            for (j, cell) in row.into_iter().enumerate() {
                let field = format!("kernel[{}->{}]", states.label(i), states.label(j));
                match (&cell, chain.p()[(i, j)] > 0.0) {
                    (Some(law), true) => law.validate(&field)?,
                    (None, false) => {}
                    (Some(_), false) => {
                        return Err(Error::validation(field, "declared for a transition with zero probability"))
                    }
                    (None, true) => return Err(Error::validation(field, "missing for a transition with p > 0")),
                }
                flat.push(cell);
            }
        }
        Self::assemble(chain, AffineKernel::Explicit { n, cells: flat })
    }

    /// A single-state system with i.i.d. coefficients.
    pub fn single_state(cell: CellLaw) -> Result<Self> {
        let chain = DtmcSpec::new(StateSpace::indexed(1)?, Matrix::identity(1))?;
        Self::new(chain, vec![vec![Some(cell)]])
    }

    /// The system observed at the switch epochs of `map`.
    pub fn derived(map: &MapSpec, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::validation("dt", "must be positive"));
        }
        let chain = map.chain().embedded()?;
        Self::assemble(
            chain,
            AffineKernel::Derived {
                map: Box::new(map.clone()),
                dt,
            },
        )
    }

    fn assemble(chain: DtmcSpec<f64>, kernel: AffineKernel) -> Result<Self> {
        let law = chain.stationary_law()?;
        let dual = time_reverse_dtmc(&chain, &law)?.p().clone();
        Ok(MmlifsSpec {
            pi: law.probabilities().to_vec(),
            chain,
            kernel,
            dual,
        })
    }

    pub fn chain(&self) -> &DtmcSpec<f64> {
        &self.chain
    }

    pub fn kernel(&self) -> &AffineKernel {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    /// Stationary law of the driving chain.
    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Transition matrix of the time-reversed chain.
    pub fn dual_p(&self) -> &Matrix<f64> {
        &self.dual
    }

    pub fn map(&self) -> Option<&MapSpec> {
        match &self.kernel {
            AffineKernel::Derived { map, .. } => Some(map),
            AffineKernel::Explicit { .. } => None,
        }
    }

    pub fn is_derived(&self) -> bool {
        self.map().is_some()
    }

    pub fn cell(&self, i: usize, j: usize) -> Option<&CellLaw> {
        match &self.kernel {
            AffineKernel::Explicit { n, cells } => cells[i * n + j].as_ref(),
            AffineKernel::Derived { .. } => None,
        }
    }

    /// Transitions with positive probability.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.len();
        (0..n * n)
            .map(move |k| (k / n, k % n))
            .filter(|&(i, j)| self.chain.p()[(i, j)] > 0.0)
    }

    /// Draws `(A, B)` given the transition `i -> j`.
    pub fn sample_coefficients<R: Rng + ?Sized>(&self, i: usize, j: usize, rng: &mut R) -> (f64, f64) {
        match &self.kernel {
            AffineKernel::Explicit { n, cells } => cells[i * n + j].as_ref().expect("transition in support").sample(rng),
            AffineKernel::Derived { map, dt } => {
                let t = rand_distr::Distribution::sample(
                    &rand_distr::Exp::new(map.chain().epoch_rate(i)).expect("positive epoch rate"),
                    rng,
                );
                coefficients_for(map, i, j, t, *dt, rng)
            }
        }
    }

    /// Draws `(ξ_1, A_1, B_1)` from state `i`.
    pub fn sample_step<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> (usize, f64, f64) {
        match &self.kernel {
            AffineKernel::Explicit { .. } => {
                let j = sample_index(self.chain.p().row(i), rng);
                let (a, b) = self.sample_coefficients(i, j, rng);
                (j, a, b)
            }
            AffineKernel::Derived { map, dt } => {
                let (t, j) = epoch_target(map, i, rng);
                let (a, b) = coefficients_for(map, i, j, t, *dt, rng);
                (j, a, b)
            }
        }
    }

    /// Draws `(ξ_1, A_1)` from state `i` without simulating `B_1`. For
    /// derived kernels the ζ increment over a segment is exact in law, so the
    /// marginal of `A_1` does not depend on the sub-step.
    pub fn sample_transition_a<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> (usize, f64) {
        match &self.kernel {
            AffineKernel::Explicit { .. } => {
                let (j, a, _) = self.sample_step(i, rng);
                (j, a)
            }
            AffineKernel::Derived { map, .. } => {
                let (j, z) = crate::spectral::upsilon::sample_first_switch(map, i, rng);
                (j, (-z).exp())
            }
        }
    }

    /// Whether some transition has `P[A < 0] > 0`.
    pub fn has_negative_a(&self) -> bool {
        self.support()
            .any(|(i, j)| self.cell(i, j).is_some_and(|c| c.prob_negative(0.0) > 0.0))
    }

    /// `max_ij E|B|^p`, when available in closed form.
    pub fn max_b_abs_moment(&self, p: f64) -> Result<f64> {
        if self.is_derived() {
            return Err(Error::Unavailable("B moments of a derived kernel need simulation".into()));
        }
        self.support().try_fold(0.0f64, |m, (i, j)| {
            Ok(m.max(self.cell(i, j).expect("support").b_abs_moment(p)?))
        })
    }

    fn derived_cell(map: &MapSpec, i: usize, j: usize, theta: f64) -> Result<(f64, f64)> {
        // E_i[e^{-θ ζ_{T_1}} ; ξ_1 = j] = p_ij q_i / (q_i - ψ_i(-θ)) m_ij(-θ)
        let chain = map.chain();
        let q = chain.epoch_rate(i);
        let p = chain.epoch_weight(i, j) / q;
        let g = q - map.psi(i, -theta)?;
        if g <= 0.0 {
            return Err(Error::MomentExplosion {
                family: "levy".into(),
                w: -theta,
                detail: format!("holding factor nonpositive in state {}", chain.states().label(i)),
            });
        }
        let m = map.switch_jump(i, j).zeta_mgf(-theta)?;
        Ok((p, p * (q / g) * m))
    }
}

impl CramerSource for MmlifsSpec {
    fn dim(&self) -> usize {
        self.len()
    }

    fn cramer_matrix(&self, theta: f64) -> Result<Matrix<f64>> {
        let n = self.len();
        let mut out = Matrix::zeros(n, n);
        for (i, j) in self.support().collect::<Vec<_>>() {
            out[(i, j)] = match &self.kernel {
                AffineKernel::Explicit { .. } => self.chain.p()[(i, j)] * self.cell(i, j).expect("support").abs_a_moment(theta)?,
                AffineKernel::Derived { map, .. } => Self::derived_cell(map, i, j, theta)?.1,
            };
        }
        Ok(out)
    }

    fn cramer_derivative(&self, theta: f64) -> Result<Matrix<f64>> {
        match &self.kernel {
            AffineKernel::Derived { map, .. } => upsilon_derivative(map, theta),
            AffineKernel::Explicit { .. } => {
                let n = self.len();
                let mut out = Matrix::zeros(n, n);
                for (i, j) in self.support().collect::<Vec<_>>() {
                    out[(i, j)] =
                        self.chain.p()[(i, j)] * self.cell(i, j).expect("support").abs_a_moment_derivative(theta)?;
                }
                Ok(out)
            }
        }
    }

    fn in_domain(&self, theta: f64) -> bool {
        match &self.kernel {
            AffineKernel::Derived { map, .. } => upsilon_in_domain(map, theta),
            AffineKernel::Explicit { .. } => self
                .support()
                .all(|(i, j)| self.cell(i, j).is_some_and(|c| c.abs_a_domain().contains(theta))),
        }
    }
}

/// Monte Carlo estimate of the Cramér transform from `n` draws of
/// `(ξ_1, A_1)` per starting state.
pub fn mc_cramer_transform(
    spec: &MmlifsSpec,
    theta: f64,
    n: usize,
    streams: &Streams,
    batches: usize,
) -> Result<MatrixEstimate> {
    let dim = spec.len();
    let rows = (0..dim)
        .map(|i| {
            streams.child(&format!("row{i}")).run_batches(n, batches, |_, size, rng| {
                let mut sums = vec![0.0; dim];
                for _ in 0..size {
                    let (j, a) = spec.sample_transition_a(i, rng);
                    sums[j] += a.abs().powf(theta);
                }
                sums
            })
        })
        .collect();
    Ok(MatrixEstimate::from_row_batches(dim, rows, n))
}
