//! Finite-state Markov chains in discrete and continuous time.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Tolerances used when validating chain specifications.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainTolerances {
    pub row_sum: f64,
    pub fixed_point: f64,
}

impl Default for ChainTolerances {
    fn default() -> Self {
        ChainTolerances {
            row_sum: 1e-12,
            fixed_point: 1e-10,
        }
    }
}

/// Ordered, distinct state labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::validation("states", "state space is empty"));
        }
        for (k, l) in labels.iter().enumerate() {
            if labels[..k].contains(l) {
                return Err(Error::validation("states", format!("duplicate label {l:?}")));
            }
        }
        Ok(StateSpace { labels })
    }

    /// States labelled `0, 1, ..., n-1`.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Checks strong connectivity of the graph with an edge `i -> j` wherever
/// `m[i][j] > 0` (`i != j`). Reports states not reachable from state 0, or,
/// if all are, the states that cannot reach state 0.
pub fn check_irreducible<T: Scalar>(m: &Matrix<T>, states: &StateSpace) -> Result<()> {
    let n = m.rows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if forward { m[(i, j)] } else { m[(j, i)] };
                if i != j && w > T::zero() && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    };
    for forward in [true, false] {
        let seen = reach(forward);
        let missing: Vec<String> = (0..n)
            .filter(|&j| !seen[j])
            .map(|j| states.label(j).to_string())
            .collect();
        if !missing.is_empty() {
            let from = if forward {
                states.label(0).to_string()
            } else {
                format!("{} (reverse direction)", states.label(0))
            };
            return Err(Error::Reducible {
                from,
                unreachable: missing,
            });
        }
    }
    Ok(())
}

/// Stationary distribution of an irreducible chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryLaw<T> {
    probabilities: Vec<T>,
}

impl<T: Scalar> StationaryLaw<T> {
    /// Wraps a probability vector, checking positivity and normalization.
    pub fn new(probabilities: Vec<T>) -> Result<Self> {
        let total = probabilities.iter().fold(T::zero(), |a, &b| a + b);
        if probabilities.iter().any(|&p| p <= T::zero() || !p.is_finite())
            || (total - T::one()).abs() > T::tol_floor(1e-12) * T::lit(probabilities.len() as f64)
        {
            return Err(Error::validation(
                "stationary law",
                "entries must be positive and sum to 1",
            ));
        }
        Ok(StationaryLaw { probabilities })
    }

    pub fn probabilities(&self) -> &[T] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

/// Solves `x A = 0, sum(x) = 1` where `A` is `P - I` or `Q`, by replacing
/// one equation of the singular system with the normalization row.
fn solve_fixed_point<T: Scalar>(a: &Matrix<T>) -> Result<Vec<T>> {
    let n = a.rows();
    let mut sys = a.transpose();
    let mut rhs = vec![T::zero(); n];
    for j in 0..n {
        sys[(n - 1, j)] = T::one();
    }
    rhs[n - 1] = T::one();
    let mut x = sys.solve(&rhs)?;
    // Clean up round-off and renormalize.
    for xi in x.iter_mut() {
        if *xi < T::zero() && *xi > -T::tol_floor(1e-14) {
            *xi = T::tol_floor(1e-300);
        }
    }
    let s = x.iter().fold(T::zero(), |a, &b| a + b);
    Ok(x.into_iter().map(|p| p / s).collect())
}

/// Power iteration on the lazy chain `(I + P) / 2`, used when the direct
/// solve is numerically unusable.
fn power_fixed_point<T: Scalar>(p: &Matrix<T>) -> Vec<T> {
    let n = p.rows();
    let half = T::lit(0.5);
    let lazy = Matrix::from_fn(n, n, |i, j| {
        half * p[(i, j)] + if i == j { half } else { T::zero() }
    });
    let mut x = vec![T::one() / T::lit(n as f64); n];
    for _ in 0..1_000_000 {
        let y = lazy.vec_mul(&x);
        let done = crate::linalg::max_abs_diff(&x, &y) < T::tol_floor(1e-15);
        x = y;
        if done {
            break;
        }
    }
    x
}

/// Common interface of the two chain kinds.
pub trait MarkovChain<T: Scalar> {
    fn states(&self) -> &StateSpace;
    fn stationary_law(&self) -> Result<StationaryLaw<T>>;
    /// Residual of the stationarity equations for `pi`.
    fn fixed_point_residual(&self, pi: &[T]) -> T;
}

/// Discrete-time chain with a row-stochastic transition matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DtmcSpec<T> {
    states: StateSpace,
    p: Matrix<T>,
    tolerances: ChainTolerances,
}

impl<T: Scalar> DtmcSpec<T> {
    pub fn new(states: StateSpace, p: Matrix<T>) -> Result<Self> {
        Self::with_tolerances(states, p, ChainTolerances::default())
    }

    pub fn with_tolerances(states: StateSpace, p: Matrix<T>, tolerances: ChainTolerances) -> Result<Self> {
        let n = states.len();
        if p.rows() != n || p.cols() != n {
            return Err(Error::validation("P", format!("expected a {n}x{n} matrix")));
        }
        let tol = T::tol_floor(tolerances.row_sum) * T::lit(n as f64);
        for i in 0..n {
            if p.row(i).iter().any(|&x| x < T::zero() || !x.is_finite()) {
                return Err(Error::validation(
                    format!("P[{i}]"),
                    "entries must be finite and nonnegative",
                ));
            }
            let s = p.row(i).iter().fold(T::zero(), |a, &b| a + b);
            if (s - T::one()).abs() > tol {
                return Err(Error::validation(
                    format!("P[{i}]"),
                    format!("row sums to {s}, expected 1"),
                ));
            }
        }
        check_irreducible(&p, &states)?;
        Ok(DtmcSpec { states, p, tolerances })
    }

    pub fn p(&self) -> &Matrix<T> {
        &self.p
    }

    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn tolerances(&self) -> ChainTolerances {
        self.tolerances
    }
}

impl<T: Scalar> MarkovChain<T> for DtmcSpec<T> {
    fn states(&self) -> &StateSpace {
        &self.states
    }

    fn stationary_law(&self) -> Result<StationaryLaw<T>> {
        let n = self.len();
        let a = &self.p - &Matrix::identity(n);
        let pi = match solve_fixed_point(&a) {
            Ok(pi) if self.fixed_point_residual(&pi) <= T::tol_floor(self.tolerances.fixed_point) => pi,
            _ => power_fixed_point(&self.p),
        };
        StationaryLaw::new(pi)
    }

    fn fixed_point_residual(&self, pi: &[T]) -> T {
        crate::linalg::max_abs_diff(&self.p.vec_mul(pi), pi)
    }
}

/// Continuous-time chain given by an intensity matrix.
///
/// `self_rates` optionally adds epochs at which the chain "switches" from a
/// state to itself. They leave the law of the chain unchanged but carry
/// switch jumps in a modulated additive process, and give a single-state
/// model a nontrivial epoch structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtmcSpec<T> {
    states: StateSpace,
    q: Matrix<T>,
    self_rates: Vec<T>,
    tolerances: ChainTolerances,
}

impl<T: Scalar> CtmcSpec<T> {
    pub fn new(states: StateSpace, q: Matrix<T>) -> Result<Self> {
        let n = states.len();
        Self::with_self_rates(states, q, vec![T::zero(); n])
    }

    pub fn with_self_rates(states: StateSpace, q: Matrix<T>, self_rates: Vec<T>) -> Result<Self> {
        Self::build(states, q, self_rates, ChainTolerances::default())
    }

    pub fn build(
        states: StateSpace,
        q: Matrix<T>,
        self_rates: Vec<T>,
        tolerances: ChainTolerances,
    ) -> Result<Self> {
        let n = states.len();
        if q.rows() != n || q.cols() != n {
            return Err(Error::validation("Q", format!("expected a {n}x{n} matrix")));
        }
        if self_rates.len() != n {
            return Err(Error::validation("self_switch_rates", format!("expected {n} entries")));
        }
        if self_rates.iter().any(|&r| r < T::zero() || !r.is_finite()) {
            return Err(Error::validation("self_switch_rates", "rates must be finite and nonnegative"));
        }
        for i in 0..n {
            let row = q.row(i);
            if row.iter().any(|x| !x.is_finite())
                || row.iter().enumerate().any(|(j, &x)| j != i && x < T::zero())
            {
                return Err(Error::validation(
                    format!("Q[{i}]"),
                    "off-diagonal entries must be finite and nonnegative",
                ));
            }
            let s = row.iter().fold(T::zero(), |a, &b| a + b);
            let scale = T::one().max(q[(i, i)].abs());
            if s.abs() > T::tol_floor(tolerances.row_sum) * scale * T::lit(n as f64) {
                return Err(Error::validation(
                    format!("Q[{i}]"),
                    format!("row sums to {s}, expected 0"),
                ));
            }
        }
        check_irreducible(&q, &states)?;
        Ok(CtmcSpec {
            states,
            q,
            self_rates,
            tolerances,
        })
    }

    pub fn q(&self) -> &Matrix<T> {
        &self.q
    }

    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn self_rates(&self) -> &[T] {
        &self.self_rates
    }

    pub fn tolerances(&self) -> ChainTolerances {
        self.tolerances
    }

    /// Rate of leaving state `i`, `-q_ii`.
    pub fn exit_rate(&self, i: usize) -> T {
        -self.q[(i, i)]
    }

    /// Rate of switch epochs in state `i`, including self-switches.
    pub fn epoch_rate(&self, i: usize) -> T {
        self.exit_rate(i) + self.self_rates[i]
    }

    /// Rate of epochs of type `i -> j`; the diagonal holds the self rates.
    pub fn epoch_weight(&self, i: usize, j: usize) -> T {
        if i == j {
            self.self_rates[i]
        } else {
            self.q[(i, j)]
        }
    }

    /// Transition matrix of the chain observed at its switch epochs.
    pub fn embedded(&self) -> Result<DtmcSpec<T>> {
        let n = self.len();
        for i in 0..n {
            if self.epoch_rate(i) <= T::zero() {
                return Err(Error::Absorbing(self.states.label(i).to_string()));
            }
        }
        let p = Matrix::from_fn(n, n, |i, j| self.epoch_weight(i, j) / self.epoch_rate(i));
        DtmcSpec::with_tolerances(self.states.clone(), p, self.tolerances)
    }
}

impl<T: Scalar> MarkovChain<T> for CtmcSpec<T> {
    fn states(&self) -> &StateSpace {
        &self.states
    }

    fn stationary_law(&self) -> Result<StationaryLaw<T>> {
        let pi = match solve_fixed_point(&self.q) {
            Ok(pi) if self.fixed_point_residual(&pi) <= T::tol_floor(self.tolerances.fixed_point) => pi,
            _ => {
                let rate = (0..self.len())
                    .map(|i| self.exit_rate(i))
                    .fold(T::zero(), T::max)
                    .max(T::one());
                let uniformized = &Matrix::identity(self.len()) + &self.q.scale(T::one() / rate);
                power_fixed_point(&uniformized)
            }
        };
        StationaryLaw::new(pi)
    }

    fn fixed_point_residual(&self, pi: &[T]) -> T {
        let r = self.q.vec_mul(pi);
        r.iter().fold(T::zero(), |a, &b| a.max(b.abs()))
    }
}

fn check_stationary<T: Scalar, C: MarkovChain<T>>(spec: &C, pi: &StationaryLaw<T>, tol: f64) -> Result<()> {
    if pi.len() != spec.states().len() {
        return Err(Error::Contract("stationary law has the wrong dimension".into()));
    }
    let r = spec.fixed_point_residual(pi.probabilities());
    if r > T::tol_floor(tol) {
        return Err(Error::Contract(format!(
            "supplied law is not stationary (residual {r})"
        )));
    }
    Ok(())
}

/// Time reversal `p^_ij = pi_j p_ji / pi_i`.
pub fn time_reverse_dtmc<T: Scalar>(spec: &DtmcSpec<T>, pi: &StationaryLaw<T>) -> Result<DtmcSpec<T>> {
    check_stationary(spec, pi, spec.tolerances.fixed_point)?;
    let w = pi.probabilities();
    let n = spec.len();
    let mut p = Matrix::from_fn(n, n, |i, j| w[j] * spec.p[(j, i)] / w[i]);
    // Rows sum to one up to the fixed-point residual; renormalize so the
    // result passes the tighter row-sum check.
    for i in 0..n {
        let s = p.row(i).iter().fold(T::zero(), |a, &b| a + b);
        for j in 0..n {
            p[(i, j)] /= s;
        }
    }
    DtmcSpec::with_tolerances(spec.states.clone(), p, spec.tolerances)
}

/// Time reversal `q^_ij = pi_j q_ji / pi_i`. Self rates are unchanged.
pub fn time_reverse_ctmc<T: Scalar>(spec: &CtmcSpec<T>, pi: &StationaryLaw<T>) -> Result<CtmcSpec<T>> {
    check_stationary(spec, pi, spec.tolerances.fixed_point)?;
    let w = pi.probabilities();
    let n = spec.len();
    let mut q = Matrix::from_fn(n, n, |i, j| if i == j { T::zero() } else { w[j] * spec.q[(j, i)] / w[i] });
    for i in 0..n {
        let s = q.row(i).iter().fold(T::zero(), |a, &b| a + b);
        q[(i, i)] = -s;
    }
    CtmcSpec::build(spec.states.clone(), q, spec.self_rates.clone(), spec.tolerances)
}

/// Where a simulated path starts.
#[derive(Clone, Debug, PartialEq)]
pub enum Initial {
    State(usize),
    Law(Vec<f64>),
}

impl Initial {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            Initial::State(i) => *i,
            Initial::Law(w) => sample_index(w, rng),
        }
    }
}

/// Draws an index with probability proportional to `weights`.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if u < w {
            return k;
        }
        u -= w;
    }
    // Round-off: return the last state with positive weight.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// A piecewise-constant trajectory of a continuous-time chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtmcPath {
    /// Switch epochs, starting with `0`.
    pub epochs: Vec<f64>,
    /// State entered at each epoch.
    pub states: Vec<usize>,
    pub horizon: f64,
    /// First epoch after the horizon (infinite if the chain never leaves).
    pub next_epoch: f64,
}

impl CtmcPath {
    /// State occupied at time `t`.
    pub fn state_at(&self, t: f64) -> usize {
        let k = self.epochs.partition_point(|&e| e <= t);
        self.states[k.saturating_sub(1)]
    }

    /// Fraction of `[0, horizon]` spent in each of `n` states.
    pub fn occupancy(&self, n: usize) -> Vec<f64> {
        let mut time = vec![0.0; n];
        for (k, &s) in self.states.iter().enumerate() {
            let end = self.epochs.get(k + 1).copied().unwrap_or(self.horizon);
            time[s] += end - self.epochs[k];
        }
        time.iter().map(|t| t / self.horizon).collect()
    }
}

/// Simulates the chain on `[0, horizon]`. Only genuine state changes are
/// recorded; self-switch epochs do not alter the state.
pub fn simulate_ctmc_path<R: Rng + ?Sized>(
    spec: &CtmcSpec<f64>,
    initial: &Initial,
    horizon: f64,
    rng: &mut R,
) -> Result<CtmcPath> {
    if !(horizon > 0.0) {
        return Err(Error::validation("horizon", "must be positive"));
    }
    let n = spec.len();
    let mut state = initial.draw(rng);
    let mut t = 0.0;
    let mut epochs = vec![0.0];
    let mut states = vec![state];
    loop {
        let rate = spec.exit_rate(state);
        if rate <= 0.0 {
            if n > 1 {
                return Err(Error::Absorbing(spec.states.label(state).to_string()));
            }
            return Ok(CtmcPath {
                epochs,
                states,
                horizon,
                next_epoch: f64::INFINITY,
            });
        }
        t += Exp::new(rate).expect("positive rate").sample(rng);
        if t > horizon {
            return Ok(CtmcPath {
                epochs,
                states,
                horizon,
                next_epoch: t,
            });
        }
        let weights: Vec<f64> = (0..n)
            .map(|j| if j == state { 0.0 } else { spec.q[(state, j)] })
            .collect();
        state = sample_index(&weights, rng);
        epochs.push(t);
        states.push(state);
    }
}
