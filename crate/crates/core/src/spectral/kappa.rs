//! Tail index: the positive root of `ρ(θ) = 1`, and the stationary drift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::spectral::cramer::{cramer_system, CramerSource};
use crate::spectral::perron::perron;

/// Required accuracy of the root.
pub const KAPPA_TOL: f64 = 1e-10;
const FD_STEP: f64 = 1e-5;
const EDGE_MARGIN: f64 = 1e-9;
const INITIAL_THETA: f64 = 1.0 / 64.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailIndexSolution {
    pub kappa: f64,
    /// `|ρ(κ) - 1|`.
    pub residual: f64,
    /// `ρ'(κ)`.
    pub drift: f64,
    /// Set when the drift had to be taken one-sided at the domain edge.
    pub drift_boundary: bool,
    /// `ρ(lo) < 1 < ρ(hi)` unless `boundary` is set.
    pub bracket: (f64, f64),
    /// The root sits at the moment-domain edge.
    pub boundary: bool,
    pub domain_edge: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum KappaOutcome {
    Found(TailIndexSolution),
    /// `ρ(θ) < 1` on the whole searched range.
    NoTailIndex {
        theta_max: f64,
        rho_at_max: f64,
        domain_edge: Option<f64>,
    },
    /// `ρ'(0) >= 0`: the log-walk does not contract on average.
    NonContractive { drift_at_zero: f64 },
}

impl KappaOutcome {
    pub fn solution(&self) -> Option<&TailIndexSolution> {
        match self {
            KappaOutcome::Found(s) => Some(s),
            _ => None,
        }
    }

    /// The solution, or an error describing why there is none.
    pub fn require(&self) -> Result<&TailIndexSolution> {
        match self {
            KappaOutcome::Found(s) => Ok(s),
            KappaOutcome::NoTailIndex { theta_max, rho_at_max, .. } => Err(Error::Precondition(format!(
                "no tail index in the moment domain (rho({theta_max}) = {rho_at_max} < 1)"
            ))),
            KappaOutcome::NonContractive { drift_at_zero } => Err(Error::Precondition(format!(
                "non-contractive model: drift at 0 is {drift_at_zero} >= 0"
            ))),
        }
    }
}

/// Stationary drift `E^{(θ)} S_1 = ρ'(θ)/ρ(θ)` at `theta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub theta: f64,
    /// `ρ'(θ)/ρ(θ)`.
    pub value: f64,
    pub rho: f64,
    pub rho_prime: f64,
    /// Finite-difference estimate of `ρ'(θ)`.
    pub rho_prime_fd: f64,
    /// The closed-form derivative was unavailable and `value` comes from a
    /// one-sided difference.
    pub boundary: bool,
}

fn rho_at(source: &(impl CramerSource + ?Sized), theta: f64) -> Result<f64> {
    Ok(perron(&source.cramer_matrix(theta)?)?.rho)
}

/// Finite difference of `ρ`, central when both sides are in the domain.
fn rho_prime_fd(source: &(impl CramerSource + ?Sized), theta: f64, rho: f64) -> Result<(f64, bool)> {
    let h = FD_STEP;
    let up = source.in_domain(theta + h);
    let down = source.in_domain(theta - h);
    match (up, down) {
        (true, true) => Ok(((rho_at(source, theta + h)? - rho_at(source, theta - h)?) / (2.0 * h), false)),
        (false, true) => Ok(((rho - rho_at(source, theta - h)?) / h, true)),
        (true, false) => Ok(((rho_at(source, theta + h)? - rho) / h, true)),
        (false, false) => Err(Error::Numerical(format!("no finite difference possible at {theta}"))),
    }
}

/// `ρ'(θ) = u^T 𝖯'(θ) v` (with `u·v = 1`), cross-checked by finite differences.
pub fn drift(source: &(impl CramerSource + ?Sized), theta: f64) -> Result<DriftReport> {
    let sys = cramer_system(source, theta)?;
    let rho = sys.rho();
    let (fd, _) = rho_prime_fd(source, theta, rho)?;
    match source.cramer_derivative(theta) {
        Ok(d) if d.is_finite() => {
            let rho_prime = dot(&d.vec_mul(sys.u()), sys.v());
            Ok(DriftReport {
                theta,
                value: rho_prime / rho,
                rho,
                rho_prime,
                rho_prime_fd: fd,
                boundary: false,
            })
        }
        _ => Ok(DriftReport {
            theta,
            value: fd / rho,
            rho,
            rho_prime: fd,
            rho_prime_fd: fd,
            boundary: true,
        }),
    }
}

/// Locates `sup {θ : in_domain(θ)}` inside `(lo, hi)`, given that `lo` is in
/// the domain and `hi` is not.
fn domain_edge(source: &(impl CramerSource + ?Sized), mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if source.in_domain(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Solves `ρ(κ) = 1` for `κ > 0`.
///
/// The bracket grows by doubling from `1/64` until `ρ > 1`, the moment
/// domain ends, or `theta_max_hint` is passed; the root is then bisected on
/// `log ρ`, which is convex, so the positive root is unique.
pub fn solve_kappa(source: &(impl CramerSource + ?Sized), theta_max_hint: f64) -> Result<KappaOutcome> {
    let rho0 = rho_at(source, 0.0)?;
    if (rho0 - 1.0).abs() > 1e-9 {
        return Err(Error::Contract(format!("rho(0) = {rho0}, expected 1")));
    }
    let d0 = drift(source, 0.0)?;
    if d0.value >= 0.0 {
        return Ok(KappaOutcome::NonContractive {
            drift_at_zero: d0.value,
        });
    }
    let cap = theta_max_hint.max(INITIAL_THETA);
    let mut lo = 0.0;
    let mut theta = INITIAL_THETA;
    let mut edge = None;
    let hi = loop {
        let target = theta.min(cap);
        if !source.in_domain(target) {
            let e = domain_edge(source, lo, target);
            edge = Some(e);
            let last = (e - EDGE_MARGIN).max(lo);
            let r = rho_at(source, last)?;
            if (r - 1.0).abs() <= KAPPA_TOL {
                return finish(source, last, (lo, last), true, edge);
            }
            if r > 1.0 {
                break last;
            }
            return Ok(KappaOutcome::NoTailIndex {
                theta_max: last,
                rho_at_max: r,
                domain_edge: edge,
            });
        }
        let r = rho_at(source, target)?;
        if r > 1.0 {
            break target;
        }
        if target >= cap {
            return Ok(KappaOutcome::NoTailIndex {
                theta_max: target,
                rho_at_max: r,
                domain_edge: None,
            });
        }
        lo = target;
        theta *= 2.0;
    };
    let mut hi = hi;
    let mut best = (hi, f64::INFINITY);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = rho_at(source, mid)?;
        let lr = r.ln();
        if (r - 1.0).abs() < best.1 {
            best = (mid, (r - 1.0).abs());
        }
        if lr > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if best.1 <= KAPPA_TOL && hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    if best.1 > KAPPA_TOL {
        return Err(Error::Numerical(format!(
            "bisection stalled with |rho - 1| = {} in [{lo}, {hi}]",
            best.1
        )));
    }
    finish(source, best.0, (lo, hi), false, edge)
}

fn finish(
    source: &(impl CramerSource + ?Sized),
    kappa: f64,
    bracket: (f64, f64),
    boundary: bool,
    domain_edge: Option<f64>,
) -> Result<KappaOutcome> {
    let rho = rho_at(source, kappa)?;
    let d = drift(source, kappa)?;
    Ok(KappaOutcome::Found(TailIndexSolution {
        kappa,
        residual: (rho - 1.0).abs(),
        drift: d.rho_prime,
        drift_boundary: d.boundary,
        bracket,
        boundary,
        domain_edge,
    }))
}
