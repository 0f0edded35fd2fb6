//! Parametric laws, Lévy components and the Markov-additive model.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::markov::{time_reverse_ctmc, CtmcSpec, MarkovChain};
use crate::quadrature::integrate;

const QUAD_TOL: f64 = 1e-13;
/// Standard normal integrals are truncated to `[-Z_CUT, Z_CUT]`.
const Z_CUT: f64 = 12.0;

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Interval on which a moment transform is finite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MgfDomain {
    pub lower: f64,
    pub upper: f64,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl MgfDomain {
    pub const REAL_LINE: MgfDomain = MgfDomain {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
        lower_closed: false,
        upper_closed: false,
    };

    pub fn contains(&self, w: f64) -> bool {
        let lo = if self.lower_closed { w >= self.lower } else { w > self.lower };
        let hi = if self.upper_closed { w <= self.upper } else { w < self.upper };
        lo && hi && w.is_finite()
    }

    /// Strictly inside the domain.
    pub fn interior(&self, w: f64) -> bool {
        w > self.lower && w < self.upper
    }

    pub fn mirrored(&self) -> MgfDomain {
        MgfDomain {
            lower: -self.upper,
            upper: -self.lower,
            lower_closed: self.upper_closed,
            upper_closed: self.lower_closed,
        }
    }

    pub fn intersect(&self, other: &MgfDomain) -> MgfDomain {
        let (lower, lower_closed) = if self.lower > other.lower {
            (self.lower, self.lower_closed)
        } else if other.lower > self.lower {
            (other.lower, other.lower_closed)
        } else {
            (self.lower, self.lower_closed && other.lower_closed)
        };
        let (upper, upper_closed) = if self.upper < other.upper {
            (self.upper, self.upper_closed)
        } else if other.upper < self.upper {
            (other.upper, other.upper_closed)
        } else {
            (self.upper, self.upper_closed && other.upper_closed)
        };
        MgfDomain {
            lower,
            upper,
            lower_closed,
            upper_closed,
        }
    }
}

/// A closed set of one-dimensional laws with known moment transforms.
///
/// `two-point` puts mass `p` on `x1` and `1 - p` on `x2`; `normal` and
/// `lognormal` are parameterized by the variance of the underlying normal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    PointMass { value: f64 },
    TwoPoint { x1: f64, p: f64, x2: f64 },
    Uniform { a: f64, b: f64 },
    Normal { mean: f64, var: f64 },
    Lognormal { mu: f64, var: f64 },
    Exponential { rate: f64 },
    NegatedExponential { rate: f64 },
    Pareto { scale: f64, shape: f64 },
    Negated { of: Box<DistributionSpec> },
}

impl Default for DistributionSpec {
    fn default() -> Self {
        DistributionSpec::PointMass { value: 0.0 }
    }
}

impl DistributionSpec {
    pub fn point(value: f64) -> Self {
        DistributionSpec::PointMass { value }
    }

    pub fn normal(mean: f64, var: f64) -> Self {
        DistributionSpec::Normal { mean, var }
    }

    pub fn family(&self) -> &'static str {
        match self {
            DistributionSpec::PointMass { .. } => "point-mass",
            DistributionSpec::TwoPoint { .. } => "two-point",
            DistributionSpec::Uniform { .. } => "uniform",
            DistributionSpec::Normal { .. } => "normal",
            DistributionSpec::Lognormal { .. } => "lognormal",
            DistributionSpec::Exponential { .. } => "exponential",
            DistributionSpec::NegatedExponential { .. } => "negated-exponential",
            DistributionSpec::Pareto { .. } => "pareto",
            DistributionSpec::Negated { .. } => "negated",
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        use DistributionSpec::*;
        let finite = |x: f64, name: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(format!("{field}.{name}"), "must be finite"))
            }
        };
        let positive = |x: f64, name: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(format!("{field}.{name}"), "must be positive"))
            }
        };
        match self {
            PointMass { value } => finite(*value, "value"),
            TwoPoint { x1, p, x2 } => {
                finite(*x1, "x1")?;
                finite(*x2, "x2")?;
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::validation(format!("{field}.p"), "must lie in [0, 1]"));
                }
                Ok(())
            }
            Uniform { a, b } => {
                finite(*a, "a")?;
                finite(*b, "b")?;
                if a >= b {
                    return Err(Error::validation(format!("{field}.b"), "requires a < b"));
                }
                Ok(())
            }
            Normal { mean, var } => {
                finite(*mean, "mean")?;
                positive(*var, "var")
            }
            Lognormal { mu, var } => {
                finite(*mu, "mu")?;
                positive(*var, "var")
            }
            Exponential { rate } | NegatedExponential { rate } => positive(*rate, "rate"),
            Pareto { scale, shape } => {
                positive(*scale, "scale")?;
                positive(*shape, "shape")
            }
            Negated { of } => of.validate(&format!("{field}.of")),
        }
    }

    /// Law of `-Z`.
    pub fn negated(&self) -> DistributionSpec {
        use DistributionSpec::*;
        match self {
            PointMass { value } => PointMass { value: -value },
            TwoPoint { x1, p, x2 } => TwoPoint {
                x1: -x1,
                p: *p,
                x2: -x2,
            },
            Uniform { a, b } => Uniform { a: -b, b: -a },
            Normal { mean, var } => Normal {
                mean: -mean,
                var: *var,
            },
            Exponential { rate } => NegatedExponential { rate: *rate },
            NegatedExponential { rate } => Exponential { rate: *rate },
            Negated { of } => (**of).clone(),
            other => Negated {
                of: Box::new(other.clone()),
            },
        }
    }

    pub fn mgf_domain(&self) -> MgfDomain {
        use DistributionSpec::*;
        match self {
            Lognormal { .. } | Pareto { .. } => MgfDomain {
                lower: f64::NEG_INFINITY,
                upper: 0.0,
                lower_closed: false,
                upper_closed: true,
            },
            Exponential { rate } => MgfDomain {
                lower: f64::NEG_INFINITY,
                upper: *rate,
                lower_closed: false,
                upper_closed: false,
            },
            NegatedExponential { rate } => MgfDomain {
                lower: -rate,
                upper: f64::INFINITY,
                lower_closed: false,
                upper_closed: false,
            },
            Negated { of } => of.mgf_domain().mirrored(),
            _ => MgfDomain::REAL_LINE,
        }
    }

    fn explosion(&self, w: f64, detail: &str) -> Error {
        Error::MomentExplosion {
            family: self.family().to_string(),
            w,
            detail: detail.to_string(),
        }
    }

    fn check_domain(&self, w: f64) -> Result<()> {
        if self.mgf_domain().contains(w) {
            Ok(())
        } else {
            Err(self.explosion(w, "outside the moment-transform domain"))
        }
    }

    /// `E[exp(w Z)]`.
    pub fn mgf(&self, w: f64) -> Result<f64> {
        use DistributionSpec::*;
        self.check_domain(w)?;
        let v = match self {
            PointMass { value } => (w * value).exp(),
            TwoPoint { x1, p, x2 } => p * (w * x1).exp() + (1.0 - p) * (w * x2).exp(),
            Uniform { a, b } => {
                let x = w * (b - a);
                if x.abs() < 1e-10 {
                    (w * a).exp() * (1.0 + 0.5 * x)
                } else {
                    (w * a).exp() * x.exp_m1() / x
                }
            }
            Normal { mean, var } => (mean * w + 0.5 * var * w * w).exp(),
            Lognormal { mu, var } => {
                if w == 0.0 {
                    1.0
                } else {
                    let s = var.sqrt();
                    integrate(
                        |z| (w * (mu + s * z).exp()).exp() * std_normal_pdf(z),
                        -Z_CUT,
                        Z_CUT,
                        QUAD_TOL,
                    )?
                }
            }
            Exponential { rate } => rate / (rate - w),
            NegatedExponential { rate } => rate / (rate + w),
            Pareto { scale, shape } => {
                if w == 0.0 {
                    1.0
                } else {
                    integrate(
                        |u| {
                            if u <= 0.0 {
                                0.0
                            } else {
                                (w * scale * u.powf(-1.0 / shape)).exp()
                            }
                        },
                        0.0,
                        1.0,
                        QUAD_TOL,
                    )?
                }
            }
            Negated { of } => of.mgf(-w)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.explosion(w, "transform overflowed"))
        }
    }

    /// `E[Z exp(w Z)]`, the derivative of [`Self::mgf`].
    pub fn mgf_derivative(&self, w: f64) -> Result<f64> {
        use DistributionSpec::*;
        self.check_domain(w)?;
        let v = match self {
            PointMass { value } => value * (w * value).exp(),
            TwoPoint { x1, p, x2 } => p * x1 * (w * x1).exp() + (1.0 - p) * x2 * (w * x2).exp(),
            Uniform { a, b } => {
                integrate(|x| x * (w * x).exp(), *a, *b, QUAD_TOL)? / (b - a)
            }
            Normal { mean, var } => (mean + var * w) * self.mgf(w)?,
            Lognormal { mu, var } => {
                if w == 0.0 {
                    (mu + 0.5 * var).exp()
                } else {
                    let s = var.sqrt();
                    integrate(
                        |z| {
                            let x = (mu + s * z).exp();
                            x * (w * x).exp() * std_normal_pdf(z)
                        },
                        -Z_CUT,
                        Z_CUT,
                        QUAD_TOL,
                    )?
                }
            }
            Exponential { rate } => rate / (rate - w).powi(2),
            NegatedExponential { rate } => -rate / (rate + w).powi(2),
            Pareto { scale, shape } => {
                if w == 0.0 {
                    if *shape <= 1.0 {
                        return Err(self.explosion(w, "first moment is infinite"));
                    }
                    shape * scale / (shape - 1.0)
                } else {
                    integrate(
                        |u| {
                            if u <= 0.0 {
                                0.0
                            } else {
                                let x = scale * u.powf(-1.0 / shape);
                                x * (w * x).exp()
                            }
                        },
                        0.0,
                        1.0,
                        QUAD_TOL,
                    )?
                }
            }
            Negated { of } => -of.mgf_derivative(-w)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.explosion(w, "derivative overflowed"))
        }
    }

    /// `E|Z|^p` for `p > 0`.
    pub fn abs_moment(&self, p: f64) -> Result<f64> {
        use DistributionSpec::*;
        if p == 0.0 {
            return Ok(1.0);
        }
        let v = match self {
            PointMass { value } => value.abs().powf(p),
            TwoPoint { x1, p: q, x2 } => q * x1.abs().powf(p) + (1.0 - q) * x2.abs().powf(p),
            Uniform { a, b } => {
                let f = |x: f64| x.signum() * x.abs().powf(p + 1.0) / (p + 1.0);
                (f(*b) - f(*a)) / (b - a)
            }
            Normal { mean, var } => {
                let s = var.sqrt();
                if *mean == 0.0 {
                    s.powf(p) * 2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / PI.sqrt()
                } else {
                    let g = |z: f64| (mean + s * z).abs().powf(p) * std_normal_pdf(z);
                    let kink = (-mean / s).clamp(-Z_CUT - 20.0, Z_CUT + 20.0);
                    let lo = -Z_CUT - mean.abs() / s;
                    let hi = Z_CUT + mean.abs() / s;
                    integrate(g, lo, kink, QUAD_TOL)? + integrate(g, kink, hi, QUAD_TOL)?
                }
            }
            Lognormal { mu, var } => (p * mu + 0.5 * p * p * var).exp(),
            Exponential { rate } | NegatedExponential { rate } => gamma(p + 1.0) / rate.powf(p),
            Pareto { scale, shape } => {
                if p >= *shape {
                    return Err(self.explosion(p, "absolute moment of this order is infinite"));
                }
                shape * scale.powf(p) / (shape - p)
            }
            Negated { of } => of.abs_moment(p)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.explosion(p, "absolute moment overflowed"))
        }
    }

    /// Supremum of orders `p` with `E|Z|^p` finite (infinite for light tails).
    pub fn abs_moment_bound(&self) -> f64 {
        match self {
            DistributionSpec::Pareto { shape, .. } => *shape,
            DistributionSpec::Negated { of } => of.abs_moment_bound(),
            _ => f64::INFINITY,
        }
    }

    pub fn mean(&self) -> f64 {
        use DistributionSpec::*;
        match self {
            PointMass { value } => *value,
            TwoPoint { x1, p, x2 } => p * x1 + (1.0 - p) * x2,
            Uniform { a, b } => 0.5 * (a + b),
            Normal { mean, .. } => *mean,
            Lognormal { mu, var } => (mu + 0.5 * var).exp(),
            Exponential { rate } => 1.0 / rate,
            NegatedExponential { rate } => -1.0 / rate,
            Pareto { scale, shape } => {
                if *shape > 1.0 {
                    shape * scale / (shape - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            Negated { of } => -of.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        use DistributionSpec::*;
        match self {
            PointMass { .. } => 0.0,
            TwoPoint { x1, p, x2 } => p * (1.0 - p) * (x1 - x2).powi(2),
            Uniform { a, b } => (b - a).powi(2) / 12.0,
            Normal { var, .. } => *var,
            Lognormal { mu, var } => (var.exp() - 1.0) * (2.0 * mu + var).exp(),
            Exponential { rate } | NegatedExponential { rate } => 1.0 / (rate * rate),
            Pareto { scale, shape } => {
                if *shape > 2.0 {
                    scale * scale * shape / ((shape - 1.0).powi(2) * (shape - 2.0))
                } else {
                    f64::INFINITY
                }
            }
            Negated { of } => of.variance(),
        }
    }

    /// `E[Z^2]`.
    pub fn second_moment(&self) -> f64 {
        self.variance() + self.mean().powi(2)
    }

    /// Atoms with positive mass; empty for atomless laws.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        use DistributionSpec::*;
        match self {
            PointMass { value } => vec![(*value, 1.0)],
            TwoPoint { x1, p, x2 } => {
                if x1 == x2 {
                    vec![(*x1, 1.0)]
                } else {
                    [(*x1, *p), (*x2, 1.0 - p)]
                        .into_iter()
                        .filter(|a| a.1 > 0.0)
                        .collect()
                }
            }
            Negated { of } => of.atoms().into_iter().map(|(x, p)| (-x, p)).collect(),
            _ => Vec::new(),
        }
    }

    pub fn is_continuous(&self) -> bool {
        self.atoms().is_empty()
    }

    /// The exponentially tilted law `e^{theta z} F(dz) / m(theta)` when it is
    /// again a member of the family set.
    pub fn tilt(&self, theta: f64) -> Option<DistributionSpec> {
        use DistributionSpec::*;
        if theta == 0.0 {
            return Some(self.clone());
        }
        match self {
            PointMass { .. } => Some(self.clone()),
            TwoPoint { x1, p, x2 } => {
                let w1 = p * (theta * x1).exp();
                let w2 = (1.0 - p) * (theta * x2).exp();
                Some(TwoPoint {
                    x1: *x1,
                    p: w1 / (w1 + w2),
                    x2: *x2,
                })
            }
            Normal { mean, var } => Some(Normal {
                mean: mean + theta * var,
                var: *var,
            }),
            Exponential { rate } if theta < *rate => Some(Exponential { rate: rate - theta }),
            NegatedExponential { rate } if theta > -rate => Some(NegatedExponential { rate: rate + theta }),
            Negated { of } => of.tilt(-theta).map(|d| d.negated()),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use DistributionSpec::*;
        match self {
            PointMass { value } => *value,
            TwoPoint { x1, p, x2 } => {
                if rng.random::<f64>() < *p {
                    *x1
                } else {
                    *x2
                }
            }
            Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Normal { mean, var } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + var.sqrt() * z
            }
            Lognormal { mu, var } => LogNormal::new(*mu, var.sqrt()).expect("validated").sample(rng),
            Exponential { rate } => Exp::new(*rate).expect("validated").sample(rng),
            NegatedExponential { rate } => -Exp::new(*rate).expect("validated").sample(rng),
            Pareto { scale, shape } => rand_distr::Pareto::new(*scale, *shape).expect("validated").sample(rng),
            Negated { of } => -of.sample(rng),
        }
    }
}

/// A Lévy process with drift, Brownian part and compound Poisson jumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyComponentSpec {
    #[serde(default)]
    pub drift: f64,
    #[serde(default)]
    pub gaussian_var: f64,
    #[serde(default)]
    pub cp_rate: f64,
    #[serde(default)]
    pub cp_jump: DistributionSpec,
}

impl Default for LevyComponentSpec {
    fn default() -> Self {
        LevyComponentSpec::zero()
    }
}

/// Decomposition of one increment.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IncrementParts {
    pub drift: f64,
    pub gaussian: f64,
    pub jumps: f64,
}

impl IncrementParts {
    pub fn total(&self) -> f64 {
        self.drift + self.gaussian + self.jumps
    }
}

impl LevyComponentSpec {
    pub fn zero() -> Self {
        LevyComponentSpec {
            drift: 0.0,
            gaussian_var: 0.0,
            cp_rate: 0.0,
            cp_jump: DistributionSpec::default(),
        }
    }

    pub fn brownian(drift: f64, gaussian_var: f64) -> Self {
        LevyComponentSpec {
            drift,
            gaussian_var,
            ..Self::zero()
        }
    }

    pub fn compound_poisson(cp_rate: f64, cp_jump: DistributionSpec) -> Self {
        LevyComponentSpec {
            cp_rate,
            cp_jump,
            ..Self::zero()
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if !self.drift.is_finite() {
            return Err(Error::validation(format!("{field}.drift"), "must be finite"));
        }
        if !(self.gaussian_var >= 0.0 && self.gaussian_var.is_finite()) {
            return Err(Error::validation(
                format!("{field}.gaussian_var"),
                "must be finite and nonnegative",
            ));
        }
        if !(self.cp_rate >= 0.0 && self.cp_rate.is_finite()) {
            return Err(Error::validation(
                format!("{field}.cp_rate"),
                "must be finite and nonnegative",
            ));
        }
        self.cp_jump.validate(&format!("{field}.cp_jump"))
    }

    pub fn is_zero(&self) -> bool {
        self.drift == 0.0 && self.gaussian_var == 0.0 && (self.cp_rate == 0.0 || self.cp_jump == DistributionSpec::point(0.0))
    }

    /// Finite variation with zero drift.
    pub fn is_pure_jump(&self) -> bool {
        self.gaussian_var == 0.0 && self.drift == 0.0
    }

    pub fn domain(&self) -> MgfDomain {
        if self.cp_rate > 0.0 {
            self.cp_jump.mgf_domain()
        } else {
            MgfDomain::REAL_LINE
        }
    }

    /// `psi(w) = b w + s^2 w^2 / 2 + lambda (m(w) - 1)`.
    pub fn laplace_exponent(&self, w: f64) -> Result<f64> {
        let jump = if self.cp_rate > 0.0 {
            self.cp_rate * (self.cp_jump.mgf(w)? - 1.0)
        } else {
            0.0
        };
        Ok(self.drift * w + 0.5 * self.gaussian_var * w * w + jump)
    }

    pub fn laplace_exponent_derivative(&self, w: f64) -> Result<f64> {
        let jump = if self.cp_rate > 0.0 {
            self.cp_rate * self.cp_jump.mgf_derivative(w)?
        } else {
            0.0
        };
        Ok(self.drift + self.gaussian_var * w + jump)
    }

    /// `E[X_1]`.
    pub fn mean_rate(&self) -> f64 {
        self.drift + if self.cp_rate > 0.0 { self.cp_rate * self.cp_jump.mean() } else { 0.0 }
    }

    /// `Var[X_1]`.
    pub fn variance_rate(&self) -> f64 {
        self.gaussian_var
            + if self.cp_rate > 0.0 {
                self.cp_rate * self.cp_jump.second_moment()
            } else {
                0.0
            }
    }

    /// The time-reversed component: drift and jumps negated, variance kept.
    pub fn negated(&self) -> Self {
        LevyComponentSpec {
            drift: -self.drift,
            gaussian_var: self.gaussian_var,
            cp_rate: self.cp_rate,
            cp_jump: self.cp_jump.negated(),
        }
    }

    /// Draws the compound Poisson part over `dt`, reporting each jump.
    pub(crate) fn sample_jumps<R: Rng + ?Sized>(
        &self,
        dt: f64,
        rng: &mut R,
        on_jump: &mut impl FnMut(f64),
    ) -> f64 {
        if self.cp_rate <= 0.0 {
            return 0.0;
        }
        let count = Poisson::new(self.cp_rate * dt).expect("positive mean").sample(rng) as u64;
        (0..count)
            .map(|_| {
                let z = self.cp_jump.sample(rng);
                on_jump(z);
                z
            })
            .sum()
    }

    pub fn sample_parts<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> IncrementParts {
        let gaussian = if self.gaussian_var > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            (self.gaussian_var * dt).sqrt() * z
        } else {
            0.0
        };
        IncrementParts {
            drift: self.drift * dt,
            gaussian,
            jumps: self.sample_jumps(dt, rng, &mut |_| {}),
        }
    }
}

/// Exact-in-law increment of a Lévy component over `dt`.
pub fn sample_levy_increment<R: Rng + ?Sized>(spec: &LevyComponentSpec, dt: f64, rng: &mut R) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::validation("dt", "must be positive"));
    }
    Ok(spec.sample_parts(dt, rng).total())
}

/// Factorization of a 2x2 Brownian covariance: `W_zeta = sd_zeta z1`,
/// `W_eta = a z1 + b z2` per unit time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPair {
    pub sd_zeta: f64,
    pub a: f64,
    pub b: f64,
}

impl GaussianPair {
    pub fn new(var_zeta: f64, var_eta: f64, cov: f64) -> Result<Self> {
        let bound = (var_zeta * var_eta).sqrt();
        if cov.abs() > bound * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::validation(
                "cov",
                format!("|cov| = {} exceeds sd_zeta * sd_eta = {bound}", cov.abs()),
            ));
        }
        let sd_zeta = var_zeta.sqrt();
        let a = if sd_zeta > 0.0 { cov / sd_zeta } else { 0.0 };
        let b = (var_eta - a * a).max(0.0).sqrt();
        Ok(GaussianPair { sd_zeta, a, b })
    }
}

/// Joint increment of `(zeta, eta)` over one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BivariateIncrement {
    pub zeta: IncrementParts,
    pub eta: IncrementParts,
}

/// Which additive component a recorded jump belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    Zeta,
    Eta,
}

pub(crate) fn bivariate_with_jumps<R: Rng + ?Sized>(
    zeta: &LevyComponentSpec,
    eta: &LevyComponentSpec,
    pair: &GaussianPair,
    dt: f64,
    rng: &mut R,
    on_jump: &mut impl FnMut(Component, f64),
) -> BivariateIncrement {
    let sq = dt.sqrt();
    let (mut gz, mut ge) = (0.0, 0.0);
    if pair.sd_zeta > 0.0 || pair.a != 0.0 {
        let z1: f64 = StandardNormal.sample(rng);
        gz = pair.sd_zeta * sq * z1;
        ge = pair.a * sq * z1;
    }
    if pair.b > 0.0 {
        let z2: f64 = StandardNormal.sample(rng);
        ge += pair.b * sq * z2;
    }
    let jz = zeta.sample_jumps(dt, rng, &mut |z| on_jump(Component::Zeta, z));
    let je = eta.sample_jumps(dt, rng, &mut |z| on_jump(Component::Eta, z));
    BivariateIncrement {
        zeta: IncrementParts {
            drift: zeta.drift * dt,
            gaussian: gz,
            jumps: jz,
        },
        eta: IncrementParts {
            drift: eta.drift * dt,
            gaussian: ge,
            jumps: je,
        },
    }
}

/// Correlated increment of `(zeta, eta)`: Brownian parts with covariance
/// `cov * dt`, independent jump parts.
pub fn sample_bivariate_increment<R: Rng + ?Sized>(
    zeta: &LevyComponentSpec,
    eta: &LevyComponentSpec,
    cov: f64,
    dt: f64,
    rng: &mut R,
) -> Result<BivariateIncrement> {
    if !(dt > 0.0) {
        return Err(Error::validation("dt", "must be positive"));
    }
    let pair = GaussianPair::new(zeta.gaussian_var, eta.gaussian_var, cov)?;
    Ok(bivariate_with_jumps(zeta, eta, &pair, dt, rng, &mut |_, _| {}))
}

/// One atom of a joint switch-jump law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointAtom {
    pub zeta: f64,
    pub eta: f64,
    pub prob: f64,
}

/// Law of the switch jump `(Z_zeta, Z_eta)` attached to one transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SwitchJumpLaw {
    Independent {
        #[serde(default)]
        zeta: DistributionSpec,
        #[serde(default)]
        eta: DistributionSpec,
    },
    Joint { atoms: Vec<JointAtom> },
}

impl Default for SwitchJumpLaw {
    fn default() -> Self {
        SwitchJumpLaw::Independent {
            zeta: DistributionSpec::default(),
            eta: DistributionSpec::default(),
        }
    }
}

impl SwitchJumpLaw {
    pub fn points(zeta: f64, eta: f64) -> Self {
        SwitchJumpLaw::Independent {
            zeta: DistributionSpec::point(zeta),
            eta: DistributionSpec::point(eta),
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        match self {
            SwitchJumpLaw::Independent { zeta, eta } => {
                zeta.validate(&format!("{field}.zeta"))?;
                eta.validate(&format!("{field}.eta"))
            }
            SwitchJumpLaw::Joint { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::validation(format!("{field}.atoms"), "must be nonempty"));
                }
                if atoms.iter().any(|a| !(a.zeta.is_finite() && a.eta.is_finite() && a.prob >= 0.0)) {
                    return Err(Error::validation(
                        format!("{field}.atoms"),
                        "atoms need finite values and nonnegative probabilities",
                    ));
                }
                let total: f64 = atoms.iter().map(|a| a.prob).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::validation(
                        format!("{field}.atoms"),
                        format!("probabilities sum to {total}, expected 1"),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Marginal law of `Z_zeta`.
    pub fn zeta_mgf(&self, w: f64) -> Result<f64> {
        match self {
            SwitchJumpLaw::Independent { zeta, .. } => zeta.mgf(w),
            SwitchJumpLaw::Joint { atoms } => Ok(atoms.iter().map(|a| a.prob * (w * a.zeta).exp()).sum()),
        }
    }

    pub fn zeta_mgf_derivative(&self, w: f64) -> Result<f64> {
        match self {
            SwitchJumpLaw::Independent { zeta, .. } => zeta.mgf_derivative(w),
            SwitchJumpLaw::Joint { atoms } => {
                Ok(atoms.iter().map(|a| a.prob * a.zeta * (w * a.zeta).exp()).sum())
            }
        }
    }

    pub fn zeta_domain(&self) -> MgfDomain {
        match self {
            SwitchJumpLaw::Independent { zeta, .. } => zeta.mgf_domain(),
            SwitchJumpLaw::Joint { .. } => MgfDomain::REAL_LINE,
        }
    }

    pub fn eta_abs_moment(&self, p: f64) -> Result<f64> {
        match self {
            SwitchJumpLaw::Independent { eta, .. } => eta.abs_moment(p),
            SwitchJumpLaw::Joint { atoms } => Ok(atoms.iter().map(|a| a.prob * a.eta.abs().powf(p)).sum()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SwitchJumpLaw::Independent { zeta, eta } => {
                *zeta == DistributionSpec::point(0.0) && *eta == DistributionSpec::point(0.0)
            }
            SwitchJumpLaw::Joint { atoms } => atoms.iter().all(|a| a.zeta == 0.0 && a.eta == 0.0 || a.prob == 0.0),
        }
    }

    pub fn negated(&self) -> Self {
        match self {
            SwitchJumpLaw::Independent { zeta, eta } => SwitchJumpLaw::Independent {
                zeta: zeta.negated(),
                eta: eta.negated(),
            },
            SwitchJumpLaw::Joint { atoms } => SwitchJumpLaw::Joint {
                atoms: atoms
                    .iter()
                    .map(|a| JointAtom {
                        zeta: -a.zeta,
                        eta: -a.eta,
                        prob: a.prob,
                    })
                    .collect(),
            },
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match self {
            SwitchJumpLaw::Independent { zeta, eta } => (zeta.sample(rng), eta.sample(rng)),
            SwitchJumpLaw::Joint { atoms } => {
                let w: Vec<f64> = atoms.iter().map(|a| a.prob).collect();
                let a = &atoms[crate::markov::sample_index(&w, rng)];
                (a.zeta, a.eta)
            }
        }
    }
}

/// Switch-jump laws for every transition with positive epoch rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchJumpKernel {
    n: usize,
    laws: Vec<Option<SwitchJumpLaw>>,
}

static ZERO_JUMP: std::sync::LazyLock<SwitchJumpLaw> = std::sync::LazyLock::new(SwitchJumpLaw::default);

impl SwitchJumpKernel {
    /// All switch jumps zero.
    pub fn zero(n: usize) -> Self {
        SwitchJumpKernel {
            n,
            laws: vec![None; n * n],
        }
    }

    pub fn with(mut self, from: usize, to: usize, law: SwitchJumpLaw) -> Self {
        self.set(from, to, law);
        self
    }

    pub fn set(&mut self, from: usize, to: usize, law: SwitchJumpLaw) {
        self.laws[from * self.n + to] = Some(law);
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, from: usize, to: usize) -> &SwitchJumpLaw {
        self.laws[from * self.n + to].as_ref().unwrap_or(&ZERO_JUMP)
    }

    /// Pairs with an explicitly declared law.
    pub fn declared(&self) -> impl Iterator<Item = (usize, usize, &SwitchJumpLaw)> {
        self.laws
            .iter()
            .enumerate()
            .filter_map(move |(k, l)| l.as_ref().map(|l| (k / self.n, k % self.n, l)))
    }
}

/// A bivariate Markov-additive process `(J, (zeta, eta))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    chain: CtmcSpec<f64>,
    zeta: Vec<LevyComponentSpec>,
    eta: Vec<LevyComponentSpec>,
    cov: Vec<f64>,
    switch_jumps: SwitchJumpKernel,
}

impl MapSpec {
    pub fn new(
        chain: CtmcSpec<f64>,
        zeta: Vec<LevyComponentSpec>,
        eta: Vec<LevyComponentSpec>,
        cov: Vec<f64>,
        switch_jumps: SwitchJumpKernel,
    ) -> Result<Self> {
        let n = chain.len();
        for (name, len) in [("zeta", zeta.len()), ("eta", eta.len()), ("cov", cov.len())] {
            if len != n {
                return Err(Error::validation(name, format!("expected {n} per-state entries, got {len}")));
            }
        }
        if switch_jumps.dim() != n {
            return Err(Error::validation("switch_jumps", "kernel dimension does not match the chain"));
        }
        for j in 0..n {
            let label = chain.states().label(j).to_string();
            zeta[j].validate(&format!("zeta[{label}]"))?;
            eta[j].validate(&format!("eta[{label}]"))?;
            GaussianPair::new(zeta[j].gaussian_var, eta[j].gaussian_var, cov[j]).map_err(|e| match e {
                Error::Validation { message, .. } => Error::validation(format!("cov[{label}]"), message),
                e => e,
            })?;
        }
        for (i, j, law) in switch_jumps.declared() {
            let field = format!(
                "switch_jumps[{}->{}]",
                chain.states().label(i),
                chain.states().label(j)
            );
            if chain.epoch_weight(i, j) <= 0.0 {
                return Err(Error::validation(field, "declared for a transition with zero rate"));
            }
            law.validate(&field)?;
        }
        Ok(MapSpec {
            chain,
            zeta,
            eta,
            cov,
            switch_jumps,
        })
    }

    pub fn chain(&self) -> &CtmcSpec<f64> {
        &self.chain
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    pub fn zeta(&self, j: usize) -> &LevyComponentSpec {
        &self.zeta[j]
    }

    pub fn eta(&self, j: usize) -> &LevyComponentSpec {
        &self.eta[j]
    }

    pub fn cov(&self, j: usize) -> f64 {
        self.cov[j]
    }

    pub fn switch_jump(&self, i: usize, j: usize) -> &SwitchJumpLaw {
        self.switch_jumps.get(i, j)
    }

    pub fn switch_jumps(&self) -> &SwitchJumpKernel {
        &self.switch_jumps
    }

    pub fn gaussian_pair(&self, j: usize) -> GaussianPair {
        GaussianPair::new(self.zeta[j].gaussian_var, self.eta[j].gaussian_var, self.cov[j])
            .expect("validated at construction")
    }

    /// `psi_j(w)` of the zeta component, with the state named on failure.
    pub fn psi(&self, j: usize, w: f64) -> Result<f64> {
        self.zeta[j].laplace_exponent(w).map_err(|e| self.name_state(e, j))
    }

    pub fn psi_derivative(&self, j: usize, w: f64) -> Result<f64> {
        self.zeta[j].laplace_exponent_derivative(w).map_err(|e| self.name_state(e, j))
    }

    fn name_state(&self, e: Error, j: usize) -> Error {
        match e {
            Error::MomentExplosion { family, w, detail } => Error::MomentExplosion {
                family,
                w,
                detail: format!("{detail} (zeta jumps of state {})", self.chain.states().label(j)),
            },
            e => e,
        }
    }

    /// The dual (time-reversed) model: reversed chain, negated additive
    /// parts, and the switch jump of dual transition `i -> j` equal to the
    /// negated jump of `j -> i`.
    pub fn dual_map(&self) -> Result<MapSpec> {
        let pi = self.chain.stationary_law()?;
        let chain = time_reverse_ctmc(&self.chain, &pi)?;
        let n = self.len();
        let mut kernel = SwitchJumpKernel::zero(n);
        for (i, j, law) in self.switch_jumps.declared() {
            kernel.set(j, i, law.negated());
        }
        MapSpec::new(
            chain,
            self.zeta.iter().map(LevyComponentSpec::negated).collect(),
            self.eta.iter().map(LevyComponentSpec::negated).collect(),
            self.cov.clone(),
            kernel,
        )
    }
}
