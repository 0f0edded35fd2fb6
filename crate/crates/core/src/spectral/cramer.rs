//! Cramér transforms and their Perron normalization.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{dot, max_abs_diff, Matrix};
use crate::scalar::Scalar;
use crate::spectral::perron::perron;

/// A model with a θ-indexed matrix of tilted transition moments
/// `E_i[|A_1|^θ 1{ξ_1 = j}]`.
pub trait CramerSource {
    fn dim(&self) -> usize;

    /// The Cramér transform at `theta`.
    fn cramer_matrix(&self, theta: f64) -> Result<Matrix<f64>>;

    /// Entrywise derivative `E_i[|A_1|^θ log|A_1| 1{ξ_1 = j}]`.
    fn cramer_derivative(&self, theta: f64) -> Result<Matrix<f64>>;

    /// Whether every entry is finite at `theta`.
    fn in_domain(&self, theta: f64) -> bool {
        self.cramer_matrix(theta).is_ok_and(|m| m.is_finite())
    }

    /// False when entries are Monte Carlo estimates.
    fn exact(&self) -> bool {
        true
    }
}

/// Which eigenvector convention a system follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// `sum u = 1`, `sum u_i v_i = 1`.
    Primal,
    /// Obtained from a primal system by [`dual_cramer`]: `u^ = π∘v`,
    /// `v^ = 1/v`, so only `sum u^_i v^_i = 1` holds.
    Dual,
}

/// `𝖯(θ)` with its Perron data, normalized kernel `P(θ)` and its
/// stationary law `π(θ) = u∘v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CramerSystem<T> {
    theta: T,
    p_theta: Matrix<T>,
    rho: T,
    u: Vec<T>,
    v: Vec<T>,
    p_norm: Matrix<T>,
    pi_theta: Vec<T>,
    orientation: Orientation,
}

/// Largest violations of the defining identities of a [`CramerSystem`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantResiduals<T> {
    pub left_eigen: T,
    pub right_eigen: T,
    pub row_sums: T,
    pub stationary: T,
    pub normalization: T,
}

impl<T: Scalar> InvariantResiduals<T> {
    pub fn max(&self) -> T {
        [self.left_eigen, self.right_eigen, self.row_sums, self.stationary, self.normalization]
            .into_iter()
            .fold(T::zero(), T::max)
    }
}

fn normalized_kernel<T: Scalar>(m: &Matrix<T>, rho: T, v: &[T]) -> Matrix<T> {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| v[j] * m[(i, j)] / (rho * v[i]))
}

impl<T: Scalar> CramerSystem<T> {
    /// Assembles the system from an already evaluated `𝖯(θ)`.
    pub fn from_matrix(theta: T, p_theta: Matrix<T>) -> Result<Self> {
        let pd = perron(&p_theta)?;
        let p_norm = normalized_kernel(&p_theta, pd.rho, &pd.v);
        let pi_theta = pd.u.iter().zip(&pd.v).map(|(&a, &b)| a * b).collect();
        Ok(CramerSystem {
            theta,
            p_theta,
            rho: pd.rho,
            u: pd.u,
            v: pd.v,
            p_norm,
            pi_theta,
            orientation: Orientation::Primal,
        })
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn p_theta(&self) -> &Matrix<T> {
        &self.p_theta
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn u(&self) -> &[T] {
        &self.u
    }

    pub fn v(&self) -> &[T] {
        &self.v
    }

    pub fn p_norm(&self) -> &Matrix<T> {
        &self.p_norm
    }

    pub fn pi_theta(&self) -> &[T] {
        &self.pi_theta
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn residuals(&self) -> InvariantResiduals<T> {
        let scale = T::one().max(self.rho);
        let ur: Vec<T> = self.u.iter().map(|&x| x * self.rho).collect();
        let vr: Vec<T> = self.v.iter().map(|&x| x * self.rho).collect();
        let left_eigen = max_abs_diff(&self.p_theta.vec_mul(&self.u), &ur) / scale;
        let right_eigen = max_abs_diff(&self.p_theta.mul_vec(&self.v), &vr) / scale;
        let row_sums = self
            .p_norm
            .row_sums()
            .into_iter()
            .fold(T::zero(), |a, s| a.max((s - T::one()).abs()));
        let stationary = max_abs_diff(&self.p_norm.vec_mul(&self.pi_theta), &self.pi_theta);
        let mut normalization = (dot(&self.u, &self.v) - T::one()).abs();
        if self.orientation == Orientation::Primal {
            let su = self.u.iter().fold(T::zero(), |a, &b| a + b);
            normalization = normalization.max((su - T::one()).abs());
        }
        InvariantResiduals {
            left_eigen,
            right_eigen,
            row_sums,
            stationary,
            normalization,
        }
    }

    /// The dual system of the time-reversed model, see [`dual_cramer`].
    pub fn dual(&self) -> Self {
        dual_cramer(self)
    }
}

/// `𝖯^(θ) = Π^{-1} 𝖯(θ)^T Π` with `Π = diag π(θ)`, sharing `ρ` and `π(θ)`.
/// Its eigenvectors are `u^ = π∘v` and `v^ = 1/v`.
pub fn dual_cramer<T: Scalar>(system: &CramerSystem<T>) -> CramerSystem<T> {
    let pi = &system.pi_theta;
    let n = system.dim();
    let p_hat = Matrix::from_fn(n, n, |i, j| pi[j] * system.p_theta[(j, i)] / pi[i]);
    // The same map takes a dual system back to its primal one.
    let u: Vec<T> = pi.iter().zip(&system.v).map(|(&p, &v)| p * v).collect();
    let v: Vec<T> = system.v.iter().map(|&v| T::one() / v).collect();
    let orientation = match system.orientation {
        Orientation::Primal => Orientation::Dual,
        Orientation::Dual => Orientation::Primal,
    };
    let p_norm = normalized_kernel(&p_hat, system.rho, &v);
    CramerSystem {
        theta: system.theta,
        p_theta: p_hat,
        rho: system.rho,
        u,
        v,
        p_norm,
        pi_theta: pi.clone(),
        orientation,
    }
}

/// `CramerSystem` of a source at `theta`.
pub fn cramer_system(source: &(impl CramerSource + ?Sized), theta: f64) -> Result<CramerSystem<f64>> {
    CramerSystem::from_matrix(theta, source.cramer_matrix(theta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_system() -> CramerSystem<f64> {
        let m = Matrix::from_rows(&[vec![0.5, 0.7], vec![0.2, 0.9]]).unwrap();
        CramerSystem::from_matrix(1.0, m).unwrap()
    }

    #[test]
    fn invariants_hold() {
        let s = sample_system();
        assert!(s.residuals().max() < 1e-10);
        let sum: f64 = s.pi_theta().iter().sum();
        assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dual_shares_root_and_inverts_v() {
        let s = sample_system();
        let d = dual_cramer(&s);
        assert_eq!(d.orientation(), Orientation::Dual);
        let direct = perron(d.p_theta()).unwrap();
        assert_relative_eq!(direct.rho, s.rho(), epsilon = 1e-12);
        for (a, b) in s.v().iter().zip(d.v()) {
            assert_relative_eq!(a * b, 1.0, epsilon = 1e-12);
        }
        assert!(d.residuals().max() < 1e-10);
        let back = dual_cramer(&d);
        assert_eq!(back.orientation(), Orientation::Primal);
        assert!(back.p_theta().max_abs_diff(s.p_theta()) < 1e-12);
        assert!(max_abs_diff(back.u(), s.u()) < 1e-12);
        assert!(max_abs_diff(back.v(), s.v()) < 1e-12);
    }

    #[test]
    fn symmetric_system_is_self_dual() {
        let m = Matrix::from_rows(&[vec![0.4, 0.3], vec![0.3, 0.4]]).unwrap();
        let s = CramerSystem::from_matrix(0.5, m).unwrap();
        assert!(dual_cramer(&s).p_theta().max_abs_diff(s.p_theta()) < 1e-12);
    }

    #[test]
    fn generic_over_f32() {
        let m: Matrix<f32> = Matrix::from_rows(&[vec![0.5, 0.7], vec![0.2, 0.9]]).unwrap();
        let s = CramerSystem::from_matrix(1.0f32, m).unwrap();
        assert!(s.residuals().max() < 1e-5);
        assert!(dual_cramer(&s).residuals().max() < 1e-5);
    }
}
