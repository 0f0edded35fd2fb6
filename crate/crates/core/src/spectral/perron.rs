//! Perron root and eigenvectors of nonnegative irreducible matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::markov::{check_irreducible, StateSpace};
use crate::scalar::Scalar;

const MAX_ITER: usize = 100_000;
/// Unshifted steps tried before switching to the shifted iteration.
const FIRST_PASS: usize = 2_000;

/// Dominant eigenvalue with left eigenvector `u` (`sum u = 1`) and right
/// eigenvector `v` (`sum u_i v_i = 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerronData<T> {
    pub rho: T,
    pub u: Vec<T>,
    pub v: Vec<T>,
    /// Whether the shifted fallback iteration was needed.
    pub shifted: bool,
}

/// Outcome of a power run that did not converge.
struct Stalled<T> {
    /// Geometric mean of the late normalizers, an estimate of `ρ`.
    rho_estimate: T,
}

/// Power iteration for the right Perron vector of `m`, normalized to sum 1.
fn power<T: Scalar>(m: &Matrix<T>, tol: T, max_iter: usize) -> std::result::Result<Vec<T>, Option<Stalled<T>>> {
    let n = m.rows();
    let mut x = vec![T::one() / T::lit(n as f64); n];
    let mut lambda = T::zero();
    let (mut log_sum, mut counted) = (T::zero(), 0usize);
    for k in 0..max_iter {
        let y = m.mul_vec(&x);
        let s = y.iter().fold(T::zero(), |a, &b| a + b);
        if !(s > T::zero()) || !s.is_finite() {
            return Err(None);
        }
        let y: Vec<T> = y.into_iter().map(|t| t / s).collect();
        let dx = crate::linalg::max_abs_diff(&x, &y);
        let top = y.iter().fold(T::zero(), |a, &b| a.max(b));
        let dl = (s - lambda).abs();
        x = y;
        if dl <= tol * s && dx <= tol * top {
            return Ok(x);
        }
        if 2 * k >= max_iter {
            log_sum += s.ln();
            counted += 1;
        }
        lambda = s;
    }
    Err(Some(Stalled {
        rho_estimate: (log_sum / T::lit(counted.max(1) as f64)).exp(),
    }))
}

fn power_with_fallback<T: Scalar>(m: &Matrix<T>, tol: T) -> Result<(Vec<T>, bool)> {
    let rho = match power(m, tol, FIRST_PASS) {
        Ok(x) => return Ok((x, false)),
        Err(Some(stalled)) => stalled.rho_estimate,
        Err(None) => m.norm_inf(),
    };
    // M + cI has the same eigenvectors and a strictly dominant root even
    // when M is periodic; c of the order of ρ keeps the gap wide.
    let c = if rho > T::zero() && rho.is_finite() { rho } else { m.norm_inf().max(T::one()) };
    let shifted = Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] + if i == j { c } else { T::zero() });
    power(&shifted, tol, MAX_ITER)
        .map(|x| (x, true))
        .map_err(|_| Error::Numerical(format!("power iteration did not converge in {MAX_ITER} steps")))
}

/// Perron data of a nonnegative irreducible square matrix.
pub fn perron<T: Scalar>(m: &Matrix<T>) -> Result<PerronData<T>> {
    if !m.is_square() || m.rows() == 0 {
        return Err(Error::Numerical("Perron data needs a nonempty square matrix".into()));
    }
    if !m.is_finite() || !m.is_nonnegative() {
        return Err(Error::Numerical("Perron data needs a finite nonnegative matrix".into()));
    }
    let n = m.rows();
    check_irreducible(m, &StateSpace::indexed(n)?)?;
    if n == 1 {
        if !(m[(0, 0)] > T::zero()) {
            return Err(Error::Numerical("1x1 matrix with zero entry has no positive root".into()));
        }
        return Ok(PerronData {
            rho: m[(0, 0)],
            u: vec![T::one()],
            v: vec![T::one()],
            shifted: false,
        });
    }
    let tol = T::tol_floor(1e-12);
    let (v, s1) = power_with_fallback(m, tol)?;
    let (u, s2) = power_with_fallback(&m.transpose(), tol)?;
    // Left/right Rayleigh quotient: second-order accurate in the vectors.
    let rho = dot(&m.vec_mul(&u), &v) / dot(&u, &v);
    let uv = dot(&u, &v);
    let v = v.into_iter().map(|x| x / uv).collect();
    Ok(PerronData {
        rho,
        u,
        v,
        shifted: s1 || s2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stochastic_matrix_has_unit_root() {
        let m = Matrix::from_rows(&[vec![0.7, 0.3], vec![0.6, 0.4]]).unwrap();
        let p = perron(&m).unwrap();
        assert_relative_eq!(p.rho, 1.0, epsilon = 1e-14);
        assert_relative_eq!(p.u[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(p.v[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.v[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn periodic_matrix_uses_shift() {
        let m = Matrix::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        let p = perron(&m).unwrap();
        assert_relative_eq!(p.rho, 2.0, epsilon = 1e-14);
        assert_relative_eq!(p.u[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(p.v[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(p.v[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn nonsymmetric_example() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.25, 1.0]]).unwrap();
        let p = perron(&m).unwrap();
        assert_relative_eq!(p.rho, 1.5, epsilon = 1e-14);
        assert_relative_eq!(p.v[0] / p.v[1], 2.0, epsilon = 1e-11);
        let mv = m.mul_vec(&p.v);
        for k in 0..2 {
            assert_relative_eq!(mv[k], 1.5 * p.v[k], epsilon = 1e-11);
        }
    }

    #[test]
    fn works_in_f32() {
        let m: Matrix<f32> = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.25, 1.0]]).unwrap();
        let p = perron(&m).unwrap();
        assert!((p.rho - 1.5).abs() < 1e-5);
    }

    #[test]
    fn reducible_is_rejected() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(perron(&m), Err(Error::Reducible { .. })));
    }
}
