//! Geometric subsampling of a Cramér transform.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::markov::{check_irreducible, StateSpace};
use crate::scalar::Scalar;
use crate::spectral::perron::perron;

/// `sum_{n>=1} 2^{-n} M^n = M (2I - M)^{-1}`, the transform of observing a
/// chain at the epochs of an independent geometric(1/2) renewal process.
/// Requires `ρ(M) < 2`; the Perron root maps to `ρ / (2 - ρ)`.
pub fn geometric_sampling_transform<T: Scalar>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let n = m.rows();
    let two = T::lit(2.0);
    let irreducible = check_irreducible(m, &StateSpace::indexed(n)?).is_ok();
    if irreducible && m.is_nonnegative() {
        let rho = perron(m)?.rho;
        if rho >= two * (T::one() - T::epsilon()) {
            return Err(Error::DivergentSeries {
                rho: rho.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let shifted = &Matrix::identity(n).scale(two) - m;
    let inv = shifted.inverse().map_err(|_| Error::DivergentSeries { rho: 2.0 })?;
    // For nonnegative M, (2I - M)^{-1} >= 0 exactly when the series converges.
    if m.is_nonnegative() && !inv.is_nonnegative() {
        return Err(Error::DivergentSeries { rho: f64::NAN });
    }
    Ok(m * &inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_is_fixed() {
        let i = Matrix::<f64>::identity(3);
        assert!(geometric_sampling_transform(&i).unwrap().max_abs_diff(&i) < 1e-15);
    }

    #[test]
    fn root_maps_and_vectors_stay() {
        let m = Matrix::from_rows(&[vec![0.5, 0.7], vec![0.2, 0.9]]).unwrap();
        let p = perron(&m).unwrap();
        let g = perron(&geometric_sampling_transform(&m).unwrap()).unwrap();
        assert_relative_eq!(g.rho, p.rho / (2.0 - p.rho), epsilon = 1e-12);
        assert!(crate::linalg::max_abs_diff(&g.u, &p.u) < 1e-10);
        assert!(crate::linalg::max_abs_diff(&g.v, &p.v) < 1e-10);
    }

    #[test]
    fn root_two_diverges() {
        let m = Matrix::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        assert!(matches!(
            geometric_sampling_transform(&m),
            Err(Error::DivergentSeries { .. })
        ));
    }
}
