//! Floating point abstraction shared by the matrix-analytic layer.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real scalar usable by [`crate::linalg::Matrix`], the chain types and the
/// Perron machinery. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` constant.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Machine epsilon scaled tolerance floor, used where a fixed tolerance
    /// would be below the type's resolution.
    fn tol_floor(requested: f64) -> Self {
        let eps = Self::epsilon() * Self::lit(16.0);
        Self::lit(requested).max(eps)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
