//! Scalar abstraction for the numeric core.
//!
//! All tensor and layer arithmetic is generic over [`Scalar`], so the same
//! kernels run at f32 or f64. The simulator itself uses the f64 aliases at
//! the crate root; f32 exists for quick what-if runs where tight
//! finite-difference tolerances do not matter.

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Lift an f64 literal into the scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Lower to f64 for reporting and serialization.
    fn to_f64c(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
