//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All math is written against [`Real`], which is implemented for `f32` and
//! `f64`. The linear algebra backend is nalgebra, so the trait is anchored on
//! [`nalgebra::RealField`]; conversions and constants come from num-traits.

use nalgebra::{Complex, DMatrix, DVector, RealField};
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Real floating point scalar usable throughout the crate.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + FloatConst + Default + Send + Sync
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;
/// Dense complex matrix.
pub type CMat<T> = DMatrix<Complex<T>>;
/// Dense complex column vector.
pub type CVec<T> = DVector<Complex<T>>;

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

/// `exp(j * theta)`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Real number lifted to the complex plane.
#[inline]
pub fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Lossy conversion to `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Machine epsilon of `T`.
#[inline]
pub fn eps<T: Real>() -> T {
    T::default_epsilon()
}
