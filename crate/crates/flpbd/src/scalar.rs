//! Scalar abstraction for all money/probability arithmetic.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the whole crate is generic over.
///
/// `f64` is the default used by the CLI and the file formats; `f32` works
/// for all algorithms but offers less headroom below the comparison
/// tolerances, so the acceptance-grade tolerance of `1e-9` is only
/// meaningful for `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; all constants in this crate are exactly
    /// representable in `f32` and `f64` or are tolerances where rounding is
    /// irrelevant.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 conversion")
    }

    /// Absolute tolerance used for objective-value comparisons.
    fn objective_tol() -> Self;

    /// Absolute tolerance on the scenario-probability sum.
    fn prob_sum_tol() -> Self;
}

impl Scalar for f64 {
    fn objective_tol() -> Self {
        1e-9
    }

    fn prob_sum_tol() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn objective_tol() -> Self {
        1e-4
    }

    fn prob_sum_tol() -> Self {
        1e-5
    }
}

/// Kahan compensated sum; keeps the error of long probability sums at a few
/// ulps instead of growing with the number of terms.
pub fn kahan_sum<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut carry = T::zero();
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// `|a - b| <= tol` helper for non-NaN scalars.
pub fn approx_eq<T: Scalar>(a: T, b: T, tol: T) -> bool {
    (a - b).abs() <= tol
}

/// Relative closeness: `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn rel_close<T: Scalar>(a: T, b: T, tol: T) -> bool {
    let scale = T::one().max(a.abs()).max(b.abs());
    (a - b).abs() <= tol * scale
}
