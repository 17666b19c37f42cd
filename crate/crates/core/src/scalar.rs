//! Floating-point abstraction shared by every numeric routine in the crate.
//!
//! All model code is written against [`Scalar`], implemented for `f32` and
//! `f64`. Special functions are evaluated in double precision and rounded to
//! the target type, so `f32` instantiations trade accuracy for memory only.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use statrs::function::{erf, gamma};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// f32 or f64.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Relative tolerance used for symmetry checks and similar structural tests.
    fn structural_tol() -> Self;

    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::of(x as f64)
    }

    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }

    fn ln_gamma(self) -> Self {
        Self::of(gamma::ln_gamma(self.f64()))
    }

    /// Standard normal CDF.
    fn norm_cdf(self) -> Self {
        Self::of(norm_cdf_f64(self.f64()))
    }

    /// ln Φ(x), accurate in both tails.
    fn ln_norm_cdf(self) -> Self {
        Self::of(ln_norm_cdf_f64(self.f64()))
    }

    /// ln(1 − Φ(x)), accurate in both tails.
    fn ln_norm_sf(self) -> Self {
        Self::of(ln_norm_cdf_f64(-self.f64()))
    }

    fn ln_2pi() -> Self {
        Self::of(LN_2PI)
    }
}

impl Scalar for f32 {
    fn structural_tol() -> Self {
        1e-5
    }
}

impl Scalar for f64 {
    fn structural_tol() -> Self {
        1e-10
    }
}

pub(crate) fn norm_cdf_f64(x: f64) -> f64 {
    0.5 * erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// ln Φ(x). Negative arguments go through erfc directly; beyond the range
/// where erfc underflows an asymptotic Mills-ratio series takes over.
/// Positive arguments use ln(1 − Q(x)) with Q from erfc.
pub(crate) fn ln_norm_cdf_f64(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x >= 0.0 {
        let q = 0.5 * erf::erfc(x / std::f64::consts::SQRT_2);
        return (-q).ln_1p();
    }
    if x > -30.0 {
        return (0.5 * erf::erfc(-x / std::f64::consts::SQRT_2)).ln();
    }
    // Φ(x) ≈ φ(x)/|x| · (1 − 1/x² + 3/x⁴ − 15/x⁶)
    let z2 = x * x;
    let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    -0.5 * z2 - 0.5 * LN_2PI - (-x).ln() + series.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_cdf_matches_direct_in_bulk() {
        for &x in &[-5.0, -1.0, 0.0, 0.3, 2.0, 5.5] {
            let direct = norm_cdf_f64(x).ln();
            assert!((ln_norm_cdf_f64(x) - direct).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn ln_cdf_tail_is_finite_and_continuous() {
        let left = ln_norm_cdf_f64(-30.0 + 1e-9);
        let right = ln_norm_cdf_f64(-30.0 - 1e-9);
        assert!(left.is_finite() && right.is_finite());
        assert!((left - right).abs() < 1e-6);
        assert!(ln_norm_cdf_f64(-200.0).is_finite());
        // Upper tail: ln Φ(40) is a tiny negative number, not exactly 0 collapse to NaN.
        assert!(ln_norm_cdf_f64(40.0) <= 0.0);
        assert!((ln_norm_cdf_f64(8.0) + 6.220_960_574_271_785e-16).abs() < 1e-20);
    }

    #[test]
    fn f32_special_functions_round_to_f64_values() {
        let x = 0.75f32;
        assert!((x.norm_cdf() - 0.773_372_7).abs() < 1e-6);
        assert!((Scalar::ln_gamma(4.0f32) - 6.0f32.ln()).abs() < 1e-6);
    }
}
