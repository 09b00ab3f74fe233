//! Scalar field abstraction.
//!
//! Every operator in this crate is real, so the numeric core only needs a
//! floating-point field. `f64` is the working precision; `f32` is supported
//! for smoke runs but the tolerances quoted in the docs assume `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Rational64;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Largest `|x|` such that `exp(x)` is a finite normal number, with some headroom.
    fn log_cap() -> Self {
        Self::max_value().ln() - Self::from_f64(10.0).unwrap()
    }

    /// Converts an `f64` literal. Panics only if the target cannot hold any
    /// finite value, which does not happen for IEEE types.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer representable")
    }

    /// Value of an exact rational grade in this field.
    fn from_ratio(r: Rational64) -> Self {
        Self::from_int(*r.numer()) / Self::from_int(*r.denom())
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `ln(1 + e^x)` without overflow.
pub fn softplus<S: Scalar>(x: S) -> S {
    if x > S::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln Σ exp(a_i)`, returning `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<S: Scalar>(logs: impl IntoIterator<Item = S>) -> S {
    let logs: Vec<S> = logs.into_iter().collect();
    let max = logs.iter().copied().fold(S::neg_infinity(), S::max);
    if max == S::neg_infinity() {
        return max;
    }
    let sum: S = logs.iter().map(|&l| (l - max).exp()).sum();
    max + sum.ln()
}

/// Relative agreement of two nonnegative magnitudes. Both values underflowing
/// below the smallest normal number counts as agreement.
pub fn relative_gap<S: Scalar>(a: S, b: S) -> S {
    let scale = a.abs().max(b.abs());
    if scale < S::min_positive_value() {
        S::zero()
    } else {
        (a - b).abs() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_cap_is_safe_for_both_widths() {
        assert!(f64::log_cap().exp().is_finite());
        assert!((-f64::log_cap()).exp() > f64::MIN_POSITIVE);
        assert!(f32::log_cap().exp().is_finite());
        assert!((-f32::log_cap()).exp() > f32::MIN_POSITIVE);
    }

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for x in [-30.0, -1.0, 0.0, 2.5, 30.0] {
            let naive = (1.0f64 + f64::exp(x)).ln();
            assert!((softplus(x) - naive).abs() < 1e-12);
        }
        assert_eq!(softplus(1000.0f64), 1000.0);
    }

    #[test]
    fn log_sum_exp_handles_empty_and_large() {
        assert_eq!(log_sum_exp::<f64>([]), f64::NEG_INFINITY);
        let v = log_sum_exp([1000.0f64, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn rational_conversion() {
        assert_eq!(f64::from_ratio(Rational64::new(3, 4)), 0.75);
    }
}
