//! Small numeric helpers used throughout the crate.

use crate::Scalar;

/// Lift an `f64` literal into the working scalar type.
///
/// Panics only if the target type cannot represent any `f64` at all, which
/// does not happen for the supported float types.
#[inline]
pub fn fp<S: Scalar>(value: f64) -> S {
    S::from_f64(value).expect("f64 literal must convert into the scalar type")
}

/// `log(Σ exp(v))` computed against the running maximum so that widely
/// spread terms neither overflow nor vanish.
///
/// Empty input yields `-∞`, matching the sum over no terms.
pub fn log_sum_exp<S: Scalar>(values: &[S]) -> S {
    let mut max = S::neg_infinity();
    for &v in values {
        if v > max {
            max = v;
        }
    }
    if !max.is_finite() {
        // All -inf (or empty): the sum is zero. +inf propagates as is.
        return max;
    }
    let mut sum = S::zero();
    for &v in values {
        sum += (v - max).exp();
    }
    max + sum.ln()
}

/// Log-density threshold below which a mixture density is treated as having
/// underflowed to zero.
#[inline]
pub fn log_underflow_threshold<S: Scalar>() -> S {
    fp(-745.0)
}

/// `-0.5 * d * log(2π)`, the dimension-dependent part of the Gaussian
/// normalizing constant.
#[inline]
pub fn neg_half_log_two_pi<S: Scalar>(dim: usize) -> S {
    let two_pi = fp::<S>(2.0) * S::PI();
    fp::<S>(-0.5) * fp::<S>(dim as f64) * two_pi.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct_sum_in_safe_range() {
        let values = [0.5f64, 2.0, -1.0];
        let direct = values.iter().map(|v| v.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&values) - direct).abs() < 1e-14);
    }

    #[test]
    fn log_sum_exp_survives_large_magnitudes() {
        let values = [1234.0f64, 1232.0];
        // 1234 + ln(1 + e^-2)
        let expected = 1234.0 + (1.0 + (-2.0f64).exp()).ln();
        assert!((log_sum_exp(&values) - expected).abs() < 1e-12);
        assert!(values.iter().map(|v| v.exp()).sum::<f64>().is_infinite());
    }

    #[test]
    fn log_sum_exp_of_empty_and_neg_infinity() {
        assert_eq!(log_sum_exp::<f64>(&[]), f64::NEG_INFINITY);
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn log_sum_exp_single_element_is_exact() {
        let v = -3.2514f64;
        assert_eq!(log_sum_exp(&[v]), v);
    }
}
