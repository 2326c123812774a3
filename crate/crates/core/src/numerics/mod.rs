//! Special functions, quadrature and scalar optimization shared by the rate engines.
//!
//! Everything here is a pure function of its inputs.

mod optimize;
mod quadrature;

pub use optimize::maximize_scalar;
pub use quadrature::{integrate_1d, integrate_2d, QuadratureSpec, Rectangle};

use crate::error::{Error, Result};

/// Binary entropy `H(x) = -x log2 x - (1-x) log2 (1-x)`, with `0 log2 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain("x", x, "0 <= x <= 1"));
    }
    Ok(entropy_term(x) + entropy_term(1.0 - x))
}

/// Binary entropy of a rate that is a probability up to rounding.
///
/// Rates assembled from gain ratios can land a few ulps outside `[0, 1]`;
/// those are clamped. NaN maps to the noise value `H(1/2) = 1`.
pub(crate) fn entropy_of_rate(e: f64) -> f64 {
    if e.is_nan() {
        return 1.0;
    }
    let e = e.clamp(0.0, 1.0);
    entropy_term(e) + entropy_term(1.0 - e)
}

fn entropy_term(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// Relative size below which the `I0` series is truncated.
const SERIES_CUTOFF: f64 = 1e-17;
const MAX_SERIES_TERMS: usize = 2000;

/// Modified Bessel function of the first kind, order zero, by its power series
/// `sum_k (x/2)^(2k) / (k!)^2`.
pub fn bessel_i0(x: f64) -> Result<f64> {
    Ok(1.0 + bessel_i0_minus_one(x)?)
}

/// `I0(x) - 1` without the cancellation of subtracting one from [`bessel_i0`].
///
/// Needed where `I0` enters a difference whose leading terms cancel as `x -> 0`.
pub fn bessel_i0_minus_one(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain("x", x, "finite and >= 0"));
    }
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..MAX_SERIES_TERMS {
        let k = k as f64;
        term *= q / (k * k);
        sum += term;
        if term <= SERIES_CUTOFF * sum {
            break;
        }
    }
    if !sum.is_finite() {
        return Err(Error::domain("x", x, "I0(x) representable as f64"));
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    // 30-digit mpmath values of I0.
    const I0_REFERENCE: [(f64, f64); 7] = [
        (0.1, 1.002_501_562_934_095_6),
        (0.5, 1.063_483_370_741_323_5),
        (1.0, 1.266_065_877_752_008_3),
        (2.0, 2.279_585_302_336_067_3),
        (5.0, 27.239_871_823_604_447),
        (10.0, 2_815.716_628_466_254_5),
        (20.0, 43_558_282.559_553_533),
    ];

    #[test]
    fn entropy_anchor_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // mpmath: 0.499915958164527995640...
        assert_abs_diff_eq!(binary_entropy(0.11).unwrap(), 0.499_915_958_164_528, epsilon = 1e-12);
        assert_abs_diff_eq!(binary_entropy(0.25).unwrap(), 0.811_278_124_459_132_9, epsilon = 1e-12);
    }

    #[test]
    fn entropy_rejects_out_of_range() {
        assert!(binary_entropy(-1e-9).is_err());
        assert!(binary_entropy(1.0 + 1e-9).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn clamped_entropy_tolerates_rounding() {
        assert_eq!(entropy_of_rate(-1e-18), 0.0);
        assert_eq!(entropy_of_rate(1.0 + 1e-15), 0.0);
        assert_eq!(entropy_of_rate(f64::NAN), 1.0);
    }

    #[test]
    fn i0_anchor_values() {
        assert_eq!(bessel_i0(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(bessel_i0(2.0).unwrap(), 2.2796, epsilon = 1e-4);
        assert_abs_diff_eq!(bessel_i0(0.1).unwrap(), 1.0025, epsilon = 1e-4);
        assert_abs_diff_eq!(bessel_i0(0.1).unwrap(), 1.0 + 0.01 / 4.0, epsilon = 1e-5);
    }

    #[test]
    fn i0_relative_error_on_reference_points() {
        for (x, want) in I0_REFERENCE {
            let got = bessel_i0(x).unwrap();
            assert!(((got - want) / want).abs() <= 1e-12, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn i0_rejects_bad_input() {
        assert!(bessel_i0(-0.5).is_err());
        assert!(bessel_i0(f64::INFINITY).is_err());
        assert!(bessel_i0(f64::NAN).is_err());
    }

    #[test]
    fn i0_minus_one_is_accurate_for_tiny_arguments() {
        let x = 1e-6;
        assert_abs_diff_eq!(bessel_i0_minus_one(x).unwrap(), x * x / 4.0 + x.powi(4) / 64.0, epsilon = 1e-30);
    }

    #[test]
    fn i0_series_matches_integral_form() {
        let spec = QuadratureSpec::default();
        for x in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let series = bessel_i0(x).unwrap();
            let integral = integrate_1d(|t: f64| (x * t.cos()).exp(), 0.0, PI, &spec).unwrap() / PI;
            assert!((series - integral).abs() <= 1e-10, "x={x}: {series} vs {integral}");
        }
    }

    proptest! {
        #[test]
        fn entropy_is_symmetric(x in 0.0f64..=1.0) {
            let a = binary_entropy(x).unwrap();
            let b = binary_entropy(1.0 - x).unwrap();
            prop_assert!((a - b).abs() <= 1e-14);
        }

        #[test]
        fn entropy_is_midpoint_concave(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
            let mid = binary_entropy(0.5 * (x + y)).unwrap();
            let avg = 0.5 * (binary_entropy(x).unwrap() + binary_entropy(y).unwrap());
            prop_assert!(mid >= avg - 1e-14);
        }
    }
}
