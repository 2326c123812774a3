//! Yield, error rate and key rate when both parties emit exactly one photon.
//!
//! Loss is a beam splitter of transmittance `eta` per path; each of the four
//! detectors fires independently with probability `p_d` in the absence of light.

use crate::numerics::entropy_of_rate;
use crate::params::{ExperimentParams, E0};

/// Click-pattern probabilities for `theta_a - theta_b = 0`.
///
/// The `theta_a - theta_b = pi` case is the same table with correlated and
/// anticorrelated entries exchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairYields {
    pub y_r0s0: f64,
    pub y_r1s1: f64,
    pub y_r0s1: f64,
    pub y_r1s0: f64,
}

impl PairYields {
    pub fn total(&self) -> f64 {
        self.y_r0s0 + self.y_r1s1 + self.y_r0s1 + self.y_r1s0
    }

    pub fn correlated(&self) -> f64 {
        self.y_r0s0 + self.y_r1s1
    }

    pub fn anticorrelated(&self) -> f64 {
        self.y_r0s1 + self.y_r1s0
    }
}

pub fn pair_yields(params: &ExperimentParams) -> PairYields {
    let ExperimentParams { eta_a, eta_b, p_d, .. } = *params;
    let no_dark2 = (1.0 - p_d).powi(2);
    let one_dark = (0.5 * (eta_a + eta_b) - 0.75 * (eta_a * eta_b)) * p_d;
    let two_dark = (1.0 - eta_a) * (1.0 - eta_b) * p_d * p_d;
    let correlated = no_dark2 * (0.25 * (eta_a * eta_b) + one_dark + two_dark);
    let anticorrelated = no_dark2 * (one_dark + two_dark);
    PairYields {
        y_r0s0: correlated,
        y_r1s1: correlated,
        y_r0s1: anticorrelated,
        y_r1s0: anticorrelated,
    }
}

/// Probability of a successful partial Bell measurement given single photons
/// from both sides in matching bases.
pub fn yield_11(params: &ExperimentParams) -> f64 {
    let ExperimentParams { eta_a, eta_b, p_d, .. } = *params;
    (1.0 - p_d).powi(2)
        * (0.5 * (eta_a * eta_b)
            + (2.0 * eta_a + 2.0 * eta_b - 3.0 * (eta_a * eta_b)) * p_d
            + 4.0 * (1.0 - eta_a) * (1.0 - eta_b) * p_d * p_d)
}

/// Returns `(e11, e11 * Y11)`. With `Y11 = 0` the rate is the noise value `e0`.
pub fn error_11(params: &ExperimentParams) -> (f64, f64) {
    let y11 = yield_11(params);
    let interference = (1.0 - params.p_d).powi(2) * 0.5 * (params.eta_a * params.eta_b);
    let product = E0 * y11 - (E0 - params.e_d) * interference;
    let rate = if y11 > 0.0 { product / y11 } else { E0 };
    (rate, product)
}

/// `sift * Y11 * [1 - f H(e11) - H(e11)]`, unclamped.
pub fn key_rate_single_photon(params: &ExperimentParams) -> f64 {
    let y11 = yield_11(params);
    let (e11, _) = error_11(params);
    let h = entropy_of_rate(e11);
    params.sift_factor * y11 * (1.0 - params.f * h - h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::binary_entropy;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn with(eta_a: f64, eta_b: f64, p_d: f64, e_d: f64) -> ExperimentParams {
        ExperimentParams { p_d, e_d, ..ExperimentParams::ideal(eta_a, eta_b) }
    }

    #[test]
    fn lossless_noiseless_yields() {
        let y = pair_yields(&with(1.0, 1.0, 0.0, 0.0));
        assert_eq!(y.y_r0s0, 0.25);
        assert_eq!(y.y_r1s1, 0.25);
        assert_eq!(y.y_r0s1, 0.0);
        assert_eq!(y.y_r1s0, 0.0);
    }

    #[test]
    fn fully_lossy_yields_are_background_only() {
        let pd = 1e-3;
        let y = pair_yields(&with(0.0, 0.0, pd, 0.0));
        let want = (1.0 - pd).powi(2) * pd * pd;
        assert_abs_diff_eq!(y.y_r0s0, want, epsilon = 1e-20);
        assert_abs_diff_eq!(y.y_r0s1, want, epsilon = 1e-20);
    }

    #[test]
    fn yield_examples() {
        let p = with(0.37, 0.81, 0.0, 0.0);
        assert_abs_diff_eq!(yield_11(&p), 0.37 * 0.81 / 2.0, epsilon = 1e-16);
        assert_abs_diff_eq!(yield_11(&with(0.1, 0.1, 0.0, 0.0)), 0.005, epsilon = 1e-16);
        assert_abs_diff_eq!(yield_11(&with(1.0, 1.0, 0.5, 0.0)), 0.25, epsilon = 1e-16);
    }

    #[test]
    fn error_examples() {
        let (e, _) = error_11(&with(0.3, 0.6, 0.0, 0.015));
        assert_abs_diff_eq!(e, 0.015, epsilon = 1e-15);
        let (e, _) = error_11(&with(0.0, 0.0, 1e-4, 0.015));
        assert_abs_diff_eq!(e, 0.5, epsilon = 1e-12);
        let (e, prod) = error_11(&with(0.0, 0.0, 0.0, 0.015));
        assert_eq!((e, prod), (0.5, 0.0));
    }

    #[test]
    fn key_rate_examples() {
        let p = ExperimentParams { sift_factor: 0.5, ..with(0.4, 0.3, 0.0, 0.0) };
        assert_abs_diff_eq!(key_rate_single_photon(&p), 0.5 * 0.4 * 0.3 / 2.0, epsilon = 1e-16);

        let p = with(0.4, 0.3, 0.0, 0.5);
        let y11 = yield_11(&p);
        assert_abs_diff_eq!(key_rate_single_photon(&p), -y11 * p.f, epsilon = 1e-16);

        let p = ExperimentParams::table_one(0.145, 0.145);
        assert!(key_rate_single_photon(&p) > 0.0);
        let h = binary_entropy(error_11(&p).0).unwrap();
        assert_abs_diff_eq!(
            key_rate_single_photon(&p),
            yield_11(&p) * (1.0 - 2.16 * h),
            epsilon = 1e-16
        );
    }

    proptest! {
        #[test]
        fn yield_is_sum_of_pattern_yields(ea in 0.0f64..=1.0, eb in 0.0f64..=1.0, pd in 0.0f64..0.5) {
            let p = with(ea, eb, pd, 0.0);
            let y = yield_11(&p);
            let sum = pair_yields(&p).total();
            prop_assert!((y - sum).abs() <= 1e-15 * y.abs() + 1e-300);
        }

        #[test]
        fn error_rate_bracket(ea in 0.0f64..=1.0, eb in 0.0f64..=1.0, pd in 0.0f64..0.5, ed in 0.0f64..=0.5) {
            let (e, _) = error_11(&with(ea, eb, pd, ed));
            prop_assert!(e >= ed.min(0.5) - 1e-15 && e <= 0.5 + 1e-15, "e11 = {}", e);
        }

        #[test]
        fn swap_symmetry(ea in 0.0f64..=1.0, eb in 0.0f64..=1.0, pd in 0.0f64..0.5, ed in 0.0f64..=0.5) {
            let p = with(ea, eb, pd, ed);
            let q = p.swapped();
            prop_assert_eq!(pair_yields(&p), pair_yields(&q));
            prop_assert_eq!(yield_11(&p), yield_11(&q));
            prop_assert_eq!(error_11(&p), error_11(&q));
            prop_assert_eq!(key_rate_single_photon(&p), key_rate_single_photon(&q));
        }
    }
}
