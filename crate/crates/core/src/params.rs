//! Experimental constants, the dB channel model and intensity bookkeeping.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Error rate of random background clicks.
pub const E0: f64 = 0.5;

/// Detector quantum efficiency of the reference parameter set.
pub const TABLE_DETECTOR_EFFICIENCY: f64 = 0.145;
/// Dark-count probability per detector per gate of the reference parameter set.
pub const TABLE_DARK_COUNT: f64 = 3.0e-6;
/// Error-correction inefficiency of the reference parameter set.
pub const TABLE_EC_INEFFICIENCY: f64 = 1.16;
/// Misalignment error probability of the reference parameter set.
pub const TABLE_MISALIGNMENT: f64 = 0.015;

/// Which party's vacuum contribution enters the decoy key rate.
///
/// `Forward` (Alice to Bob) credits `Q'_{0 mu_b}`; `Reverse` credits `Q'_{mu_a 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reconciliation {
    #[default]
    Forward,
    Reverse,
}

impl FromStr for Reconciliation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Reconciliation::Forward),
            "reverse" => Ok(Reconciliation::Reverse),
            other => Err(Error::InvalidParameter(format!(
                "reconciliation must be `forward` or `reverse`, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Reconciliation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reconciliation::Forward => "forward",
            Reconciliation::Reverse => "reverse",
        })
    }
}

/// Detector, channel and protocol constants shared by every scheme.
///
/// `eta_a` and `eta_b` are total path transmittances and already include the
/// detector efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentParams {
    pub eta_a: f64,
    pub eta_b: f64,
    /// Dark-count probability per detector per gate.
    pub p_d: f64,
    /// Error-correction inefficiency, `f = 1` at the Shannon limit.
    pub f: f64,
    /// Misalignment error probability.
    pub e_d: f64,
    /// Multiplier applied to the final key rate (basis and dead-time sifting).
    pub sift_factor: f64,
    pub reconciliation: Reconciliation,
}

impl ExperimentParams {
    /// Reference detector/error constants with the given transmittances.
    pub fn table_one(eta_a: f64, eta_b: f64) -> Self {
        ExperimentParams {
            eta_a,
            eta_b,
            p_d: TABLE_DARK_COUNT,
            f: TABLE_EC_INEFFICIENCY,
            e_d: TABLE_MISALIGNMENT,
            sift_factor: 1.0,
            reconciliation: Reconciliation::Forward,
        }
    }

    /// Reference constants on a channel of `total_loss_db` split symmetrically.
    pub fn table_one_at_loss(total_loss_db: f64) -> Result<Self> {
        let (eta_a, eta_b) = channel_from_loss(total_loss_db, TABLE_DETECTOR_EFFICIENCY, 0.5)?;
        Ok(Self::table_one(eta_a, eta_b))
    }

    /// Noise-free channel: no dark counts, no misalignment, Shannon-limit correction.
    pub fn ideal(eta_a: f64, eta_b: f64) -> Self {
        ExperimentParams {
            eta_a,
            eta_b,
            p_d: 0.0,
            f: 1.0,
            e_d: 0.0,
            sift_factor: 1.0,
            reconciliation: Reconciliation::Forward,
        }
    }

    /// The `e_0` constant, fixed at 1/2.
    pub fn e0(&self) -> f64 {
        E0
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("eta_a", self.eta_a)?;
        check_probability("eta_b", self.eta_b)?;
        if !(0.0..1.0).contains(&self.p_d) {
            return Err(Error::domain("p_d", self.p_d, "0 <= p_d < 1"));
        }
        if !(0.0..=E0).contains(&self.e_d) {
            return Err(Error::domain("e_d", self.e_d, "0 <= e_d <= 1/2"));
        }
        if self.f < 1.0 || !self.f.is_finite() {
            return Err(Error::domain("f", self.f, "finite and >= 1"));
        }
        if !(self.sift_factor > 0.0 && self.sift_factor <= 1.0) {
            return Err(Error::domain("sift_factor", self.sift_factor, "0 < sift_factor <= 1"));
        }
        Ok(())
    }

    /// Exchanges the roles of Alice's and Bob's channels.
    pub fn swapped(&self) -> Self {
        ExperimentParams {
            eta_a: self.eta_b,
            eta_b: self.eta_a,
            ..*self
        }
    }
}

fn check_probability(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::domain(name, v, "0 <= value <= 1"))
    }
}

/// Mean photon numbers of Alice's and Bob's coherent sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceIntensities {
    pub mu_a: f64,
    pub mu_b: f64,
}

impl SourceIntensities {
    pub fn new(mu_a: f64, mu_b: f64) -> Result<Self> {
        let src = SourceIntensities { mu_a, mu_b };
        src.validate()?;
        Ok(src)
    }

    pub fn symmetric(mu: f64) -> Self {
        SourceIntensities { mu_a: mu, mu_b: mu }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu_a", self.mu_a), ("mu_b", self.mu_b)] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::domain(name, v, "finite and >= 0"));
            }
        }
        Ok(())
    }

    pub fn swapped(&self) -> Self {
        SourceIntensities {
            mu_a: self.mu_b,
            mu_b: self.mu_a,
        }
    }
}

/// `mu' = eta_a mu_a + eta_b mu_b`, `x = sqrt(eta_a mu_a eta_b mu_b) / 2`,
/// `y = (1 - p_d) exp(-mu'/4)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedIntensity {
    pub mu_prime: f64,
    pub x: f64,
    pub y: f64,
    one_minus_y: f64,
}

impl DerivedIntensity {
    /// Builds the notation directly from arriving intensities and dark counts.
    pub fn from_arrivals(arrive_a: f64, arrive_b: f64, p_d: f64) -> Self {
        let mu_prime = arrive_a + arrive_b;
        let x = 0.5 * (arrive_a * arrive_b).sqrt();
        let log_y = (-p_d).ln_1p() - 0.25 * mu_prime;
        DerivedIntensity {
            mu_prime,
            x,
            y: log_y.exp(),
            one_minus_y: -log_y.exp_m1(),
        }
    }

    /// Builds the notation from `(x, y)` directly, with `mu'` inferred for
    /// `p_d = 0`. Used by the phase-average identities, which depend only on
    /// `x` and `y`.
    pub fn from_xy(x: f64, y: f64) -> Self {
        DerivedIntensity {
            mu_prime: -4.0 * y.ln(),
            x,
            y,
            one_minus_y: 1.0 - y,
        }
    }

    /// `1 - y`, computed without cancellation for small `mu'` and `p_d`.
    pub fn one_minus_y(&self) -> f64 {
        self.one_minus_y
    }
}

/// Transmittances for a channel of `total_loss_db` split between Alice
/// (fraction `asymmetry`) and Bob (the rest), times the detector efficiency.
pub fn channel_from_loss(total_loss_db: f64, detector_efficiency: f64, asymmetry: f64) -> Result<(f64, f64)> {
    if total_loss_db < 0.0 || !total_loss_db.is_finite() {
        return Err(Error::domain("total_loss_db", total_loss_db, "finite and >= 0"));
    }
    if !(detector_efficiency > 0.0 && detector_efficiency <= 1.0) {
        return Err(Error::domain(
            "detector_efficiency",
            detector_efficiency,
            "0 < detector_efficiency <= 1",
        ));
    }
    check_probability("asymmetry", asymmetry)?;
    let side = |fraction: f64| detector_efficiency * 10f64.powf(-fraction * total_loss_db / 10.0);
    Ok((side(asymmetry), side(1.0 - asymmetry)))
}

/// Computes `(mu', x, y)` for the given channel and sources.
pub fn derive_intensity(params: &ExperimentParams, src: &SourceIntensities) -> DerivedIntensity {
    DerivedIntensity::from_arrivals(params.eta_a * src.mu_a, params.eta_b * src.mu_b, params.p_d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn loss_examples() {
        let (a, b) = channel_from_loss(0.0, 0.145, 0.5).unwrap();
        assert_eq!((a, b), (0.145, 0.145));
        let (a, b) = channel_from_loss(20.0, 1.0, 0.5).unwrap();
        assert_abs_diff_eq!(a, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.1, epsilon = 1e-15);
        let (a, b) = channel_from_loss(10.0, 1.0, 0.0).unwrap();
        assert_eq!(a, 1.0);
        assert_abs_diff_eq!(b, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn negative_loss_is_rejected() {
        assert!(channel_from_loss(-1.0, 0.5, 0.5).is_err());
        assert!(channel_from_loss(1.0, 0.0, 0.5).is_err());
        assert!(channel_from_loss(1.0, 0.5, 1.5).is_err());
    }

    #[test]
    fn derive_examples() {
        let p = ExperimentParams::ideal(1.0, 1.0);
        let d = derive_intensity(&p, &SourceIntensities::symmetric(2.0));
        assert_eq!(d.mu_prime, 4.0);
        assert_eq!(d.x, 1.0);
        assert_abs_diff_eq!(d.y, (-1.0f64).exp(), epsilon = 1e-16);
        assert_abs_diff_eq!(d.one_minus_y(), 1.0 - (-1.0f64).exp(), epsilon = 1e-16);

        let p = ExperimentParams::table_one(0.3, 0.2);
        let d = derive_intensity(&p, &SourceIntensities::new(0.0, 0.7).unwrap());
        assert_eq!(d.x, 0.0);
        assert_abs_diff_eq!(d.mu_prime, 0.2 * 0.7, epsilon = 1e-16);

        // balanced arrivals: x = s/2 = mu'/4
        let d = DerivedIntensity::from_arrivals(0.03, 0.03, 0.0);
        assert_abs_diff_eq!(d.x, 0.015, epsilon = 1e-16);
        assert_abs_diff_eq!(d.x, d.mu_prime / 4.0, epsilon = 1e-16);
    }

    #[test]
    fn validation() {
        assert!(ExperimentParams::table_one(0.1, 0.1).validate().is_ok());
        let bad = [
            ExperimentParams { eta_a: 1.1, ..ExperimentParams::table_one(0.1, 0.1) },
            ExperimentParams { p_d: 1.0, ..ExperimentParams::table_one(0.1, 0.1) },
            ExperimentParams { e_d: 0.6, ..ExperimentParams::table_one(0.1, 0.1) },
            ExperimentParams { f: 0.9, ..ExperimentParams::table_one(0.1, 0.1) },
            ExperimentParams { sift_factor: 0.0, ..ExperimentParams::table_one(0.1, 0.1) },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
        assert!(SourceIntensities::new(-0.1, 1.0).is_err());
        assert_eq!(ExperimentParams::table_one(0.1, 0.1).e0(), 0.5);
    }

    #[test]
    fn reconciliation_round_trip() {
        for r in [Reconciliation::Forward, Reconciliation::Reverse] {
            assert_eq!(r.to_string().parse::<Reconciliation>().unwrap(), r);
        }
        assert!("sideways".parse::<Reconciliation>().is_err());
    }

    proptest! {
        #[test]
        fn derived_intensity_invariants(
            ea in 0.0f64..=1.0, eb in 0.0f64..=1.0,
            ma in 0.0f64..10.0, mb in 0.0f64..10.0,
            pd in 0.0f64..0.1,
        ) {
            let p = ExperimentParams { p_d: pd, ..ExperimentParams::ideal(ea, eb) };
            let s = SourceIntensities { mu_a: ma, mu_b: mb };
            let d = derive_intensity(&p, &s);
            let sw = derive_intensity(&p.swapped(), &s.swapped());
            prop_assert_eq!(d.mu_prime, sw.mu_prime);
            prop_assert_eq!(d.x, sw.x);
            prop_assert_eq!(d.y, sw.y);
            prop_assert!(d.x <= d.mu_prime / 4.0 * (1.0 + 1e-15));
            prop_assert!(d.y > 0.0 && d.y <= 1.0);
            prop_assert!((d.one_minus_y() - (1.0 - d.y)).abs() <= 1e-15);
        }

        #[test]
        fn am_gm_equality_only_when_balanced(s in 0.01f64..5.0, r in 1.01f64..4.0) {
            let balanced = DerivedIntensity::from_arrivals(s, s, 0.0);
            prop_assert!((balanced.x - balanced.mu_prime / 4.0).abs() <= 1e-15 * s);
            let skewed = DerivedIntensity::from_arrivals(s * r, s / r, 0.0);
            prop_assert!(skewed.x < skewed.mu_prime / 4.0);
        }
    }
}
