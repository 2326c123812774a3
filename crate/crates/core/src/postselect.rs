//! Overall-phase postselection.
//!
//! The overall phase range `[0, 2pi)` is cut into `N` partitions, partition `m`
//! being the two bands `[m pi/N, (m+1) pi/N)` and the same band shifted by `pi`.
//! Bob always draws from partition 0; Alice's partition index is `m`.
//!
//! Two normalizations appear below. The *conditional* quantities (`q_m`,
//! `eq_m`) are averages over the pair of bands, so their mean over `m` is the
//! fully randomized value. The *joint* quantities are the probability that
//! Alice lands in partition `m` and the relay succeeds, i.e. conditional / N;
//! these enter the error-correction cost and the approximate small-intensity
//! expressions.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::decoy::{
    error_rate, gain_at_phase, gain_full_random, gain_q11, intrinsic_error_at_phase, total_error_product, RatePoint,
};
use crate::error::{Error, Result};
use crate::numerics::{entropy_of_rate, integrate_2d, QuadratureSpec, Rectangle};
use crate::params::{derive_intensity, DerivedIntensity, ExperimentParams, SourceIntensities};
use crate::single_photon::error_11;

/// Above this arriving intensity the small-intensity expansions are reported
/// as outside their regime.
pub const APPROX_MU_PRIME_LIMIT: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhasePartition {
    n_partitions: usize,
    m: usize,
}

impl PhasePartition {
    pub fn new(n_partitions: usize, m: usize) -> Result<Self> {
        if n_partitions == 0 {
            return Err(Error::InvalidParameter("number of phase partitions must be at least 1".into()));
        }
        if m >= n_partitions {
            return Err(Error::InvalidParameter(format!(
                "partition index {m} out of range for {n_partitions} partitions"
            )));
        }
        Ok(PhasePartition { n_partitions, m })
    }

    /// Partition `0` of `n_partitions`, the one Bob always uses.
    pub fn reference(n_partitions: usize) -> Result<Self> {
        Self::new(n_partitions, 0)
    }

    pub fn n_partitions(&self) -> usize {
        self.n_partitions
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Width `pi / N` of each band.
    pub fn width(&self) -> f64 {
        PI / self.n_partitions as f64
    }

    /// Probability that a uniformly random phase falls in this partition.
    pub fn weight(&self) -> f64 {
        1.0 / self.n_partitions as f64
    }

    /// The two half-open bands `[lo, hi)` making up the partition.
    pub fn bands(&self) -> [(f64, f64); 2] {
        let w = self.width();
        let lo = self.m as f64 * w;
        [(lo, lo + w), (lo + PI, lo + PI + w)]
    }

    pub fn contains(&self, phi: f64) -> bool {
        let phi = phi.rem_euclid(2.0 * PI);
        self.bands().iter().any(|&(lo, hi)| phi >= lo && phi < hi)
    }
}

/// Band-averaged per-phase quantity over Alice in `partition`, Bob in partition 0.
///
/// The integrand is divided by the fully randomized gain before integrating so
/// that the absolute tolerance acts as a relative one; this keeps results
/// accurate when the gains themselves are tiny.
fn band_average<F>(di: &DerivedIntensity, partition: PhasePartition, spec: &QuadratureSpec, per_phase: F) -> Result<f64>
where
    F: Fn(&DerivedIntensity, f64) -> f64,
{
    let scale = gain_full_random(di);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let scale = if scale.is_finite() { scale } else { 1.0 };
    let w = partition.width();
    let (lo, hi) = partition.bands()[0];
    let region = Rectangle::new(lo, hi, 0.0, w);
    let norm = 1.0 / (scale * region.area());
    let integral = integrate_2d(|phi_a, phi_b| per_phase(di, phi_b - phi_a) * norm, region, spec)?;
    Ok(integral * scale)
}

/// Gain conditioned on Alice's phase in `partition` and Bob's in partition 0.
pub fn conditional_gain(di: &DerivedIntensity, partition: PhasePartition, spec: &QuadratureSpec) -> Result<f64> {
    band_average(di, partition, spec, gain_at_phase)
        .map_err(|e| e.context(format!("conditional gain, N={} m={}", partition.n_partitions, partition.m)))
}

/// Conditional intrinsic error product `E'^m Q^m`.
pub fn conditional_intrinsic_error(
    di: &DerivedIntensity,
    partition: PhasePartition,
    spec: &QuadratureSpec,
) -> Result<f64> {
    band_average(di, partition, spec, intrinsic_error_at_phase)
        .map_err(|e| e.context(format!("conditional error, N={} m={}", partition.n_partitions, partition.m)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalQber {
    pub gain: f64,
    pub intrinsic_error_product: f64,
    pub error_product: f64,
    pub qber: f64,
}

/// Conditional gain and QBER with misalignment.
///
/// The interference part of the gain is `Q - 2 E'Q`; misalignment flips a
/// fraction `e_d` of it and the remainder errs with probability `e0`.
pub fn conditional_qber(
    di: &DerivedIntensity,
    e_d: f64,
    partition: PhasePartition,
    spec: &QuadratureSpec,
) -> Result<ConditionalQber> {
    let gain = conditional_gain(di, partition, spec)?;
    let intrinsic = conditional_intrinsic_error(di, partition, spec)?;
    let error_product = total_error_product(gain, gain - 2.0 * intrinsic, e_d);
    Ok(ConditionalQber {
        gain,
        intrinsic_error_product: intrinsic,
        error_product,
        qber: error_rate(error_product, gain),
    })
}

/// Conditional quantities for every partition index `m = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalRates {
    pub q_m: Vec<f64>,
    pub eq_m: Vec<f64>,
    pub e_m: Vec<f64>,
}

impl ConditionalRates {
    pub fn n_partitions(&self) -> usize {
        self.q_m.len()
    }

    /// Probability of landing in partition `m` and succeeding.
    pub fn joint_gain(&self, m: usize) -> f64 {
        self.q_m[m] / self.n_partitions() as f64
    }
}

/// Evaluates every partition; the quadratures run in parallel but the result
/// is ordered by `m`.
pub fn conditional_rates(
    di: &DerivedIntensity,
    e_d: f64,
    n_partitions: usize,
    spec: &QuadratureSpec,
) -> Result<ConditionalRates> {
    let parts = (0..n_partitions)
        .map(|m| PhasePartition::new(n_partitions, m))
        .collect::<Result<Vec<_>>>()?;
    let per_m = parts
        .into_par_iter()
        .map(|p| conditional_qber(di, e_d, p, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConditionalRates {
        q_m: per_m.iter().map(|c| c.gain).collect(),
        eq_m: per_m.iter().map(|c| c.error_product).collect(),
        e_m: per_m.iter().map(|c| c.qber).collect(),
    })
}

/// `-cos(2(m-1)pi/N) + 2 cos(2m pi/N) - cos(2(m+1)pi/N)`.
pub fn a_coefficient(partition: PhasePartition) -> f64 {
    let step = 2.0 * PI / partition.n_partitions as f64;
    let m = partition.m as f64;
    -((m - 1.0) * step).cos() + 2.0 * (m * step).cos() - ((m + 1.0) * step).cos()
}

/// Small-intensity expansions of the joint gain and intrinsic error product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxConditional {
    pub gain: f64,
    pub intrinsic_error_product: f64,
    /// False when `mu'` exceeds [`APPROX_MU_PRIME_LIMIT`].
    pub within_regime: bool,
}

pub fn approx_conditional_rates(di: &DerivedIntensity, partition: PhasePartition) -> ApproxConditional {
    let n = partition.n_partitions as f64;
    let DerivedIntensity { x, y, mu_prime, .. } = *di;
    let omy = di.one_minus_y();
    let base = y * y * omy * omy;
    let x2y3 = x * x * y * y * y;
    ApproxConditional {
        gain: 4.0 / n * base,
        intrinsic_error_product: 2.0 / n * base - x2y3 / n - x2y3 * n * a_coefficient(partition) / (4.0 * PI * PI),
        within_regime: mu_prime <= APPROX_MU_PRIME_LIMIT,
    }
}

/// `sum_m Q^m_joint f H(E^m)`, summed in index order.
pub fn i_ec_postselected(
    params: &ExperimentParams,
    src: &SourceIntensities,
    n_partitions: usize,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let di = derive_intensity(params, src);
    let rates = conditional_rates(&di, params.e_d, n_partitions, spec)?;
    Ok((0..n_partitions)
        .map(|m| rates.joint_gain(m) * params.f * entropy_of_rate(rates.e_m[m]))
        .sum())
}

/// `sift * { Q11 [1 - H(e11)] / N - Q^0 f H(E^0) }` with `Q^0` the joint gain
/// of partition 0 and the vacuum credit dropped.
///
/// In the returned point `q_mu`, `e_mu` and `i_ec` refer to partition 0.
pub fn key_rate_postselected(
    params: &ExperimentParams,
    src: &SourceIntensities,
    n_partitions: usize,
    spec: &QuadratureSpec,
) -> Result<RatePoint> {
    let partition = PhasePartition::reference(n_partitions)?;
    let di = derive_intensity(params, src);
    let cond = conditional_qber(&di, params.e_d, partition, spec)?;
    let q_11 = gain_q11(params, src);
    let (e_11, _) = error_11(params);
    let q_mu = cond.gain * partition.weight();
    let i_ec = q_mu * params.f * entropy_of_rate(cond.qber);
    let single = q_11 * (1.0 - entropy_of_rate(e_11)) * partition.weight();
    Ok(RatePoint {
        q_11,
        e_11,
        q_mu,
        e_mu: cond.qber,
        q0_prime: 0.0,
        i_ec,
        rate: params.sift_factor * (single - i_ec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoy::{intrinsic_error_full_random, key_rate_full_random, qber_full_random};
    use crate::params::E0;
    use approx::assert_abs_diff_eq;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn part(n: usize, m: usize) -> PhasePartition {
        PhasePartition::new(n, m).unwrap()
    }

    #[test]
    fn partition_validation() {
        assert!(PhasePartition::new(0, 0).is_err());
        assert!(PhasePartition::new(4, 4).is_err());
        let p = part(4, 1);
        assert_eq!(p.bands(), [(PI / 4.0, PI / 2.0), (5.0 * PI / 4.0, 3.0 * PI / 2.0)]);
        assert!(p.contains(0.3 * PI) && p.contains(1.3 * PI) && !p.contains(0.6 * PI));
        assert!(part(1, 0).contains(6.0));
    }

    #[test]
    fn single_partition_is_full_randomization() {
        let di = DerivedIntensity::from_arrivals(0.4, 0.1, 1e-3);
        let c = conditional_qber(&di, 0.015, part(1, 0), &spec()).unwrap();
        assert_abs_diff_eq!(c.gain, gain_full_random(&di), epsilon = 1e-9);
        assert_abs_diff_eq!(c.intrinsic_error_product, intrinsic_error_full_random(&di), epsilon = 1e-9);
        let (e, eq) = qber_full_random(&di, 0.015);
        assert_abs_diff_eq!(c.qber, e, epsilon = 1e-8);
        assert_abs_diff_eq!(c.error_product, eq, epsilon = 1e-9);
    }

    #[test]
    fn partition_average_identity() {
        let di = DerivedIntensity::from_xy(0.6, 0.7);
        for n in [2, 4, 8] {
            let r = conditional_rates(&di, 0.0, n, &spec()).unwrap();
            let avg_q = r.q_m.iter().sum::<f64>() / n as f64;
            assert_abs_diff_eq!(avg_q, gain_full_random(&di), epsilon = 1e-9);
            let avg_eq = (0..n)
                .map(|m| conditional_intrinsic_error(&di, part(n, m), &spec()).unwrap())
                .sum::<f64>()
                / n as f64;
            assert_abs_diff_eq!(avg_eq, intrinsic_error_full_random(&di), epsilon = 1e-9);
        }
    }

    #[test]
    fn mirror_partitions_agree() {
        let di = DerivedIntensity::from_arrivals(0.8, 0.3, 1e-4);
        for n in [4, 8] {
            for m in 1..n {
                let a = conditional_gain(&di, part(n, m), &spec()).unwrap();
                let b = conditional_gain(&di, part(n, n - m), &spec()).unwrap();
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn second_band_is_redundant() {
        let di = DerivedIntensity::from_arrivals(0.5, 0.5, 0.0);
        let p = part(4, 1);
        let w = p.width();
        let [(a0, a1), (b0, b1)] = p.bands();
        let f = |pa: f64, pb: f64| gain_at_phase(&di, pb - pa) / (w * w);
        let first = integrate_2d(f, Rectangle::new(a0, a1, 0.0, w), &spec()).unwrap();
        let second = integrate_2d(f, Rectangle::new(b0, b1, 0.0, w), &spec()).unwrap();
        let bob_second = integrate_2d(f, Rectangle::new(a0, a1, PI, PI + w), &spec()).unwrap();
        assert_abs_diff_eq!(first, second, epsilon = 1e-10);
        assert_abs_diff_eq!(first, bob_second, epsilon = 1e-10);
    }

    #[test]
    fn aligned_qber_decreases_with_partitions() {
        let di = DerivedIntensity::from_arrivals(5e-4, 5e-4, 0.0);
        let mut last = f64::INFINITY;
        for n in [1, 2, 4, 8] {
            let e = conditional_qber(&di, 0.0, part(n, 0), &spec()).unwrap().qber;
            assert!(e <= last, "N={n}: {e} > {last}");
            last = e;
        }
        assert!(last < 0.013);
    }

    #[test]
    fn orthogonal_partition_has_the_largest_qber() {
        let di = DerivedIntensity::from_arrivals(5e-4, 5e-4, 0.0);
        let rates = conditional_rates(&di, 0.0, 4, &spec()).unwrap();
        assert!(rates.e_m[2] > 0.4 && rates.e_m[2] <= 0.5, "{}", rates.e_m[2]);
        assert!(rates.e_m.iter().all(|&e| e <= rates.e_m[2]));
    }

    #[test]
    fn conditional_gain_below_supremum() {
        let di = DerivedIntensity::from_arrivals(1.2, 0.4, 1e-3);
        let sup = gain_at_phase(&di, 0.0);
        for m in 0..8 {
            let q = conditional_gain(&di, part(8, m), &spec()).unwrap();
            assert!(q >= 0.0 && q <= sup + 1e-12);
        }
    }

    #[test]
    fn a_coefficient_examples() {
        assert_abs_diff_eq!(a_coefficient(part(4, 0)), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a_coefficient(part(8, 0)), 2.0 - 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(a_coefficient(part(4, 2)), -2.0, epsilon = 1e-15);
    }

    #[test]
    fn approximation_without_interference() {
        let di = DerivedIntensity::from_arrivals(0.0, 0.01, 0.0);
        let a = approx_conditional_rates(&di, part(8, 3));
        let base = di.y * di.y * di.one_minus_y().powi(2);
        assert_abs_diff_eq!(a.gain, 0.5 * base, epsilon = 1e-18);
        assert_abs_diff_eq!(a.intrinsic_error_product / a.gain, 0.5, epsilon = 1e-14);
        assert!(a.within_regime);
        assert!(!approx_conditional_rates(&DerivedIntensity::from_arrivals(0.2, 0.2, 0.0), part(8, 0)).within_regime);
    }

    #[test]
    fn approximation_close_at_small_intensity() {
        let di = DerivedIntensity::from_arrivals(0.005, 0.005, 0.0);
        let p = part(8, 0);
        let a = approx_conditional_rates(&di, p);
        let q = conditional_gain(&di, p, &spec()).unwrap() * p.weight();
        let eq = conditional_intrinsic_error(&di, p, &spec()).unwrap() * p.weight();
        let cube = di.mu_prime.powi(3);
        assert!((a.gain - q).abs() < cube);
        assert!((a.intrinsic_error_product - eq).abs() < cube);
    }

    #[test]
    fn i_ec_examples() {
        let p = ExperimentParams::table_one(0.1, 0.1);
        let src = SourceIntensities::symmetric(0.3);
        let full = key_rate_full_random(&p, &src);
        let one = i_ec_postselected(&p, &src, 1, &spec()).unwrap();
        assert_abs_diff_eq!(one, full.i_ec, epsilon = 1e-12);

        let noisy = ExperimentParams { e_d: E0, ..p };
        let cost = i_ec_postselected(&noisy, &src, 4, &spec()).unwrap();
        assert_abs_diff_eq!(cost, noisy.f * full.q_mu, epsilon = 1e-12);

        let eight = i_ec_postselected(&p, &src, 8, &spec()).unwrap();
        assert!(eight < one);
    }

    #[test]
    fn single_partition_rate_drops_vacuum_credit() {
        let p = ExperimentParams::table_one(0.1, 0.1);
        let src = SourceIntensities::symmetric(0.3);
        let full = key_rate_full_random(&p, &src);
        let ps = key_rate_postselected(&p, &src, 1, &spec()).unwrap();
        assert_abs_diff_eq!(ps.rate, full.rate - full.q0_prime, epsilon = 1e-12);
        assert_eq!(ps.q0_prime, 0.0);
    }

    #[test]
    fn postselected_rate_signs() {
        let src = SourceIntensities::symmetric(0.25);
        let low = ExperimentParams::table_one_at_loss(5.0).unwrap();
        assert!(key_rate_postselected(&low, &src, 8, &spec()).unwrap().rate > 0.0);
        let high = ExperimentParams::table_one_at_loss(80.0).unwrap();
        assert!(key_rate_postselected(&high, &src, 8, &spec()).unwrap().rate <= 0.0);
    }

    #[test]
    fn vacuum_input_gives_zero() {
        let di = DerivedIntensity::from_arrivals(0.0, 0.0, 0.0);
        let c = conditional_qber(&di, 0.015, part(8, 0), &spec()).unwrap();
        assert_eq!((c.gain, c.qber), (0.0, E0));
    }
}
