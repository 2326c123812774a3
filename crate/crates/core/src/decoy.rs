//! Coherent-state gains, QBERs and key rates.
//!
//! Three variants share the detection model: full overall-phase randomization,
//! randomized-but-equal overall phases (`delta_phi = 0`), and the X-Z encoded
//! scheme whose Z basis puts the whole pulse in one of the two modes.
//!
//! All closed forms are written in terms of `1 - y`, `sinh` and `I0 - 1` so that
//! they stay accurate as the arriving intensity goes to zero.

use crate::numerics::{bessel_i0_minus_one, entropy_of_rate};
use crate::params::{derive_intensity, DerivedIntensity, ExperimentParams, Reconciliation, SourceIntensities, E0};
use crate::single_photon::{error_11, yield_11};

/// Click probabilities of the four relay detectors at fixed phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionProbs {
    pub d_r0: f64,
    pub d_r1: f64,
    pub d_s0: f64,
    pub d_s1: f64,
    /// `theta_a - theta_b`.
    pub theta_diff: f64,
    /// `phi_b - phi_a`.
    pub delta_phi: f64,
}

/// Gains, error rates and the assembled key rate at one operating point.
///
/// Gains and `i_ec` are per pulse pair and do not include the sift factor;
/// `rate` does.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub q_11: f64,
    pub e_11: f64,
    pub q_mu: f64,
    pub e_mu: f64,
    pub q0_prime: f64,
    pub i_ec: f64,
    pub rate: f64,
}

/// Z-basis gain of the X-Z scheme, split into the correct (different modes)
/// and erroneous (same mode) scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectGain {
    pub total: f64,
    pub correct: f64,
    pub error: f64,
}

pub fn detection_probs(di: &DerivedIntensity, delta_phi: f64, theta_diff: f64) -> DetectionProbs {
    let DerivedIntensity { x, y, .. } = *di;
    let r = x * delta_phi.cos();
    let s = x * (delta_phi + theta_diff).cos();
    DetectionProbs {
        d_r0: 1.0 - y * (-r).exp(),
        d_r1: 1.0 - y * r.exp(),
        d_s0: 1.0 - y * (-s).exp(),
        d_s1: 1.0 - y * s.exp(),
        theta_diff,
        delta_phi,
    }
}

/// Successful-BSM probability at fixed `delta_phi`: `y^2 (e^{-xc} + e^{xc} - 2y)^2`.
pub fn gain_at_phase(di: &DerivedIntensity, delta_phi: f64) -> f64 {
    let half = (0.5 * di.x * delta_phi.cos()).sinh();
    let inner = di.one_minus_y() + 2.0 * half * half;
    4.0 * di.y * di.y * inner * inner
}

/// Anticorrelated (erroneous) successes at fixed `delta_phi` with `theta_a = theta_b`:
/// `2 y^2 (y - e^{xc}) (y - e^{-xc})`.
pub fn intrinsic_error_at_phase(di: &DerivedIntensity, delta_phi: f64) -> f64 {
    let half = (0.5 * di.x * delta_phi.cos()).sinh();
    let omy = di.one_minus_y();
    2.0 * di.y * di.y * (omy * omy - 4.0 * di.y * half * half)
}

/// Correlated minus anticorrelated successes at fixed `delta_phi`:
/// `y^2 (e^{xc} - e^{-xc})^2`.
pub fn interference_at_phase(di: &DerivedIntensity, delta_phi: f64) -> f64 {
    let s = (di.x * delta_phi.cos()).sinh();
    4.0 * di.y * di.y * s * s
}

/// Error product with misalignment: background-like events err with
/// probability `e0`, interference-driven ones with probability `e_d`.
pub fn total_error_product(gain: f64, interference: f64, e_d: f64) -> f64 {
    E0 * gain - (E0 - e_d) * interference
}

/// `error_product / gain`, or `e0` when nothing clicks.
pub fn error_rate(error_product: f64, gain: f64) -> f64 {
    if gain > 0.0 {
        (error_product / gain).clamp(0.0, 1.0)
    } else {
        E0
    }
}

fn i0m1(x: f64) -> f64 {
    bessel_i0_minus_one(x).unwrap_or(f64::INFINITY)
}

/// Phase-averaged gain `2 y^2 [1 + 2y^2 - 4y I0(x) + I0(2x)]`.
pub fn gain_full_random(di: &DerivedIntensity) -> f64 {
    let DerivedIntensity { x, y, .. } = *di;
    let omy = di.one_minus_y();
    2.0 * y * y * (2.0 * omy * omy - 4.0 * y * i0m1(x) + i0m1(2.0 * x))
}

/// Phase-averaged intrinsic error product `2 y^2 [1 + y^2 - 2y I0(x)]`.
pub fn intrinsic_error_full_random(di: &DerivedIntensity) -> f64 {
    let DerivedIntensity { x, y, .. } = *di;
    let omy = di.one_minus_y();
    2.0 * y * y * (omy * omy - 2.0 * y * i0m1(x))
}

/// Phase-averaged interference term `2 y^2 [I0(2x) - 1]`.
pub fn interference_full_random(di: &DerivedIntensity) -> f64 {
    2.0 * di.y * di.y * i0m1(2.0 * di.x)
}

/// Returns `(E, E * Q)` under full phase randomization.
pub fn qber_full_random(di: &DerivedIntensity, e_d: f64) -> (f64, f64) {
    let gain = gain_full_random(di);
    let product = total_error_product(gain, interference_full_random(di), e_d);
    (error_rate(product, gain), product)
}

/// Gain of single-photon pairs, Poisson-weighted.
pub fn gain_q11(params: &ExperimentParams, src: &SourceIntensities) -> f64 {
    src.mu_a * src.mu_b * (-src.mu_a - src.mu_b).exp() * yield_11(params)
}

/// `Q'_{0 mu_b}`: Alice emits vacuum and the relay still announces success.
pub fn gain_q0_prime(params: &ExperimentParams, src: &SourceIntensities) -> f64 {
    let arrive_b = params.eta_b * src.mu_b;
    let log_keep = (-params.p_d).ln_1p();
    let no_click = -(log_keep - 0.25 * arrive_b).exp_m1();
    4.0 * (2.0 * log_keep - 0.5 * arrive_b - src.mu_a).exp() * no_click * no_click
}

/// Vacuum credit for the configured reconciliation direction.
pub fn vacuum_gain(params: &ExperimentParams, src: &SourceIntensities) -> f64 {
    match params.reconciliation {
        Reconciliation::Forward => gain_q0_prime(params, src),
        Reconciliation::Reverse => gain_q0_prime(&params.swapped(), &src.swapped()),
    }
}

fn single_photon_term(params: &ExperimentParams, src: &SourceIntensities) -> (f64, f64) {
    let q11 = gain_q11(params, src);
    let (e11, _) = error_11(params);
    (q11, e11)
}

/// `sift * { Q11 [1 - H(e11)] + Q'_0 - Q f H(E) }` with full phase randomization.
pub fn key_rate_full_random(params: &ExperimentParams, src: &SourceIntensities) -> RatePoint {
    let di = derive_intensity(params, src);
    let (q_11, e_11) = single_photon_term(params, src);
    let q_mu = gain_full_random(&di);
    let (e_mu, _) = qber_full_random(&di, params.e_d);
    let q0_prime = vacuum_gain(params, src);
    let i_ec = q_mu * params.f * entropy_of_rate(e_mu);
    let rate = params.sift_factor * (q_11 * (1.0 - entropy_of_rate(e_11)) + q0_prime - i_ec);
    RatePoint { q_11, e_11, q_mu, e_mu, q0_prime, i_ec, rate }
}

/// Key rate when both overall phases coincide, with the vacuum credit dropped.
pub fn key_rate_equal_phase(params: &ExperimentParams, src: &SourceIntensities) -> RatePoint {
    let di = derive_intensity(params, src);
    let (q_11, e_11) = single_photon_term(params, src);
    let q_mu = gain_at_phase(&di, 0.0);
    let product = total_error_product(q_mu, interference_at_phase(&di, 0.0), params.e_d);
    let e_mu = error_rate(product, q_mu);
    let i_ec = q_mu * params.f * entropy_of_rate(e_mu);
    let rate = params.sift_factor * (q_11 * (1.0 - entropy_of_rate(e_11)) - i_ec);
    RatePoint { q_11, e_11, q_mu, e_mu, q0_prime: 0.0, i_ec, rate }
}

pub fn gain_rect(params: &ExperimentParams, src: &SourceIntensities) -> RectGain {
    let p_d = params.p_d;
    let arrive_a = params.eta_a * src.mu_a;
    let arrive_b = params.eta_b * src.mu_b;
    let di = DerivedIntensity::from_arrivals(arrive_a, arrive_b, p_d);
    let log_keep = (-p_d).ln_1p();
    let click = |arrive: f64| -(log_keep - 0.5 * arrive).exp_m1();
    let envelope = (2.0 * log_keep - 0.5 * di.mu_prime).exp();

    let correct = 2.0 * envelope * click(arrive_a) * click(arrive_b);
    // I0(2x) - (1 - p_d) e^{-mu'/2}, split as (I0(2x) - 1) + (1 - (1 - p_d) e^{-mu'/2})
    let bright = i0m1(2.0 * di.x) + click(di.mu_prime);
    let error = 2.0 * p_d * envelope * bright;
    RectGain { total: correct + error, correct, error }
}

/// `sift * { Q11 [1 - H(e11)] - Q_rect f H(E_rect) }` for the X-Z encoded scheme.
pub fn key_rate_original_xz(params: &ExperimentParams, src: &SourceIntensities) -> RatePoint {
    let (q_11, e_11) = single_photon_term(params, src);
    let rect = gain_rect(params, src);
    let product = params.e_d * rect.correct + (1.0 - params.e_d) * rect.error;
    let e_mu = error_rate(product, rect.total);
    let i_ec = rect.total * params.f * entropy_of_rate(e_mu);
    let rate = params.sift_factor * (q_11 * (1.0 - entropy_of_rate(e_11)) - i_ec);
    RatePoint { q_11, e_11, q_mu: rect.total, e_mu, q0_prime: 0.0, i_ec, rate }
}
