use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::params::{ExperimentParams, SourceIntensities};
use crate::postselect::PhasePartition;

/// Samples per RNG stream. Batch `i` always uses stream `i`, so results do not
/// depend on how batches are spread over threads.
pub const BATCH_SIZE: u64 = 1 << 14;

/// Sample means of the per-phase gain and intrinsic error product, with
/// standard errors. With one sample the standard errors are `NaN`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub samples: u64,
    pub q_hat: f64,
    pub q_std_error: f64,
    pub eq_hat: f64,
    pub eq_std_error: f64,
    /// `eq_hat / q_hat`, with a delta-method standard error.
    pub ratio_hat: f64,
    pub ratio_std_error: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean_q: f64,
    mean_e: f64,
    m2_q: f64,
    m2_e: f64,
    co: f64,
}

impl Moments {
    fn push(&mut self, q: f64, e: f64) {
        self.n += 1.0;
        let dq = q - self.mean_q;
        let de = e - self.mean_e;
        self.mean_q += dq / self.n;
        self.mean_e += de / self.n;
        self.m2_q += dq * (q - self.mean_q);
        self.m2_e += de * (e - self.mean_e);
        self.co += dq * (e - self.mean_e);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let dq = other.mean_q - self.mean_q;
        let de = other.mean_e - self.mean_e;
        let w = self.n * other.n / n;
        Moments {
            n,
            mean_q: self.mean_q + dq * other.n / n,
            mean_e: self.mean_e + de * other.n / n,
            m2_q: self.m2_q + other.m2_q + dq * dq * w,
            m2_e: self.m2_e + other.m2_e + de * de * w,
            co: self.co + other.co + dq * de * w,
        }
    }
}

fn draw_in(partition: &PhasePartition, rng: &mut ChaCha8Rng) -> f64 {
    let [(lo0, _), (lo1, _)] = partition.bands();
    let start = if rng.random::<bool>() { lo1 } else { lo0 };
    start + partition.width() * rng.random::<f64>()
}

fn batch_phases(alice: &PhasePartition, bob: &PhasePartition, seed: u64, batch: u64, len: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    (0..len)
        .map(|_| {
            let phi_a = draw_in(alice, &mut rng);
            let phi_b = draw_in(bob, &mut rng);
            (phi_a, phi_b)
        })
        .collect()
}

fn batches(samples: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let count = usize::try_from(samples.div_ceil(BATCH_SIZE)).expect("batch count fits in usize");
    (0..count).into_par_iter().map(move |i| {
        let i = i as u64;
        (i, BATCH_SIZE.min(samples - i * BATCH_SIZE))
    })
}

/// The `(phi_a, phi_b)` pairs used by [`mc_coherent_estimate`], in order.
pub fn phase_samples(n_partitions: usize, m: usize, samples: u64, seed: u64) -> Result<Vec<(f64, f64)>> {
    let alice = PhasePartition::new(n_partitions, m)?;
    let bob = PhasePartition::reference(n_partitions)?;
    Ok(batches(samples)
        .flat_map_iter(|(i, len)| batch_phases(&alice, &bob, seed, i, len))
        .collect())
}

/// Per-phase success probability and intrinsic error product, computed from the
/// four detector click probabilities.
///
/// Independent of the closed forms in [`crate::decoy`]: it starts from the
/// detection probabilities and enumerates the successful click patterns.
pub fn per_phase_rates(params: &ExperimentParams, src: &SourceIntensities, phi_a: f64, phi_b: f64) -> (f64, f64) {
    let arrive_a = params.eta_a * src.mu_a;
    let arrive_b = params.eta_b * src.mu_b;
    let y = (1.0 - params.p_d) * (-(arrive_a + arrive_b) / 4.0).exp();
    let x = (arrive_a * arrive_b).sqrt() / 2.0;
    let c = (phi_b - phi_a).cos();
    // Same-basis encoding with theta_a = theta_b: reference and signal pairs
    // see the same relative phase.
    let d0 = 1.0 - y * (-x * c).exp();
    let d1 = 1.0 - y * (x * c).exp();
    let one_of_pair = d0 * (1.0 - d1) + (1.0 - d0) * d1;
    let gain = one_of_pair * one_of_pair;
    let error = d0 * (1.0 - d1) * (1.0 - d0) * d1 + (1.0 - d0) * d1 * d0 * (1.0 - d1);
    (gain, error)
}

/// Averages [`per_phase_rates`] over Alice's phase uniform on partition `m`
/// and Bob's on partition 0 (the whole circle when `n_partitions = 1`).
pub fn mc_coherent_estimate(
    params: &ExperimentParams,
    src: &SourceIntensities,
    n_partitions: usize,
    m: usize,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(crate::Error::InvalidParameter("Monte Carlo needs at least one sample".into()));
    }
    let alice = PhasePartition::new(n_partitions, m)?;
    let bob = PhasePartition::reference(n_partitions)?;
    let partials: Vec<Moments> = batches(samples)
        .map(|(i, len)| {
            let mut acc = Moments::default();
            for (pa, pb) in batch_phases(&alice, &bob, seed, i, len) {
                let (q, e) = per_phase_rates(params, src, pa, pb);
                acc.push(q, e);
            }
            acc
        })
        .collect();
    let mom = partials.into_iter().fold(Moments::default(), Moments::merge);

    let n = mom.n;
    let (var_q, var_e, cov) = if samples > 1 {
        (mom.m2_q / (n - 1.0), mom.m2_e / (n - 1.0), mom.co / (n - 1.0))
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    let ratio = mom.mean_e / mom.mean_q;
    let ratio_var = (var_e - 2.0 * ratio * cov + ratio * ratio * var_q) / (n * mom.mean_q * mom.mean_q);
    Ok(McEstimate {
        samples,
        q_hat: mom.mean_q,
        q_std_error: (var_q / n).sqrt(),
        eq_hat: mom.mean_e,
        eq_std_error: (var_e / n).sqrt(),
        ratio_hat: ratio,
        ratio_std_error: ratio_var.max(0.0).sqrt(),
    })
}
