use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

/// Occupation numbers of four optical modes.
pub type Occupation = [u8; 4];

/// Sparse pure state over four bosonic modes, keyed by occupation numbers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FockState {
    amplitudes: BTreeMap<Occupation, Complex64>,
}

fn factorial(n: u8) -> f64 {
    (1..=n).map(f64::from).product()
}

impl FockState {
    pub fn vacuum() -> Self {
        Self::from_terms([([0; 4], Complex64::new(1.0, 0.0))])
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Occupation, Complex64)>) -> Self {
        let mut state = FockState::default();
        for (occ, amp) in terms {
            *state.amplitudes.entry(occ).or_default() += amp;
        }
        state
    }

    pub fn amplitude(&self, occ: Occupation) -> Complex64 {
        self.amplitudes.get(&occ).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn max_photons(&self) -> u32 {
        self.amplitudes
            .keys()
            .map(|o| o.iter().map(|&n| u32::from(n)).sum())
            .max()
            .unwrap_or(0)
    }

    /// Tensor product of a state on modes (0, 1) with a state on modes (2, 3).
    pub fn product(first: &[(u8, u8, Complex64)], second: &[(u8, u8, Complex64)]) -> Self {
        Self::from_terms(
            first
                .iter()
                .flat_map(|&(a, b, ca)| second.iter().map(move |&(c, d, cb)| ([a, b, c, d], ca * cb))),
        )
    }

    /// Applies the passive linear-optics map `in_k^dag -> sum_l u[l][k] out_l^dag`.
    ///
    /// Each basis state is written as a product of creation operators on the
    /// vacuum, every operator is substituted, and the resulting monomials are
    /// renormalized into occupation-number states.
    pub fn transform(&self, u: &[[Complex64; 4]; 4]) -> Self {
        let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, &amp) in &self.amplitudes {
            let norm: f64 = occ.iter().map(|&n| factorial(n)).product();
            let mut poly: BTreeMap<Occupation, Complex64> = BTreeMap::new();
            poly.insert([0; 4], amp / norm.sqrt());
            for (k, &count) in occ.iter().enumerate() {
                for _ in 0..count {
                    let mut next = BTreeMap::new();
                    for (mono, &c) in &poly {
                        for (l, row) in u.iter().enumerate() {
                            if row[k] == Complex64::default() {
                                continue;
                            }
                            let mut m = *mono;
                            m[l] += 1;
                            *next.entry(m).or_default() += c * row[k];
                        }
                    }
                    poly = next;
                }
            }
            for (mono, c) in poly {
                let weight: f64 = mono.iter().map(|&n| factorial(n)).product();
                *out.entry(mono).or_default() += c * weight.sqrt();
            }
        }
        out.retain(|_, a| a.norm_sqr() > 0.0);
        FockState { amplitudes: out }
    }

    /// Probability of each occupation pattern.
    pub fn number_distribution(&self) -> impl Iterator<Item = (Occupation, f64)> + '_ {
        self.amplitudes.iter().map(|(&o, a)| (o, a.norm_sqr()))
    }
}

/// Relay beam splitters. Input mode order `(a_r, a_s, b_r, b_s)`, output
/// order `(r0, r1, s0, s1)`:
/// `a^dag -> (0^dag + 1^dag)/sqrt2`, `b^dag -> (1^dag - 0^dag)/sqrt2` on each
/// of the reference and signal pairs.
pub fn relay_unitary() -> [[Complex64; 4]; 4] {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let z = Complex64::default();
    [
        [h, z, -h, z],
        [h, z, h, z],
        [z, h, z, -h],
        [z, h, z, h],
    ]
}

/// Threshold-detector outcome over `(r0, r1, s0, s1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickPattern {
    pub clicks: [bool; 4],
    pub probability: f64,
}

impl ClickPattern {
    /// Exactly one reference and exactly one signal detector fired.
    pub fn is_success(&self) -> bool {
        let [r0, r1, s0, s1] = self.clicks;
        (r0 != r1) && (s0 != s1)
    }

    /// `r0 s0` or `r1 s1`; only meaningful for successful patterns.
    pub fn is_correlated(&self) -> bool {
        self.clicks[0] == self.clicks[2]
    }
}

/// Occupations of a source's (reference, signal) modes with their amplitude.
type ModeAmplitude = (u8, u8, Complex64);

fn single_photon_qubit(theta: f64) -> [ModeAmplitude; 2] {
    [
        (1, 0, Complex64::new(FRAC_1_SQRT_2, 0.0)),
        (0, 1, Complex64::from_polar(FRAC_1_SQRT_2, theta)),
    ]
}

const VACUUM_PAIR: [ModeAmplitude; 1] = [(0, 0, Complex64::new(1.0, 0.0))];

/// Exact distribution of the 16 click patterns when each party sends one
/// photon in `(|1,0> + e^{i theta}|0,1>)/sqrt2` through a channel of
/// transmittance `eta`, and every detector also dark-counts with probability
/// `p_d`.
///
/// Loss is the four-branch mixture over which photons survive; each branch
/// state is normalized and weighted by its survival probability.
pub fn evolve_single_photon_pair(theta_a: f64, theta_b: f64, eta_a: f64, eta_b: f64, p_d: f64) -> Vec<ClickPattern> {
    let qa = single_photon_qubit(theta_a);
    let qb = single_photon_qubit(theta_b);
    let branches: [(f64, &[ModeAmplitude], &[ModeAmplitude]); 4] = [
        (eta_a * eta_b, &qa, &qb),
        (eta_a * (1.0 - eta_b), &qa, &VACUUM_PAIR),
        ((1.0 - eta_a) * eta_b, &VACUUM_PAIR, &qb),
        ((1.0 - eta_a) * (1.0 - eta_b), &VACUUM_PAIR, &VACUUM_PAIR),
    ];
    let u = relay_unitary();

    let mut patterns: Vec<ClickPattern> = (0..16u8)
        .map(|bits| ClickPattern {
            clicks: [bits & 8 != 0, bits & 4 != 0, bits & 2 != 0, bits & 1 != 0],
            probability: 0.0,
        })
        .collect();

    for (weight, a, b) in branches {
        if weight == 0.0 {
            continue;
        }
        let out = FockState::product(a, b).transform(&u);
        assert!(out.max_photons() <= 2, "photon number exceeds the two-photon cutoff");
        for (occ, p) in out.number_distribution() {
            for pat in patterns.iter_mut() {
                let mut prob = weight * p;
                for (&n, &click) in occ.iter().zip(&pat.clicks) {
                    let silent = if n == 0 { 1.0 - p_d } else { 0.0 };
                    prob *= if click { 1.0 - silent } else { silent };
                }
                pat.probability += prob;
            }
        }
    }
    patterns
}

/// `(Y11, e11 Y11)` from the exact click distribution at `theta_a = theta_b`.
///
/// Without misalignment the anticorrelated successes `A` are the errors. A
/// fraction `e_d` of the interference-driven excess `C - A` is flipped on top.
pub fn oracle_yield_and_error(eta_a: f64, eta_b: f64, p_d: f64, e_d: f64) -> (f64, f64) {
    let patterns = evolve_single_photon_pair(0.0, 0.0, eta_a, eta_b, p_d);
    let (mut correlated, mut anticorrelated) = (0.0, 0.0);
    for pat in patterns.iter().filter(|p| p.is_success()) {
        if pat.is_correlated() {
            correlated += pat.probability;
        } else {
            anticorrelated += pat.probability;
        }
    }
    (correlated + anticorrelated, anticorrelated + e_d * (correlated - anticorrelated))
}
