use std::f64::consts::PI;
use std::fmt;

use crate::decoy::{
    gain_at_phase, gain_full_random, intrinsic_error_at_phase, intrinsic_error_full_random,
};
use crate::error::Result;
use crate::numerics::{integrate_1d, QuadratureSpec};
use crate::oracle::{evolve_single_photon_pair, mc_coherent_estimate, oracle_yield_and_error};
use crate::params::{derive_intensity, DerivedIntensity, ExperimentParams, SourceIntensities};
use crate::postselect::{conditional_gain, conditional_intrinsic_error, PhasePartition};
use crate::single_photon::{error_11, yield_11};

use super::{balanced_intensities, Setup};

/// Intensity used when the params file does not set one.
const DEFAULT_VERIFY_MU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub discrepancy: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.discrepancy < self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{}  {:<72} discrepancy {:.3e}  tolerance {:.3e}",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                c.discrepancy,
                c.tolerance
            )?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        if failed == 0 {
            writeln!(f, "all {} checks passed", self.checks.len())
        } else {
            writeln!(f, "{failed} of {} checks FAILED", self.checks.len())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub samples: u64,
    /// Multiplies every tolerance. Values below 1 tighten the checks.
    pub tolerance_scale: f64,
    pub quadrature: QuadratureSpec,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 1,
            samples: 1_000_000,
            tolerance_scale: 1.0,
            quadrature: QuadratureSpec::default(),
        }
    }
}

const ETA_GRID: [f64; 5] = [0.0, 0.01, 0.145, 0.5, 1.0];
const PD_GRID: [f64; 3] = [0.0, 1e-6, 1e-3];
const ED_GRID: [f64; 2] = [0.0, 0.015];

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |m, v| if v.is_nan() || v > m { v } else { m })
}

fn oracle_grid(extra: &ExperimentParams) -> Vec<ExperimentParams> {
    let mut grid = vec![*extra];
    for eta_a in ETA_GRID {
        for eta_b in ETA_GRID {
            for p_d in PD_GRID {
                for e_d in ED_GRID {
                    grid.push(ExperimentParams { eta_a, eta_b, p_d, e_d, ..ExperimentParams::ideal(eta_a, eta_b) });
                }
            }
        }
    }
    grid
}

fn phase_average(g: impl Fn(f64) -> f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(integrate_1d(g, 0.0, 2.0 * PI, spec)? / (2.0 * PI))
}

/// Runs every cross-check between the closed forms and the independent
/// oracles. The oracle grid includes the params file's operating point, which
/// also sets the channel and intensity for the partition and Monte Carlo checks.
pub fn verify(setup: &Setup, options: &VerifyOptions) -> Result<VerifyReport> {
    let params = setup.params()?;
    let src = setup
        .intensities
        .unwrap_or_else(|| balanced_intensities(&params, DEFAULT_VERIFY_MU));
    let quad = &options.quadrature;
    let scale = options.tolerance_scale;
    let mut checks = Vec::new();
    let mut push = |name: String, discrepancy: f64, tolerance: f64| {
        checks.push(Check { name, discrepancy, tolerance: tolerance * scale });
    };

    let grid = oracle_grid(&params);
    let oracle: Vec<_> = grid
        .iter()
        .map(|p| (oracle_yield_and_error(p.eta_a, p.eta_b, p.p_d, p.e_d), yield_11(p), error_11(p).1))
        .collect();
    push(
        format!("single-photon yield vs Fock oracle ({} points)", grid.len()),
        max_of(oracle.iter().map(|((y, _), y11, _)| (y - y11).abs())),
        1e-12,
    );
    push(
        format!("single-photon error product vs Fock oracle ({} points)", grid.len()),
        max_of(oracle.iter().map(|((_, ey), _, ey11)| (ey - ey11).abs())),
        1e-12,
    );
    let thetas = [(0.0, 0.0), (PI, 0.0), (0.4, 2.9)];
    push(
        "click-pattern probabilities sum to one".into(),
        max_of(grid.iter().flat_map(|p| {
            thetas.iter().map(move |&(ta, tb)| {
                let total: f64 = evolve_single_photon_pair(ta, tb, p.eta_a, p.eta_b, p.p_d)
                    .iter()
                    .map(|c| c.probability)
                    .sum();
                (total - 1.0).abs()
            })
        })),
        1e-12,
    );

    let mut gain_gap: f64 = 0.0;
    let mut error_gap: f64 = 0.0;
    for x in [0.0, 0.05, 0.2, 1.0] {
        for y in [0.5, 0.9, 0.99] {
            let di = DerivedIntensity::from_xy(x, y);
            let q = phase_average(|p| gain_at_phase(&di, p), quad)?;
            let eq = phase_average(|p| intrinsic_error_at_phase(&di, p), quad)?;
            gain_gap = max_of([gain_gap, (q - gain_full_random(&di)).abs()].into_iter());
            error_gap = max_of([error_gap, (eq - intrinsic_error_full_random(&di)).abs()].into_iter());
        }
    }
    push("full-random gain vs phase quadrature".into(), gain_gap, 1e-9);
    push("full-random intrinsic error vs phase quadrature".into(), error_gap, 1e-9);

    let di = derive_intensity(&params, &src);
    let q_full = gain_full_random(&di);
    let eq_full = intrinsic_error_full_random(&di);
    for n in [2, 4, 8] {
        let mut q_sum = 0.0;
        let mut eq_sum = 0.0;
        for m in 0..n {
            let part = PhasePartition::new(n, m)?;
            q_sum += conditional_gain(&di, part, quad)?;
            eq_sum += conditional_intrinsic_error(&di, part, quad)?;
        }
        let rel = |v: f64, target: f64| if q_full > 0.0 { (v - target).abs() / q_full } else { (v - target).abs() };
        push(
            format!("partition average of gain, N={n} (relative)"),
            rel(q_sum / n as f64, q_full),
            1e-9,
        );
        push(
            format!("partition average of intrinsic error, N={n} (relative)"),
            rel(eq_sum / n as f64, eq_full),
            1e-9,
        );
    }

    let samples = options.samples;
    let mc = mc_coherent_estimate(&params, &src, 1, 0, samples, options.seed)?;
    push(
        format!("Monte Carlo gain, N=1 ({samples} samples, in std errors)"),
        (mc.q_hat - q_full).abs() / mc.q_std_error,
        3.0,
    );
    let part = PhasePartition::reference(8)?;
    let q8 = conditional_gain(&di, part, quad)?;
    let eq8 = conditional_intrinsic_error(&di, part, quad)?;
    let mc = mc_coherent_estimate(&params, &src, 8, 0, samples, options.seed.wrapping_add(1))?;
    push(
        format!("Monte Carlo intrinsic QBER, N=8 m=0 ({samples} samples, in std errors)"),
        (mc.ratio_hat - eq8 / q8).abs() / mc.ratio_std_error,
        3.0,
    );

    Ok(VerifyReport { checks })
}

/// Intensities the verify run uses when none are configured.
pub fn default_source(params: &ExperimentParams) -> SourceIntensities {
    balanced_intensities(params, DEFAULT_VERIFY_MU)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyOptions {
        VerifyOptions { samples: 100_000, ..VerifyOptions::default() }
    }

    #[test]
    fn default_run_passes_and_is_reproducible() {
        let setup = Setup::parse("loss_db = 10\n").unwrap();
        let report = verify(&setup, &quick()).unwrap();
        assert!(report.passed(), "{report}");
        let again = verify(&setup, &quick()).unwrap();
        assert_eq!(report.to_string(), again.to_string());
    }

    #[test]
    fn zero_tolerance_fails() {
        let opts = VerifyOptions { tolerance_scale: 0.0, ..quick() };
        let report = verify(&Setup::default(), &opts).unwrap();
        assert!(!report.passed());
        assert!(report.to_string().contains("FAILED"));
    }
}
