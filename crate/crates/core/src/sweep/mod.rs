//! Loss sweeps, intensity optimization and tabular output.

mod setup;
mod verify;

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::decoy::{key_rate_equal_phase, key_rate_full_random, key_rate_original_xz, qber_full_random, RatePoint};
use crate::error::{Error, Result};
use crate::numerics::{entropy_of_rate, maximize_scalar, QuadratureSpec};
use crate::params::{DerivedIntensity, ExperimentParams, SourceIntensities};
use crate::postselect::{conditional_qber, key_rate_postselected, PhasePartition};
use crate::single_photon::{error_11, key_rate_single_photon, yield_11};

pub use setup::{Channel, Setup, PARAM_KEYS};
pub use verify::{default_source, verify, Check, VerifyOptions, VerifyReport};

/// Search interval for the intensity parameter.
pub const MU_BOUNDS: (f64, f64) = (1e-4, 10.0);
const MU_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    SinglePhoton,
    XyFullRandom,
    XyPostselect,
    XyEqualPhase,
    XzOriginal,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::SinglePhoton,
        Scheme::XyFullRandom,
        Scheme::XyPostselect,
        Scheme::XyEqualPhase,
        Scheme::XzOriginal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::SinglePhoton => "single-photon",
            Scheme::XyFullRandom => "xy-full-random",
            Scheme::XyPostselect => "xy-postselect",
            Scheme::XyEqualPhase => "xy-equal-phase",
            Scheme::XzOriginal => "xz-original",
        }
    }

    /// Whether the scheme uses coherent-state sources (and so has an intensity).
    pub fn uses_intensity(self) -> bool {
        self != Scheme::SinglePhoton
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sch| sch.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Scheme::ALL.iter().map(|s| s.name()).collect();
                Error::InvalidParameter(format!("unknown scheme `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuChoice {
    Fixed(f64),
    Optimize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub scheme: Scheme,
    pub loss_grid: Vec<f64>,
    /// Only used by [`Scheme::XyPostselect`].
    pub n_partitions: usize,
    pub mu: MuChoice,
    pub quadrature: QuadratureSpec,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.loss_grid.is_empty() {
            return Err(Error::InvalidParameter("loss grid is empty".into()));
        }
        if let Some(bad) = self.loss_grid.iter().find(|l| **l < 0.0 || !l.is_finite()) {
            return Err(Error::InvalidParameter(format!("loss {bad} dB is not a finite nonnegative value")));
        }
        if self.loss_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("loss grid must be strictly increasing".into()));
        }
        PhasePartition::reference(self.n_partitions)?;
        if let MuChoice::Fixed(mu) = self.mu {
            SourceIntensities::new(mu, mu)?;
        }
        self.quadrature.validate()
    }
}

/// One evaluated operating point. Fields that do not apply to the scheme are
/// `None` and print as empty CSV cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub loss_db: Option<f64>,
    pub eta_a: f64,
    pub eta_b: f64,
    /// `sqrt(mu_a mu_b)`; the optimized or fixed intensity parameter.
    pub mu: Option<f64>,
    pub mu_a: Option<f64>,
    pub mu_b: Option<f64>,
    pub q11: f64,
    pub e11: f64,
    pub q_mu: Option<f64>,
    pub e_mu: Option<f64>,
    pub q0_prime: Option<f64>,
    pub i_ec: f64,
    pub rate_raw: f64,
    pub rate_clamped: f64,
}

pub const CSV_HEADER: &str =
    "scheme,loss_db,eta_a,eta_b,mu,mu_a,mu_b,q11,e11,q_mu,e_mu,q0_prime,i_ec,rate_raw,rate_clamped";

fn cell(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn num(v: f64) -> String {
    format!("{v:.8e}")
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        [
            self.scheme.name().to_string(),
            cell(self.loss_db),
            num(self.eta_a),
            num(self.eta_b),
            cell(self.mu),
            cell(self.mu_a),
            cell(self.mu_b),
            num(self.q11),
            num(self.e11),
            cell(self.q_mu),
            cell(self.e_mu),
            cell(self.q0_prime),
            num(self.i_ec),
            num(self.rate_raw),
            num(self.rate_clamped),
        ]
        .join(",")
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.to_csv())?;
    }
    Ok(())
}

/// Intensities with `eta_a mu_a = eta_b mu_b` and `sqrt(mu_a mu_b) = t`.
/// Falls back to `mu_a = mu_b = t` when either channel is opaque.
pub fn balanced_intensities(params: &ExperimentParams, t: f64) -> SourceIntensities {
    if params.eta_a > 0.0 && params.eta_b > 0.0 {
        let r = (params.eta_b / params.eta_a).sqrt();
        SourceIntensities { mu_a: t * r, mu_b: t / r }
    } else {
        SourceIntensities::symmetric(t)
    }
}

/// Rate terms for `scheme`. For the single-photon scheme `q_11` is the yield.
pub fn evaluate_scheme(
    scheme: Scheme,
    params: &ExperimentParams,
    src: &SourceIntensities,
    n_partitions: usize,
    quadrature: &QuadratureSpec,
) -> Result<RatePoint> {
    Ok(match scheme {
        Scheme::SinglePhoton => {
            let y11 = yield_11(params);
            let (e11, _) = error_11(params);
            RatePoint {
                q_11: y11,
                e_11: e11,
                q_mu: 0.0,
                e_mu: 0.0,
                q0_prime: 0.0,
                i_ec: y11 * params.f * entropy_of_rate(e11),
                rate: key_rate_single_photon(params),
            }
        }
        Scheme::XyFullRandom => key_rate_full_random(params, src),
        Scheme::XyPostselect => key_rate_postselected(params, src, n_partitions, quadrature)?,
        Scheme::XyEqualPhase => key_rate_equal_phase(params, src),
        Scheme::XzOriginal => key_rate_original_xz(params, src),
    })
}

/// Evaluates one point and packages it as a row. `src` is ignored for the
/// single-photon scheme.
pub fn evaluate_point(
    scheme: Scheme,
    params: &ExperimentParams,
    src: &SourceIntensities,
    loss_db: Option<f64>,
    n_partitions: usize,
    quadrature: &QuadratureSpec,
) -> Result<SweepRow> {
    let pt = evaluate_scheme(scheme, params, src, n_partitions, quadrature).map_err(|e| {
        e.context(format!(
            "{scheme} at eta_a={}, eta_b={}, mu_a={}, mu_b={}",
            params.eta_a, params.eta_b, src.mu_a, src.mu_b
        ))
    })?;
    let coherent = scheme.uses_intensity();
    let some = |v: f64| coherent.then_some(v);
    let q0 = match scheme {
        Scheme::XyFullRandom | Scheme::XyPostselect | Scheme::XyEqualPhase => Some(pt.q0_prime),
        _ => None,
    };
    Ok(SweepRow {
        scheme,
        loss_db,
        eta_a: params.eta_a,
        eta_b: params.eta_b,
        mu: some((src.mu_a * src.mu_b).sqrt()),
        mu_a: some(src.mu_a),
        mu_b: some(src.mu_b),
        q11: pt.q_11,
        e11: pt.e_11,
        q_mu: some(pt.q_mu),
        e_mu: some(pt.e_mu),
        q0_prime: q0,
        i_ec: pt.i_ec,
        rate_raw: pt.rate,
        rate_clamped: if pt.rate > 0.0 { pt.rate } else { 0.0 },
    })
}

/// Maximizes the raw key rate over the balanced intensity parameter in
/// [`MU_BOUNDS`]. Returns the optimum and the rate terms there.
pub fn optimize_mu_at(
    params: &ExperimentParams,
    scheme: Scheme,
    n_partitions: usize,
    quadrature: &QuadratureSpec,
) -> Result<(f64, RatePoint)> {
    if !scheme.uses_intensity() {
        return Err(Error::InvalidParameter(format!("{scheme} has no intensity to optimize")));
    }
    let failure = std::sync::Mutex::new(None);
    let objective = |t: f64| match evaluate_scheme(scheme, params, &balanced_intensities(params, t), n_partitions, quadrature) {
        Ok(pt) => pt.rate,
        Err(e) => {
            failure.lock().unwrap().get_or_insert(e);
            f64::NEG_INFINITY
        }
    };
    let (t, _) = maximize_scalar(objective, MU_BOUNDS.0, MU_BOUNDS.1, MU_TOLERANCE);
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e.context(format!("optimizing {scheme} at eta_a={}, eta_b={}", params.eta_a, params.eta_b)));
    }
    let pt = evaluate_scheme(scheme, params, &balanced_intensities(params, t), n_partitions, quadrature)?;
    Ok((t, pt))
}

/// Evaluates `spec` on every loss value; rows come back in grid order.
pub fn run_sweep(spec: &SweepSpec, setup: &Setup) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    if setup.has_fixed_channel() {
        return Err(Error::InvalidParameter(
            "params file fixes eta_a/eta_b, so there is no loss axis to sweep".into(),
        ));
    }
    spec.loss_grid
        .par_iter()
        .map(|&loss| {
            let params = setup.params_at_loss(loss)?;
            let t = match spec.mu {
                MuChoice::Fixed(mu) => mu,
                MuChoice::Optimize if spec.scheme.uses_intensity() => {
                    optimize_mu_at(&params, spec.scheme, spec.n_partitions, &spec.quadrature)?.0
                }
                MuChoice::Optimize => 0.0,
            };
            let src = balanced_intensities(&params, t);
            evaluate_point(spec.scheme, &params, &src, Some(loss), spec.n_partitions, &spec.quadrature)
                .map_err(|e| e.context(format!("loss {loss} dB")))
        })
        .collect()
}

/// Overall and partition-0 conditional QBERs at one balanced arriving
/// intensity, without dark counts or misalignment.
#[derive(Debug, Clone, PartialEq)]
pub struct QberRow {
    /// Arriving intensity per side, `eta_a mu_a = eta_b mu_b`.
    pub intensity: f64,
    pub mu_prime: f64,
    pub x: f64,
    pub qber_overall: f64,
    pub conditional: Vec<(usize, f64)>,
}

pub fn qber_curve(intensities: &[f64], partitions: &[usize], quadrature: &QuadratureSpec) -> Result<Vec<QberRow>> {
    if let Some(bad) = intensities.iter().find(|s| **s < 0.0 || !s.is_finite()) {
        return Err(Error::InvalidParameter(format!("intensity {bad} is not a finite nonnegative value")));
    }
    let parts = partitions
        .iter()
        .map(|&n| PhasePartition::reference(n))
        .collect::<Result<Vec<_>>>()?;
    intensities
        .par_iter()
        .map(|&s| {
            let di = DerivedIntensity::from_arrivals(s, s, 0.0);
            let conditional = parts
                .iter()
                .map(|&p| Ok((p.n_partitions(), conditional_qber(&di, 0.0, p, quadrature)?.qber)))
                .collect::<Result<Vec<_>>>()
                .map_err(|e: Error| e.context(format!("intensity {s}")))?;
            Ok(QberRow {
                intensity: s,
                mu_prime: di.mu_prime,
                x: di.x,
                qber_overall: qber_full_random(&di, 0.0).0,
                conditional,
            })
        })
        .collect()
}

pub fn write_qber_csv<W: Write>(rows: &[QberRow], partitions: &[usize], mut out: W) -> io::Result<()> {
    let mut header = String::from("intensity,mu_prime,x,qber_overall");
    for n in partitions {
        header.push_str(&format!(",qber_n{n}"));
    }
    writeln!(out, "{header}")?;
    for row in rows {
        let mut line = [row.intensity, row.mu_prime, row.x, row.qber_overall].map(num).join(",");
        for (_, e) in &row.conditional {
            line.push(',');
            line.push_str(&num(*e));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Parses `start:stop:step` (inclusive of `stop` up to rounding) or a
/// comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::InvalidParameter(format!("grid `{text}`: {msg}"));
    let value = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad(format!("`{}` is not a finite number", s.trim())))
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (value(start)?, value(stop)?, value(step)?);
            if step.is_nan() || step <= 0.0 {
                return Err(bad("step must be positive".into()));
            }
            if stop < start {
                return Err(bad("stop is below start".into()));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        [list] => list.split(',').map(value).collect(),
        _ => Err(bad("expected `start:stop:step` or a comma-separated list".into())),
    }
}
