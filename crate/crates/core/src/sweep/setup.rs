use std::str::FromStr;

use crate::error::{Error, Result};
use crate::params::{
    channel_from_loss, ExperimentParams, Reconciliation, SourceIntensities, TABLE_DARK_COUNT, TABLE_DETECTOR_EFFICIENCY,
    TABLE_EC_INEFFICIENCY, TABLE_MISALIGNMENT,
};

/// How transmittances are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    /// From total loss in dB, split by `asymmetry` (Alice's fraction), times
    /// the detector efficiency.
    Loss { detector_efficiency: f64, asymmetry: f64 },
    /// Fixed transmittances; no loss axis.
    Fixed { eta_a: f64, eta_b: f64 },
}

/// Everything a params file can set. Defaults are the tabulated experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setup {
    pub channel: Channel,
    pub p_d: f64,
    pub f: f64,
    pub e_d: f64,
    pub sift_factor: f64,
    pub reconciliation: Reconciliation,
    pub loss_db: Option<f64>,
    pub intensities: Option<SourceIntensities>,
}

impl Default for Setup {
    fn default() -> Self {
        Setup {
            channel: Channel::Loss { detector_efficiency: TABLE_DETECTOR_EFFICIENCY, asymmetry: 0.5 },
            p_d: TABLE_DARK_COUNT,
            f: TABLE_EC_INEFFICIENCY,
            e_d: TABLE_MISALIGNMENT,
            sift_factor: 1.0,
            reconciliation: Reconciliation::Forward,
            loss_db: None,
            intensities: None,
        }
    }
}

/// Keys accepted in a params file.
pub const PARAM_KEYS: [&str; 12] = [
    "eta_a",
    "eta_b",
    "loss_db",
    "asymmetry",
    "detector_efficiency",
    "p_d",
    "f",
    "e_d",
    "sift_factor",
    "mu_a",
    "mu_b",
    "reconciliation",
];

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

impl Setup {
    /// Parses `key = value` lines. `#` starts a comment; blank lines are
    /// ignored. Unknown or repeated keys are errors.
    pub fn parse(text: &str) -> Result<Setup> {
        let mut seen: Vec<(&str, usize, &str)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(line_no, format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !PARAM_KEYS.contains(&key) {
                return Err(parse_err(line_no, format!("unknown key `{key}`")));
            }
            if let Some(&(_, first, _)) = seen.iter().find(|(k, _, _)| *k == key) {
                return Err(parse_err(line_no, format!("duplicate key `{key}` (first set on line {first})")));
            }
            if value.is_empty() {
                return Err(parse_err(line_no, format!("missing value for `{key}`")));
            }
            seen.push((key, line_no, value));
        }

        let get = |key: &str| seen.iter().find(|(k, _, _)| *k == key).map(|&(_, l, v)| (l, v));
        let number = |key: &str| -> Result<Option<(usize, f64)>> {
            match get(key) {
                None => Ok(None),
                Some((line, v)) => v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .map(|x| Some((line, x)))
                    .ok_or_else(|| parse_err(line, format!("`{key}` is not a finite number: `{v}`"))),
            }
        };

        let mut setup = Setup::default();
        let pair = |a: &str, b: &str| -> Result<Option<(f64, f64)>> {
            match (number(a)?, number(b)?) {
                (Some((_, x)), Some((_, y))) => Ok(Some((x, y))),
                (None, None) => Ok(None),
                (Some((line, _)), None) => Err(parse_err(line, format!("`{a}` given without `{b}`"))),
                (None, Some((line, _))) => Err(parse_err(line, format!("`{b}` given without `{a}`"))),
            }
        };

        if let Some((eta_a, eta_b)) = pair("eta_a", "eta_b")? {
            for key in ["loss_db", "asymmetry", "detector_efficiency"] {
                if let Some((line, _)) = get(key) {
                    return Err(parse_err(line, format!("`{key}` conflicts with fixed `eta_a`/`eta_b`")));
                }
            }
            setup.channel = Channel::Fixed { eta_a, eta_b };
        } else {
            let detector_efficiency = number("detector_efficiency")?.map_or(TABLE_DETECTOR_EFFICIENCY, |v| v.1);
            let asymmetry = number("asymmetry")?.map_or(0.5, |v| v.1);
            setup.channel = Channel::Loss { detector_efficiency, asymmetry };
            setup.loss_db = number("loss_db")?.map(|v| v.1);
        }
        if let Some((mu_a, mu_b)) = pair("mu_a", "mu_b")? {
            setup.intensities = Some(SourceIntensities { mu_a, mu_b });
        }
        for (key, slot) in [
            ("p_d", &mut setup.p_d),
            ("f", &mut setup.f),
            ("e_d", &mut setup.e_d),
            ("sift_factor", &mut setup.sift_factor),
        ] {
            if let Some((_, v)) = number(key)? {
                *slot = v;
            }
        }
        if let Some((line, v)) = get("reconciliation") {
            setup.reconciliation = Reconciliation::from_str(v).map_err(|e| parse_err(line, e.to_string()))?;
        }

        setup.validate()?;
        Ok(setup)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(loss) = self.loss_db {
            self.params_at_loss(loss)?;
        } else {
            self.params_at_loss(0.0)?;
        }
        if let Some(src) = self.intensities {
            src.validate()?;
        }
        Ok(())
    }

    pub fn has_fixed_channel(&self) -> bool {
        matches!(self.channel, Channel::Fixed { .. })
    }

    /// Parameters at `loss_db`. A fixed channel ignores the loss value.
    pub fn params_at_loss(&self, loss_db: f64) -> Result<ExperimentParams> {
        let (eta_a, eta_b) = match self.channel {
            Channel::Loss { detector_efficiency, asymmetry } => {
                channel_from_loss(loss_db, detector_efficiency, asymmetry)?
            }
            Channel::Fixed { eta_a, eta_b } => (eta_a, eta_b),
        };
        let params = ExperimentParams {
            eta_a,
            eta_b,
            p_d: self.p_d,
            f: self.f,
            e_d: self.e_d,
            sift_factor: self.sift_factor,
            reconciliation: self.reconciliation,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters at the file's own operating point (`loss_db`, or 0 dB).
    pub fn params(&self) -> Result<ExperimentParams> {
        self.params_at_loss(self.loss_db.unwrap_or(0.0))
    }
}
