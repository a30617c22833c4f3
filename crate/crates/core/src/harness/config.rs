use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::ScalarMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    QIdentity,
    MultinomialIdentity,
    ZinnSweep,
    GrowthL1,
    H1Equivalence,
    PmOnH1tm,
    KhintchineSweep,
    BohrRoundtrip,
    NoncontractionSearch,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::QIdentity,
        ExperimentKind::MultinomialIdentity,
        ExperimentKind::ZinnSweep,
        ExperimentKind::GrowthL1,
        ExperimentKind::H1Equivalence,
        ExperimentKind::PmOnH1tm,
        ExperimentKind::KhintchineSweep,
        ExperimentKind::BohrRoundtrip,
        ExperimentKind::NoncontractionSearch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::QIdentity => "q-identity",
            ExperimentKind::MultinomialIdentity => "multinomial-identity",
            ExperimentKind::ZinnSweep => "zinn-sweep",
            ExperimentKind::GrowthL1 => "growth-l1",
            ExperimentKind::H1Equivalence => "h1-equivalence",
            ExperimentKind::PmOnH1tm => "pm-on-h1tm",
            ExperimentKind::KhintchineSweep => "khintchine-sweep",
            ExperimentKind::BohrRoundtrip => "bohr-roundtrip",
            ExperimentKind::NoncontractionSearch => "noncontraction-search",
        }
    }

    pub fn is_stochastic(self) -> bool {
        !matches!(
            self,
            ExperimentKind::QIdentity | ExperimentKind::MultinomialIdentity | ExperimentKind::GrowthL1
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown experiment `{s}`")))
    }
}

/// Experiment parameters; unset fields take per-experiment defaults in [`ExperimentConfig::resolve`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n_coords: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar_mode: Option<ScalarMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_path: Option<PathBuf>,
    /// Largest tensor power (growth-l1, pm-on-h1tm).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Spacing of the growth-l1 table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    /// Values of the mean-one function on a uniform factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<f64>>,
    /// Exponent for the operator-norm lower bound attached to growth-l1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_index: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection_support: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<i64>,
    /// Adds wall-clock time to the report, which then stops being byte-reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_timing: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub parameters: Parameters,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self { experiment, parameters: Parameters::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.parameters.seed = Some(seed);
        self
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Fills defaults and validates every parameter the experiment reads.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        use ExperimentKind::*;
        let mut p = self.parameters.clone();
        let kind = self.experiment;
        if kind.is_stochastic() && p.seed.is_none() {
            return Err(bad(format!("experiment {kind} needs a seed")));
        }
        match kind {
            QIdentity | MultinomialIdentity => {
                let mode = *p.scalar_mode.get_or_insert(ScalarMode::Rational);
                if mode != ScalarMode::Rational {
                    return Err(Error::ScalarMode(format!("{kind} runs in rational mode only")));
                }
                p.n.get_or_insert(2);
                p.m.get_or_insert(2);
                if kind == QIdentity {
                    p.n_coords.get_or_insert(4);
                }
            }
            ZinnSweep => {
                p.n_coords.get_or_insert(6);
                p.k.get_or_insert(2);
                p.trials.get_or_insert(100);
            }
            GrowthL1 => {
                p.n_max.get_or_insert(16);
                p.step.get_or_insert(2);
                p.f.get_or_insert(vec![0.0, 2.0]);
                if p.p.is_some() {
                    p.n_coords.get_or_insert(6);
                    p.trials.get_or_insert(8);
                    p.seed.get_or_insert(0);
                }
            }
            H1Equivalence => {
                let k = *p.k.get_or_insert(8);
                p.n_coords.get_or_insert(3);
                p.trials.get_or_insert(100);
                p.degree.get_or_insert(((k.max(2) - 1) / 2) as i64);
            }
            PmOnH1tm => {
                let k = *p.k.get_or_insert(8);
                p.n_coords.get_or_insert(3);
                p.trials.get_or_insert(100);
                p.n_max.get_or_insert(6);
                p.f.get_or_insert(vec![0.0, 1.5, 1.5]);
                p.degree.get_or_insert(((k.max(2) - 1) / 2) as i64);
            }
            KhintchineSweep => {
                p.max_dim.get_or_insert(12);
                p.trials.get_or_insert(200);
            }
            BohrRoundtrip => {
                p.max_index.get_or_insert(10_000);
                p.projection_support.get_or_insert(1_000);
                p.m.get_or_insert(4);
            }
            NoncontractionSearch => {
                p.k.get_or_insert(16);
                p.grid.get_or_insert(11);
                p.trials.get_or_insert(20);
                p.degree.get_or_insert(3);
            }
        }
        if let Some(k) = p.k {
            if k < 2 {
                return Err(bad(format!("K = {k} must be at least 2")));
            }
        }
        if matches!(kind, ZinnSweep | H1Equivalence | PmOnH1tm) && p.n_coords == Some(0) {
            return Err(bad("N must be positive"));
        }
        if p.trials == Some(0) {
            return Err(bad("trials must be positive"));
        }
        if p.step == Some(0) {
            return Err(bad("step must be positive"));
        }
        if kind == NoncontractionSearch && (p.grid == Some(0) || p.k.unwrap_or(0) < 8) {
            return Err(bad("noncontraction search needs a non-empty grid and K ≥ 8"));
        }
        Ok(ExperimentConfig { experiment: kind, parameters: p })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
            assert_eq!(serde_json::to_value(k).unwrap(), serde_json::json!(k.name()));
        }
    }

    #[test]
    fn seed_required_for_stochastic() {
        assert!(ExperimentConfig::new(ExperimentKind::ZinnSweep).resolve().is_err());
        assert!(ExperimentConfig::new(ExperimentKind::ZinnSweep).with_seed(1).resolve().is_ok());
        assert!(ExperimentConfig::new(ExperimentKind::QIdentity).resolve().is_ok());
    }

    #[test]
    fn unknown_parameters_rejected() {
        let text = r#"{"experiment": "q-identity", "parameters": {"N": 4, "bogus": 1}}"#;
        assert!(ExperimentConfig::from_json_str(text).is_err());
        let text = r#"{"experiment": "q-identity", "parameters": {"N": 6, "n": 3, "m": 2}}"#;
        let cfg = ExperimentConfig::from_json_str(text).unwrap().resolve().unwrap();
        assert_eq!(cfg.parameters.scalar_mode, Some(ScalarMode::Rational));
    }

    #[test]
    fn float_mode_rejected_for_identities() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::MultinomialIdentity);
        cfg.parameters.scalar_mode = Some(ScalarMode::Real);
        assert!(matches!(cfg.resolve(), Err(Error::ScalarMode(_))));
    }
}
