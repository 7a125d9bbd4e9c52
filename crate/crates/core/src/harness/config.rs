//! Versioned JSON experiment configs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::consistency_lab::StatisticFamily;
use crate::error::{io_err, LabError, Result};
use crate::sequence_model::FamilyShape;

pub const SCHEMA_VERSION: u32 = 1;
/// Smallest replication count an experiment accepts.
pub const MIN_REPS: usize = 1000;

fn config_err(field: &str, reason: impl Into<String>) -> LabError {
    LabError::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

/// One alternative arm of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlternativeSpec {
    /// A preset family with ‖θ(n)‖ = amplitude · n^{−r}, in the statistic's basis.
    Family {
        label: String,
        amplitude: f64,
        shape: FamilyShape,
    },
    /// A single coefficient at `index`, scaled so the closed-form drift
    /// argument equals `noncentrality`.
    Calibrated {
        label: String,
        index: usize,
        noncentrality: f64,
    },
}

impl AlternativeSpec {
    pub fn label(&self) -> &str {
        match self {
            AlternativeSpec::Family { label, .. } | AlternativeSpec::Calibrated { label, .. } => {
                label
            }
        }
    }
}

/// Acceptance checks evaluated on an experiment's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Assertion {
    /// |α̂ − α| ≤ tolerance at every grid n.
    SizeWithin { tolerance: f64 },
    /// |β̂ − predicted β| ≤ tolerance for the listed arms.
    BetaMatchesPrediction { labels: Vec<String>, tolerance: f64 },
    /// power − α ≥ margin for the arm.
    PowerAboveAlpha { label: String, margin: f64 },
    /// |power − α| ≤ tolerance for the arm.
    PowerNearAlpha { label: String, tolerance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub statistic: StatisticFamily,
    /// Rate r of the alternatives; also fixes the test design.
    pub rate: f64,
    #[serde(default)]
    pub alternatives: Vec<AlternativeSpec>,
    pub n_grid: Vec<u64>,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assertions: Vec<Assertion>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_err(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.name.trim().is_empty() {
            return Err(config_err("name", "must be nonempty"));
        }
        if !(self.rate > 0.0 && self.rate < 0.5) {
            return Err(config_err(
                "rate",
                format!("must lie in (0, 1/2), got {}", self.rate),
            ));
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(config_err("n_grid", "need at least one sample size >= 1"));
        }
        if self.reps < MIN_REPS {
            return Err(config_err(
                "reps",
                format!("need at least {MIN_REPS}, got {}", self.reps),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(config_err(
                "alpha",
                format!("must lie in (0, 1), got {}", self.alpha),
            ));
        }
        let mut labels: Vec<&str> = self.alternatives.iter().map(|a| a.label()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) || labels.contains(&"null") {
            return Err(config_err(
                "alternatives",
                "labels must be unique and not `null`",
            ));
        }
        for (i, alt) in self.alternatives.iter().enumerate() {
            match alt {
                AlternativeSpec::Family { amplitude, .. }
                    if !(*amplitude >= 0.0 && amplitude.is_finite()) =>
                {
                    return Err(config_err(
                        &format!("alternatives[{i}].amplitude"),
                        "must be finite and >= 0",
                    ));
                }
                AlternativeSpec::Calibrated {
                    index,
                    noncentrality,
                    ..
                } => {
                    if *index == 0 {
                        return Err(config_err(
                            &format!("alternatives[{i}].index"),
                            "must be >= 1",
                        ));
                    }
                    if !(*noncentrality >= 0.0 && noncentrality.is_finite()) {
                        return Err(config_err(
                            &format!("alternatives[{i}].noncentrality"),
                            "must be finite and >= 0",
                        ));
                    }
                    if matches!(self.statistic, StatisticFamily::Cvm { .. }) {
                        return Err(config_err(
                            &format!("alternatives[{i}]"),
                            "the CvM statistic has no closed-form drift to calibrate against",
                        ));
                    }
                }
                _ => {}
            }
        }
        for (i, a) in self.assertions.iter().enumerate() {
            let known = |l: &str| labels.contains(&l);
            let ok = match a {
                Assertion::SizeWithin { .. } => true,
                Assertion::BetaMatchesPrediction { labels: ls, .. } => ls.iter().all(|l| known(l)),
                Assertion::PowerAboveAlpha { label, .. }
                | Assertion::PowerNearAlpha { label, .. } => known(label),
            };
            if !ok {
                return Err(config_err(
                    &format!("assertions[{i}]"),
                    "refers to an unknown alternative label",
                ));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| config_err("<document>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text).map_err(|e| match e {
            LabError::Config { field, reason } => LabError::Config {
                field,
                reason: format!("{reason} (in {})", path.display()),
            },
            other => other,
        })
    }
}

/// A list of experiments run together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub experiments: Vec<ExperimentConfig>,
}

impl Manifest {
    pub fn new(experiments: Vec<ExperimentConfig>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiments,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_err(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.experiments.is_empty() {
            return Err(config_err("experiments", "manifest must be nonempty"));
        }
        let mut names: Vec<&str> = self.experiments.iter().map(|e| e.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_err("experiments", "experiment names must be unique"));
        }
        for (i, e) in self.experiments.iter().enumerate() {
            e.validate().map_err(|err| match err {
                LabError::Config { field, reason } => {
                    config_err(&format!("experiments[{i}].{field}"), reason)
                }
                other => other,
            })?;
        }
        Ok(())
    }

    /// Accepts either a manifest or a single experiment config.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| LabError::Serde {
                path: path.into(),
                reason: e.to_string(),
            })?;
        let m = if value.get("experiments").is_some() {
            serde_json::from_value::<Manifest>(value)
        } else {
            serde_json::from_value::<ExperimentConfig>(value).map(|e| Manifest::new(vec![e]))
        }
        .map_err(|e| config_err("<document>", format!("{e} (in {})", path.display())))?;
        m.validate()?;
        Ok(m)
    }
}
