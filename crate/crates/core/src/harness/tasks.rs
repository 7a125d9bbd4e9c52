//! JSON task files for the analytic commands, with built-in defaults.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::consistency_lab::{
    maxiset_decompose, smoothness_for_rate, CompactSet, StatisticFamily, Thresholds,
};
use crate::error::{io_err, LabError, Result};
use crate::harness::config::SCHEMA_VERSION;
use crate::quadratic_tests::TruncationRule;
use crate::sequence_model::{AlternativeFamily, Basis, FamilyShape};

/// Reads a task file and checks its schema version.
pub fn load_task<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| LabError::Serde {
        path: path.into(),
        reason: e.to_string(),
    })?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        other => {
            return Err(LabError::Config {
                field: "schema_version".into(),
                reason: format!(
                    "expected {SCHEMA_VERSION}, got {other:?} (in {})",
                    path.display()
                ),
            })
        }
    }
    serde_json::from_value(value).map_err(|e| LabError::Config {
        field: "<document>".into(),
        reason: format!("{e} (in {})", path.display()),
    })
}

fn default_grid() -> Vec<u64> {
    vec![256, 1024, 4096, 16384]
}

/// The quadratic design used by the built-in tasks.
pub fn default_statistic() -> StatisticFamily {
    StatisticFamily::quadratic(3.0, 1.0, TruncationRule::ScaleMultiple { multiple: 8.0 })
}

/// All-low, escaping, boundary, mixed and shrinking-smooth presets at rate r.
pub fn preset_families(basis: Basis, rate: f64) -> Result<Vec<(String, AlternativeFamily)>> {
    let shapes = [
        ("all-low", FamilyShape::AllLow { width: 4 }),
        ("escaping", FamilyShape::Escaping { multiple: 10.0 }),
        ("boundary", FamilyShape::Boundary { fraction: 0.5 }),
        (
            "mixed",
            FamilyShape::Mixed {
                width: 4,
                multiple: 10.0,
                escape_share: 0.5,
            },
        ),
        (
            "shrinking-smooth",
            FamilyShape::PowerLaw {
                exponent: 1.0,
                max_index: 64,
            },
        ),
    ];
    shapes
        .into_iter()
        .map(|(name, shape)| {
            Ok((
                name.to_string(),
                AlternativeFamily::new(basis, rate, 1.5, shape)?,
            ))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyTask {
    pub schema_version: u32,
    pub family: AlternativeFamily,
    pub statistic: StatisticFamily,
    pub n_grid: Vec<u64>,
    pub c_grid: Vec<f64>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

impl ClassifyTask {
    pub fn with_family(family: AlternativeFamily) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            family,
            statistic: default_statistic(),
            n_grid: default_grid(),
            c_grid: vec![0.5, 1.0, 2.0, 4.0],
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityTask {
    pub schema_version: u32,
    pub family: AlternativeFamily,
    pub statistic: StatisticFamily,
    pub n_grid: Vec<u64>,
    pub c1_grid: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub burn_in: u64,
}

impl PurityTask {
    pub fn with_family(family: AlternativeFamily) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            family,
            statistic: default_statistic(),
            n_grid: default_grid(),
            c1_grid: vec![1.0, 2.0, 4.0, 8.0, 16.0, 64.0],
            epsilons: vec![0.1, 0.03, 0.01],
            burn_in: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxisetTask {
    pub schema_version: u32,
    pub family: AlternativeFamily,
    pub statistic: StatisticFamily,
    pub n_grid: Vec<u64>,
    /// Cutoff as a multiple of k_n.
    pub cutoff_multiple: f64,
    /// Smoothness; defaults to the value matching the family's rate.
    #[serde(default)]
    pub s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxisetRow {
    pub n: u64,
    pub k_n: usize,
    pub cutoff: usize,
    pub norm_sq: f64,
    pub smooth_sq: f64,
    pub oscillating_sq: f64,
    pub besov_norm_f1: f64,
    /// Besov norm of f1 over n^{2r}‖θ‖².
    pub normalized: f64,
}

impl MaxisetTask {
    pub fn with_family(family: AlternativeFamily) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            family,
            statistic: default_statistic(),
            n_grid: default_grid(),
            cutoff_multiple: 2.0,
            s: None,
        }
    }

    pub fn run(&self) -> Result<Vec<MaxisetRow>> {
        let s = self
            .s
            .unwrap_or_else(|| smoothness_for_rate(self.family.rate));
        self.n_grid
            .iter()
            .map(|&n| {
                let k_n = self.statistic.k_n(n, self.family.rate)?;
                let theta = self.family.generate(n, k_n)?;
                let cutoff = ((self.cutoff_multiple * k_n as f64).ceil() as usize).max(1);
                let d = maxiset_decompose(&theta, cutoff, s)?;
                let norm_sq = theta.norm_sq();
                let scale = (n as f64).powf(2.0 * self.family.rate) * norm_sq;
                Ok(MaxisetRow {
                    n,
                    k_n,
                    cutoff,
                    norm_sq,
                    smooth_sq: d.f1.norm_sq(),
                    oscillating_sq: d.f2.norm_sq(),
                    besov_norm_f1: d.besov_norm_f1,
                    normalized: if scale > 0.0 {
                        d.besov_norm_f1 / scale
                    } else {
                        0.0
                    },
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionTask {
    pub schema_version: u32,
    pub consistent: AlternativeFamily,
    pub inconsistent: AlternativeFamily,
    pub statistic: StatisticFamily,
    pub n: u64,
}

impl Default for InteractionTask {
    fn default() -> Self {
        let fam = |shape| {
            AlternativeFamily::new(Basis::CosineHalf, 0.25, 1.5, shape).expect("valid preset")
        };
        Self {
            schema_version: SCHEMA_VERSION,
            consistent: fam(FamilyShape::AllLow { width: 4 }),
            inconsistent: fam(FamilyShape::Escaping { multiple: 10.0 }),
            statistic: default_statistic(),
            n: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessTask {
    pub schema_version: u32,
    pub set: CompactSet,
    pub rho: f64,
    pub direction_grid: Vec<usize>,
    pub n: u64,
    pub sigma: f64,
}

impl CompactnessTask {
    pub fn l2_ball() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            set: CompactSet::L2Ball,
            rho: 0.15,
            direction_grid: vec![1, 10, 100, 1000, 10_000],
            n: 100,
            sigma: 1.0,
        }
    }

    pub fn ellipsoid() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            set: CompactSet::Ellipsoid { exponent: 1.0 },
            rho: 0.5,
            direction_grid: (1..=20).collect(),
            n: 100,
            sigma: 1.0,
        }
    }
}
