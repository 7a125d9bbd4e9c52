//! Running experiments and writing result bundles.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::defaults::DefaultsTable;
use crate::error::{invalid, io_err, LabError, Result};
use crate::harness::config::{
    AlternativeSpec, Assertion, ExperimentConfig, Manifest, SCHEMA_VERSION,
};
use crate::harness::estimate::PowerEstimate;
use crate::harness::runner::{PreparedTest, TestMeta};
use crate::rng::StreamKey;
use crate::sequence_model::{AlternativeFamily, CoefficientVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativeResult {
    pub label: String,
    pub n: u64,
    pub theta_norm_sq: f64,
    /// Part of ‖θ‖² beyond the simulated truncation, dropped before sampling.
    pub dropped_mass: f64,
    pub noncentrality: Option<f64>,
    /// Predicted type II error.
    pub prediction: Option<f64>,
    /// Rejection rate under the alternative.
    pub power: PowerEstimate,
}

impl AlternativeResult {
    pub fn beta(&self) -> f64 {
        1.0 - self.power.estimate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub n: u64,
    pub meta: TestMeta,
    pub alpha_hat: PowerEstimate,
    pub alternatives: Vec<AlternativeResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionOutcome {
    pub check: Assertion,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub config: ExperimentConfig,
    pub grid: Vec<GridResult>,
    pub assertions: Vec<AssertionOutcome>,
}

impl ExperimentResult {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn arm(&self, label: &str) -> impl Iterator<Item = &AlternativeResult> + '_ {
        let label = label.to_string();
        self.grid
            .iter()
            .flat_map(|g| g.alternatives.iter())
            .filter(move |a| a.label == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub schema_version: u32,
    pub defaults: DefaultsTable,
    pub experiments: Vec<ExperimentResult>,
    pub passed: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub workers: Option<usize>,
    /// Directory receiving `bundle.json` and one CSV per experiment.
    pub out: Option<PathBuf>,
}

fn theta_for(
    spec: &AlternativeSpec,
    cfg: &ExperimentConfig,
    test: &PreparedTest,
) -> Result<CoefficientVector> {
    let n = test.meta.n;
    match spec {
        AlternativeSpec::Family {
            amplitude, shape, ..
        } => {
            let fam =
                AlternativeFamily::new(cfg.statistic.basis(), cfg.rate, *amplitude, shape.clone())?;
            fam.generate(n, test.meta.k_n)
        }
        AlternativeSpec::Calibrated {
            index,
            noncentrality,
            ..
        } => {
            let unit = CoefficientVector::from_real(cfg.statistic.basis(), [(*index, 1.0)])?;
            let d1 = test.noncentrality(&unit)?.ok_or_else(|| {
                invalid("alternatives", "no closed-form drift for this statistic")
            })?;
            if !(d1 > 0.0) {
                return Err(invalid(
                    "alternatives",
                    format!("index {index} is invisible to the test (zero drift)"),
                ));
            }
            // every drift argument is quadratic in the amplitude
            Ok(unit.scaled((noncentrality / d1).sqrt()))
        }
    }
}

/// α̂ and, per alternative, the rejection rate on every grid n.
pub fn estimate_errors(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentResult> {
    cfg.validate()?;
    let base = StreamKey::named(cfg.seed, &cfg.name);
    let mut grid = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let test = PreparedTest::new(&cfg.statistic, n, cfg.rate, cfg.alpha, cfg.seed, workers)?;
        let zero = CoefficientVector::zero(test.basis());
        let start = Instant::now();
        let k = test.rejections(&zero, base.child(&format!("{n}/null")), cfg.reps, workers)?;
        let alpha_hat = PowerEstimate::new(
            k,
            cfg.reps as u64,
            cfg.seed,
            start.elapsed().as_millis() as u64,
        );
        log::info!("{} n={n}: alpha_hat = {:.4}", cfg.name, alpha_hat.estimate);
        let mut alternatives = Vec::with_capacity(cfg.alternatives.len());
        for spec in &cfg.alternatives {
            let theta = theta_for(spec, cfg, &test)?;
            let visible = test.visible(&theta);
            let start = Instant::now();
            let key = base.child(&format!("{n}/{}", spec.label()));
            let k = test.rejections(&theta, key, cfg.reps, workers)?;
            let power = PowerEstimate::new(
                k,
                cfg.reps as u64,
                cfg.seed,
                start.elapsed().as_millis() as u64,
            );
            log::info!(
                "{} n={n} {}: power = {:.4}",
                cfg.name,
                spec.label(),
                power.estimate
            );
            alternatives.push(AlternativeResult {
                label: spec.label().into(),
                n,
                theta_norm_sq: theta.norm_sq(),
                dropped_mass: theta.norm_sq() - visible.norm_sq(),
                noncentrality: test.noncentrality(&theta)?,
                prediction: test.predicted_beta(&theta)?,
                power,
            });
        }
        grid.push(GridResult {
            n,
            meta: test.meta.clone(),
            alpha_hat,
            alternatives,
        });
    }
    let mut result = ExperimentResult {
        name: cfg.name.clone(),
        config: cfg.clone(),
        grid,
        assertions: Vec::new(),
    };
    result.assertions = cfg
        .assertions
        .iter()
        .map(|a| evaluate(a, &result))
        .collect();
    Ok(result)
}

fn evaluate(check: &Assertion, r: &ExperimentResult) -> AssertionOutcome {
    let alpha = r.config.alpha;
    let mut notes = Vec::new();
    // evaluate every arm so the detail lists all of them
    let all = |v: Vec<bool>| v.into_iter().all(|b| b);
    let passed = match check {
        Assertion::SizeWithin { tolerance } => all(r
            .grid
            .iter()
            .map(|g| {
                let dev = g.alpha_hat.estimate - alpha;
                notes.push(format!(
                    "n={} alpha_hat={:.4} dev={dev:+.4}",
                    g.n, g.alpha_hat.estimate
                ));
                dev.abs() <= *tolerance
            })
            .collect()),
        Assertion::BetaMatchesPrediction { labels, tolerance } => {
            let mut ok = Vec::new();
            for l in labels {
                for a in r.arm(l) {
                    ok.push(match a.prediction {
                        Some(p) => {
                            let dev = a.beta() - p;
                            notes.push(format!(
                                "{l} n={} beta={:.4} pred={p:.4} dev={dev:+.4}",
                                a.n,
                                a.beta()
                            ));
                            dev.abs() <= *tolerance
                        }
                        None => {
                            notes.push(format!("{l}: no prediction"));
                            false
                        }
                    });
                }
            }
            all(ok)
        }
        Assertion::PowerAboveAlpha { label, margin } => all(r
            .arm(label)
            .map(|a| {
                let gap = a.power.estimate - alpha;
                notes.push(format!("{label} n={} power-alpha={gap:+.4}", a.n));
                gap >= *margin
            })
            .collect()),
        Assertion::PowerNearAlpha { label, tolerance } => all(r
            .arm(label)
            .map(|a| {
                let gap = a.power.estimate - alpha;
                notes.push(format!("{label} n={} power-alpha={gap:+.4}", a.n));
                gap.abs() <= *tolerance
            })
            .collect()),
    };
    AssertionOutcome {
        check: check.clone(),
        passed,
        detail: notes.join("; "),
    }
}

/// Rows with headers `experiment,n,alpha_hat,alpha_lo,alpha_hi,beta_hat,beta_lo,beta_hi,prediction`.
/// The experiment column is `name/label` for alternatives; null-only rows
/// leave the β columns empty.
pub fn write_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    let serde_err = |e: csv::Error| LabError::Serde {
        path: path.into(),
        reason: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(serde_err)?;
    w.write_record([
        "experiment",
        "n",
        "alpha_hat",
        "alpha_lo",
        "alpha_hi",
        "beta_hat",
        "beta_lo",
        "beta_hi",
        "prediction",
    ])
    .map_err(serde_err)?;
    let f = |v: f64| format!("{v}");
    for g in &result.grid {
        let a = &g.alpha_hat;
        let head = |name: String| {
            vec![
                name,
                g.n.to_string(),
                f(a.estimate),
                f(a.ci_low),
                f(a.ci_high),
            ]
        };
        if g.alternatives.is_empty() {
            let mut row = head(result.name.clone());
            row.extend(["".into(), "".into(), "".into(), "".into()]);
            w.write_record(&row).map_err(serde_err)?;
        }
        for alt in &g.alternatives {
            let (b, lo, hi) = alt.power.type_ii();
            let mut row = head(format!("{}/{}", result.name, alt.label));
            row.extend([
                f(b),
                f(lo),
                f(hi),
                alt.prediction.map(f).unwrap_or_default(),
            ]);
            w.write_record(&row).map_err(serde_err)?;
        }
    }
    w.flush().map_err(io_err(path))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| LabError::Serde {
        path: path.into(),
        reason: e.to_string(),
    })?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

/// Runs every experiment; writes `bundle.json` and `<name>.csv` under `out`.
pub fn run_suite(manifest: &Manifest, opts: &SuiteOptions) -> Result<Bundle> {
    manifest.validate()?;
    let experiments = manifest
        .experiments
        .iter()
        .map(|e| estimate_errors(e, opts.workers))
        .collect::<Result<Vec<_>>>()?;
    let bundle = Bundle {
        schema_version: SCHEMA_VERSION,
        defaults: DefaultsTable::default(),
        passed: experiments.iter().all(ExperimentResult::passed),
        experiments,
    };
    if let Some(dir) = &opts.out {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        for e in &bundle.experiments {
            let path = match &e.config.output {
                Some(p) if p.is_absolute() => p.clone(),
                Some(p) => dir.join(p),
                None => dir.join(format!("{}.csv", e.name)),
            };
            write_csv(e, &path)?;
        }
        write_json(&bundle, &dir.join("bundle.json"))?;
    }
    Ok(bundle)
}

/// Removes every `runtime_ms` field, for determinism comparisons.
pub fn strip_timing(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            map.remove("runtime_ms");
            map.values_mut().for_each(strip_timing);
        }
        serde_json::Value::Array(v) => v.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

/// JSON text with timing fields removed.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| invalid("bundle", e.to_string()))?;
    strip_timing(&mut v);
    serde_json::to_string_pretty(&v).map_err(|e| invalid("bundle", e.to_string()))
}
