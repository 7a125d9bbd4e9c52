//! Classification of alternative families: low-frequency and tail mass
//! criteria, Besov bodies, decompositions, interaction and compactness
//! experiments.
//!
//! Verdicts are trends on finite grids. They depend on |θ_j|² only.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::cvm_tests::cvm_scale;
use crate::defaults::{CVM_CALIBRATION_DRAWS, CVM_CALIBRATION_J, TAU_LOWER, TAU_ZERO, WILSON_Z};
use crate::error::{invalid, LabError, Result};
use crate::harness::estimate::PowerEstimate;
use crate::harness::mc::map_reps;
use crate::harness::runner::PreparedTest;
use crate::kernel_tests::Kernel;
use crate::normal::{std_normal_cdf, upper_quantile};
use crate::quadratic_tests::{KappaFamily, KappaWeights, TruncationRule};
use crate::rng::StreamKey;
use crate::sequence_model::{AlternativeFamily, Basis, CoefficientVector};

fn one() -> f64 {
    1.0
}

fn default_band() -> f64 {
    4.0
}

fn default_cvm_j() -> usize {
    CVM_CALIBRATION_J
}

fn default_cvm_draws() -> usize {
    CVM_CALIBRATION_DRAWS
}

/// A test family with its design parameters. The rate `r` comes from the
/// alternative family it is paired with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "statistic", rename_all = "snake_case")]
pub enum StatisticFamily {
    /// κ² weights of the example family; `k_n` is the half-mass point.
    Quadratic {
        gamma: f64,
        c: f64,
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default)]
        truncation: TruncationRule,
    },
    /// Kernel L2 statistic with `h = bandwidth_c · n^{4r−2}` unless `bandwidth`
    /// is given, truncated to `|j|h ≤ band`.
    Kernel {
        #[serde(default)]
        kernel: Kernel,
        #[serde(default = "one")]
        bandwidth_c: f64,
        #[serde(default)]
        bandwidth: Option<f64>,
        #[serde(default = "default_band")]
        band: f64,
        #[serde(default = "one")]
        sigma: f64,
    },
    /// Chi-squared with `m = round(cells_c · n^{2−4r})` cells unless `cells` is given.
    Chi2 {
        #[serde(default = "one")]
        cells_c: f64,
        #[serde(default)]
        cells: Option<usize>,
    },
    /// Cramér–von Mises with an MC-calibrated critical value.
    Cvm {
        #[serde(default = "default_cvm_j")]
        calibration_j: usize,
        #[serde(default = "default_cvm_draws")]
        calibration_draws: usize,
        #[serde(default)]
        cache: Option<PathBuf>,
    },
}

impl StatisticFamily {
    pub fn quadratic(gamma: f64, c: f64, truncation: TruncationRule) -> Self {
        StatisticFamily::Quadratic {
            gamma,
            c,
            sigma: 1.0,
            truncation,
        }
    }

    pub fn kernel(kernel: Kernel, bandwidth: Option<f64>) -> Self {
        StatisticFamily::Kernel {
            kernel,
            bandwidth_c: 1.0,
            bandwidth,
            band: default_band(),
            sigma: 1.0,
        }
    }

    pub fn chi2(cells: Option<usize>) -> Self {
        StatisticFamily::Chi2 {
            cells_c: 1.0,
            cells,
        }
    }

    pub fn cvm() -> Self {
        StatisticFamily::Cvm {
            calibration_j: CVM_CALIBRATION_J,
            calibration_draws: CVM_CALIBRATION_DRAWS,
            cache: None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StatisticFamily::Quadratic { .. } => "quadratic",
            StatisticFamily::Kernel { .. } => "kernel",
            StatisticFamily::Chi2 { .. } => "chi2",
            StatisticFamily::Cvm { .. } => "cvm",
        }
    }

    /// Basis the statistic reads its alternatives in.
    pub fn basis(&self) -> Basis {
        match self {
            StatisticFamily::Quadratic { .. } | StatisticFamily::Cvm { .. } => Basis::CosineHalf,
            StatisticFamily::Kernel { .. } | StatisticFamily::Chi2 { .. } => Basis::TrigComplex,
        }
    }

    pub fn is_density(&self) -> bool {
        matches!(
            self,
            StatisticFamily::Chi2 { .. } | StatisticFamily::Cvm { .. }
        )
    }

    pub fn k_rule(&self) -> &'static str {
        match self {
            StatisticFamily::Quadratic { .. } => "half-mass point of the kappa weights",
            StatisticFamily::Kernel { .. } | StatisticFamily::Chi2 { .. } => "[n^(2-4r)]",
            StatisticFamily::Cvm { .. } => "[n^((1-2r)/2)]",
        }
    }

    pub fn kappa(&self, rate: f64) -> Result<KappaFamily> {
        match self {
            StatisticFamily::Quadratic {
                gamma,
                c,
                sigma,
                truncation,
            } => KappaFamily::new(rate, *gamma, *c, *sigma, *truncation),
            _ => Err(invalid("statistic", "not a quadratic family")),
        }
    }

    /// Frequency scale `k_n`.
    pub fn k_n(&self, n: u64, rate: f64) -> Result<usize> {
        if !(rate > 0.0 && rate < 0.5) {
            return Err(invalid("rate", format!("must lie in (0, 1/2), got {rate}")));
        }
        match self {
            StatisticFamily::Quadratic { .. } => Ok(self.kappa(rate)?.weights(n)?.k_n()),
            StatisticFamily::Kernel { .. } | StatisticFamily::Chi2 { .. } => {
                Ok(((n as f64).powf(2.0 - 4.0 * rate).floor() as usize).max(1))
            }
            StatisticFamily::Cvm { .. } => Ok(cvm_scale(n, rate)),
        }
    }

    pub fn bandwidth_for(&self, n: u64, rate: f64) -> Result<f64> {
        match self {
            StatisticFamily::Kernel {
                bandwidth_c,
                bandwidth,
                ..
            } => {
                let h = bandwidth.unwrap_or(bandwidth_c * (n as f64).powf(4.0 * rate - 2.0));
                if !(h > 0.0 && h < 1.0) {
                    return Err(invalid("bandwidth", format!("h = {h} outside (0, 1)")));
                }
                Ok(h)
            }
            _ => Err(invalid("statistic", "not a kernel family")),
        }
    }

    pub fn cells_for(&self, n: u64, rate: f64) -> Result<usize> {
        match self {
            StatisticFamily::Chi2 { cells_c, cells } => {
                let m = cells.unwrap_or_else(|| {
                    (cells_c * (n as f64).powf(2.0 - 4.0 * rate)).round() as usize
                });
                if m < 2 {
                    return Err(invalid(
                        "cells",
                        format!("need at least two cells, got {m}"),
                    ));
                }
                Ok(m)
            }
            _ => Err(invalid("statistic", "not a chi-squared family")),
        }
    }
}

/// Σ_{|j| < cutoff} |θ_j|².
pub fn low_frequency_mass(theta: &CoefficientVector, cutoff: usize) -> Result<f64> {
    if cutoff == 0 {
        return Err(invalid("cutoff", "must be >= 1"));
    }
    Ok(theta.restrict_below(cutoff).norm_sq())
}

/// Σ_{|j| > x} |θ_j|² for a real cutoff `x ≥ 0`.
pub fn tail_mass_beyond(theta: &CoefficientVector, x: f64) -> f64 {
    theta.restrict_from(x.floor() as usize + 1).norm_sq()
}

/// Σ_{|j| < x} |θ_j|² for a real cutoff `x > 0`.
fn mass_below(theta: &CoefficientVector, x: f64) -> f64 {
    theta.restrict_below((x.ceil() as usize).max(1)).norm_sq()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub tau_lower: f64,
    pub tau_zero: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tau_lower: TAU_LOWER,
            tau_zero: TAU_ZERO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentTrend,
    InconsistentTrend,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRow {
    pub n: u64,
    pub k_n: usize,
    /// n^{2r} Σ_{|j|<c k_n} |θ_j|², one entry per grid constant.
    pub low_mass: Vec<f64>,
    /// n^{2r} Σ_{|j|>c k_n} |θ_j|², one entry per grid constant.
    pub tail_mass: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub statistic: String,
    pub k_rule: String,
    pub rate: f64,
    pub c_grid: Vec<f64>,
    pub thresholds: Thresholds,
    pub rows: Vec<ClassificationRow>,
    pub verdict: Verdict,
}

/// Consistent-trend if some constant keeps the normalized low mass above τ₋
/// at every grid n; inconsistent-trend if every constant ends below τ₀ at the
/// largest n.
pub fn verdict_from(rows: &[ClassificationRow], thresholds: &Thresholds) -> Verdict {
    let Some(last) = rows.last() else {
        return Verdict::Indeterminate;
    };
    let width = last.low_mass.len();
    let bounded_below =
        (0..width).any(|c| rows.iter().all(|r| r.low_mass[c] >= thresholds.tau_lower));
    if bounded_below {
        return Verdict::ConsistentTrend;
    }
    if last.low_mass.iter().all(|&v| v < thresholds.tau_zero) {
        return Verdict::InconsistentTrend;
    }
    Verdict::Indeterminate
}

fn sorted_grid(n_grid: &[u64]) -> Result<Vec<u64>> {
    if n_grid.is_empty() {
        return Err(invalid("n_grid", "grid must be nonempty"));
    }
    if n_grid.contains(&0) {
        return Err(invalid("n_grid", "sample sizes must be >= 1"));
    }
    let mut g = n_grid.to_vec();
    g.sort_unstable();
    g.dedup();
    Ok(g)
}

fn check_constants(grid: &[f64], field: &'static str) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(field, "grid must be nonempty"));
    }
    if grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(invalid(field, "constants must be positive and finite"));
    }
    Ok(())
}

pub fn classify_family(
    family: &AlternativeFamily,
    statistic: &StatisticFamily,
    n_grid: &[u64],
    c_grid: &[f64],
    thresholds: &Thresholds,
) -> Result<ClassificationReport> {
    let grid = sorted_grid(n_grid)?;
    check_constants(c_grid, "c_grid")?;
    let mut rows = Vec::with_capacity(grid.len());
    for n in grid {
        let k_n = statistic.k_n(n, family.rate)?;
        let theta = family.generate(n, k_n)?;
        let norm = (n as f64).powf(2.0 * family.rate);
        rows.push(ClassificationRow {
            n,
            k_n,
            low_mass: c_grid
                .iter()
                .map(|c| norm * mass_below(&theta, c * k_n as f64))
                .collect(),
            tail_mass: c_grid
                .iter()
                .map(|c| norm * tail_mass_beyond(&theta, c * k_n as f64))
                .collect(),
        });
    }
    Ok(ClassificationReport {
        statistic: statistic.name().into(),
        k_rule: statistic.k_rule().into(),
        rate: family.rate,
        c_grid: c_grid.to_vec(),
        thresholds: *thresholds,
        verdict: verdict_from(&rows, thresholds),
        rows,
    })
}

/// Ball {θ : sup_λ λ^{2s} Σ_{j>λ} |θ_j|² ≤ P₀} over a given basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovBall {
    pub s: f64,
    pub p0: f64,
    pub basis: Basis,
}

impl BesovBall {
    pub fn new(s: f64, p0: f64, basis: Basis) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(invalid("s", "smoothness must be positive"));
        }
        if !(p0 > 0.0) {
            return Err(invalid("P0", "radius must be positive"));
        }
        Ok(Self { s, p0, basis })
    }
}

/// sup_λ λ^{2s} Σ_{j>λ} |θ_j|². Between support points the tail sum is flat
/// and λ^{2s} grows, so the sup is the max over λ → p⁻ at support points p.
pub fn besov_norm(theta: &CoefficientVector, s: f64) -> f64 {
    let m = theta.basis().multiplicity();
    let entries: Vec<(usize, f64)> = theta.iter().map(|(j, c)| (j, c.norm_sqr())).collect();
    let mut tail = 0.0;
    let mut best: f64 = 0.0;
    for &(j, v) in entries.iter().rev() {
        tail += v;
        best = best.max((j as f64).powf(2.0 * s) * m * tail);
    }
    best
}

pub fn besov_membership(theta: &CoefficientVector, ball: &BesovBall) -> Result<(f64, bool)> {
    if theta.basis() != ball.basis {
        return Err(LabError::Mismatch(format!(
            "ball is over {:?}, coefficients over {:?}",
            ball.basis,
            theta.basis()
        )));
    }
    let v = besov_norm(theta, ball.s);
    Ok((v, v <= ball.p0))
}

/// Smoothness matching rate `r` under `r = 2s/(1 + 4s)`.
pub fn smoothness_for_rate(rate: f64) -> f64 {
    rate / (2.0 - 4.0 * rate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub f1: CoefficientVector,
    pub f2: CoefficientVector,
    pub besov_norm_f1: f64,
}

/// Smooth part `|j| < cutoff` and the oscillating remainder.
pub fn maxiset_decompose(
    theta: &CoefficientVector,
    cutoff: usize,
    s: f64,
) -> Result<Decomposition> {
    if cutoff == 0 {
        return Err(invalid("cutoff", "must be >= 1"));
    }
    if !(s > 0.0) {
        return Err(invalid("s", "smoothness must be positive"));
    }
    let f1 = theta.restrict_below(cutoff);
    let f2 = theta.restrict_from(cutoff);
    Ok(Decomposition {
        besov_norm_f1: besov_norm(&f1, s),
        f1,
        f2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityLevel {
    pub epsilon: f64,
    /// Smallest grid constant that works, if any.
    pub c1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    pub statistic: String,
    pub burn_in: u64,
    pub c1_grid: Vec<f64>,
    /// Normalized tail masses n^{2r} Σ_{|j|>C₁k_n} |θ_j|² per grid n and C₁.
    pub rows: Vec<ClassificationRow>,
    pub levels: Vec<PurityLevel>,
    pub purity_trend: bool,
}

/// For each ε, the smallest C₁ with tail mass ≤ ε n^{−2r} at every grid
/// n ≥ burn_in.
pub fn purity_check(
    family: &AlternativeFamily,
    statistic: &StatisticFamily,
    n_grid: &[u64],
    c1_grid: &[f64],
    epsilons: &[f64],
    burn_in: u64,
) -> Result<PurityReport> {
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(invalid("epsilon", "need at least one positive epsilon"));
    }
    let mut c1 = c1_grid.to_vec();
    check_constants(&c1, "c1_grid")?;
    c1.sort_by(f64::total_cmp);
    let report = classify_family(family, statistic, n_grid, &c1, &Thresholds::default())?;
    let active: Vec<&ClassificationRow> = report.rows.iter().filter(|r| r.n >= burn_in).collect();
    if active.is_empty() {
        return Err(invalid("burn_in", "no grid point at or beyond the burn-in"));
    }
    let levels: Vec<PurityLevel> = epsilons
        .iter()
        .map(|&epsilon| PurityLevel {
            epsilon,
            c1: (0..c1.len())
                .find(|&i| active.iter().all(|r| r.tail_mass[i] <= epsilon))
                .map(|i| c1[i]),
        })
        .collect();
    Ok(PurityReport {
        statistic: statistic.name().into(),
        burn_in,
        c1_grid: c1,
        purity_trend: levels.iter().all(|l| l.c1.is_some()),
        rows: report.rows,
        levels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionDRow {
    pub l: usize,
    pub min_value: f64,
    pub holds: bool,
}

/// Minimum over a grid of 1 + Σ_{|i|>l} θ_i φ_i for each l in the ladder.
pub fn condition_d(
    theta: &CoefficientVector,
    ladder: &[usize],
    grid: usize,
) -> Result<Vec<ConditionDRow>> {
    if grid == 0 {
        return Err(invalid("grid", "must be >= 1"));
    }
    ladder
        .iter()
        .map(|&l| {
            let tail = theta.restrict_from(l + 1);
            if tail.sup_bound() <= 1.0 {
                return Ok(ConditionDRow {
                    l,
                    min_value: 1.0 - tail.sup_bound(),
                    holds: true,
                });
            }
            let mut min_value = f64::INFINITY;
            for i in 0..=grid {
                min_value = min_value.min(1.0 + tail.evaluate(i as f64 / grid as f64)?);
            }
            Ok(ConditionDRow {
                l,
                min_value,
                holds: min_value >= 0.0,
            })
        })
        .collect()
}

/// (Σ θ_j η_j, ‖f+g‖² − ‖f‖² − ‖g‖²). The defect is accumulated index by
/// index, so indices carried by only one vector contribute exactly zero.
pub fn orthogonality_check(f: &CoefficientVector, g: &CoefficientVector) -> Result<(f64, f64)> {
    let cross = f.dot(g)?;
    let sum = f.add(g)?;
    let mut idx: Vec<usize> = f.iter().chain(g.iter()).map(|(j, _)| j).collect();
    idx.sort_unstable();
    idx.dedup();
    let defect: f64 = idx
        .into_iter()
        .map(|j| sum.get(j).norm_sqr() - f.get(j).norm_sqr() - g.get(j).norm_sqr())
        .sum();
    Ok((cross, f.basis().multiplicity() * defect))
}

/// (R(f+g) − R(f), 2σ⁻⁴n²Σκ²θη + R(g)) over the full index set.
pub fn quadratic_additivity(
    f: &CoefficientVector,
    g: &CoefficientVector,
    w: &KappaWeights,
) -> Result<(f64, f64)> {
    use crate::quadratic_tests::noncentrality;
    let fg = f.add(g)?;
    let lhs = noncentrality(&fg, w)?.0 - noncentrality(f, w)?.0;
    let weighted = g.map(|j, c| c * w.weight(j))?;
    let scale = (w.n as f64).powi(2) / w.sigma.powi(4);
    let rhs = 2.0 * scale * f.dot(&weighted)? + noncentrality(g, w)?.0;
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionReport {
    pub statistic: String,
    pub n: u64,
    pub k_n: usize,
    /// Rejection rates for f and f + g; β is one minus these.
    pub power_f: PowerEstimate,
    pub power_f_plus_g: PowerEstimate,
    pub beta_f: f64,
    pub beta_f_plus_g: f64,
    /// β(f) − β(f+g) with a paired normal interval.
    pub diff: f64,
    pub diff_lo: f64,
    pub diff_hi: f64,
    pub cross_term: f64,
}

pub struct InteractionOptions {
    pub n: u64,
    pub reps: usize,
    pub seed: u64,
    pub alpha: f64,
    pub workers: Option<usize>,
}

/// Type II errors for f and f + g on common random numbers: replication r of
/// both arms reads the same stream.
pub fn interaction_experiment(
    consistent: &AlternativeFamily,
    inconsistent: &AlternativeFamily,
    statistic: &StatisticFamily,
    opts: &InteractionOptions,
) -> Result<InteractionReport> {
    let basis = statistic.basis();
    if consistent.basis != basis || inconsistent.basis != basis {
        return Err(LabError::Mismatch(format!(
            "{} statistic reads {basis:?} coefficients",
            statistic.name()
        )));
    }
    let test = PreparedTest::new(
        statistic,
        opts.n,
        consistent.rate,
        opts.alpha,
        opts.seed,
        opts.workers,
    )?;
    let k_n = test.meta.k_n;
    let f = consistent.generate(opts.n, k_n)?;
    let g = inconsistent.generate(opts.n, k_n)?;
    let fg = f.add(&g)?;
    let key = StreamKey::named(opts.seed, "interaction").child(statistic.name());
    let start = std::time::Instant::now();
    let pairs = test.paired(&f, &fg, key, opts.reps, opts.workers)?;
    let ms = start.elapsed().as_millis() as u64;
    let reps = pairs.len() as f64;
    let rf = pairs.iter().filter(|p| p.0).count() as u64;
    let rfg = pairs.iter().filter(|p| p.1).count() as u64;
    // d_r = 1{reject f+g} − 1{reject f} = 1{accept f} − 1{accept f+g}
    let d: Vec<f64> = pairs
        .iter()
        .map(|p| p.1 as i32 as f64 - p.0 as i32 as f64)
        .collect();
    let mean = d.iter().sum::<f64>() / reps;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1.0).max(1.0);
    let half = WILSON_Z * (var / reps).sqrt();
    let power_f = PowerEstimate::new(rf, pairs.len() as u64, opts.seed, ms);
    let power_f_plus_g = PowerEstimate::new(rfg, pairs.len() as u64, opts.seed, ms);
    Ok(InteractionReport {
        statistic: statistic.name().into(),
        n: opts.n,
        k_n,
        beta_f: 1.0 - power_f.estimate,
        beta_f_plus_g: 1.0 - power_f_plus_g.estimate,
        power_f,
        power_f_plus_g,
        diff: mean,
        diff_lo: mean - half,
        diff_hi: mean + half,
        cross_term: f.dot(&g)?,
    })
}

/// Alternative sets for the compactness demonstration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "set", rename_all = "snake_case")]
pub enum CompactSet {
    L2Ball,
    /// Semi-axes a_j = j^{−exponent}.
    Ellipsoid {
        exponent: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactnessOptions {
    pub n: u64,
    pub sigma: f64,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessRow {
    /// Mixture dimension (l2 ball) or direction index (ellipsoid).
    pub j: usize,
    pub amplitude: f64,
    pub feasible: bool,
    /// Exact power of the one-sided test on a known coordinate.
    pub coordinate_power: f64,
    /// MC power of the set-level test against this direction.
    pub power: Option<PowerEstimate>,
    /// Exact power where available (mixture dimension 1).
    pub exact_power: Option<f64>,
    /// ½√χ²(mixture ‖ null), a bound on |power − α| for every test.
    pub divergence_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessReport {
    pub set: CompactSet,
    pub rho: f64,
    pub alpha: f64,
    pub effective_dimension: usize,
    pub rows: Vec<CompactnessRow>,
    /// Smallest power over feasible directions.
    pub minimax_power: Option<f64>,
}

fn log_mixture_lr(z: &[f64], a: f64) -> f64 {
    // log (1/J) Σ exp(a z_j − a²/2)
    let mx = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = z.iter().map(|&v| (a * (v - mx)).exp()).sum();
    a * mx + s.ln() - (z.len() as f64).ln() - 0.5 * a * a
}

fn mc_power<F>(
    dim: usize,
    signal: Option<(usize, f64)>,
    key: StreamKey,
    opts: &CompactnessOptions,
    stat: F,
) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    use rand_distr::{Distribution, StandardNormal};
    map_reps(
        opts.reps,
        opts.workers,
        || vec![0.0; dim],
        |z, r| {
            let mut rng = key.rng(r);
            for v in z.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            if let Some((j, a)) = signal {
                z[j] += a;
            }
            stat(z)
        },
    )
}

fn empirical_upper(mut v: Vec<f64>, alpha: f64) -> f64 {
    v.sort_unstable_by(f64::total_cmp);
    let idx = (((1.0 - alpha) * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    v[idx]
}

/// Powers against θ = ρ e_j on a ρ-separated alternative set.
///
/// On the l2 ball each grid value J is a mixture dimension: the likelihood
/// ratio test against the uniform mixture over {ρ e_j : j ≤ J} is run against
/// ρ e_1 (all directions are symmetric). On an ellipsoid only j with a_j ≥ ρ
/// are feasible; the chi-squared test over the feasible coordinates is run
/// against every feasible direction.
pub fn compactness_demo(
    set: CompactSet,
    rho: f64,
    direction_grid: &[usize],
    opts: &CompactnessOptions,
) -> Result<CompactnessReport> {
    if !(rho > 0.0) {
        return Err(invalid("rho", "must be positive"));
    }
    if direction_grid.is_empty() || direction_grid.contains(&0) {
        return Err(invalid("direction_grid", "need indices >= 1"));
    }
    if opts.reps < 2 {
        return Err(invalid("reps", "need at least two replications"));
    }
    let x_alpha = upper_quantile(opts.alpha)?;
    let a = rho * (opts.n as f64).sqrt() / opts.sigma;
    let coordinate_power = 1.0 - std_normal_cdf(x_alpha - a);
    let base = StreamKey::named(opts.seed, "compactness");
    match set {
        CompactSet::L2Ball => {
            let mut rows = Vec::new();
            for &dim in direction_grid {
                let key = base.child(&format!("l2/{dim}"));
                let start = std::time::Instant::now();
                let null = mc_power(dim, None, key.child("null"), opts, |z| log_mixture_lr(z, a));
                let crit = empirical_upper(null, opts.alpha);
                let alt = mc_power(dim, Some((0, a)), key.child("alt"), opts, |z| {
                    log_mixture_lr(z, a)
                });
                let hits = alt.iter().filter(|&&v| v > crit).count() as u64;
                let ms = start.elapsed().as_millis() as u64;
                let chi2 = (a * a).exp_m1() / dim as f64;
                rows.push(CompactnessRow {
                    j: dim,
                    amplitude: rho,
                    feasible: true,
                    coordinate_power,
                    power: Some(PowerEstimate::new(hits, opts.reps as u64, opts.seed, ms)),
                    exact_power: (dim == 1).then_some(coordinate_power),
                    divergence_bound: Some(0.5 * chi2.sqrt()),
                });
            }
            Ok(CompactnessReport {
                set,
                rho,
                alpha: opts.alpha,
                effective_dimension: usize::MAX,
                rows,
                minimax_power: None,
            })
        }
        CompactSet::Ellipsoid { exponent } => {
            if !(exponent > 0.0) {
                return Err(invalid("exponent", "semi-axes must decay"));
            }
            let axis = |j: usize| (j as f64).powf(-exponent);
            let mut grid = direction_grid.to_vec();
            grid.sort_unstable();
            grid.dedup();
            let feasible: Vec<usize> = grid.iter().copied().filter(|&j| axis(j) >= rho).collect();
            let dim = feasible.len();
            let crit = if dim > 0 {
                ChiSquared::new(dim as f64)
                    .map_err(|e| invalid("dimension", e.to_string()))?
                    .inverse_cdf(1.0 - opts.alpha)
            } else {
                f64::INFINITY
            };
            let mut rows = Vec::new();
            for &j in &grid {
                let amp = rho.min(axis(j));
                let row_a = amp * (opts.n as f64).sqrt() / opts.sigma;
                let slot = feasible.iter().position(|&f| f == j);
                let power = match slot {
                    Some(pos) => {
                        let start = std::time::Instant::now();
                        let key = base.child(&format!("ellipsoid/{j}"));
                        let v = mc_power(dim, Some((pos, row_a)), key, opts, |z| {
                            z.iter().map(|x| x * x).sum()
                        });
                        let hits = v.iter().filter(|&&s| s > crit).count() as u64;
                        Some(PowerEstimate::new(
                            hits,
                            opts.reps as u64,
                            opts.seed,
                            start.elapsed().as_millis() as u64,
                        ))
                    }
                    None => None,
                };
                rows.push(CompactnessRow {
                    j,
                    amplitude: amp,
                    feasible: slot.is_some(),
                    coordinate_power: 1.0 - std_normal_cdf(x_alpha - row_a),
                    power,
                    exact_power: None,
                    divergence_bound: None,
                });
            }
            let minimax_power = rows
                .iter()
                .filter_map(|r| r.power.map(|p| p.estimate))
                .min_by(f64::total_cmp);
            Ok(CompactnessReport {
                set,
                rho,
                alpha: opts.alpha,
                effective_dimension: dim,
                rows,
                minimax_power,
            })
        }
    }
}
