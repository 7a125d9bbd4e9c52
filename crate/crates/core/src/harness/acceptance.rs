//! The acceptance suite: exact identities, Monte Carlo calibration and power
//! checks, the classification demos and the determinism contract.

use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chi_squared_tests::{chi2_from_deviations, fourier_identity};
use crate::consistency_lab::{
    compactness_demo, interaction_experiment, maxiset_decompose, orthogonality_check, CompactSet,
    CompactnessOptions, InteractionOptions, StatisticFamily,
};
use crate::cvm_tests::{
    cvm_double_integral, cvm_first_moment, cvm_min_kernel_integral, cvm_spectral, BridgeSampler,
};
use crate::defaults::{CVM_CALIBRATION_DRAWS, CVM_CALIBRATION_J};
use crate::error::Result;
use crate::harness::config::{
    AlternativeSpec, Assertion, ExperimentConfig, Manifest, SCHEMA_VERSION,
};
use crate::harness::mc::map_reps;
use crate::harness::suite::{
    canonical_json, run_suite, write_json, Bundle, ExperimentResult, SuiteOptions,
};
use crate::kernel_tests::{t1n_functional, t1n_time_domain, Kernel, KernelPlan};
use crate::quadratic_tests::{
    validate_assumptions, AssumptionOptions, KappaFamily, TruncationRule,
};
use crate::quadrature::GaussLegendre;
use crate::rng::{call_rng, LabRng, StreamKey};
use crate::sequence_model::{AlternativeFamily, Basis, CoefficientVector, FamilyShape};
use num_complex::Complex64;

pub const CHI2_IDENTITY_TOL: f64 = 1e-10;
pub const CVM_IDENTITY_TOL: f64 = 1e-8;
pub const KERNEL_IDENTITY_TOL: f64 = 1e-6;
pub const PARSEVAL_TOL: f64 = 1e-8;
pub const ORTHOGONALITY_TOL: f64 = 1e-12;
pub const SIZE_TOL: f64 = 0.01;
pub const CHI2_SIZE_TOL: f64 = 0.015;
pub const POWER_TOL: f64 = 0.03;
pub const CHI2_POWER_TOL: f64 = 0.04;
pub const DICHOTOMY_MARGIN: f64 = 0.1;
pub const ESCAPE_TOL: f64 = 0.03;
pub const INTERACTION_TOL: f64 = 0.03;
pub const BRIDGE_SE_MULTIPLE: f64 = 4.0;
pub const RATE_BAND: f64 = 2.0;
pub const MIXTURE_TOL: f64 = 0.02;
pub const ELLIPSOID_MARGIN: f64 = 0.1;

pub const ALPHA: f64 = 0.05;
pub const FULL_REPS: usize = 100_000;
/// Replications of the determinism check.
pub const DETERMINISM_REPS: usize = 2_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    /// Set when the check fails for a documented reason that was itself verified.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub known_defect: Option<String>,
}

impl CriterionOutcome {
    fn new(id: &str, title: &str, passed: bool, detail: String) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            passed,
            detail,
            known_defect: None,
        }
    }

    pub fn line(&self) -> String {
        let status = match (self.passed, &self.known_defect) {
            (true, _) => "PASS".to_string(),
            (false, Some(why)) => format!("FAIL (known defect: {why})"),
            (false, None) => "FAIL".to_string(),
        };
        format!(
            "criterion {:>2} {status}: {} | {}",
            self.id, self.title, self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub schema_version: u32,
    pub seed: u64,
    pub reps: usize,
    pub criteria: Vec<CriterionOutcome>,
    pub bundle: Bundle,
}

impl AcceptanceReport {
    /// Every criterion passed, or failed with a verified explanation.
    pub fn accounted_for(&self) -> bool {
        self.criteria
            .iter()
            .all(|c| c.passed || c.known_defect.is_some())
    }

    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone)]
pub struct AcceptanceOptions {
    pub seed: u64,
    pub reps: usize,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    /// Also run the worker/repeat determinism check.
    pub determinism: bool,
}

impl Default for AcceptanceOptions {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            reps: FULL_REPS,
            workers: None,
            out: None,
            determinism: true,
        }
    }
}

fn quadratic_design() -> StatisticFamily {
    StatisticFamily::quadratic(3.0, 1.0, TruncationRule::ScaleMultiple { multiple: 8.0 })
}

fn calibrated(values: &[f64]) -> Vec<AlternativeSpec> {
    values
        .iter()
        .map(|&d| AlternativeSpec::Calibrated {
            label: format!("nc{d}"),
            index: 1,
            noncentrality: d,
        })
        .collect()
}

fn labels(values: &[f64]) -> Vec<String> {
    values.iter().map(|d| format!("nc{d}")).collect()
}

const DRIFTS: [f64; 3] = [0.5, 1.0, 2.0];
const N_POWER: u64 = 1 << 12;
/// Amplitude of the dichotomy families, ‖θ‖ = 1.5 n^{−1/4}.
const DICHOTOMY_AMPLITUDE: f64 = 1.5;

fn all_low() -> FamilyShape {
    FamilyShape::AllLow { width: 4 }
}

fn escaping() -> FamilyShape {
    FamilyShape::Escaping { multiple: 10.0 }
}

/// Monte Carlo experiments of the suite. `calibration_draws` sizes the CvM
/// critical value.
pub fn acceptance_manifest(seed: u64, reps: usize, calibration_draws: usize) -> Manifest {
    let exp =
        |name: &str, statistic, n_grid: Vec<u64>, alternatives, assertions| ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            statistic,
            rate: 0.25,
            alternatives,
            n_grid,
            reps,
            alpha: ALPHA,
            seed,
            output: None,
            assertions,
        };
    let mut quad_alts = calibrated(&DRIFTS);
    quad_alts.push(AlternativeSpec::Family {
        label: "all-low".into(),
        amplitude: DICHOTOMY_AMPLITUDE,
        shape: all_low(),
    });
    quad_alts.push(AlternativeSpec::Family {
        label: "escaping".into(),
        amplitude: DICHOTOMY_AMPLITUDE,
        shape: escaping(),
    });
    Manifest::new(vec![
        exp(
            "quadratic",
            quadratic_design(),
            vec![N_POWER],
            quad_alts,
            vec![
                Assertion::SizeWithin {
                    tolerance: SIZE_TOL,
                },
                Assertion::BetaMatchesPrediction {
                    labels: labels(&DRIFTS),
                    tolerance: POWER_TOL,
                },
                Assertion::PowerAboveAlpha {
                    label: "all-low".into(),
                    margin: DICHOTOMY_MARGIN,
                },
                Assertion::PowerNearAlpha {
                    label: "escaping".into(),
                    tolerance: ESCAPE_TOL,
                },
            ],
        ),
        exp(
            "kernel",
            StatisticFamily::kernel(Kernel::Epanechnikov, Some(1.0 / N_POWER as f64)),
            vec![N_POWER],
            calibrated(&DRIFTS),
            vec![
                Assertion::SizeWithin {
                    tolerance: SIZE_TOL,
                },
                Assertion::BetaMatchesPrediction {
                    labels: labels(&DRIFTS),
                    tolerance: POWER_TOL,
                },
            ],
        ),
        exp(
            "chi2-null",
            StatisticFamily::chi2(Some(64)),
            vec![10_000],
            vec![],
            vec![Assertion::SizeWithin {
                tolerance: CHI2_SIZE_TOL,
            }],
        ),
        exp(
            "chi2-power",
            StatisticFamily::chi2(Some(1024)),
            vec![N_POWER],
            calibrated(&DRIFTS),
            vec![Assertion::BetaMatchesPrediction {
                labels: labels(&DRIFTS),
                tolerance: CHI2_POWER_TOL,
            }],
        ),
        exp(
            "cvm-null",
            StatisticFamily::Cvm {
                calibration_j: CVM_CALIBRATION_J,
                calibration_draws,
                cache: None,
            },
            vec![1000],
            vec![],
            vec![Assertion::SizeWithin {
                tolerance: SIZE_TOL,
            }],
        ),
    ])
}

fn random_trig(rng: &mut LabRng, degree: usize) -> CoefficientVector {
    CoefficientVector::trig((1..=degree).map(|j| {
        (
            j,
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) / j as f64,
        )
    }))
    .expect("finite coefficients")
}

fn random_cos(rng: &mut LabRng, degree: usize) -> CoefficientVector {
    CoefficientVector::from_real(
        Basis::CosineHalf,
        (1..=degree).map(|j| (j, (rng.random::<f64>() - 0.5) / j as f64)),
    )
    .expect("finite coefficients")
}

/// Cell integrals by quadrature, independent of the closed form.
fn chi2_by_quadrature(theta: &CoefficientVector, m: usize, n: u64) -> Result<f64> {
    let gl = GaussLegendre::new(16);
    let mut d = Vec::with_capacity(m);
    for l in 0..m {
        let (a, b) = (l as f64 / m as f64, (l + 1) as f64 / m as f64);
        let mut err = None;
        let v = gl.integrate(a, b, 8, |x| match theta.evaluate(x) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                0.0
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        d.push(v);
    }
    Ok(chi2_from_deviations(&d, n))
}

pub fn criterion_1a(seed: u64) -> Result<CriterionOutcome> {
    let mut rng = call_rng(seed, "acceptance-1a");
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let degree = rng.random_range(1..=32);
        let m = [4, 8, 16][case % 3];
        let theta = random_trig(&mut rng, degree).scaled(0.3);
        let direct = chi2_by_quadrature(&theta, m, 1)?;
        let fourier = fourier_identity(&theta, m, 1)?;
        worst = worst.max((direct - fourier).abs() / (1.0 + direct.abs()));
    }
    Ok(CriterionOutcome::new(
        "1a",
        "chi-squared Fourier identity",
        worst <= CHI2_IDENTITY_TOL,
        format!("50 cases, worst relative error {worst:.2e} (tol {CHI2_IDENTITY_TOL:e})"),
    ))
}

/// The literal kernel (min(s,t) − st) comparison, plus the verification of
/// the explanation when it fails: the min kernel matches, and the gap is
/// n(∫ s f)² exactly.
pub fn criterion_1b(seed: u64) -> Result<CriterionOutcome> {
    let mut rng = call_rng(seed, "acceptance-1b");
    let (mut literal, mut min_kernel, mut gap_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let degree = rng.random_range(1..=8);
        let theta = random_cos(&mut rng, degree);
        let n = 1;
        let spectral = cvm_spectral(&theta, n)?;
        let lit = cvm_double_integral(&theta, n, 64)?;
        let mk = cvm_min_kernel_integral(&theta, n, 64)?;
        let moment = cvm_first_moment(&theta)?;
        literal = literal.max((spectral - lit).abs());
        min_kernel = min_kernel.max((spectral - mk).abs());
        gap_err = gap_err.max(((spectral - lit) - n as f64 * moment * moment).abs());
    }
    let passed = literal <= CVM_IDENTITY_TOL;
    let mut out = CriterionOutcome::new(
        "1b",
        "CvM spectral identity against the (min(s,t) - st) kernel",
        passed,
        format!(
            "20 cases, worst error {literal:.2e} (tol {CVM_IDENTITY_TOL:e}); min(s,t) kernel worst {min_kernel:.2e}; \
             gap minus n(int s f)^2 worst {gap_err:.2e}"
        ),
    );
    if !passed && min_kernel <= CVM_IDENTITY_TOL && gap_err <= CVM_IDENTITY_TOL {
        out.known_defect = Some(
            "the spectral sum equals the double integral against min(s,t); against min(s,t) - st it \
             differs by exactly n(int s f(s) ds)^2, verified above"
                .into(),
        );
    }
    Ok(out)
}

pub fn criterion_1c(seed: u64) -> Result<CriterionOutcome> {
    let mut rng = call_rng(seed, "acceptance-1c");
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let h = [0.05, 0.1, 0.2][case % 3];
        let degree = rng.random_range(1..=8);
        let theta = random_trig(&mut rng, degree);
        let plan = KernelPlan::new(Kernel::Epanechnikov, 100, 1.0, h, 20)?;
        let a = t1n_functional(&theta, &plan)?;
        let b = t1n_time_domain(&theta, &Kernel::Epanechnikov, h, 32)?;
        worst = worst.max((a - b).abs());
    }
    Ok(CriterionOutcome::new(
        "1c",
        "kernel Fourier-weighted sum against time-domain convolution",
        worst <= KERNEL_IDENTITY_TOL,
        format!("20 cases, worst error {worst:.2e} (tol {KERNEL_IDENTITY_TOL:e})"),
    ))
}

pub fn criterion_1d(seed: u64) -> Result<CriterionOutcome> {
    let mut rng = call_rng(seed, "acceptance-1d");
    let gl = GaussLegendre::new(16);
    let mut parseval: f64 = 0.0;
    for i in 0..20 {
        let degree = rng.random_range(1..=64);
        let theta = if i % 2 == 0 {
            random_trig(&mut rng, degree)
        } else {
            random_cos(&mut rng, degree)
        };
        let q = gl.integrate(0.0, 1.0, 256, |x| {
            theta.evaluate(x).unwrap_or(f64::NAN).powi(2)
        });
        parseval = parseval.max((q - theta.norm_sq()).abs());
    }
    let mut pythagoras: f64 = 0.0;
    let mut ortho: f64 = 0.0;
    for _ in 0..100 {
        let degree = rng.random_range(1..=40);
        let theta = random_trig(&mut rng, degree);
        let cutoff = rng.random_range(1..=45);
        let d = maxiset_decompose(&theta, cutoff, 1.0)?;
        let total = theta.norm_sq();
        pythagoras = pythagoras.max((d.f1.norm_sq() + d.f2.norm_sq() - total).abs() / total);
        let degree = rng.random_range(1..=40);
        let g = random_trig(&mut rng, degree);
        let (cross, defect) = orthogonality_check(&theta, &g)?;
        ortho = ortho.max((defect - 2.0 * cross).abs());
    }
    let passed =
        parseval <= PARSEVAL_TOL && pythagoras <= 4.0 * f64::EPSILON && ortho <= ORTHOGONALITY_TOL;
    Ok(CriterionOutcome::new(
        "1d",
        "Parseval and Pythagoras",
        passed,
        format!(
            "Parseval worst {parseval:.2e} (tol {PARSEVAL_TOL:e}); Pythagoras worst relative {pythagoras:.2e}; \
             defect - 2 dot worst {ortho:.2e} (tol {ORTHOGONALITY_TOL:e})"
        ),
    ))
}

fn experiment<'a>(bundle: &'a Bundle, name: &str) -> &'a ExperimentResult {
    bundle
        .experiments
        .iter()
        .find(|e| e.name == name)
        .expect("experiment present in the manifest")
}

type Pick<'a> = (&'a str, fn(&Assertion) -> bool);

fn assertion_outcome(bundle: &Bundle, picks: &[Pick]) -> (bool, String) {
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, pick) in picks {
        for a in experiment(bundle, name)
            .assertions
            .iter()
            .filter(|a| pick(&a.check))
        {
            ok &= a.passed;
            notes.push(format!("{name}: {}", a.detail));
        }
    }
    (ok, notes.join(" | "))
}

fn is_size(a: &Assertion) -> bool {
    matches!(a, Assertion::SizeWithin { .. })
}

fn is_beta(a: &Assertion) -> bool {
    matches!(a, Assertion::BetaMatchesPrediction { .. })
}

fn is_dichotomy(a: &Assertion) -> bool {
    matches!(
        a,
        Assertion::PowerAboveAlpha { .. } | Assertion::PowerNearAlpha { .. }
    )
}

pub fn criterion_5(seed: u64, reps: usize, workers: Option<usize>) -> Result<CriterionOutcome> {
    let f = AlternativeFamily::new(Basis::CosineHalf, 0.25, DICHOTOMY_AMPLITUDE, all_low())?;
    let g = AlternativeFamily::new(Basis::CosineHalf, 0.25, DICHOTOMY_AMPLITUDE, escaping())?;
    let r = interaction_experiment(
        &f,
        &g,
        &quadratic_design(),
        &InteractionOptions {
            n: N_POWER,
            reps,
            seed,
            alpha: ALPHA,
            workers,
        },
    )?;
    Ok(CriterionOutcome::new(
        "5",
        "interaction with an escaping component",
        r.diff.abs() <= INTERACTION_TOL,
        format!(
            "beta(f) = {:.4}, beta(f+g) = {:.4}, diff = {:+.4} [{:+.4}, {:+.4}] (tol {INTERACTION_TOL})",
            r.beta_f, r.beta_f_plus_g, r.diff, r.diff_lo, r.diff_hi
        ),
    ))
}

pub fn criterion_6(seed: u64, draws: usize, workers: Option<usize>) -> Result<CriterionOutcome> {
    let sampler = BridgeSampler::new(&CoefficientVector::zero(Basis::CosineHalf), 1, 10_000)?;
    let key = StreamKey::named(seed, "acceptance-bridge");
    let v = map_reps(draws, workers, || (), |_, r| sampler.draw(&mut key.rng(r)));
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let se = sd / n.sqrt();
    let z = (mean - 1.0 / 6.0) / se;
    Ok(CriterionOutcome::new(
        "6",
        "Brownian-bridge null mean",
        z.abs() <= BRIDGE_SE_MULTIPLE,
        format!("{draws} draws, J = 10000: mean {mean:.6} vs 1/6, {z:+.2} standard errors"),
    ))
}

pub fn criterion_7() -> Result<CriterionOutcome> {
    let grid: Vec<u64> = (10..=14).map(|k| 1u64 << k).collect();
    let mut ok = true;
    let mut notes = Vec::new();
    for (r, gamma) in [(0.2, 2.0), (0.25, 2.0), (0.25, 3.0)] {
        let fam = KappaFamily::new(r, gamma, 1.0, 1.0, TruncationRule::default())?;
        let rep = validate_assumptions(&fam, &grid, &AssumptionOptions::default())?;
        let ratio = |f: &dyn Fn(&crate::quadratic_tests::AssumptionRow) -> f64| {
            let v: Vec<f64> = rep.rows.iter().map(f).collect();
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            hi / lo
        };
        let bands = [
            ratio(&|row| row.rho_scaled),
            ratio(&|row| row.k_scaled),
            ratio(&|row| row.a_n),
        ];
        let family_ok = rep.a1_to_a5() && bands.iter().all(|&b| b <= RATE_BAND);
        ok &= family_ok;
        notes.push(format!(
            "(r={r}, gamma={gamma}): A1-A5 {}, max/min rho n^2r {:.3}, k_n/n^(2-4r) {:.3}, A_n {:.3}",
            if rep.a1_to_a5() { "pass" } else { "fail" },
            bands[0],
            bands[1],
            bands[2]
        ));
    }
    Ok(CriterionOutcome::new(
        "7",
        "example kappa family assumptions",
        ok,
        notes.join("; "),
    ))
}

pub fn criterion_8(seed: u64, reps: usize, workers: Option<usize>) -> Result<CriterionOutcome> {
    let opts = CompactnessOptions {
        n: 100,
        sigma: 1.0,
        alpha: ALPHA,
        reps,
        seed,
        workers,
    };
    let l2 = compactness_demo(CompactSet::L2Ball, 0.15, &[1, 10, 100, 1000, 10_000], &opts)?;
    let last = l2
        .rows
        .last()
        .and_then(|r| r.power)
        .map(|p| p.estimate)
        .unwrap_or(f64::NAN);
    let first = l2.rows[0].power.map(|p| p.estimate).unwrap_or(f64::NAN);
    let ell_grid: Vec<usize> = (1..=20).collect();
    let ell = compactness_demo(
        CompactSet::Ellipsoid { exponent: 1.0 },
        0.5,
        &ell_grid,
        &opts,
    )?;
    let minimax = ell.minimax_power.unwrap_or(0.0);
    let passed = (last - ALPHA).abs() <= MIXTURE_TOL && minimax >= ALPHA + ELLIPSOID_MARGIN;
    let powers: Vec<String> = l2
        .rows
        .iter()
        .map(|r| {
            format!(
                "J={}: {:.4}",
                r.j,
                r.power.map(|p| p.estimate).unwrap_or(f64::NAN)
            )
        })
        .collect();
    Ok(CriterionOutcome::new(
        "8",
        "compactness demonstration",
        passed,
        format!(
            "l2 ball rho=0.15, n=100 mixture power {} (exact at J=1: {:.4}, first MC {first:.4}); \
             ellipsoid a_j=1/j, rho=0.5: {} feasible directions, minimax power {minimax:.4}",
            powers.join(", "),
            l2.rows[0].coordinate_power,
            ell.effective_dimension
        ),
    ))
}

/// Runs the reduced manifest three times: twice on `workers` and once on a
/// single worker, and compares the bundles with timing fields removed.
pub fn criterion_9(seed: u64, workers: usize) -> Result<CriterionOutcome> {
    let manifest = acceptance_manifest(seed, DETERMINISM_REPS, 20_000);
    let run = |w: usize| -> Result<String> {
        let b = run_suite(
            &manifest,
            &SuiteOptions {
                workers: Some(w),
                out: None,
            },
        )?;
        canonical_json(&b)
    };
    let a = run(workers)?;
    let b = run(workers)?;
    let c = run(1)?;
    let repeat = a == b;
    let across = a == c;
    Ok(CriterionOutcome::new(
        "9",
        "determinism",
        repeat && across,
        format!(
            "reduced manifest ({DETERMINISM_REPS} reps): repeat run identical = {repeat}, \
             1 vs {workers} workers identical = {across}, {} bytes",
            a.len()
        ),
    ))
}

pub fn run_acceptance(opts: &AcceptanceOptions) -> Result<AcceptanceReport> {
    let seed = opts.seed;
    let mut criteria = vec![
        criterion_1a(seed)?,
        criterion_1b(seed)?,
        criterion_1c(seed)?,
        criterion_1d(seed)?,
    ];
    let draws = if opts.reps >= FULL_REPS {
        CVM_CALIBRATION_DRAWS
    } else {
        (opts.reps * 10).max(20_000)
    };
    let manifest = acceptance_manifest(seed, opts.reps, draws);
    let bundle = run_suite(
        &manifest,
        &SuiteOptions {
            workers: opts.workers,
            out: opts.out.clone(),
        },
    )?;
    let (ok, detail) = assertion_outcome(
        &bundle,
        &[
            ("quadratic", is_size),
            ("kernel", is_size),
            ("cvm-null", is_size),
            ("chi2-null", is_size),
        ],
    );
    criteria.push(CriterionOutcome::new("2", "null calibration", ok, detail));
    let (ok, detail) = assertion_outcome(
        &bundle,
        &[
            ("quadratic", is_beta),
            ("kernel", is_beta),
            ("chi2-power", is_beta),
        ],
    );
    criteria.push(CriterionOutcome::new(
        "3",
        "power formula reproduction",
        ok,
        detail,
    ));
    let (ok, detail) = assertion_outcome(&bundle, &[("quadratic", is_dichotomy)]);
    criteria.push(CriterionOutcome::new(
        "4",
        "consistency dichotomy",
        ok,
        detail,
    ));
    criteria.push(criterion_5(seed, opts.reps, opts.workers)?);
    criteria.push(criterion_6(seed, opts.reps, opts.workers)?);
    criteria.push(criterion_7()?);
    criteria.push(criterion_8(seed, (opts.reps / 5).max(2_000), opts.workers)?);
    if opts.determinism {
        criteria.push(criterion_9(seed, 8)?);
    }
    let report = AcceptanceReport {
        schema_version: SCHEMA_VERSION,
        seed,
        reps: opts.reps,
        criteria,
        bundle,
    };
    if let Some(dir) = &opts.out {
        write_json(&report, &dir.join("acceptance.json"))?;
    }
    Ok(report)
}
