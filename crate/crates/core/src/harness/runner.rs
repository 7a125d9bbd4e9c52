//! A statistic family instantiated at one sample size, ready for replication
//! loops. Sequence-model tests read noise only up to their truncation J, so a
//! signal is cut to `|j| ≤ J` before sampling; the dropped mass is reported.

use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::chi_squared_tests::{chi2_noncentrality, CellHistogram, Chi2Test};
use crate::consistency_lab::StatisticFamily;
use crate::cvm_tests::{cvm_sorted_in_place, CvmCache, CvmCriticalValue};
use crate::error::{LabError, Result};
use crate::harness::mc::{count_reps, map_reps};
use crate::kernel_tests::{kernel_noncentrality, KernelPlan, KernelTest};
use crate::normal::{std_normal_cdf, upper_quantile};
use crate::quadratic_tests::{noncentrality, KappaWeights, QuadraticTest};
use crate::rng::{LabRng, StreamKey};
use crate::sequence_model::{Basis, CoefficientVector, DensitySpec, SequenceObservation};

/// Everything about a prepared test that a result bundle should record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestMeta {
    pub statistic: String,
    pub n: u64,
    pub rate: f64,
    pub alpha: f64,
    pub k_n: usize,
    pub basis: Basis,
    pub x_alpha: f64,
    /// Simulated truncation J of sequence-model tests.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    /// Neglected weight mass beyond J relative to ρ_n.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neglected_tail: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CvmCriticalValue>,
}

#[derive(Debug, Clone)]
enum Inner {
    Quadratic {
        test: QuadraticTest,
        weights: KappaWeights,
    },
    Kernel {
        plan: KernelPlan,
    },
    Chi2 {
        test: Chi2Test,
    },
    Cvm {
        critical: CvmCriticalValue,
    },
}

#[derive(Debug, Clone)]
pub struct PreparedTest {
    pub meta: TestMeta,
    sigma: f64,
    inner: Inner,
}

enum Signal {
    Seq(CoefficientVector),
    Density(DensitySpec),
}

enum Scratch {
    Seq(SequenceObservation),
    Sample(Vec<f64>, Option<CellHistogram>),
}

fn cvm_memo() -> &'static Mutex<CvmCache> {
    static MEMO: OnceLock<Mutex<CvmCache>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(CvmCache::default()))
}

/// Critical value from the in-process memo, then the file cache, then a
/// fresh calibration.
pub fn cvm_critical_value(
    alpha: f64,
    truncation: usize,
    draws: usize,
    seed: u64,
    cache: Option<&std::path::Path>,
    workers: Option<usize>,
) -> Result<CvmCriticalValue> {
    let mut memo = cvm_memo().lock().unwrap_or_else(|e| e.into_inner());
    if let Some(v) = memo.lookup(alpha, truncation, draws, seed) {
        return Ok(v);
    }
    let v = match cache {
        Some(path) => {
            let mut file = CvmCache::load(path)?;
            let before = file.entries.len();
            let v = file.get_or_calibrate(alpha, truncation, draws, seed, workers)?;
            if file.entries.len() != before {
                file.save(path)?;
            }
            v
        }
        None => crate::cvm_tests::calibrate_cvm(alpha, truncation, draws, seed, workers)?,
    };
    memo.entries.push(v);
    Ok(v)
}

impl PreparedTest {
    /// `seed` only matters for the CvM calibration.
    pub fn new(
        statistic: &StatisticFamily,
        n: u64,
        rate: f64,
        alpha: f64,
        seed: u64,
        workers: Option<usize>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(crate::error::invalid("n", "sample size must be >= 1"));
        }
        let x_alpha = upper_quantile(alpha)?;
        let k_n = statistic.k_n(n, rate)?;
        let mut meta = TestMeta {
            statistic: statistic.name().into(),
            n,
            rate,
            alpha,
            k_n,
            basis: statistic.basis(),
            x_alpha,
            truncation: None,
            neglected_tail: None,
            bandwidth: None,
            cells: None,
            calibration: None,
        };
        let (inner, sigma) = match statistic {
            StatisticFamily::Quadratic { sigma, .. } => {
                let weights = statistic.kappa(rate)?.weights(n)?;
                let test = QuadraticTest::new(&weights, Basis::CosineHalf, alpha)?;
                meta.truncation = Some(weights.truncation());
                meta.neglected_tail = weights.neglected_tail;
                (Inner::Quadratic { test, weights }, *sigma)
            }
            StatisticFamily::Kernel {
                kernel,
                band,
                sigma,
                ..
            } => {
                let h = statistic.bandwidth_for(n, rate)?;
                let plan = KernelPlan::with_band(kernel.clone(), n, *sigma, h, *band)?;
                meta.truncation = Some(plan.truncation());
                meta.bandwidth = Some(h);
                (Inner::Kernel { plan }, *sigma)
            }
            StatisticFamily::Chi2 { .. } => {
                let m = statistic.cells_for(n, rate)?;
                meta.cells = Some(m);
                (
                    Inner::Chi2 {
                        test: Chi2Test::new(m, alpha)?,
                    },
                    1.0,
                )
            }
            StatisticFamily::Cvm {
                calibration_j,
                calibration_draws,
                cache,
            } => {
                let critical = cvm_critical_value(
                    alpha,
                    *calibration_j,
                    *calibration_draws,
                    seed,
                    cache.as_deref(),
                    workers,
                )?;
                meta.x_alpha = critical.x_alpha;
                meta.calibration = Some(critical);
                (Inner::Cvm { critical }, 1.0)
            }
        };
        Ok(Self { meta, sigma, inner })
    }

    pub fn basis(&self) -> Basis {
        self.meta.basis
    }

    fn check_basis(&self, theta: &CoefficientVector) -> Result<()> {
        if theta.basis() != self.basis() {
            return Err(LabError::Mismatch(format!(
                "{} test reads {:?} coefficients, got {:?}",
                self.meta.statistic,
                self.basis(),
                theta.basis()
            )));
        }
        Ok(())
    }

    /// The part of `theta` the test can see.
    pub fn visible(&self, theta: &CoefficientVector) -> CoefficientVector {
        match self.meta.truncation {
            Some(j) => theta.restrict_below(j + 1),
            None => theta.clone(),
        }
    }

    /// Drift argument d with predicted type II error Φ(x_α − d), where a
    /// closed form exists.
    pub fn noncentrality(&self, theta: &CoefficientVector) -> Result<Option<f64>> {
        self.check_basis(theta)?;
        let v = self.visible(theta);
        Ok(match &self.inner {
            Inner::Quadratic { weights, .. } => {
                let (r, a) = noncentrality(&v, weights)?;
                Some(r / (2.0 * a).sqrt())
            }
            Inner::Kernel { plan } => Some(kernel_noncentrality(&v, plan)?),
            Inner::Chi2 { test } => Some(chi2_noncentrality(&v, test.m, self.meta.n)?),
            Inner::Cvm { .. } => None,
        })
    }

    pub fn predicted_beta(&self, theta: &CoefficientVector) -> Result<Option<f64>> {
        Ok(self
            .noncentrality(theta)?
            .map(|d| std_normal_cdf(self.meta.x_alpha - d)))
    }

    fn signal(&self, theta: &CoefficientVector) -> Result<Signal> {
        self.check_basis(theta)?;
        match self.inner {
            Inner::Quadratic { .. } | Inner::Kernel { .. } => Ok(Signal::Seq(self.visible(theta))),
            Inner::Chi2 { .. } | Inner::Cvm { .. } => {
                Ok(Signal::Density(DensitySpec::new(theta.clone())?))
            }
        }
    }

    fn scratch(&self) -> Scratch {
        let n = self.meta.n;
        match &self.inner {
            Inner::Quadratic { weights, .. } => Scratch::Seq(
                SequenceObservation::empty(Basis::CosineHalf, n, self.sigma, weights.truncation())
                    .expect("validated at construction"),
            ),
            Inner::Kernel { plan } => Scratch::Seq(
                SequenceObservation::empty(Basis::TrigComplex, n, self.sigma, plan.truncation())
                    .expect("validated at construction"),
            ),
            Inner::Chi2 { test } => Scratch::Sample(
                Vec::with_capacity(n as usize),
                Some(CellHistogram::new(test.m).expect("validated at construction")),
            ),
            Inner::Cvm { .. } => Scratch::Sample(Vec::with_capacity(n as usize), None),
        }
    }

    fn reject_once(&self, scratch: &mut Scratch, signal: &Signal, rng: &mut LabRng) -> bool {
        match (scratch, signal) {
            (Scratch::Seq(obs), Signal::Seq(theta)) => {
                obs.resample(theta, rng)
                    .expect("signal cut to the truncation");
                match &self.inner {
                    Inner::Quadratic { test, .. } => test.decide(obs).reject,
                    Inner::Kernel { plan } => {
                        KernelTest {
                            plan,
                            x_alpha: self.meta.x_alpha,
                        }
                        .decide(obs)
                        .reject
                    }
                    _ => unreachable!(),
                }
            }
            (Scratch::Sample(buf, hist), Signal::Density(d)) => {
                buf.clear();
                d.sample_into(self.meta.n as usize, rng, buf);
                match (&self.inner, hist) {
                    (Inner::Chi2 { test }, Some(h)) => {
                        h.fill(buf);
                        test.decide(h).reject
                    }
                    (Inner::Cvm { critical }, _) => cvm_sorted_in_place(buf) > critical.x_alpha,
                    _ => unreachable!(),
                }
            }
            _ => unreachable!("signal kind follows the test kind"),
        }
    }

    /// Rejections over `reps` replications of `theta`, replication r on
    /// stream r of `key`.
    pub fn rejections(
        &self,
        theta: &CoefficientVector,
        key: StreamKey,
        reps: usize,
        workers: Option<usize>,
    ) -> Result<u64> {
        let signal = self.signal(theta)?;
        Ok(count_reps(
            reps,
            workers,
            || self.scratch(),
            |s, r| self.reject_once(s, &signal, &mut key.rng(r)),
        ))
    }

    /// Decisions for `a` and `b` on common random numbers.
    pub fn paired(
        &self,
        a: &CoefficientVector,
        b: &CoefficientVector,
        key: StreamKey,
        reps: usize,
        workers: Option<usize>,
    ) -> Result<Vec<(bool, bool)>> {
        let sa = self.signal(a)?;
        let sb = self.signal(b)?;
        Ok(map_reps(
            reps,
            workers,
            || self.scratch(),
            |s, r| {
                let ra = self.reject_once(s, &sa, &mut key.rng(r));
                let rb = self.reject_once(s, &sb, &mut key.rng(r));
                (ra, rb)
            },
        ))
    }
}
