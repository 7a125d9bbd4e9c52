//! Chi-squared statistics with `m` equal cells on (0, 1).
//!
//! Both the empirical statistic and the population functional go through
//! [`chi2_from_deviations`], so the plug-in relation between them is exact.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::normal::{std_normal_cdf, upper_quantile};
use crate::quadratic_tests::Decision;
use crate::sequence_model::{Basis, CoefficientVector};

/// Cell counts of a sample over `m` equal cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellHistogram {
    pub m: usize,
    pub n: u64,
    pub counts: Vec<u64>,
}

impl CellHistogram {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(invalid("m", "need at least two cells"));
        }
        Ok(Self {
            m,
            n: 0,
            counts: vec![0; m],
        })
    }

    pub fn from_sample(sample: &[f64], m: usize) -> Result<Self> {
        if sample.is_empty() {
            return Err(invalid("sample", "sample must be nonempty"));
        }
        if sample.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(invalid("sample", "points must lie in [0, 1]"));
        }
        let mut h = Self::new(m)?;
        h.fill(sample);
        Ok(h)
    }

    /// Replaces the counts with those of `sample` (points assumed in [0, 1]).
    pub fn fill(&mut self, sample: &[f64]) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        let m = self.m as f64;
        for &x in sample {
            let cell = ((x * m) as usize).min(self.m - 1);
            self.counts[cell] += 1;
        }
        self.n = sample.len() as u64;
    }

    /// p̂_j = counts_j / n.
    pub fn masses(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// n m Σ_l d_l², with d_l the cell-mass deviations from 1/m.
pub fn chi2_from_deviations(deviations: &[f64], n: u64) -> f64 {
    let m = deviations.len() as f64;
    n as f64 * m * deviations.iter().map(|d| d * d).sum::<f64>()
}

/// T_n for cell masses p_l (empirical or population).
pub fn chi2_from_masses(masses: &[f64], n: u64) -> f64 {
    let inv = 1.0 / masses.len() as f64;
    let d: Vec<f64> = masses.iter().map(|p| p - inv).collect();
    chi2_from_deviations(&d, n)
}

/// T_n(F̂_n) = n m Σ (p̂_j − 1/m)².
pub fn chi2_statistic(sample: &[f64], m: usize) -> Result<f64> {
    let h = CellHistogram::from_sample(sample, m)?;
    Ok(chi2_from_masses(&h.masses(), h.n))
}

fn check_theta(theta: &CoefficientVector, m: usize) -> Result<()> {
    if theta.basis() != Basis::TrigComplex {
        return Err(invalid(
            "theta",
            "chi-squared functionals use the trigonometric basis",
        ));
    }
    if m < 2 {
        return Err(invalid("m", "need at least two cells"));
    }
    Ok(())
}

/// e^{2πik/m}, k = 0..m.
fn roots(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64))
        .collect()
}

/// ∫ over each cell of f, in closed form: 2 Re Σ_j θ_j (e^{2πij(l+1)/m} − e^{2πijl/m}) / (2πij).
pub fn cell_deviations(theta: &CoefficientVector, m: usize) -> Result<Vec<f64>> {
    check_theta(theta, m)?;
    let w = roots(m);
    let mut d = vec![0.0; m];
    for (j, c) in theta.iter() {
        let jm = j % m;
        if jm == 0 {
            continue;
        }
        let coef = c / Complex64::new(0.0, 2.0 * PI * j as f64);
        for (l, dl) in d.iter_mut().enumerate() {
            let a = w[(jm * l) % m];
            let b = w[(jm * (l + 1)) % m];
            *dl += 2.0 * (coef * (b - a)).re;
        }
    }
    Ok(d)
}

/// Population T_n(F) = n m Σ_l (∫_{cell l} f)² from exact cell integrals.
pub fn chi2_functional(theta: &CoefficientVector, m: usize, n: u64) -> Result<f64> {
    Ok(chi2_from_deviations(&cell_deviations(theta, m)?, n))
}

/// T_n(F) through the Fourier-domain identity
/// `n⁻¹m⁻¹T_n(F) = m Σ_k Σ_j θ_j conj(θ_{j−km}) (2 − 2cos(2πj/m)) / (4π² j (j − km))`,
/// with 0/0 = 0.
pub fn fourier_identity(theta: &CoefficientVector, m: usize, n: u64) -> Result<f64> {
    check_theta(theta, m)?;
    // signed support with θ_{−j} = conj(θ_j)
    let signed: Vec<(i64, Complex64)> = theta
        .iter()
        .flat_map(|(j, c)| [(j as i64, c), (-(j as i64), c.conj())])
        .collect();
    let mi = m as i64;
    let mut s = Complex64::new(0.0, 0.0);
    for &(j, a) in &signed {
        let r = j.rem_euclid(mi);
        if r == 0 {
            continue;
        }
        let factor = 2.0 - 2.0 * (2.0 * PI * r as f64 / m as f64).cos();
        for &(jp, b) in &signed {
            if (j - jp).rem_euclid(mi) != 0 {
                continue;
            }
            s += a * b.conj() * factor / (4.0 * PI * PI * j as f64 * jp as f64);
        }
    }
    Ok(n as f64 * m as f64 * m as f64 * s.re)
}

/// Measured form of the tail bound `n⁻¹m⁻²T_n(F̃) ≤ C m⁻¹ i_n⁻¹ Σ_{|j|>i_n} |θ_j|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBoundReport {
    pub m: usize,
    pub i_n: usize,
    pub lhs: f64,
    /// m⁻¹ i_n⁻¹ Σ_{|j|>i_n} |θ_j|², the bound without its constant.
    pub rhs_unit: f64,
    /// lhs / rhs_unit, the smallest constant that works here.
    pub ratio: f64,
    pub constant: f64,
    pub holds: bool,
}

/// Evaluates both sides of the tail bound with `i_n = [d m]`.
pub fn chi2_tail_bound_check(
    theta: &CoefficientVector,
    m: usize,
    d: f64,
    constant: f64,
) -> Result<TailBoundReport> {
    if !(d > 1.0) {
        return Err(invalid("d", format!("need d > 1, got {d}")));
    }
    check_theta(theta, m)?;
    let i_n = (d * m as f64).floor() as usize;
    let tail = theta.restrict_from(i_n + 1);
    let dev = cell_deviations(&tail, m)?;
    let lhs = dev.iter().map(|x| x * x).sum::<f64>() / m as f64;
    let rhs_unit = tail.norm_sq() / (m as f64 * i_n as f64);
    let ratio = if rhs_unit > 0.0 { lhs / rhs_unit } else { 0.0 };
    Ok(TailBoundReport {
        m,
        i_n,
        lhs,
        rhs_unit,
        ratio,
        constant,
        holds: lhs <= constant * rhs_unit,
    })
}

fn warn_small_m(m: usize) {
    if m < 8 {
        log::warn!("m = {m} is far from the growing-cells regime of the normal limit");
    }
}

/// Standardized score 2^{−1/2} m^{−1/2} (T_n − m + 1).
pub fn chi2_score(t: f64, m: usize) -> f64 {
    (t - m as f64 + 1.0) / (2.0 * m as f64).sqrt()
}

/// Rejects iff 2^{−1/2} m^{−1/2} (T_n(F̂_n) − m + 1) > x_α.
pub fn chi2_decide(sample: &[f64], m: usize, alpha: f64) -> Result<Decision> {
    warn_small_m(m);
    let x = upper_quantile(alpha)?;
    let score = chi2_score(chi2_statistic(sample, m)?, m);
    Ok(Decision {
        reject: score > x,
        score,
    })
}

/// Noncentrality 2^{−1/2} m^{−1/2} T_n(F).
pub fn chi2_noncentrality(theta: &CoefficientVector, m: usize, n: u64) -> Result<f64> {
    Ok(chi2_functional(theta, m, n)? / (2.0 * m as f64).sqrt())
}

/// Predicted type II error Φ(x_α − 2^{−1/2} m^{−1/2} T_n(F)).
pub fn chi2_power_formula(theta: &CoefficientVector, m: usize, n: u64, alpha: f64) -> Result<f64> {
    warn_small_m(m);
    Ok(std_normal_cdf(
        upper_quantile(alpha)? - chi2_noncentrality(theta, m, n)?,
    ))
}

/// The test with its threshold precomputed, for replication loops.
#[derive(Debug, Clone, Copy)]
pub struct Chi2Test {
    pub m: usize,
    pub x_alpha: f64,
}

impl Chi2Test {
    pub fn new(m: usize, alpha: f64) -> Result<Self> {
        if m < 2 {
            return Err(invalid("m", "need at least two cells"));
        }
        warn_small_m(m);
        Ok(Self {
            m,
            x_alpha: upper_quantile(alpha)?,
        })
    }

    pub fn score(&self, h: &CellHistogram) -> f64 {
        chi2_score(chi2_from_masses(&h.masses(), h.n), self.m)
    }

    pub fn decide(&self, h: &CellHistogram) -> Decision {
        let score = self.score(h);
        Decision {
            reject: score > self.x_alpha,
            score,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::mc::map_reps;
    use crate::rng::{call_rng, StreamKey};
    use crate::sequence_model::{open_unit, DensitySpec};
    use rand::Rng;

    fn random_trig(seed: u64, degree: usize) -> CoefficientVector {
        let mut rng = call_rng(seed, "chi2-poly");
        CoefficientVector::trig((1..=degree).map(|j| {
            (
                j,
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 0.1,
            )
        }))
        .unwrap()
    }

    #[test]
    fn balanced_and_concentrated_samples() {
        let sample: Vec<f64> = (0..64).map(|i| (i as f64 + 0.5) / 64.0).collect();
        assert_eq!(chi2_statistic(&sample, 16).unwrap(), 0.0);
        let one = vec![0.3; 50];
        let t = chi2_statistic(&one, 8).unwrap();
        assert!((t - 50.0 * 7.0).abs() < 1e-9);
        assert!(chi2_statistic(&[], 8).is_err());
        assert!(chi2_statistic(&[1.5], 8).is_err());
    }

    #[test]
    fn functional_zero_and_aliasing() {
        let zero = CoefficientVector::zero(Basis::TrigComplex);
        assert_eq!(chi2_functional(&zero, 8, 100).unwrap(), 0.0);
        let aliased = CoefficientVector::trig([
            (8, Complex64::new(0.2, 0.1)),
            (16, Complex64::new(-0.1, 0.0)),
        ])
        .unwrap();
        assert_eq!(chi2_functional(&aliased, 8, 100).unwrap(), 0.0);
        assert_eq!(fourier_identity(&aliased, 8, 100).unwrap(), 0.0);
    }

    #[test]
    fn identity_single_pair_and_low_support() {
        let one = CoefficientVector::trig([(1, Complex64::new(0.2, -0.05))]).unwrap();
        let a = chi2_functional(&one, 4, 10).unwrap();
        let b = fourier_identity(&one, 4, 10).unwrap();
        assert!((a - b).abs() < 1e-12 * (1.0 + a));
        // support below m: only k = 0 survives
        let m = 16;
        let th = random_trig(4, 7);
        let hand: f64 = th
            .iter()
            .map(|(j, c)| {
                let j = j as f64;
                2.0 * c.norm_sqr() * (2.0 - 2.0 * (2.0 * PI * j / m as f64).cos())
                    / (4.0 * PI * PI * j * j)
            })
            .sum::<f64>()
            * m as f64;
        let id = fourier_identity(&th, m, 1).unwrap() / m as f64;
        assert!((hand - id).abs() < 1e-14);
    }

    #[test]
    fn identity_random_polynomials() {
        for i in 0..50u64 {
            let deg = 1 + (i as usize * 7) % 32;
            let m = [4, 8, 16][i as usize % 3];
            let th = random_trig(100 + i, deg);
            let a = chi2_functional(&th, m, 1000).unwrap();
            let b = fourier_identity(&th, m, 1000).unwrap();
            assert!((a - b).abs() <= 1e-10 * (1.0 + a), "case {i}: {a} vs {b}");
        }
    }

    #[test]
    fn plug_in_path_is_shared() {
        let mut rng = call_rng(1, "plug");
        let sample: Vec<f64> = (0..777).map(|_| open_unit(&mut rng)).collect();
        let h = CellHistogram::from_sample(&sample, 12).unwrap();
        assert_eq!(
            chi2_statistic(&sample, 12).unwrap(),
            chi2_from_masses(&h.masses(), 777)
        );
        assert_eq!(h.counts.iter().sum::<u64>(), 777);
    }

    #[test]
    fn tail_bound_cases() {
        let low = random_trig(2, 5);
        let r = chi2_tail_bound_check(&low, 8, 2.0, 50.0).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.holds);
        assert!(chi2_tail_bound_check(&low, 8, 1.0, 50.0).is_err());
        let mut ratios = Vec::new();
        for m in [8usize, 16, 32] {
            let i_n = 2 * m;
            let th = CoefficientVector::trig(
                (i_n + 1..=4 * i_n).map(|j| (j, Complex64::new(1.0 / j as f64, 0.0))),
            )
            .unwrap();
            let r = chi2_tail_bound_check(&th, m, 2.0, 50.0).unwrap();
            assert!(r.holds, "m={m}: ratio {}", r.ratio);
            ratios.push(r.ratio);
        }
        assert!(ratios.iter().all(|&x| x > 0.0 && x <= 50.0));
    }

    #[test]
    fn null_calibration_small_m() {
        let m = 16;
        let n = 10_000;
        let test = Chi2Test::new(m, 0.05).unwrap();
        let key = StreamKey::named(2, "chi2-null");
        let reps = 10_000;
        let u = DensitySpec::uniform(Basis::TrigComplex);
        let scores: Vec<f64> = map_reps(
            reps,
            None,
            || (CellHistogram::new(m).unwrap(), Vec::with_capacity(n)),
            |(h, buf), r| {
                buf.clear();
                u.sample_into(n, &mut key.rng(r), buf);
                h.fill(buf);
                test.score(h)
            },
        );
        let mean = scores.iter().sum::<f64>() / reps as f64;
        let sd =
            (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0)).sqrt();
        assert!(mean.abs() < 4.0 * sd / (reps as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn power_formula_null() {
        let zero = CoefficientVector::zero(Basis::TrigComplex);
        assert!((chi2_power_formula(&zero, 64, 1000, 0.05).unwrap() - 0.95).abs() < 1e-12);
    }
}
