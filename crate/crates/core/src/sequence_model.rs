//! Signals and densities on (0, 1) in Fourier form.
//!
//! A signal is `f = Σ θ_j φ_j` over one of three bases. The trigonometric
//! basis `φ_j = exp{2πijx}` is indexed over ℤ; only `j ≥ 1` is stored and the
//! negative half is implied by `θ_{−j} = conj(θ_j)`, so the implied function is
//! always real and `θ_0 = 0`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::rng::{call_rng, LabRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// `exp{2πijx}`, `j ∈ ℤ`, conjugate-symmetric coefficients.
    TrigComplex,
    /// `√2 cos(πjx)`, `j ≥ 1`.
    CosineHalf,
    /// Abstract orthonormal system indexed by `j ≥ 1`; cannot be evaluated.
    GenericOrthonormal,
}

impl Basis {
    /// How many basis functions share the index magnitude `j`.
    pub fn multiplicity(self) -> f64 {
        match self {
            Basis::TrigComplex => 2.0,
            _ => 1.0,
        }
    }

    pub fn is_complex(self) -> bool {
        matches!(self, Basis::TrigComplex)
    }
}

/// Finite-support Fourier coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    basis: Basis,
    entries: BTreeMap<usize, Complex64>,
}

impl CoefficientVector {
    pub fn zero(basis: Basis) -> Self {
        Self {
            basis,
            entries: BTreeMap::new(),
        }
    }

    /// Real coefficients `(j, θ_j)`; on the trigonometric basis these are the
    /// `j ≥ 1` halves of real-valued conjugate pairs.
    pub fn from_real<I>(basis: Basis, coefficients: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut v = Self::zero(basis);
        for (j, c) in coefficients {
            v.set(j, Complex64::new(c, 0.0))?;
        }
        Ok(v)
    }

    /// Complex coefficients `(j, θ_j)` for `j ≥ 1` on the trigonometric basis.
    pub fn trig<I>(coefficients: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Complex64)>,
    {
        let mut v = Self::zero(Basis::TrigComplex);
        for (j, c) in coefficients {
            v.set(j, c)?;
        }
        Ok(v)
    }

    /// Sets `θ_j`. Index 0 is not representable: densities need `θ_0 = 0` and
    /// the real bases start at 1.
    pub fn set(&mut self, j: usize, value: Complex64) -> Result<()> {
        if j == 0 {
            return Err(invalid("index", "coefficient index must be >= 1"));
        }
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(invalid(
                "coefficient",
                format!("non-finite value at j = {j}"),
            ));
        }
        if !self.basis.is_complex() && value.im != 0.0 {
            return Err(invalid(
                "coefficient",
                format!(
                    "{:?} coefficients are real; got imaginary part at j = {j}",
                    self.basis
                ),
            ));
        }
        if value == Complex64::new(0.0, 0.0) {
            self.entries.remove(&j);
        } else {
            self.entries.insert(j, value);
        }
        Ok(())
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn get(&self, j: usize) -> Complex64 {
        self.entries.get(&j).copied().unwrap_or_default()
    }

    /// Largest index carrying a nonzero coefficient, 0 for the zero vector.
    pub fn max_index(&self) -> usize {
        self.entries.keys().next_back().copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// Stored `(j, θ_j)` pairs in increasing `j`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.entries.iter().map(|(&j, &c)| (j, c))
    }

    /// Σ|θ_j|² over the full index set (both halves on the trigonometric basis).
    pub fn norm_sq(&self) -> f64 {
        self.basis.multiplicity() * self.entries.values().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Coefficients with `|j| < cutoff`.
    pub fn restrict_below(&self, cutoff: usize) -> Self {
        Self {
            basis: self.basis,
            entries: self
                .entries
                .range(..cutoff.max(1))
                .map(|(&j, &c)| (j, c))
                .collect(),
        }
    }

    /// Coefficients with `|j| >= cutoff`.
    pub fn restrict_from(&self, cutoff: usize) -> Self {
        Self {
            basis: self.basis,
            entries: self
                .entries
                .range(cutoff.max(1)..)
                .map(|(&j, &c)| (j, c))
                .collect(),
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        let mut out = Self::zero(self.basis);
        for (j, c) in self.iter() {
            // scaling cannot introduce an imaginary part
            let _ = out.set(j, c * t);
        }
        out
    }

    /// Applies `g` to every stored coefficient.
    pub fn map<F: FnMut(usize, Complex64) -> Complex64>(&self, mut g: F) -> Result<Self> {
        let mut out = Self::zero(self.basis);
        for (j, c) in self.iter() {
            out.set(j, g(j, c))?;
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.basis != other.basis {
            return Err(LabError::Mismatch(format!(
                "cannot add {:?} and {:?} coefficients",
                self.basis, other.basis
            )));
        }
        let mut out = self.clone();
        for (j, c) in other.iter() {
            let sum = out.get(j) + c;
            out.set(j, sum)?;
        }
        Ok(out)
    }

    /// Real inner product `Σ Re(θ_j conj(η_j))` over the full index set.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.basis != other.basis {
            return Err(LabError::Mismatch("inner product across bases".into()));
        }
        let s: f64 = self.iter().map(|(j, c)| (c * other.get(j).conj()).re).sum();
        Ok(self.basis.multiplicity() * s)
    }

    /// f(x). The generic basis has no function representation.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        match self.basis {
            Basis::TrigComplex => Ok(self
                .iter()
                .map(|(j, c)| {
                    let (s, co) = (2.0 * PI * j as f64 * x).sin_cos();
                    2.0 * (c.re * co - c.im * s)
                })
                .sum()),
            Basis::CosineHalf => Ok(self
                .iter()
                .map(|(j, c)| SQRT_2 * c.re * (PI * j as f64 * x).cos())
                .sum()),
            Basis::GenericOrthonormal => Err(invalid(
                "basis",
                "generic orthonormal coefficients cannot be evaluated pointwise",
            )),
        }
    }

    /// Σ_{j∈ℤ} θ_j exp{2πijx} summed term by term over both halves, without
    /// using the symmetry. Its imaginary part measures symmetry violations.
    pub fn evaluate_two_sided(&self, x: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, c) in self.iter() {
            let phase = Complex64::from_polar(1.0, 2.0 * PI * j as f64 * x);
            acc += c * phase;
            acc += c.conj() * phase.conj();
        }
        acc
    }

    /// Upper bound on sup|f|.
    pub fn sup_bound(&self) -> f64 {
        let l1: f64 = self.entries.values().map(|c| c.norm()).sum();
        match self.basis {
            Basis::TrigComplex => 2.0 * l1,
            _ => SQRT_2 * l1,
        }
    }

    /// Upper bound on sup|f'|, from Σ|j||θ_j|.
    pub fn lipschitz_bound(&self) -> f64 {
        let l1: f64 = self.iter().map(|(j, c)| j as f64 * c.norm()).sum();
        match self.basis {
            Basis::TrigComplex => 4.0 * PI * l1,
            _ => SQRT_2 * PI * l1,
        }
    }
}

/// ‖f‖ by Parseval.
pub fn parseval_norm(theta: &CoefficientVector) -> f64 {
    theta.norm_sq().sqrt()
}

/// Observed coefficients `y_j`, `1 ≤ j ≤ J`, stored at position `j − 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservedCoefficients {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

/// One draw of the Gaussian sequence model `y_j = θ_j + (σ/√n) ξ_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceObservation {
    pub basis: Basis,
    pub n: u64,
    pub sigma: f64,
    pub values: ObservedCoefficients,
    /// `y_0 = σ n^{−1/2} ξ_0` on the trigonometric basis (θ_0 = 0); zero otherwise.
    #[serde(default)]
    pub zero_mode: f64,
}

impl SequenceObservation {
    /// A zeroed observation buffer with truncation `J`.
    pub fn empty(basis: Basis, n: u64, sigma: f64, truncation: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "sample size must be >= 1"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(
                "sigma",
                format!("noise scale must be positive, got {sigma}"),
            ));
        }
        let values = if basis.is_complex() {
            ObservedCoefficients::Complex(vec![Complex64::new(0.0, 0.0); truncation])
        } else {
            ObservedCoefficients::Real(vec![0.0; truncation])
        };
        Ok(Self {
            basis,
            n,
            sigma,
            values,
            zero_mode: 0.0,
        })
    }

    /// Largest simulated index J.
    pub fn truncation(&self) -> usize {
        match &self.values {
            ObservedCoefficients::Real(v) => v.len(),
            ObservedCoefficients::Complex(v) => v.len(),
        }
    }

    /// Noise level σ/√n.
    pub fn noise_scale(&self) -> f64 {
        self.sigma / (self.n as f64).sqrt()
    }

    /// Σ_j w_j |y_j|² over the stored half, for weights indexed like the values.
    pub fn weighted_energy(&self, weights: &[f64]) -> f64 {
        match &self.values {
            ObservedCoefficients::Real(v) => v.iter().zip(weights).map(|(y, w)| w * y * y).sum(),
            ObservedCoefficients::Complex(v) => {
                v.iter().zip(weights).map(|(y, w)| w * y.norm_sqr()).sum()
            }
        }
    }

    /// Redraws the observation in place for signal `theta`.
    ///
    /// Noise is drawn for `j = 1..=J` in order (real part then imaginary part
    /// on the trigonometric basis, then `ξ_0`), so a stream determines the
    /// draw exactly.
    pub fn resample(&mut self, theta: &CoefficientVector, rng: &mut LabRng) -> Result<()> {
        if theta.basis() != self.basis {
            return Err(LabError::Mismatch(format!(
                "signal basis {:?} vs observation basis {:?}",
                theta.basis(),
                self.basis
            )));
        }
        if theta.max_index() > self.truncation() {
            return Err(invalid(
                "J",
                format!(
                    "truncation {} is below the signal support {}",
                    self.truncation(),
                    theta.max_index()
                ),
            ));
        }
        let scale = self.noise_scale();
        match &mut self.values {
            ObservedCoefficients::Real(v) => {
                for y in v.iter_mut() {
                    let xi: f64 = rng.sample(StandardNormal);
                    *y = scale * xi;
                }
                for (j, c) in theta.iter() {
                    v[j - 1] += c.re;
                }
            }
            ObservedCoefficients::Complex(v) => {
                let s = scale * std::f64::consts::FRAC_1_SQRT_2;
                for y in v.iter_mut() {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *y = Complex64::new(s * re, s * im);
                }
                for (j, c) in theta.iter() {
                    v[j - 1] += c;
                }
                let xi0: f64 = rng.sample(StandardNormal);
                self.zero_mode = scale * xi0;
            }
        }
        Ok(())
    }

    /// The noiseless observation `y_j = θ_j`.
    pub fn noiseless(
        theta: &CoefficientVector,
        n: u64,
        sigma: f64,
        truncation: usize,
    ) -> Result<Self> {
        let mut obs = Self::empty(theta.basis(), n, sigma, truncation)?;
        if theta.max_index() > truncation {
            return Err(invalid("J", "truncation below signal support"));
        }
        match &mut obs.values {
            ObservedCoefficients::Real(v) => theta.iter().for_each(|(j, c)| v[j - 1] = c.re),
            ObservedCoefficients::Complex(v) => theta.iter().for_each(|(j, c)| v[j - 1] = c),
        }
        Ok(obs)
    }

    /// Multiplies every observed coefficient by `t`.
    pub fn scale_values(&mut self, t: f64) {
        match &mut self.values {
            ObservedCoefficients::Real(v) => v.iter_mut().for_each(|y| *y *= t),
            ObservedCoefficients::Complex(v) => v.iter_mut().for_each(|y| *y *= t),
        }
        self.zero_mode *= t;
    }
}

/// Draws `y_j = θ_j + (σ/√n) ξ_j` for `1 ≤ j ≤ J`, deterministic in `seed`.
pub fn sample_sequence_observation(
    theta: &CoefficientVector,
    n: u64,
    sigma: f64,
    truncation: usize,
    seed: u64,
) -> Result<SequenceObservation> {
    let mut obs = SequenceObservation::empty(theta.basis(), n, sigma, truncation)?;
    let mut rng = call_rng(seed, "sample_sequence_observation");
    obs.resample(theta, &mut rng)?;
    Ok(obs)
}

/// Grid used to certify density positivity.
pub const DENSITY_GRID: usize = 1 << 14;
/// Grid values below this are treated as proof of a negative density.
const NEGATIVITY_TOL: f64 = 1e-12;

/// A density `1 + f` on (0, 1) with `f` given by its Fourier coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub theta: CoefficientVector,
    /// Lower bound on `1 + f` over [0, 1]: grid minimum minus a Lipschitz slack.
    pub min_density: f64,
    /// Minimum of `1 + f` over the certification grid.
    pub grid_min: f64,
    /// Rejection envelope height, at least `1 + sup|f|`.
    pub envelope: f64,
}

impl DensitySpec {
    /// Accepts `theta` unless some grid value of `1 + f` is negative.
    ///
    /// A lower bound that dips below zero only through the slack term (a density
    /// touching zero) is accepted: the sampler stays valid in that case.
    pub fn new(theta: CoefficientVector) -> Result<Self> {
        if theta.basis() == Basis::GenericOrthonormal {
            return Err(invalid(
                "basis",
                "densities need the trigonometric or cosine basis",
            ));
        }
        let mut grid_min = f64::INFINITY;
        let mut at = 0.0;
        for i in 0..=DENSITY_GRID {
            let x = i as f64 / DENSITY_GRID as f64;
            let p = 1.0 + theta.evaluate(x)?;
            if p < grid_min {
                grid_min = p;
                at = x;
            }
        }
        if grid_min < -NEGATIVITY_TOL {
            return Err(LabError::NegativeDensity { min: grid_min, at });
        }
        let slack = theta.lipschitz_bound() * 0.5 / DENSITY_GRID as f64;
        Ok(Self {
            envelope: 1.0 + theta.sup_bound(),
            min_density: grid_min - slack,
            grid_min,
            theta,
        })
    }

    pub fn uniform(basis: Basis) -> Self {
        Self {
            theta: CoefficientVector::zero(basis),
            min_density: 1.0,
            grid_min: 1.0,
            envelope: 1.0,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        // evaluate only fails on the generic basis, excluded at construction
        1.0 + self.theta.evaluate(x).unwrap_or(0.0)
    }

    /// Appends `n` draws to `out` by rejection against the uniform envelope.
    pub fn sample_into(&self, n: usize, rng: &mut LabRng, out: &mut Vec<f64>) {
        out.reserve(n);
        if self.theta.is_zero() {
            for _ in 0..n {
                out.push(open_unit(rng));
            }
            return;
        }
        let target = out.len() + n;
        while out.len() < target {
            let x = open_unit(rng);
            let u: f64 = rng.random();
            if u * self.envelope < self.pdf(x) {
                out.push(x);
            }
        }
    }
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub fn open_unit(rng: &mut LabRng) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    }
}

/// `n` i.i.d. draws from the density `1 + f`, deterministic in `seed`.
pub fn sample_density_iid(density: &DensitySpec, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = call_rng(seed, "sample_density_iid");
    let mut out = Vec::with_capacity(n);
    density.sample_into(n, &mut rng, &mut out);
    out
}

/// Shape of an alternative family, relative to the frequency scale `k_n`
/// of the test family it is aimed at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum FamilyShape {
    /// Equal magnitudes on `1 ≤ j ≤ width`.
    AllLow { width: usize },
    /// All mass at `j = max(1, round(fraction·k_n))`.
    Boundary { fraction: f64 },
    /// All mass at `j = ceil(multiple·k_n)`.
    Escaping { multiple: f64 },
    /// All mass at `j = n²`.
    EscapingSquare,
    /// `escape_share` of the squared mass at `ceil(multiple·k_n)`, the rest
    /// spread equally over `1 ≤ j ≤ width`.
    Mixed {
        width: usize,
        multiple: f64,
        escape_share: f64,
    },
    /// Like `Mixed`, with the escaping share at `j = n²`.
    MixedSquare { width: usize, escape_share: f64 },
    /// `θ_j ∝ j^{−exponent}` for `1 ≤ j ≤ max_index`.
    PowerLaw { exponent: f64, max_index: usize },
    /// All mass at a fixed index.
    Single { index: usize },
}

/// Rule `n ↦ θ(n)` with `‖θ(n)‖ = amplitude · n^{−r}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativeFamily {
    pub basis: Basis,
    pub rate: f64,
    pub amplitude: f64,
    pub shape: FamilyShape,
    /// Declared `(c, C)` with `c n^{−r} ≤ ‖θ(n)‖ ≤ C n^{−r}`.
    pub bounds: (f64, f64),
}

impl AlternativeFamily {
    pub fn new(basis: Basis, rate: f64, amplitude: f64, shape: FamilyShape) -> Result<Self> {
        if !(rate > 0.0 && rate < 0.5) {
            return Err(invalid("rate", format!("must lie in (0, 1/2), got {rate}")));
        }
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(invalid("amplitude", "must be finite and nonnegative"));
        }
        Ok(Self {
            basis,
            rate,
            amplitude,
            shape,
            bounds: (amplitude * 0.999, amplitude * 1.001),
        })
    }

    fn profile(&self, n: u64, k_n: usize) -> Vec<(usize, f64)> {
        let k = k_n.max(1) as f64;
        match &self.shape {
            FamilyShape::AllLow { width } => (1..=(*width).max(1)).map(|j| (j, 1.0)).collect(),
            FamilyShape::Boundary { fraction } => {
                vec![(((fraction * k).round() as usize).max(1), 1.0)]
            }
            FamilyShape::Escaping { multiple } => {
                vec![(((multiple * k).ceil() as usize).max(1), 1.0)]
            }
            FamilyShape::EscapingSquare => {
                vec![((n as usize).saturating_mul(n as usize).max(1), 1.0)]
            }
            FamilyShape::Mixed {
                width,
                multiple,
                escape_share,
            } => {
                let width = (*width).max(1);
                let low = ((1.0 - escape_share) / width as f64).sqrt();
                let mut v: Vec<(usize, f64)> = (1..=width).map(|j| (j, low)).collect();
                let far = ((multiple * k).ceil() as usize).max(width + 1);
                v.push((far, escape_share.sqrt()));
                v
            }
            FamilyShape::MixedSquare {
                width,
                escape_share,
            } => {
                let width = (*width).max(1);
                let low = ((1.0 - escape_share) / width as f64).sqrt();
                let mut v: Vec<(usize, f64)> = (1..=width).map(|j| (j, low)).collect();
                let far = (n as usize).saturating_mul(n as usize).max(width + 1);
                v.push((far, escape_share.sqrt()));
                v
            }
            FamilyShape::PowerLaw {
                exponent,
                max_index,
            } => (1..=(*max_index).max(1))
                .map(|j| (j, (j as f64).powf(-exponent)))
                .collect(),
            FamilyShape::Single { index } => vec![((*index).max(1), 1.0)],
        }
    }

    /// θ(n) for a test family with frequency scale `k_n`.
    pub fn generate(&self, n: u64, k_n: usize) -> Result<CoefficientVector> {
        let profile = self.profile(n, k_n);
        let raw = self.basis.multiplicity() * profile.iter().map(|(_, v)| v * v).sum::<f64>();
        let target = self.amplitude * (n as f64).powf(-self.rate);
        let scale = if raw > 0.0 { target / raw.sqrt() } else { 0.0 };
        CoefficientVector::from_real(self.basis, profile.into_iter().map(|(j, v)| (j, v * scale)))
    }

    /// θ(n), checking the declared norm bounds.
    pub fn generate_checked(&self, n: u64, k_n: usize) -> Result<CoefficientVector> {
        let theta = self.generate(n, k_n)?;
        let ratio = parseval_norm(&theta) * (n as f64).powf(self.rate);
        if ratio < self.bounds.0 || ratio > self.bounds.1 {
            return Err(invalid(
                "bounds",
                format!(
                    "n = {n}: ‖θ‖·n^r = {ratio:.6} outside declared [{}, {}]",
                    self.bounds.0, self.bounds.1
                ),
            ));
        }
        Ok(theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;
    use crate::rng::StreamKey;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_trig(seed: u64, degree: usize, amp: f64) -> CoefficientVector {
        let mut rng = call_rng(seed, "test-poly");
        CoefficientVector::trig((1..=degree).map(|j| {
            let re: f64 = rng.random::<f64>() - 0.5;
            let im: f64 = rng.random::<f64>() - 0.5;
            (j, Complex64::new(re, im) * amp)
        }))
        .unwrap()
    }

    #[test]
    fn parseval_basic_cases() {
        assert_eq!(
            parseval_norm(&CoefficientVector::zero(Basis::CosineHalf)),
            0.0
        );
        let v = CoefficientVector::from_real(Basis::CosineHalf, [(3, 2.0)]).unwrap();
        assert_eq!(parseval_norm(&v), 2.0);
    }

    #[test]
    fn parseval_matches_quadrature() {
        let gl = GaussLegendre::new(16);
        for seed in 0..5 {
            let f = random_trig(seed, 8, 1.0);
            let q = gl.integrate(0.0, 1.0, 64, |x| f.evaluate(x).unwrap().powi(2));
            assert!((parseval_norm(&f).powi(2) - q).abs() < 1e-10, "seed {seed}");
        }
        // degree 64 on the cosine basis
        let mut rng = call_rng(11, "cos-poly");
        let f = CoefficientVector::from_real(
            Basis::CosineHalf,
            (1..=64).map(|j| (j, rng.random::<f64>() - 0.5)),
        )
        .unwrap();
        let q = gl.integrate(0.0, 1.0, 256, |x| f.evaluate(x).unwrap().powi(2));
        assert!((f.norm_sq() - q).abs() < 1e-8);
    }

    #[test]
    fn trig_evaluation_is_real() {
        let f = random_trig(3, 20, 1.0);
        for i in 0..1000 {
            let x = i as f64 / 1000.0;
            let z = f.evaluate_two_sided(x);
            assert!(z.im.abs() < 1e-12);
            assert!((z.re - f.evaluate(x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_coefficients() {
        let mut v = CoefficientVector::zero(Basis::CosineHalf);
        assert!(v.set(0, Complex64::new(1.0, 0.0)).is_err());
        assert!(v.set(2, Complex64::new(1.0, 0.5)).is_err());
        assert!(v.set(2, Complex64::new(f64::NAN, 0.0)).is_err());
        assert!(v.evaluate(0.3).is_ok());
        let g = CoefficientVector::from_real(Basis::GenericOrthonormal, [(1, 1.0)]).unwrap();
        assert!(g.evaluate(0.3).is_err());
    }

    #[test]
    fn observation_rejects_bad_inputs() {
        let theta = CoefficientVector::from_real(Basis::CosineHalf, [(5, 1.0)]).unwrap();
        assert!(sample_sequence_observation(&theta, 10, 1.0, 4, 1).is_err());
        assert!(sample_sequence_observation(&theta, 10, 0.0, 8, 1).is_err());
        assert!(sample_sequence_observation(&theta, 10, -1.0, 8, 1).is_err());
        assert!(sample_sequence_observation(&theta, 0, 1.0, 8, 1).is_err());
    }

    #[test]
    fn observation_is_reproducible() {
        let theta = random_trig(1, 5, 0.1);
        let a = sample_sequence_observation(&theta, 50, 1.3, 32, 99).unwrap();
        let b = sample_sequence_observation(&theta, 50, 1.3, 32, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_sequence_observation(&theta, 50, 1.3, 32, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn observation_null_moments() {
        // σ = 1, n = 4: Var[y_j] = 0.25; mean 0.
        let theta = CoefficientVector::zero(Basis::CosineHalf);
        let reps = 100_000;
        let key = StreamKey::named(5, "null-moments");
        let mut obs = SequenceObservation::empty(Basis::CosineHalf, 4, 1.0, 2).unwrap();
        let (mut s, mut s2) = (0.0, 0.0);
        for r in 0..reps {
            obs.resample(&theta, &mut key.rng(r)).unwrap();
            if let ObservedCoefficients::Real(v) = &obs.values {
                s += v[1];
                s2 += v[1] * v[1];
            }
        }
        let mean = s / reps as f64;
        let var = s2 / reps as f64 - mean * mean;
        assert!(mean.abs() < 3.0 * 0.5 / (reps as f64).sqrt());
        // SE of the sample variance of a normal: σ²√(2/reps)
        assert!(
            (var - 0.25).abs() < 3.0 * 0.25 * (2.0 / reps as f64).sqrt(),
            "var {var}"
        );
    }

    #[test]
    fn observation_mean_tracks_signal() {
        let theta = CoefficientVector::from_real(Basis::CosineHalf, [(1, 0.3)]).unwrap();
        let reps = 100_000u64;
        let mut s = 0.0;
        for seed in 0..reps {
            let obs = sample_sequence_observation(&theta, 100, 1.0, 1, seed).unwrap();
            if let ObservedCoefficients::Real(v) = &obs.values {
                s += v[0];
            }
        }
        let mean = s / reps as f64;
        assert!(
            (mean - 0.3).abs() < 3.0 * 0.1 / (reps as f64).sqrt(),
            "mean {mean}"
        );
    }

    #[test]
    fn complex_noise_has_unit_total_variance() {
        let theta = CoefficientVector::zero(Basis::TrigComplex);
        let key = StreamKey::named(6, "complex-var");
        let mut obs = SequenceObservation::empty(Basis::TrigComplex, 1, 1.0, 4).unwrap();
        let reps = 50_000;
        let mut s = 0.0;
        for r in 0..reps {
            obs.resample(&theta, &mut key.rng(r)).unwrap();
            if let ObservedCoefficients::Complex(v) = &obs.values {
                s += v[2].norm_sqr();
            }
        }
        let m = s / reps as f64;
        assert!((m - 1.0).abs() < 4.0 / (reps as f64).sqrt(), "E|y|² = {m}");
    }

    #[test]
    fn density_rejects_negative() {
        let theta = CoefficientVector::from_real(Basis::TrigComplex, [(1, 0.6)]).unwrap();
        assert!(matches!(
            DensitySpec::new(theta),
            Err(LabError::NegativeDensity { .. })
        ));
    }

    #[test]
    fn density_touching_zero_is_accepted() {
        // 1 + cos(2πx) vanishes at x = 1/2
        let theta = CoefficientVector::from_real(Basis::TrigComplex, [(1, 0.5)]).unwrap();
        let d = DensitySpec::new(theta).unwrap();
        assert!(d.grid_min.abs() < 1e-12);
        assert!(d.min_density <= d.grid_min);
        let xs = sample_density_iid(&d, 10_000, 3);
        assert_eq!(xs.len(), 10_000);
        assert!(xs.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn uniform_sample_kolmogorov_distance_shrinks() {
        let d = DensitySpec::uniform(Basis::TrigComplex);
        let ks = |n: usize| {
            let mut xs = sample_density_iid(&d, n, 17);
            xs.sort_by(f64::total_cmp);
            xs.iter()
                .enumerate()
                .map(|(i, &x)| {
                    (x - i as f64 / n as f64)
                        .abs()
                        .max(((i + 1) as f64 / n as f64 - x).abs())
                })
                .fold(0.0, f64::max)
        };
        let (d1, d2) = (ks(100), ks(100_000));
        assert!(d2 < d1 && d2 < 0.01, "{d1} {d2}");
    }

    #[test]
    fn cosine_moment_of_sampled_density() {
        // p = 1 + 0.5 cos(2πx); E[cos 2πX] = ∫cos(2πx)(1 + 0.5cos 2πx) dx
        let gl = GaussLegendre::new(16);
        let expected = gl.integrate(0.0, 1.0, 32, |x| {
            (2.0 * PI * x).cos() * (1.0 + 0.5 * (2.0 * PI * x).cos())
        });
        assert!((expected - 0.25).abs() < 1e-14);
        let theta = CoefficientVector::from_real(Basis::TrigComplex, [(1, 0.25)]).unwrap();
        let d = DensitySpec::new(theta).unwrap();
        let n = 1_000_000;
        let xs = sample_density_iid(&d, n, 8);
        let m = xs.iter().map(|x| (2.0 * PI * x).cos()).sum::<f64>() / n as f64;
        assert!((m - expected).abs() < 3.0 / (n as f64).sqrt(), "{m}");
    }

    #[test]
    fn sampler_passes_binned_chi_squared() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let theta =
            CoefficientVector::from_real(Basis::CosineHalf, [(1, 0.3), (3, -0.2), (8, 0.1)])
                .unwrap();
        let d = DensitySpec::new(theta).unwrap();
        let n = 1_000_000;
        let xs = sample_density_iid(&d, n, 21);
        let cells = 64;
        let mut counts = vec![0u64; cells];
        for x in xs {
            counts[((x * cells as f64) as usize).min(cells - 1)] += 1;
        }
        let gl = GaussLegendre::new(10);
        let stat: f64 = (0..cells)
            .map(|l| {
                let a = l as f64 / cells as f64;
                let p = gl.integrate(a, a + 1.0 / cells as f64, 2, |x| d.pdf(x));
                let e = p * n as f64;
                (counts[l] as f64 - e).powi(2) / e
            })
            .sum();
        let q = ChiSquared::new((cells - 1) as f64)
            .unwrap()
            .inverse_cdf(0.999);
        assert!(stat < q, "chi2 {stat} vs {q}");
    }

    #[test]
    fn family_norm_follows_rate() {
        let fam = AlternativeFamily::new(
            Basis::TrigComplex,
            0.25,
            2.0,
            FamilyShape::AllLow { width: 3 },
        )
        .unwrap();
        for n in [16u64, 256, 4096] {
            let t = fam.generate_checked(n, 10).unwrap();
            assert!((parseval_norm(&t) - 2.0 * (n as f64).powf(-0.25)).abs() < 1e-12);
        }
        let esc = AlternativeFamily::new(Basis::CosineHalf, 0.25, 1.0, FamilyShape::EscapingSquare)
            .unwrap();
        assert_eq!(esc.generate(100, 5).unwrap().max_index(), 10_000);
    }

    #[test]
    fn family_bounds_are_checked() {
        let mut fam = AlternativeFamily::new(
            Basis::CosineHalf,
            0.25,
            1.0,
            FamilyShape::Single { index: 2 },
        )
        .unwrap();
        fam.bounds = (1.5, 2.0);
        assert!(fam.generate_checked(64, 4).is_err());
        assert!(AlternativeFamily::new(
            Basis::CosineHalf,
            0.5,
            1.0,
            FamilyShape::Single { index: 1 }
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn norm_is_sum_of_squares(coefs in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..40)) {
            let v = CoefficientVector::trig(
                coefs.iter().enumerate().map(|(i, &(a, b))| (i + 1, Complex64::new(a, b)))).unwrap();
            let direct: f64 = 2.0 * coefs.iter().map(|(a, b)| a * a + b * b).sum::<f64>();
            prop_assert!((v.norm_sq() - direct).abs() <= 1e-12 * (1.0 + direct));
            let split = v.restrict_below(7).norm_sq() + v.restrict_from(7).norm_sq();
            prop_assert!((split - v.norm_sq()).abs() <= 1e-12 * (1.0 + direct));
        }
    }
}
