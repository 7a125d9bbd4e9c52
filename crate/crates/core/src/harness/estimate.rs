use serde::{Deserialize, Serialize};

use crate::defaults::WILSON_Z;

/// Monte Carlo estimate of a rejection probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub rejections: u64,
    pub reps: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub runtime_ms: u64,
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // clamp keeps ci_low ≤ p ≤ ci_high under rounding at p = 0 or 1
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

impl PowerEstimate {
    pub fn new(rejections: u64, reps: u64, seed: u64, runtime_ms: u64) -> Self {
        let (ci_low, ci_high) = wilson(rejections, reps, WILSON_Z);
        Self {
            rejections,
            reps,
            estimate: if reps == 0 {
                0.0
            } else {
                rejections as f64 / reps as f64
            },
            ci_low,
            ci_high,
            seed,
            runtime_ms,
        }
    }

    /// Type II error view: (1 − p̂, 1 − ci_high, 1 − ci_low).
    pub fn type_ii(&self) -> (f64, f64, f64) {
        (1.0 - self.estimate, 1.0 - self.ci_high, 1.0 - self.ci_low)
    }

    pub fn covers(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}
