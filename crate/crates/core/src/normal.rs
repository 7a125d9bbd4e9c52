//! Standard normal distribution function and its upper quantile.

use statrs::function::erf::erfc;

use crate::error::{invalid, Result};

/// Φ(x), the standard normal distribution function.
///
/// Evaluated through erfc on whichever side keeps the result away from
/// cancellation, so that Φ(−x) = 1 − Φ(x) holds to representation.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let t = x / std::f64::consts::SQRT_2;
    if x < 0.0 {
        0.5 * erfc(-t)
    } else {
        1.0 - 0.5 * erfc(t)
    }
}

/// Upper α-quantile x_α, i.e. the root of α = 1 − Φ(x_α), found by bisection.
pub fn upper_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    // 1 - Φ is decreasing; keep 1 - Φ(lo) > α >= 1 - Φ(hi).
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if 1.0 - std_normal_cdf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_and_symmetry() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        for &x in &[0.1, 0.7, 1.3, 2.9, 5.5, 8.0] {
            let s = std_normal_cdf(x) + std_normal_cdf(-x);
            assert!((s - 1.0).abs() < 1e-15, "x={x} s={s}");
        }
    }

    #[test]
    fn quantile_rejects_bad_alpha() {
        assert!(upper_quantile(0.0).is_err());
        assert!(upper_quantile(1.0).is_err());
        assert!(upper_quantile(f64::NAN).is_err());
    }

    #[test]
    fn quantile_known_values() {
        assert!((upper_quantile(0.5).unwrap()).abs() < 1e-12);
        assert!((upper_quantile(0.05).unwrap() - 1.644_853_626_951_472_2).abs() < 1e-9);
        assert!((upper_quantile(0.025).unwrap() - 1.959_963_984_540_054).abs() < 1e-9);
    }
}
