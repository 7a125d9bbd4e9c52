//! Fixed constants used across the lab. The table is serialized into every
//! result bundle so a run records the values it used.

use serde::{Deserialize, Serialize};

/// Neglected tail mass allowed when a truncation is chosen automatically.
pub const TAIL_TOLERANCE: f64 = 1e-8;
/// Hard cap on automatically chosen truncations.
pub const MAX_TRUNCATION: usize = 1 << 22;
/// Max/min ratio accepted for quantities claimed to stay of order one.
pub const ASSUMPTION_BAND: f64 = 4.0;
/// Normalized low-frequency mass above which a family is consistent-trend.
pub const TAU_LOWER: f64 = 0.1;
/// Normalized mass below which a family is inconsistent-trend.
pub const TAU_ZERO: f64 = 0.01;
/// Composite Gauss–Legendre panels for kernel quadrature.
pub const QUADRATURE_PANELS: usize = 1 << 12;
/// Nodes per Gauss–Legendre panel.
pub const QUADRATURE_ORDER: usize = 8;
/// Wilson interval z.
pub const WILSON_Z: f64 = 1.96;
/// Kernel band: largest b with min |K̂| ≥ this level on [0, b].
pub const KERNEL_BAND_LEVEL: f64 = 0.1;
/// Draws used to calibrate a CvM critical value.
pub const CVM_CALIBRATION_DRAWS: usize = 1_000_000;
/// Bridge truncation used for CvM calibration.
pub const CVM_CALIBRATION_J: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefaultsTable {
    pub tail_tolerance: f64,
    pub max_truncation: usize,
    pub assumption_band: f64,
    pub tau_lower: f64,
    pub tau_zero: f64,
    pub quadrature_panels: usize,
    pub quadrature_order: usize,
    pub wilson_z: f64,
    pub kernel_band_level: f64,
    pub cvm_calibration_draws: usize,
    pub cvm_calibration_j: usize,
}

impl Default for DefaultsTable {
    fn default() -> Self {
        Self {
            tail_tolerance: TAIL_TOLERANCE,
            max_truncation: MAX_TRUNCATION,
            assumption_band: ASSUMPTION_BAND,
            tau_lower: TAU_LOWER,
            tau_zero: TAU_ZERO,
            quadrature_panels: QUADRATURE_PANELS,
            quadrature_order: QUADRATURE_ORDER,
            wilson_z: WILSON_Z,
            kernel_band_level: KERNEL_BAND_LEVEL,
            cvm_calibration_draws: CVM_CALIBRATION_DRAWS,
            cvm_calibration_j: CVM_CALIBRATION_J,
        }
    }
}
