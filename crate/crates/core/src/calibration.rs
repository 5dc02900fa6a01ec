//! Parallel-spring force divider in front of each FSR.
//!
//! The stiff spring (`k1`) carries most of the load and the compliant spring
//! (`k2`) passes the fraction `k2 / (k1 + k2)` through to the sensor.

use serde::{Deserialize, Serialize};

use crate::error::{PhriError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeCalibration {
    /// Stiff spring constant, N/mm.
    pub k1: f64,
    /// Compliant spring constant, N/mm.
    pub k2: f64,
}

impl NodeCalibration {
    /// Springs fitted to the prototype nodes.
    pub const PROTOTYPE: NodeCalibration = NodeCalibration { k1: 3.78, k2: 0.37 };

    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        // k1 = 0 is accepted: it describes a node with the divider removed.
        if !(k1 >= 0.0 && k2 > 0.0 && k1.is_finite() && k2.is_finite()) {
            return Err(PhriError::InvalidConfig(format!(
                "spring constants must be positive (k1={k1}, k2={k2})"
            )));
        }
        Ok(Self { k1, k2 })
    }

    /// Actual-to-measured amplification `(k1 + k2) / k2`.
    pub fn gain(&self) -> f64 {
        (self.k1 + self.k2) / self.k2
    }
}

impl Default for NodeCalibration {
    fn default() -> Self {
        Self::PROTOTYPE
    }
}

/// Recovers the actual node force from an FSR reading.
pub fn fsr_calibrate(f_meas: f64, cal: &NodeCalibration) -> Result<f64> {
    if f_meas < 0.0 || f_meas.is_nan() {
        return Err(PhriError::NegativeForce(f_meas));
    }
    Ok(f_meas * (cal.k1 + cal.k2) / cal.k2)
}

/// Force the FSR sees when the node carries `f_actual`.
pub fn fsr_measure(f_actual: f64, cal: &NodeCalibration) -> Result<f64> {
    if f_actual < 0.0 || f_actual.is_nan() {
        return Err(PhriError::NegativeForce(f_actual));
    }
    Ok(f_actual * cal.k2 / (cal.k1 + cal.k2))
}
