//! Bahadur slopes of the two-hypothesis signed Wald and min-p tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intersection::{signed_wald_two_z, RHO_LIMIT};

/// Standardized population effects and their correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BahadurPoint {
    z_max: f64,
    z_min: f64,
    rho: f64,
}

impl BahadurPoint {
    /// Orders the two effects; rejects `|rho| >= 1`.
    pub fn new(z1: f64, z2: f64, rho: f64) -> Result<Self> {
        if !(rho.abs() < RHO_LIMIT) {
            return Err(Error::DegenerateCorrelation(rho));
        }
        if !(z1.is_finite() && z2.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let (z_max, z_min) = if z1 >= z2 { (z1, z2) } else { (z2, z1) };
        Ok(Self { z_max, z_min, rho })
    }

    /// Point with `z_min = s * z_max`.
    pub fn from_ratio(z_max: f64, s: f64, rho: f64) -> Result<Self> {
        Self::new(z_max, s * z_max, rho)
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

pub fn slope_sw(pt: &BahadurPoint) -> f64 {
    signed_wald_two_z(pt.z_max, pt.z_min, pt.rho)
}

pub fn slope_minp(pt: &BahadurPoint) -> f64 {
    if pt.z_max >= 0.0 {
        pt.z_max * pt.z_max
    } else {
        0.0
    }
}

/// `slope_sw / slope_minp`, evaluated on the ratio `s = z_min / z_max` so that
/// the branch values `1` and `2 / (1 + rho)` come out exactly.
pub fn efficiency_ratio(pt: &BahadurPoint) -> Result<f64> {
    if pt.z_max <= 0.0 {
        return Err(Error::NullAlternative(pt.z_max));
    }
    let s = pt.z_min / pt.z_max;
    let rho = pt.rho;
    if s <= rho {
        return Ok(1.0);
    }
    Ok(((1.0 - s) * (1.0 - s) / (1.0 - rho) + 2.0 * s) / (1.0 + rho))
}
