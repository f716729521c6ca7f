//! Critical values and exact min-p power for two standardized effects.

use sigwald::dist::{bisect, bivariate_normal_cdf};
use sigwald::intersection::{sw_two_p_analytic, RHO_LIMIT};
use sigwald::{Error, Result};

fn check(rho: f64, alpha: f64) -> Result<()> {
    if !(rho.abs() < RHO_LIMIT) {
        return Err(Error::DegenerateCorrelation(rho));
    }
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidConfig(format!(
            "alpha {alpha} outside (0, 0.5]"
        )));
    }
    Ok(())
}

/// Upper `alpha` point of the equal-weights two-hypothesis null mixture,
/// in unweighted units.
pub fn critical_value_two(rho: f64, alpha: f64) -> Result<f64> {
    check(rho, alpha)?;
    let f = |x: f64| sw_two_p_analytic(x, rho).expect("checked rho") - alpha;
    bisect(1e-12, 400.0, 1e-13, f).ok_or(Error::NoConvergence {
        cycles: 0,
        displacement: f64::NAN,
    })
}

/// `c` with `P(max(X1, X2) >= c) = alpha` for standard normals with
/// correlation `rho`.
pub fn minp_critical_two(rho: f64, alpha: f64) -> Result<f64> {
    check(rho, alpha)?;
    let f = |c: f64| 1.0 - bivariate_normal_cdf(c, c, rho) - alpha;
    bisect(-10.0, 10.0, 1e-12, f).ok_or(Error::NoConvergence {
        cycles: 0,
        displacement: f64::NAN,
    })
}

/// Power of the joint min-p test at means `(m1, m2)`.
pub fn minp_power_two(m1: f64, m2: f64, rho: f64, c: f64) -> f64 {
    1.0 - bivariate_normal_cdf(c - m1, c - m2, rho)
}

/// `z_max` at which the joint min-p test has power `target` against the
/// alternative `(z_max, s * z_max)`.
pub fn shift_for_minp_power(rho: f64, s: f64, alpha: f64, target: f64) -> Result<f64> {
    let c = minp_critical_two(rho, alpha)?;
    if !(target > alpha && target < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "target power {target} outside (alpha, 1)"
        )));
    }
    let f = |m: f64| minp_power_two(m, s * m, rho, c) - target;
    bisect(0.0, 20.0, 1e-12, f).ok_or(Error::NoConvergence {
        cycles: 0,
        displacement: f64::NAN,
    })
}
