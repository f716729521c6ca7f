//! Scalar distribution helpers.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// Upper tail `1 - Phi(x)`, accurate far into the tail.
pub fn normal_sf(x: f64) -> f64 {
    std_normal().sf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `P(chi2_1 >= x)`.
pub fn chi2_1_sf(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        erfc((x / 2.0).sqrt())
    }
}

/// `P(chi2_2 >= x)`.
pub fn chi2_2_sf(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        (-x / 2.0).exp()
    }
}

// 8-point Gauss-Legendre on [-1, 1]
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `P(X1 <= a, X2 <= b)` for a standard bivariate normal with correlation
/// `rho`, by quadrature of `phi(x) * Phi((b - rho x) / sqrt(1 - rho^2))`.
pub fn bivariate_normal_cdf(a: f64, b: f64, rho: f64) -> f64 {
    if rho.abs() >= 1.0 {
        return if rho > 0.0 {
            normal_cdf(a.min(b))
        } else {
            (normal_cdf(a) + normal_cdf(b) - 1.0).max(0.0)
        };
    }
    let lo = -12.0;
    let hi = a.min(12.0);
    if hi <= lo {
        return 0.0;
    }
    let s = (1.0 - rho * rho).sqrt();
    let panels = 128;
    let h = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = lo + (k as f64 + 0.5) * h;
        for (node, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
            let x = mid + 0.5 * h * node;
            total += w * normal_pdf(x) * normal_cdf((b - rho * x) / s);
        }
    }
    (0.5 * h * total).clamp(0.0, 1.0)
}

/// Bisection for a root of `f` on `[lo, hi]`; `f(lo)` and `f(hi)` must
/// bracket zero.
pub fn bisect(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo) < tol {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi2_tails() {
        // P(chi2_1 >= 3.841459) = 0.05
        assert!((chi2_1_sf(3.841_458_820_694_124) - 0.05).abs() < 1e-10);
        assert!((chi2_2_sf(2.0 * 20f64.ln()) - 0.05).abs() < 1e-14);
        assert_eq!(chi2_1_sf(0.0), 1.0);
    }

    #[test]
    fn bvn_independent_and_known_values() {
        for &(a, b) in &[(0.0, 0.0), (1.0, -0.5), (2.3, 1.7)] {
            let got = bivariate_normal_cdf(a, b, 0.0);
            assert!((got - normal_cdf(a) * normal_cdf(b)).abs() < 1e-10);
        }
        // orthant probability 1/4 + asin(rho) / (2 pi)
        for &rho in &[-0.75, -0.3, 0.5, 0.9] {
            let got = bivariate_normal_cdf(0.0, 0.0, rho);
            let expected = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
            assert!(
                (got - expected).abs() < 1e-10,
                "rho={rho}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect(0.0, 3.0, 1e-14, |x| x * x - 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect(0.0, 1.0, 1e-12, |x| x + 1.0).is_none());
    }
}
