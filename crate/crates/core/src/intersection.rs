//! Intersection tests for one-sided nulls `H_j: theta_j <= delta_j`.
//!
//! The weighted signed Wald statistic is the squared distance from
//! `u_hat = V^{-1/2} W (theta_hat - delta)` to the cone `{V^{1/2} u <= 0}`,
//! where `V` is the covariance of the estimates and `W = diag(w)`. Its null
//! law is that of the distance from `U ~ N(0, V^{-1/2} W V W V^{-1/2})` to
//! the same cone.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::{dykstra_project, ConeSpec, DykstraConfig};
use crate::dist::{chi2_1_sf, chi2_2_sf, normal_sf};
use crate::error::{Error, Result};
use crate::estimands::EstimateSet;
use crate::linalg::{correlation, sym_inv_sqrt, sym_sqrt, SymMatrix};
use crate::rng::substream;

/// Correlations this close to +/-1 are rejected by the two-hypothesis paths.
pub const RHO_LIMIT: f64 = 1.0 - 1e-10;

/// Margins, weights and level for an intersection of one-sided nulls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSpec {
    deltas: Vec<f64>,
    /// Normalized to sum to one.
    weights: Vec<f64>,
    alpha: f64,
}

impl HypothesisSpec {
    pub fn new(deltas: Vec<f64>, weights: Vec<f64>, alpha: f64) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidHypothesis(m.to_string()));
        if deltas.is_empty() {
            return bad("no hypotheses");
        }
        if deltas.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: deltas.len(),
                got: weights.len(),
            });
        }
        if deltas.iter().any(|d| !d.is_finite()) {
            return bad("margins must be finite");
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return bad("weights must be positive");
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self {
            deltas,
            weights,
            alpha,
        })
    }

    pub fn equal_weights(deltas: Vec<f64>, alpha: f64) -> Result<Self> {
        let j = deltas.len();
        Self::new(deltas, vec![1.0; j], alpha)
    }

    /// `theta_j <= 0` for all `j`, equal weights.
    pub fn superiority(dim: usize, alpha: f64) -> Result<Self> {
        Self::equal_weights(vec![0.0; dim], alpha)
    }

    pub fn dim(&self) -> usize {
        self.deltas.len()
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// How the Monte-Carlo exceedance count becomes a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueRule {
    /// `#{T_b >= t} / B`
    #[default]
    Exceedance,
    /// `(1 + #{T_b >= t}) / (1 + B)`, valid at any `B`.
    Conservative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub draws: usize,
    pub seed: u64,
    #[serde(default)]
    pub rule: PValueRule,
}

impl McConfig {
    pub const MIN_DRAWS: usize = 1000;

    pub fn new(draws: usize, seed: u64) -> Self {
        Self {
            draws,
            seed,
            rule: PValueRule::Exceedance,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.draws < Self::MIN_DRAWS {
            return Err(Error::TooFewDraws {
                min: Self::MIN_DRAWS,
                got: self.draws,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SwMc,
    SwTwoAnalytic,
    SwTwoMc,
    MinpJoint,
    MinpBonferroni,
    Marginal,
}

impl Method {
    pub fn is_monte_carlo(self) -> bool {
        matches!(self, Method::SwMc | Method::SwTwoMc | Method::MinpJoint)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_std_error: Option<f64>,
}

impl TestResult {
    fn exact(statistic: f64, p_value: f64, method: Method) -> Self {
        Self {
            statistic,
            p_value,
            method,
            mc: None,
            mc_std_error: None,
        }
    }
}

fn check_dims(est: &EstimateSet, spec: &HypothesisSpec) -> Result<()> {
    if est.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: est.dim(),
            got: spec.dim(),
        });
    }
    Ok(())
}

/// Standardized effects `(theta_hat_j - delta_j) / se_j`, with `se_j` the
/// standard error of the estimate (so `sqrt(n)` is included).
pub fn standardized_effects(est: &EstimateSet, deltas: &[f64]) -> Result<Vec<f64>> {
    if deltas.len() != est.dim() {
        return Err(Error::DimensionMismatch {
            expected: est.dim(),
            got: deltas.len(),
        });
    }
    let n = est.n() as f64;
    est.sigma_hat()
        .diagonal()
        .iter()
        .zip(est.theta_hat().iter().zip(deltas))
        .enumerate()
        .map(|(index, (&var, (&t, &d)))| {
            if var <= 0.0 {
                Err(Error::ZeroVariance { index })
            } else {
                Ok(n.sqrt() * (t - d) / var.sqrt())
            }
        })
        .collect()
}

/// One-sided p-value `1 - Phi(sqrt(n) (theta_hat_j - delta_j) / sqrt(Sigma_jj))`.
pub fn marginal_p(est: &EstimateSet, j: usize, delta_j: f64) -> Result<f64> {
    if j >= est.dim() {
        return Err(Error::DimensionMismatch {
            expected: est.dim(),
            got: j + 1,
        });
    }
    let var = est.sigma_hat().get(j, j);
    if var <= 0.0 {
        return Err(Error::ZeroVariance { index: j });
    }
    let z = (est.n() as f64).sqrt() * (est.theta_hat()[j] - delta_j) / var.sqrt();
    Ok(normal_sf(z))
}

/// Closed-form unweighted two-hypothesis statistic from standardized
/// effects `z1, z2` (already scaled by `sqrt(n)`) and their correlation.
///
/// Branches are split at `z_min = rho * z_max`, where both expressions agree.
pub fn signed_wald_two_z(z1: f64, z2: f64, rho: f64) -> f64 {
    let (zmax, zmin) = if z1 >= z2 { (z1, z2) } else { (z2, z1) };
    if zmax < 0.0 {
        0.0
    } else if zmin <= rho * zmax {
        zmax * zmax
    } else {
        ((zmax - zmin).powi(2) + 2.0 * (1.0 - rho) * zmin * zmax) / (1.0 - rho * rho)
    }
}

/// Unweighted signed Wald statistic for `H_j1 and H_j2` in closed form.
pub fn signed_wald_two(est: &EstimateSet, deltas: &[f64], j1: usize, j2: usize) -> Result<f64> {
    let z = standardized_effects(est, deltas)?;
    if j1 >= z.len() || j2 >= z.len() || j1 == j2 {
        return Err(Error::InvalidHypothesis(format!(
            "bad index pair ({j1}, {j2})"
        )));
    }
    let rho = correlation(&est.sigma_hat().submatrix(&[j1, j2]))?.get(0, 1);
    if rho.abs() >= RHO_LIMIT {
        return Err(Error::DegenerateCorrelation(rho));
    }
    Ok(signed_wald_two_z(z[j1], z[j2], rho))
}

/// A prepared weighted signed Wald problem: the transformed estimate, the
/// cone and a factor of the null covariance.
#[derive(Debug, Clone)]
pub struct SignedWald {
    u_hat: Vec<f64>,
    cone: ConeSpec,
    null_factor: DMatrix<f64>,
    dykstra: DykstraConfig,
}

impl SignedWald {
    pub fn new(est: &EstimateSet, spec: &HypothesisSpec) -> Result<Self> {
        check_dims(est, spec)?;
        let v = est.per_estimate_cov();
        let inv_root = sym_inv_sqrt(&v)?;
        let w = DMatrix::from_diagonal(&DVector::from_column_slice(spec.weights()));
        let diff = DVector::from_iterator(
            est.dim(),
            est.theta_hat()
                .iter()
                .zip(spec.deltas())
                .map(|(t, d)| t - d),
        );
        let s = inv_root.as_matrix();
        let u_hat = s * &w * diff;
        let cone = ConeSpec::new(&sym_sqrt(&v)?.to_rows())?;
        let null_cov = SymMatrix::new(s * &w * v.as_matrix() * &w * s)?;
        let null_factor = match null_cov.cholesky() {
            Ok(l) => l,
            Err(_) => sym_sqrt(&null_cov)?.into_inner(),
        };
        Ok(Self {
            u_hat: u_hat.iter().copied().collect(),
            cone,
            null_factor,
            dykstra: DykstraConfig::default(),
        })
    }

    pub fn with_dykstra(mut self, cfg: DykstraConfig) -> Self {
        self.dykstra = cfg;
        self
    }

    pub fn u_hat(&self) -> &[f64] {
        &self.u_hat
    }

    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    pub fn dim(&self) -> usize {
        self.u_hat.len()
    }

    /// Weighted statistic (distance in the weighted metric).
    pub fn statistic(&self) -> Result<f64> {
        Ok(dykstra_project(&self.u_hat, &self.cone, self.dykstra)?.sq_distance)
    }

    /// Realization `b` of the limiting null statistic, drawn from substream `b`.
    fn null_draw(&self, seed: u64, b: u64) -> Result<f64> {
        let mut rng = substream(seed, b);
        let j = self.dim();
        let z = DVector::from_iterator(j, (0..j).map(|_| StandardNormal.sample(&mut rng)));
        let u = &self.null_factor * z;
        Ok(dykstra_project(u.as_slice(), &self.cone, self.dykstra)?.sq_distance)
    }

    /// `mc.draws` realizations of the limiting null statistic. Draw `b` uses
    /// substream `b` of `mc.seed`, so the output does not depend on the
    /// number of threads.
    pub fn null_sample(&self, mc: &McConfig) -> Result<Vec<f64>> {
        (0..mc.draws as u64)
            .into_par_iter()
            .map(|b| self.null_draw(mc.seed, b))
            .collect()
    }

    pub fn test(&self, mc: &McConfig) -> Result<TestResult> {
        mc.validate()?;
        let statistic = self.statistic()?;
        let sample = self.null_sample(mc)?;
        let (p_value, se) = sw_p_value_with(statistic, &sample, mc.rule)?;
        Ok(TestResult {
            statistic,
            p_value,
            method: if self.dim() == 2 {
                Method::SwTwoMc
            } else {
                Method::SwMc
            },
            mc: Some(*mc),
            mc_std_error: Some(se),
        })
    }
}

/// Weighted signed Wald statistic via Dykstra projection.
pub fn signed_wald_general(est: &EstimateSet, spec: &HypothesisSpec) -> Result<f64> {
    SignedWald::new(est, spec)?.statistic()
}

pub fn null_sample_sw(est: &EstimateSet, spec: &HypothesisSpec, mc: &McConfig) -> Result<Vec<f64>> {
    SignedWald::new(est, spec)?.null_sample(mc)
}

/// Exceedance p-value `#{T_b >= t} / B` and its Monte-Carlo standard error.
pub fn sw_p_value(statistic: f64, null_sample: &[f64]) -> Result<(f64, f64)> {
    sw_p_value_with(statistic, null_sample, PValueRule::Exceedance)
}

pub fn sw_p_value_with(
    statistic: f64,
    null_sample: &[f64],
    rule: PValueRule,
) -> Result<(f64, f64)> {
    if null_sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let b = null_sample.len() as f64;
    let count = null_sample.iter().filter(|&&t| t >= statistic).count() as f64;
    let p = match rule {
        PValueRule::Exceedance => count / b,
        PValueRule::Conservative => (1.0 + count) / (1.0 + b),
    };
    Ok((p, (p * (1.0 - p) / b).sqrt()))
}

/// Weighted signed Wald test with a Monte-Carlo p-value. A single hypothesis
/// reduces to the one-sided marginal test: the statistic is
/// `max(0, z)^2` and the p-value is `1 - Phi(z)`.
pub fn sw_test(est: &EstimateSet, spec: &HypothesisSpec, mc: &McConfig) -> Result<TestResult> {
    check_dims(est, spec)?;
    if est.dim() == 1 {
        let z = standardized_effects(est, spec.deltas())?[0];
        let p = marginal_p(est, 0, spec.deltas()[0])?;
        return Ok(TestResult::exact(z.max(0.0).powi(2), p, Method::Marginal));
    }
    SignedWald::new(est, spec)?.test(mc)
}

/// Probability of the polar region for the equal-weights two-hypothesis
/// cone: its opening angle `acos(rho)` over `2 pi`.
pub fn polar_probability(rho: f64) -> f64 {
    rho.clamp(-1.0, 1.0).acos() / (2.0 * std::f64::consts::PI)
}

/// Null tail `P(SW >= x)` of the unweighted two-hypothesis statistic:
/// `1/2 P(chi2_1 >= x) + acos(rho)/(2 pi) P(chi2_2 >= x)` for `x > 0`.
pub fn sw_two_p_analytic(statistic: f64, rho: f64) -> Result<f64> {
    if !(rho.abs() < RHO_LIMIT) {
        return Err(Error::DegenerateCorrelation(rho));
    }
    if statistic <= 0.0 {
        return Ok(1.0);
    }
    Ok(0.5 * chi2_1_sf(statistic) + polar_probability(rho) * chi2_2_sf(statistic))
}

/// Equal-weights two-hypothesis test with the analytic null mixture.
pub fn sw_two_test_analytic(est: &EstimateSet, deltas: &[f64]) -> Result<TestResult> {
    if est.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: est.dim(),
        });
    }
    let statistic = signed_wald_two(est, deltas, 0, 1)?;
    let rho = correlation(est.sigma_hat())?.get(0, 1);
    let p = sw_two_p_analytic(statistic, rho)?;
    Ok(TestResult::exact(statistic, p, Method::SwTwoAnalytic))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinpMode {
    /// Joint normal null of the standardized effects, by Monte Carlo.
    Joint,
    /// `min(1, J * min_j p_j)`.
    Bonferroni,
}

/// Minimum p-value test. Weights in `spec` are ignored.
pub fn minp_test(
    est: &EstimateSet,
    spec: &HypothesisSpec,
    mc: &McConfig,
    mode: MinpMode,
) -> Result<TestResult> {
    check_dims(est, spec)?;
    let z = standardized_effects(est, spec.deltas())?;
    let z_obs = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_p = normal_sf(z_obs);
    let j = est.dim();
    if j == 1 {
        return Ok(TestResult::exact(min_p, min_p, Method::Marginal));
    }
    match mode {
        MinpMode::Bonferroni => Ok(TestResult::exact(
            min_p,
            (j as f64 * min_p).min(1.0),
            Method::MinpBonferroni,
        )),
        MinpMode::Joint => {
            mc.validate()?;
            let r = correlation(est.sigma_hat())?;
            let factor = match r.cholesky() {
                Ok(l) => l,
                Err(_) => sym_sqrt(&r)?.into_inner(),
            };
            let count = (0..mc.draws as u64)
                .into_par_iter()
                .filter(|&b| {
                    let mut rng = substream(mc.seed, b);
                    let e =
                        DVector::from_iterator(j, (0..j).map(|_| StandardNormal.sample(&mut rng)));
                    let x = &factor * e;
                    x.max() >= z_obs
                })
                .count() as f64;
            let b = mc.draws as f64;
            let p = match mc.rule {
                PValueRule::Exceedance => count / b,
                PValueRule::Conservative => (1.0 + count) / (1.0 + b),
            };
            Ok(TestResult {
                statistic: min_p,
                p_value: p,
                method: Method::MinpJoint,
                mc: Some(*mc),
                mc_std_error: Some((p * (1.0 - p) / b).sqrt()),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::normal_cdf;
    use proptest::prelude::*;

    fn two_set(z1: f64, z2: f64, rho: f64) -> EstimateSet {
        let cov = SymMatrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]]).unwrap();
        EstimateSet::from_asymptotic(1, vec![z1, z2], cov).unwrap()
    }

    fn rand_set(a: &[f64], theta: &[f64], n: usize) -> EstimateSet {
        let j = theta.len();
        let m = DMatrix::from_fn(j, j, |r, c| a[r * j + c]);
        let cov = SymMatrix::new(&m * m.transpose() + DMatrix::identity(j, j) * 0.2).unwrap();
        EstimateSet::from_asymptotic(n, theta.to_vec(), cov).unwrap()
    }

    #[test]
    fn spec_validation_and_normalization() {
        let s = HypothesisSpec::new(vec![0.0; 3], vec![1.0, 2.0, 2.0], 0.025).unwrap();
        assert!((s.weights()[0] - 0.2).abs() < 1e-15);
        assert!(HypothesisSpec::new(vec![0.0; 2], vec![1.0, 0.0], 0.025).is_err());
        assert!(HypothesisSpec::new(vec![0.0; 2], vec![1.0, 1.0], 1.0).is_err());
        assert!(HypothesisSpec::new(vec![0.0; 2], vec![1.0], 0.05).is_err());
    }

    #[test]
    fn marginal_examples() {
        let est = EstimateSet::from_asymptotic(4, vec![0.3], SymMatrix::diag(&[2.0])).unwrap();
        assert!((marginal_p(&est, 0, 0.3).unwrap() - 0.5).abs() < 1e-15);
        // sqrt(4) * 0.979982 / 1 = 1.959964
        let est =
            EstimateSet::from_asymptotic(4, vec![0.979_982], SymMatrix::diag(&[1.0])).unwrap();
        assert!((marginal_p(&est, 0, 0.0).unwrap() - 0.025).abs() < 1e-6);
        let est = EstimateSet::from_asymptotic(4, vec![1.0], SymMatrix::diag(&[0.0])).unwrap();
        assert_eq!(
            marginal_p(&est, 0, 0.0),
            Err(Error::ZeroVariance { index: 0 })
        );
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(signed_wald_two_z(-1.0, -2.0, 0.3), 0.0);
        assert!((signed_wald_two_z(3.0, 4.0, 0.0) - 25.0).abs() < 1e-12);
        assert!((signed_wald_two_z(2.0, 0.5, 0.5) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_dykstra_on_example() {
        let est = two_set(2.0, 0.5, 0.5);
        let spec = HypothesisSpec::superiority(2, 0.025).unwrap();
        let general = signed_wald_general(&est, &spec).unwrap();
        assert!((4.0 * general - 4.0).abs() < 1e-8);
        assert!((signed_wald_two(&est, &[0.0, 0.0], 0, 1).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_correlation_rejected() {
        let est = two_set(1.0, 1.0, 1.0);
        assert!(matches!(
            signed_wald_two(&est, &[0.0, 0.0], 0, 1),
            Err(Error::DegenerateCorrelation(_))
        ));
        assert!(sw_two_p_analytic(1.0, 1.0).is_err());
    }

    #[test]
    fn interior_point_gives_zero() {
        let est = rand_set(
            &[0.5, 0.1, 0.0, 0.2, 0.9, 0.3, 0.1, 0.0, 0.7],
            &[-1.0, -2.0, -0.5],
            50,
        );
        let spec = HypothesisSpec::superiority(3, 0.025).unwrap();
        assert_eq!(signed_wald_general(&est, &spec).unwrap(), 0.0);
    }

    #[test]
    fn p_value_examples() {
        let sample = vec![0.0, 0.0, 1.0, 2.0];
        assert_eq!(sw_p_value(0.0, &sample).unwrap().0, 1.0);
        assert_eq!(sw_p_value(3.0, &sample).unwrap().0, 0.0);
        let (p, se) = sw_p_value(1.0, &sample).unwrap();
        assert_eq!(p, 0.5);
        assert!((se - 0.25).abs() < 1e-15);
        assert_eq!(sw_p_value(1.0, &[]), Err(Error::EmptySample));
        let (p, _) = sw_p_value_with(3.0, &sample, PValueRule::Conservative).unwrap();
        assert_eq!(p, 0.2);
    }

    #[test]
    fn analytic_examples() {
        assert_eq!(sw_two_p_analytic(0.0, 0.3).unwrap(), 1.0);
        let p = sw_two_p_analytic(2.706, 0.0).unwrap();
        let expected = 0.5 * chi2_1_sf(2.706) + 0.25 * (-2.706f64 / 2.0).exp();
        assert!((p - expected).abs() < 1e-15);
    }

    #[test]
    fn null_sample_polar_mass_independent() {
        // Sigma = I, equal weights: the statistic is zero iff U is in the
        // negative quadrant, probability 1/4.
        let est = EstimateSet::from_asymptotic(10, vec![0.0, 0.0], SymMatrix::identity(2)).unwrap();
        let spec = HypothesisSpec::superiority(2, 0.025).unwrap();
        let sample = null_sample_sw(&est, &spec, &McConfig::new(10_000, 3)).unwrap();
        let zeros = sample.iter().filter(|&&t| t == 0.0).count() as f64 / 1e4;
        assert!((zeros - 0.25).abs() < 0.02, "{zeros}");
        let again = null_sample_sw(&est, &spec, &McConfig::new(10_000, 3)).unwrap();
        assert_eq!(sample, again);
    }

    #[test]
    fn null_sample_zero_mass_is_orthant_probability() {
        // sqrt(V) U ~ N(0, W V W), whose orthant probability depends on the
        // correlation only, so the weights do not change the zero mass.
        for rho in [-0.6f64, 0.4] {
            let est = two_set(0.0, 0.0, rho);
            let spec = HypothesisSpec::new(vec![0.0, 0.0], vec![0.3, 0.7], 0.025).unwrap();
            let expected = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
            for seed in [1, 2] {
                let s = null_sample_sw(&est, &spec, &McConfig::new(20_000, seed)).unwrap();
                let zeros = s.iter().filter(|&&t| t == 0.0).count() as f64 / 20_000.0;
                let se = (expected * (1.0 - expected) / 20_000.0).sqrt();
                assert!(
                    (zeros - expected).abs() < 4.0 * se,
                    "{rho}: {zeros} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn analytic_p_is_calibrated_under_null() {
        use rand::SeedableRng;
        for rho in [-0.5f64, 0.0, 0.5] {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
            let s = (1.0 - rho * rho).sqrt();
            let reps = 10_000;
            let mut hits = 0;
            for _ in 0..reps {
                let e1: f64 = StandardNormal.sample(&mut rng);
                let e2: f64 = StandardNormal.sample(&mut rng);
                let stat = signed_wald_two_z(e1, rho * e1 + s * e2, rho);
                if sw_two_p_analytic(stat, rho).unwrap() <= 0.025 {
                    hits += 1;
                }
            }
            let rate = hits as f64 / reps as f64;
            assert!((rate - 0.025).abs() <= 0.006, "rho {rho}: {rate}");
        }
    }

    #[test]
    fn analytic_mixture_agrees_with_mc_at_two_point_seven() {
        let est = EstimateSet::from_asymptotic(10, vec![0.0, 0.0], SymMatrix::identity(2)).unwrap();
        let spec = HypothesisSpec::superiority(2, 0.025).unwrap();
        let sample = null_sample_sw(&est, &spec, &McConfig::new(200_000, 17)).unwrap();
        // sample is in weighted units; J^2 = 4 converts to the unweighted scale
        let (p_mc, _) = sw_p_value(2.706 / 4.0, &sample).unwrap();
        let p = sw_two_p_analytic(2.706, 0.0).unwrap();
        assert!((p - p_mc).abs() < 0.003, "{p} vs {p_mc}");
    }

    #[test]
    fn minp_single_hypothesis_is_marginal() {
        let est = EstimateSet::from_asymptotic(9, vec![0.5], SymMatrix::diag(&[2.0])).unwrap();
        let spec = HypothesisSpec::superiority(1, 0.025).unwrap();
        let r = minp_test(&est, &spec, &McConfig::new(1000, 1), MinpMode::Joint).unwrap();
        assert_eq!(r.p_value, marginal_p(&est, 0, 0.0).unwrap());
    }

    #[test]
    fn minp_joint_independent_closed_form() {
        let z = 1.959_964;
        let est = EstimateSet::from_asymptotic(1, vec![z, -3.0], SymMatrix::identity(2)).unwrap();
        let spec = HypothesisSpec::superiority(2, 0.025).unwrap();
        let r = minp_test(&est, &spec, &McConfig::new(100_000, 8), MinpMode::Joint).unwrap();
        let exact = 1.0 - normal_cdf(z).powi(2);
        assert!((exact - 0.049_375).abs() < 1e-5);
        assert!((r.p_value - exact).abs() < 3.0 * r.mc_std_error.unwrap());
    }

    #[test]
    fn minp_bonferroni_definition() {
        // marginal p's 0.02 and 0.5
        let z1 = crate::dist::normal_quantile(0.98);
        let est = EstimateSet::from_asymptotic(1, vec![z1, 0.0], SymMatrix::identity(2)).unwrap();
        let spec = HypothesisSpec::superiority(2, 0.025).unwrap();
        let r = minp_test(&est, &spec, &McConfig::new(1000, 1), MinpMode::Bonferroni).unwrap();
        assert!((r.p_value - 0.04).abs() < 1e-10);
        assert!(r.mc.is_none());
    }

    #[test]
    fn too_few_draws_rejected() {
        let est = two_set(1.0, 1.0, 0.0);
        let spec = HypothesisSpec::superiority(2, 0.025).unwrap();
        assert!(matches!(
            sw_test(&est, &spec, &McConfig::new(10, 1)),
            Err(Error::TooFewDraws { .. })
        ));
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let est = rand_set(
            &[0.5, 0.1, 0.0, 0.2, 0.9, 0.3, 0.1, 0.0, 0.7],
            &[0.2, 0.1, 0.3],
            50,
        );
        let spec = HypothesisSpec::new(vec![0.0; 3], vec![0.2, 0.4, 0.4], 0.025).unwrap();
        let a = sw_test(&est, &spec, &McConfig::new(2000, 99)).unwrap();
        let b = sw_test(&est, &spec, &McConfig::new(2000, 99)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.p_value.to_bits(), b.p_value.to_bits());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn equal_weights_collapse(a in prop::collection::vec(-1.0f64..1.0, 9), t in prop::collection::vec(-2.0f64..2.0, 3)) {
            let est = rand_set(&a, &t, 30);
            let spec = HypothesisSpec::superiority(3, 0.025).unwrap();
            let weighted = signed_wald_general(&est, &spec).unwrap();
            let unit = HypothesisSpec::new(vec![0.0; 3], vec![1.0; 3], 0.025).unwrap();
            // equal weights normalize to 1/J whatever the input scale
            prop_assert_eq!(unit.weights(), spec.weights());
            // unweighted statistic via W = I: rescale u_hat by J
            let sw = SignedWald::new(&est, &spec).unwrap();
            let u: Vec<f64> = sw.u_hat().iter().map(|v| v * 3.0).collect();
            let unweighted = dykstra_project(&u, sw.cone(), DykstraConfig::default()).unwrap().sq_distance;
            prop_assert!((9.0 * weighted - unweighted).abs() < 1e-8 * unweighted.max(1.0));
        }

        #[test]
        fn two_hypothesis_closed_form_matches_general(z1 in -4.0f64..4.0, z2 in -4.0f64..4.0, rho in -0.95f64..0.95) {
            let est = two_set(z1, z2, rho);
            let spec = HypothesisSpec::superiority(2, 0.025).unwrap();
            let general = signed_wald_general(&est, &spec).unwrap();
            let closed = signed_wald_two(&est, &[0.0, 0.0], 0, 1).unwrap();
            prop_assert!((4.0 * general - closed).abs() < 1e-8, "{} vs {}", 4.0 * general, closed);
        }

        #[test]
        fn scale_invariance(a in prop::collection::vec(-1.0f64..1.0, 9), t in prop::collection::vec(-2.0f64..2.0, 3), c in 0.01f64..100.0) {
            let est = rand_set(&a, &t, 30);
            let spec = HypothesisSpec::new(vec![0.0; 3], vec![0.2, 0.4, 0.4], 0.025).unwrap();
            let scaled = EstimateSet::from_asymptotic(
                30,
                t.iter().map(|v| v * c).collect(),
                est.sigma_hat().scaled(c * c),
            ).unwrap();
            let s1 = signed_wald_general(&est, &spec).unwrap();
            let s2 = signed_wald_general(&scaled, &spec).unwrap();
            prop_assert!((s1 - s2).abs() < 1e-8 * s1.max(1.0));
        }

        #[test]
        fn monotone_in_each_estimate(a in prop::collection::vec(-1.0f64..1.0, 9), t in prop::collection::vec(-2.0f64..2.0, 3), j in 0usize..3, step in 0.0f64..2.0) {
            let est = rand_set(&a, &t, 30);
            let spec = HypothesisSpec::new(vec![0.0; 3], vec![0.5, 0.3, 0.2], 0.025).unwrap();
            let mut t2 = t.clone();
            t2[j] += step;
            let bumped = EstimateSet::from_asymptotic(30, t2, est.sigma_hat().clone()).unwrap();
            let s1 = signed_wald_general(&est, &spec).unwrap();
            let s2 = signed_wald_general(&bumped, &spec).unwrap();
            prop_assert!(s2 >= s1 - 1e-8 * s1.max(1.0), "{} -> {}", s1, s2);
        }
    }
}
