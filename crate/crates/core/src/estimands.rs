//! Estimate sets, influence-function stacking and the landmark-trial
//! estimators.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// How a supplied covariance matrix is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    /// Covariance of `sqrt(n) * (theta_hat - theta)`.
    Asymptotic,
    /// Covariance of `theta_hat` itself, i.e. asymptotic / n.
    PerEstimate,
}

/// Estimates of `J` target parameters together with their joint asymptotic
/// covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSet {
    n: usize,
    theta_hat: Vec<f64>,
    sigma_hat: SymMatrix,
    influence: Option<DMatrix<f64>>,
    names: Vec<String>,
}

fn default_names(dim: usize) -> Vec<String> {
    (1..=dim).map(|j| format!("theta{j}")).collect()
}

impl EstimateSet {
    /// `sigma_hat` is the asymptotic covariance of `sqrt(n) * (theta_hat - theta)`.
    pub fn from_asymptotic(n: usize, theta_hat: Vec<f64>, sigma_hat: SymMatrix) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("sample size must be positive".into()));
        }
        if sigma_hat.dim() != theta_hat.len() {
            return Err(Error::DimensionMismatch {
                expected: theta_hat.len(),
                got: sigma_hat.dim(),
            });
        }
        if theta_hat.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if theta_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        sigma_hat.check_psd()?;
        let names = default_names(theta_hat.len());
        Ok(Self {
            n,
            theta_hat,
            sigma_hat,
            influence: None,
            names,
        })
    }

    pub fn from_covariance(
        n: usize,
        theta_hat: Vec<f64>,
        covariance: SymMatrix,
        kind: CovarianceKind,
    ) -> Result<Self> {
        let sigma = match kind {
            CovarianceKind::Asymptotic => covariance,
            CovarianceKind::PerEstimate => covariance.scaled(n as f64),
        };
        Self::from_asymptotic(n, theta_hat, sigma)
    }

    /// Builds the set from per-subject influence values (`n` rows, `J`
    /// columns); `sigma_hat` is their stacked second moment.
    pub fn from_influence(theta_hat: Vec<f64>, influence: DMatrix<f64>) -> Result<Self> {
        if influence.ncols() != theta_hat.len() {
            return Err(Error::DimensionMismatch {
                expected: theta_hat.len(),
                got: influence.ncols(),
            });
        }
        let sigma = stack_covariance(&influence)?;
        let mut set = Self::from_asymptotic(influence.nrows(), theta_hat, sigma)?;
        set.influence = Some(influence);
        Ok(set)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: names.len(),
            });
        }
        self.names = names;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.theta_hat.len()
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn sigma_hat(&self) -> &SymMatrix {
        &self.sigma_hat
    }

    /// `sigma_hat / n`, the covariance of the estimates themselves.
    pub fn per_estimate_cov(&self) -> SymMatrix {
        self.sigma_hat.scaled(1.0 / self.n as f64)
    }

    pub fn std_errors(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.sigma_hat
            .diagonal()
            .into_iter()
            .map(|v| (v / n).sqrt())
            .collect()
    }

    pub fn influence(&self) -> Option<&DMatrix<f64>> {
        self.influence.as_ref()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Restriction to the hypotheses in `indices`: sub-vector, principal
    /// sub-matrix and influence columns. Nothing is re-estimated.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptySubset);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.dim()) {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: bad + 1,
            });
        }
        Ok(Self {
            n: self.n,
            theta_hat: indices.iter().map(|&i| self.theta_hat[i]).collect(),
            sigma_hat: self.sigma_hat.submatrix(indices),
            influence: self
                .influence
                .as_ref()
                .map(|m| m.select_columns(indices.iter())),
            names: indices.iter().map(|&i| self.names[i].clone()).collect(),
        })
    }
}

/// `(1/n) * sum_i phi_i phi_i'` over the rows of `influence`.
pub fn stack_covariance(influence: &DMatrix<f64>) -> Result<SymMatrix> {
    let n = influence.nrows();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    if influence.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    SymMatrix::new(influence.tr_mul(influence) / n as f64)
}

/// One subject of a two-arm landmark trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Treatment arm.
    pub a: bool,
    /// Terminal event before the landmark.
    pub r: bool,
    /// Score at the landmark; `None` exactly when `r` is set.
    pub y: Option<f64>,
    /// Composite score `(1 - r) * y + r * gamma`.
    pub y_tilde: f64,
}

impl TrialRecord {
    pub fn new(a: bool, r: bool, y: Option<f64>, gamma: f64) -> Result<Self> {
        let y = match (r, y) {
            (true, _) => None,
            (false, Some(v)) if v.is_finite() => Some(v),
            (false, _) => return Err(Error::NonFiniteInput),
        };
        let y_tilde = y.unwrap_or(gamma);
        Ok(Self { a, r, y, y_tilde })
    }

    fn score_or_zero(&self) -> f64 {
        self.y.unwrap_or(0.0)
    }
}

/// Parameters of the simulated landmark trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    /// Baseline mean score among subjects without a terminal event.
    pub mu: f64,
    pub sigma: f64,
    /// Baseline terminal-event hazard.
    pub lambda: f64,
    /// Landmark time.
    pub tau: f64,
    /// Score assigned on a terminal event.
    pub gamma: f64,
    /// Additive hazard shift under treatment.
    pub trt_hazard: f64,
    /// Additive mean-score shift under treatment.
    pub trt_score: f64,
    #[serde(default = "ScenarioConfig::equal_weights")]
    pub weights: Vec<f64>,
}

impl ScenarioConfig {
    fn equal_weights() -> Vec<f64> {
        vec![1.0 / 3.0; 3]
    }

    /// The treatment-effect scenario used for the power study.
    pub fn power_study(n: usize) -> Self {
        Self {
            n,
            mu: 40.0,
            sigma: 15.0,
            lambda: 0.07,
            tau: 2.0,
            gamma: 15.0,
            trt_hazard: -0.018,
            trt_score: 2.7,
            weights: Self::equal_weights(),
        }
    }

    /// No treatment effect: every contrast is zero.
    pub fn null_study(n: usize, mu: f64, lambda: f64) -> Self {
        Self {
            n,
            mu,
            sigma: 15.0,
            lambda,
            tau: 2.0,
            gamma: 15.0,
            trt_hazard: 0.0,
            trt_score: 0.0,
            weights: Self::equal_weights(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n < 2 {
            return fail("n must be at least 2");
        }
        if !(self.lambda > 0.0) {
            return fail("lambda must be positive");
        }
        if !(self.lambda + self.trt_hazard > 0.0) {
            return fail("lambda + trt_hazard must be positive");
        }
        if !(self.sigma > 0.0) {
            return fail("sigma must be positive");
        }
        if !(self.tau >= 0.0) {
            return fail("tau must be non-negative");
        }
        if self.weights.len() != 3 || self.weights.iter().any(|w| !(*w > 0.0)) {
            return fail("weights must be three positive numbers");
        }
        Ok(())
    }

    /// Terminal-event hazard in arm `a`.
    pub fn hazard(&self, a: bool) -> f64 {
        self.lambda + if a { self.trt_hazard } else { 0.0 }
    }

    pub fn mean_score(&self, a: bool) -> f64 {
        self.mu + if a { self.trt_score } else { 0.0 }
    }

    /// `P(R = 0 | A = a)`.
    pub fn survival(&self, a: bool) -> f64 {
        (-self.hazard(a) * self.tau).exp()
    }

    /// Population contrasts `(theta1, theta2, theta3)`.
    pub fn true_theta(&self) -> [f64; 3] {
        let comp = |a| {
            let s = self.survival(a);
            s * self.mean_score(a) + (1.0 - s) * self.gamma
        };
        [
            self.survival(true) - self.survival(false),
            self.trt_score,
            comp(true) - comp(false),
        ]
    }
}

/// Plug-in moments for one arm.
struct ArmMoments {
    /// P(A = a)
    p_arm: f64,
    /// P(R = 0, A = a)
    p_surv: f64,
    /// E{Y (1 - R) 1(A = a)}
    e_score: f64,
    /// E{Y~ 1(A = a)}
    e_comp: f64,
}

impl ArmMoments {
    fn estimate(data: &[TrialRecord], arm: bool, gamma: f64) -> Result<Self> {
        let n = data.len() as f64;
        let (mut na, mut ns, mut sy, mut sc) = (0usize, 0usize, 0.0, 0.0);
        for rec in data.iter().filter(|r| r.a == arm) {
            na += 1;
            if !rec.r {
                ns += 1;
                sy += rec.score_or_zero();
            }
            sc += composite(rec, gamma);
        }
        if na == 0 {
            return Err(Error::EmptyArm(arm as u8));
        }
        if ns == 0 {
            return Err(Error::NoSurvivors(arm as u8));
        }
        Ok(Self {
            p_arm: na as f64 / n,
            p_surv: ns as f64 / n,
            e_score: sy / n,
            e_comp: sc / n,
        })
    }

    fn theta(&self) -> [f64; 3] {
        [
            self.p_surv / self.p_arm,
            self.e_score / self.p_surv,
            self.e_comp / self.p_arm,
        ]
    }

    /// Influence values `(psi_1a, psi_2a, psi_3a)` of one record.
    fn psi(&self, rec: &TrialRecord, arm: bool, gamma: f64) -> [f64; 3] {
        let ia = if rec.a == arm { 1.0 } else { 0.0 };
        let surv = if rec.r { 0.0 } else { 1.0 } * ia;
        let y = rec.score_or_zero() * surv;
        let yt = composite(rec, gamma) * ia;
        let p = self.p_arm;
        let q = self.p_surv;
        [
            (surv - q) / p - q / (p * p) * (ia - p),
            (y - self.e_score) / q - self.e_score / (q * q) * (surv - q),
            (yt - self.e_comp) / p - self.e_comp / (p * p) * (ia - p),
        ]
    }
}

fn composite(rec: &TrialRecord, gamma: f64) -> f64 {
    if rec.r {
        gamma
    } else {
        rec.score_or_zero()
    }
}

/// Ratio estimators of the survival, conditional-score and composite-score
/// contrasts with their plug-in influence functions.
pub fn landmark_estimates(data: &[TrialRecord], gamma: f64) -> Result<EstimateSet> {
    if !gamma.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let treated = ArmMoments::estimate(data, true, gamma)?;
    let control = ArmMoments::estimate(data, false, gamma)?;
    let t1 = treated.theta();
    let t0 = control.theta();
    let theta_hat = vec![t1[0] - t0[0], t1[1] - t0[1], t1[2] - t0[2]];

    let n = data.len();
    let mut influence = DMatrix::zeros(n, 3);
    for (i, rec) in data.iter().enumerate() {
        let p1 = treated.psi(rec, true, gamma);
        let p0 = control.psi(rec, false, gamma);
        for j in 0..3 {
            influence[(i, j)] = p1[j] - p0[j];
        }
    }
    EstimateSet::from_influence(theta_hat, influence)
}

/// Population covariance of the three landmark contrasts under `cfg`, with
/// 1:1 randomization.
pub fn theoretical_sigma(cfg: &ScenarioConfig) -> Result<SymMatrix> {
    cfg.validate()?;
    let pa = 0.5;
    let var_y = cfg.sigma * cfg.sigma;
    let mut m = DMatrix::<f64>::zeros(3, 3);
    for a in [false, true] {
        let s = cfg.survival(a);
        let var_r = s * (1.0 - s);
        let gap = cfg.mean_score(a) - cfg.gamma;
        m[(0, 0)] += var_r / pa;
        m[(0, 2)] += gap * var_r / pa;
        m[(1, 1)] += var_y / (s * pa);
        m[(1, 2)] += var_y / pa;
        m[(2, 2)] += gap * gap * var_r / pa + s * var_y / pa;
    }
    m[(2, 0)] = m[(0, 2)];
    m[(2, 1)] = m[(1, 2)];
    SymMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stack_covariance_examples() {
        let m = DMatrix::from_column_slice(2, 1, &[1.0, -1.0]);
        let s = stack_covariance(&m).unwrap();
        assert_eq!(s.get(0, 0), 1.0);

        let m = DMatrix::from_column_slice(3, 2, &[1.0, -1.0, 0.0, 2.0, -2.0, 0.0]);
        let s = stack_covariance(&m).unwrap();
        assert!((s.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.get(0, 1) - 4.0 / 3.0).abs() < 1e-15);
        assert!((s.get(1, 1) - 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn stack_covariance_errors() {
        let m = DMatrix::from_column_slice(1, 1, &[1.0]);
        assert_eq!(stack_covariance(&m), Err(Error::TooFewRows(1)));
        let m = DMatrix::from_column_slice(2, 1, &[1.0, f64::NAN]);
        assert_eq!(stack_covariance(&m), Err(Error::NonFiniteInput));
    }

    #[test]
    fn one_record_per_arm() {
        let data = vec![
            TrialRecord::new(true, false, Some(5.0), 15.0).unwrap(),
            TrialRecord::new(false, false, Some(3.0), 15.0).unwrap(),
        ];
        let est = landmark_estimates(&data, 15.0).unwrap();
        assert_eq!(est.theta_hat(), &[0.0, 2.0, 2.0]);
    }

    #[test]
    fn no_survivors_in_treated_arm() {
        let data = vec![
            TrialRecord::new(true, true, None, 15.0).unwrap(),
            TrialRecord::new(false, false, Some(3.0), 15.0).unwrap(),
        ];
        assert_eq!(landmark_estimates(&data, 15.0), Err(Error::NoSurvivors(1)));
    }

    #[test]
    fn empty_arm() {
        let data = vec![
            TrialRecord::new(false, false, Some(1.0), 15.0).unwrap(),
            TrialRecord::new(false, false, Some(3.0), 15.0).unwrap(),
        ];
        assert_eq!(landmark_estimates(&data, 15.0), Err(Error::EmptyArm(1)));
    }

    #[test]
    fn record_requires_score_without_event() {
        assert!(TrialRecord::new(true, false, None, 15.0).is_err());
        let r = TrialRecord::new(true, true, Some(99.0), 15.0).unwrap();
        assert_eq!(r.y, None);
        assert_eq!(r.y_tilde, 15.0);
    }

    #[test]
    fn theoretical_sigma_power_scenario() {
        let s = theoretical_sigma(&ScenarioConfig::power_study(1000)).unwrap();
        let expected = [
            [0.405, 0.0, 10.610],
            [0.0, 1016.943, 900.0],
            [10.610, 900.0, 1075.336],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (s.get(i, j) - expected[i][j]).abs() < 2e-3,
                    "({i},{j}): {} vs {}",
                    s.get(i, j),
                    expected[i][j]
                );
            }
        }
    }

    #[test]
    fn theoretical_sigma_degenerate_cases() {
        let mut cfg = ScenarioConfig::power_study(100);
        cfg.trt_score = 0.0;
        cfg.gamma = cfg.mu;
        assert_eq!(theoretical_sigma(&cfg).unwrap().get(0, 2), 0.0);

        let mut cfg = ScenarioConfig::power_study(100);
        cfg.lambda = 1e-9;
        cfg.trt_hazard = 0.0;
        assert!(theoretical_sigma(&cfg).unwrap().get(0, 0) < 1e-8);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ScenarioConfig::power_study(100);
        cfg.trt_hazard = -0.07;
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::power_study(1);
        assert!(cfg.validate().is_err());
        cfg.n = 10;
        cfg.sigma = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn true_theta_matches_stated_effects() {
        let t = ScenarioConfig::power_study(10).true_theta();
        assert!((t[0] - 0.032).abs() < 5e-4);
        assert_eq!(t[1], 2.7);
        assert!((t[2] - 3.23).abs() < 5e-3);
        let t = ScenarioConfig::null_study(10, 45.0, 0.08).true_theta();
        assert_eq!(t, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn subset_restricts_everything() {
        let infl = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, -1.0, 0.0, 1.0, 0.0, -2.0, -4.0]);
        let est = EstimateSet::from_influence(vec![0.1, 0.2, 0.3], infl).unwrap();
        let sub = est.subset(&[2, 0]).unwrap();
        assert_eq!(sub.theta_hat(), &[0.3, 0.1]);
        assert_eq!(sub.sigma_hat().get(0, 1), est.sigma_hat().get(2, 0));
        assert_eq!(sub.names(), &["theta3".to_string(), "theta1".to_string()]);
        let direct = stack_covariance(sub.influence().unwrap()).unwrap();
        assert_eq!(&direct, sub.sigma_hat());
        assert_eq!(est.subset(&[]), Err(Error::EmptySubset));
    }

    #[test]
    fn per_estimate_round_trip() {
        let cov = SymMatrix::from_rows(&[vec![0.01, 0.002], vec![0.002, 0.04]]).unwrap();
        let est = EstimateSet::from_covariance(
            400,
            vec![0.1, 0.2],
            cov.clone(),
            CovarianceKind::PerEstimate,
        )
        .unwrap();
        assert!((est.sigma_hat().get(1, 1) - 16.0).abs() < 1e-12);
        assert!((est.per_estimate_cov().get(0, 1) - 0.002).abs() < 1e-15);
        assert!((est.std_errors()[0] - 0.1).abs() < 1e-15);
    }
}
