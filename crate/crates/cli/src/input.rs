//! Analysis input: estimates with a covariance matrix, or estimates with a
//! CSV of influence values, plus the hypothesis and Monte-Carlo settings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sigwald::io::read_influence_csv;
use sigwald::multtest::ClosedMethod;
use sigwald::{CovarianceKind, EstimateSet, HypothesisSpec, McConfig, SymMatrix};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum MethodArg {
    /// Weighted signed Wald, Monte-Carlo null.
    #[default]
    Sw,
    /// Equal-weights signed Wald with the analytic null (two hypotheses).
    SwAnalytic,
    /// Min-p with the joint normal null.
    Minp,
    MinpBonferroni,
}

impl MethodArg {
    pub fn closed(self) -> Result<ClosedMethod, CliError> {
        match self {
            MethodArg::Sw => Ok(ClosedMethod::Sw),
            MethodArg::Minp => Ok(ClosedMethod::Minp),
            MethodArg::MinpBonferroni => Ok(ClosedMethod::MinpBonferroni),
            MethodArg::SwAnalytic => Err(CliError::Input(
                "sw_analytic is not available for closed testing".into(),
            )),
        }
    }

    pub fn needs_seed(self) -> bool {
        matches!(self, MethodArg::Sw | MethodArg::Minp)
    }
}

/// Input document. Field names are part of the interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub theta_hat: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance_kind: Option<CovarianceKind>,
    /// CSV of influence values, one column per estimate; relative paths are
    /// resolved against the input file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub influence_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub method: MethodArg,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output section written by the CLI; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
}

fn default_alpha() -> f64 {
    0.025
}

fn default_draws() -> usize {
    10_000
}

impl AnalysisInput {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut input: Self =
            serde_json::from_str(text).map_err(|e| CliError::Input(e.to_string()))?;
        if let Some(p) = &input.influence_csv {
            if p.is_relative() {
                input.influence_csv = Some(base_dir.join(p));
            }
        }
        input.result = None;
        Ok(input)
    }

    pub fn dim(&self) -> usize {
        self.theta_hat.len()
    }

    pub fn estimates(&self) -> Result<EstimateSet, CliError> {
        let est = match (&self.covariance, &self.influence_csv) {
            (Some(cov), None) => {
                let kind = self.covariance_kind.ok_or_else(|| {
                    CliError::Input("covariance_kind is required with covariance".into())
                })?;
                let n = self
                    .n
                    .ok_or_else(|| CliError::Input("n is required with covariance".into()))?;
                EstimateSet::from_covariance(
                    n,
                    self.theta_hat.clone(),
                    SymMatrix::from_rows(cov)?,
                    kind,
                )?
            }
            (None, Some(path)) => {
                let file = std::fs::File::open(path)
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                let (names, phi) = read_influence_csv(file)?;
                if let Some(n) = self.n {
                    if n != phi.nrows() {
                        return Err(CliError::Input(format!(
                            "n = {n} but the influence file has {} rows",
                            phi.nrows()
                        )));
                    }
                }
                let est = EstimateSet::from_influence(self.theta_hat.clone(), phi)?;
                if self.names.is_none() {
                    est.with_names(names)?
                } else {
                    est
                }
            }
            _ => {
                return Err(CliError::Input(
                    "give exactly one of covariance or influence_csv".into(),
                ))
            }
        };
        Ok(match &self.names {
            Some(names) => est.with_names(names.clone())?,
            None => est,
        })
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.deltas.clone().unwrap_or_else(|| vec![0.0; self.dim()])
    }

    pub fn weights(&self) -> Vec<f64> {
        self.weights
            .clone()
            .unwrap_or_else(|| vec![1.0; self.dim()])
    }

    pub fn spec(&self) -> Result<HypothesisSpec, CliError> {
        Ok(HypothesisSpec::new(
            self.deltas(),
            self.weights(),
            self.alpha,
        )?)
    }

    /// Monte-Carlo settings; a seed is required whenever the method samples.
    pub fn mc(&self) -> Result<McConfig, CliError> {
        match self.seed {
            Some(seed) => Ok(McConfig::new(self.draws, seed)),
            None if self.method.needs_seed() => Err(CliError::Input(
                "a seed is required for Monte-Carlo p-values (set \"seed\" or pass --seed)".into(),
            )),
            None => Ok(McConfig::new(self.draws, 0)),
        }
    }
}
