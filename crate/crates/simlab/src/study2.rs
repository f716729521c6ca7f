//! Type-1 error of intersection tests on simulated trials without a
//! treatment effect.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sigwald::estimands::landmark_estimates;
use sigwald::intersection::sw_test;
use sigwald::multtest::{parse_subset_key, subset_key, subset_members, subset_weights, Subset};
use sigwald::rng::derive_seed;
use sigwald::{Error, HypothesisSpec, McConfig, Result, ScenarioConfig};

use crate::table::{Proportion, StudyResultTable};
use crate::trial::simulate_trial;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSet {
    pub label: String,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Study2Config {
    pub ns: Vec<usize>,
    pub mus: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub weight_sets: Vec<WeightSet>,
    /// Subset keys such as `"1,2,3"` or `"2,3"`.
    pub intersections: Vec<String>,
    pub reps: usize,
    pub draws: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Remaining trial parameters; `n`, `mu` and `lambda` come from the grids.
    pub scenario: ScenarioConfig,
}

impl Study2Config {
    pub fn desk() -> Self {
        Self {
            ns: vec![200, 500, 1000, 2000, 3500],
            mus: vec![40.0, 45.0],
            lambdas: vec![0.05, 0.08],
            weight_sets: vec![
                WeightSet {
                    label: "equal".into(),
                    weights: vec![1.0 / 3.0; 3],
                },
                WeightSet {
                    label: "up_weighted".into(),
                    weights: vec![0.2, 0.4, 0.4],
                },
            ],
            intersections: ["1,2,3", "1,2", "1,3", "2,3"].map(String::from).to_vec(),
            reps: 2000,
            draws: 2000,
            alpha: 0.025,
            seed: 1,
            scenario: ScenarioConfig::null_study(200, 40.0, 0.05),
        }
    }

    pub fn paper() -> Self {
        Self {
            reps: 10_000,
            draws: 10_000,
            ..Self::desk()
        }
    }
}

/// A test to run on every replication: subset mask and normalized weights.
struct Job {
    mask: Subset,
    set: usize,
    weights: Vec<f64>,
}

/// Pairs of (intersection, weight set), skipping a weight set whose subset
/// weights repeat those of an earlier set for the same intersection.
fn jobs(cfg: &Study2Config) -> Result<Vec<Job>> {
    let mut out: Vec<Job> = Vec::new();
    for key in &cfg.intersections {
        let mask = parse_subset_key(key)?;
        if subset_members(mask).iter().any(|&j| j >= 3) {
            return Err(Error::InvalidHypothesis(format!(
                "intersection {key} outside 1..3"
            )));
        }
        for (set, ws) in cfg.weight_sets.iter().enumerate() {
            if ws.weights.len() != 3 {
                return Err(Error::DimensionMismatch {
                    expected: 3,
                    got: ws.weights.len(),
                });
            }
            let w = subset_weights(&ws.weights, &subset_members(mask))?;
            let duplicate = out.iter().any(|j| {
                j.mask == mask && j.weights.iter().zip(&w).all(|(a, b)| (a - b).abs() < 1e-12)
            });
            if !duplicate {
                out.push(Job {
                    mask,
                    set,
                    weights: w,
                });
            }
        }
    }
    Ok(out)
}

/// Rows `(intersection, n, mu, lambda, weights)` with the fraction of
/// replications whose p-value is at most `alpha`. Every job in a replication
/// sees the same data, and jobs on the same intersection share Monte-Carlo
/// draws.
pub fn run_study2(cfg: &Study2Config) -> Result<StudyResultTable> {
    if cfg.reps == 0 || cfg.ns.is_empty() || cfg.mus.is_empty() || cfg.lambdas.is_empty() {
        return Err(Error::EmptyExperiment);
    }
    McConfig::new(cfg.draws, 0).validate()?;
    let jobs = jobs(cfg)?;
    if jobs.is_empty() {
        return Err(Error::EmptyExperiment);
    }
    let mut cells = Vec::new();
    for &n in &cfg.ns {
        for &mu in &cfg.mus {
            for &lambda in &cfg.lambdas {
                cells.push((n, mu, lambda));
            }
        }
    }
    let mut counts = vec![vec![0usize; jobs.len()]; cells.len()];
    for (c, &(n, mu, lambda)) in cells.iter().enumerate() {
        let scenario = ScenarioConfig {
            n,
            mu,
            lambda,
            ..cfg.scenario.clone()
        };
        let per_rep = (0..cfg.reps as u64)
            .into_par_iter()
            .map(|r| {
                let seed = derive_seed(cfg.seed, &[c as u64, r]);
                let data = simulate_trial(&scenario, seed)?;
                let est = landmark_estimates(&data, scenario.gamma)?;
                jobs.iter()
                    .map(|job| {
                        let members = subset_members(job.mask);
                        let sub = est.subset(&members)?;
                        let spec = HypothesisSpec::new(
                            vec![0.0; members.len()],
                            job.weights.clone(),
                            cfg.alpha,
                        )?;
                        let mc = McConfig::new(cfg.draws, derive_seed(seed, &[job.mask as u64]));
                        Ok(sw_test(&sub, &spec, &mc)?.p_value <= cfg.alpha)
                    })
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for rep in per_rep {
            for (k, hit) in rep.into_iter().enumerate() {
                counts[c][k] += hit as usize;
            }
        }
    }
    let mut table = StudyResultTable::new(
        &["intersection", "n", "mu", "lambda", "weights"],
        &["type1_error"],
    );
    for (k, job) in jobs.iter().enumerate() {
        for (c, &(n, mu, lambda)) in cells.iter().enumerate() {
            table.push(
                vec![
                    subset_key(job.mask),
                    n.to_string(),
                    mu.to_string(),
                    lambda.to_string(),
                    cfg.weight_sets[job.set].label.clone(),
                ],
                vec![Proportion {
                    hits: counts[c][k],
                    reps: cfg.reps,
                }],
            );
        }
    }
    Ok(table)
}
