//! Closed-testing power on simulated trials with treatment effects.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sigwald::estimands::landmark_estimates;
use sigwald::multtest::{all_subsets, closed_testing, subset_key, subset_members, ClosedMethod};
use sigwald::rng::derive_seed;
use sigwald::{Error, McConfig, Result, ScenarioConfig};

use crate::table::{Proportion, StudyResultTable};
use crate::trial::simulate_trial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    EqualWeights,
    UpWeighted,
    MinP,
}

impl Strategy {
    pub fn label(self) -> &'static str {
        match self {
            Strategy::EqualWeights => "equal_weights",
            Strategy::UpWeighted => "up_weighted",
            Strategy::MinP => "min_p",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Study3Config {
    pub ns: Vec<usize>,
    pub strategies: Vec<Strategy>,
    pub up_weights: Vec<f64>,
    pub reps: usize,
    pub draws: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Trial parameters; `n` comes from `ns`.
    pub scenario: ScenarioConfig,
}

impl Study3Config {
    pub fn desk() -> Self {
        Self {
            ns: vec![200, 500, 1000, 2000, 3500],
            strategies: vec![Strategy::EqualWeights, Strategy::UpWeighted, Strategy::MinP],
            up_weights: vec![0.2, 0.4, 0.4],
            reps: 1000,
            draws: 2000,
            alpha: 0.025,
            seed: 1,
            scenario: ScenarioConfig::power_study(200),
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

/// Rows `(n, strategy, subset)` with the fraction of replications in which
/// closed testing rejects every hypothesis of the subset. All strategies see
/// the same data and Monte-Carlo seeds within a replication.
pub fn run_study3(cfg: &Study3Config) -> Result<StudyResultTable> {
    if cfg.reps == 0 || cfg.ns.is_empty() || cfg.strategies.is_empty() {
        return Err(Error::EmptyExperiment);
    }
    McConfig::new(cfg.draws, 0).validate()?;
    let subsets = all_subsets(3);
    let mut table = StudyResultTable::new(&["n", "strategy", "subset"], &["power"]);
    for (c, &n) in cfg.ns.iter().enumerate() {
        let scenario = ScenarioConfig {
            n,
            ..cfg.scenario.clone()
        };
        let per_rep = (0..cfg.reps as u64)
            .into_par_iter()
            .map(|r| {
                let seed = derive_seed(cfg.seed, &[c as u64, r]);
                let data = simulate_trial(&scenario, seed)?;
                let est = landmark_estimates(&data, scenario.gamma)?;
                let mc = McConfig::new(cfg.draws, derive_seed(seed, &[u64::MAX]));
                cfg.strategies
                    .iter()
                    .map(|&s| {
                        let (weights, method) = match s {
                            Strategy::EqualWeights => (vec![1.0; 3], ClosedMethod::Sw),
                            Strategy::UpWeighted => (cfg.up_weights.clone(), ClosedMethod::Sw),
                            Strategy::MinP => (vec![1.0; 3], ClosedMethod::Minp),
                        };
                        let report =
                            closed_testing(&est, &[0.0; 3], &weights, cfg.alpha, &mc, method)?;
                        Ok(subsets
                            .iter()
                            .map(|&m| report.rejects_all(&subset_members(m)))
                            .collect::<Vec<bool>>())
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, s) in cfg.strategies.iter().enumerate() {
            for (i, &m) in subsets.iter().enumerate() {
                let hits = per_rep.iter().filter(|rep| rep[k][i]).count();
                table.push(
                    vec![n.to_string(), s.label().into(), subset_key(m)],
                    vec![Proportion {
                        hits,
                        reps: cfg.reps,
                    }],
                );
            }
        }
    }
    Ok(table)
}
