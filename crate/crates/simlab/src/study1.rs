//! Two standardized effects with correlation `rho`: power of the signed
//! Wald test against the joint min-p test, with the alternative sized so
//! the min-p test has a fixed power.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sigwald::intersection::signed_wald_two_z;
use sigwald::rng::derive_seed;
use sigwald::{Error, Result};

use crate::critical::{critical_value_two, minp_critical_two, shift_for_minp_power};
use crate::table::{Proportion, StudyResultTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Study1Config {
    pub rhos: Vec<f64>,
    /// Ratios `z_min / z_max`.
    pub s_grid: Vec<f64>,
    pub alpha: f64,
    pub target_power: f64,
    pub reps: usize,
    pub seed: u64,
}

impl Study1Config {
    pub fn desk() -> Self {
        Self {
            rhos: vec![-0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75],
            s_grid: (-20..=20).map(|k| k as f64 / 20.0).collect(),
            alpha: 0.025,
            target_power: 0.9,
            reps: 10_000,
            seed: 1,
        }
    }

    pub fn paper() -> Self {
        Self {
            reps: 100_000,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.rhos.iter().any(|r| !(r.abs() < 1.0)) {
            return bad("correlations must lie in (-1, 1)");
        }
        if self.s_grid.iter().any(|s| !(-1.0..=1.0).contains(s)) {
            return bad("ratios must lie in [-1, 1]");
        }
        if self.reps < 100 {
            return bad("at least 100 replications per cell");
        }
        if self.rhos.is_empty() || self.s_grid.is_empty() {
            return Err(Error::EmptyExperiment);
        }
        Ok(())
    }
}

/// One row per `(rho, s)`: the sized `z_max`, both critical values, and the
/// simulated rejection rates of the signed Wald and min-p tests on the same
/// draws.
pub fn run_study1(cfg: &Study1Config) -> Result<StudyResultTable> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = (0..cfg.rhos.len())
        .flat_map(|i| (0..cfg.s_grid.len()).map(move |k| (i, k)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(i, k)| {
            let (rho, s) = (cfg.rhos[i], cfg.s_grid[k]);
            let c_sw = critical_value_two(rho, cfg.alpha)?;
            let c_mp = minp_critical_two(rho, cfg.alpha)?;
            let m = shift_for_minp_power(rho, s, cfg.alpha, cfg.target_power)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[i as u64, k as u64]));
            let root = (1.0 - rho * rho).sqrt();
            let (mut sw, mut mp) = (0, 0);
            for _ in 0..cfg.reps {
                let e1: f64 = StandardNormal.sample(&mut rng);
                let e2: f64 = StandardNormal.sample(&mut rng);
                let z1 = m + e1;
                let z2 = s * m + rho * e1 + root * e2;
                sw += (signed_wald_two_z(z1, z2, rho) >= c_sw) as usize;
                mp += (z1.max(z2) >= c_mp) as usize;
            }
            let key = vec![
                rho.to_string(),
                s.to_string(),
                format!("{m:.6}"),
                format!("{c_sw:.6}"),
                format!("{c_mp:.6}"),
            ];
            let reps = cfg.reps;
            Ok((
                key,
                vec![Proportion { hits: sw, reps }, Proportion { hits: mp, reps }],
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = StudyResultTable::new(
        &["rho", "s", "z_max", "sw_critical", "minp_critical"],
        &["sw_power", "minp_power"],
    );
    for (key, values) in rows {
        table.push(key, values);
    }
    Ok(table)
}
