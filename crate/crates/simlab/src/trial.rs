use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use sigwald::{Result, ScenarioConfig, TrialRecord};

/// Simulates `cfg.n` subjects: `A ~ Bernoulli(1/2)`, terminal time
/// `T ~ Exp(lambda + trt_hazard * A)`, `R = 1(T <= tau)`, and, when `R = 0`,
/// `Y ~ N(mu + trt_score * A, sigma^2)`.
pub fn simulate_trial(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let time = [false, true].map(|a| Exp::new(cfg.hazard(a)).expect("validated hazard"));
    let score =
        [false, true].map(|a| Normal::new(cfg.mean_score(a), cfg.sigma).expect("validated sigma"));
    (0..cfg.n)
        .map(|_| {
            let a = rng.random_bool(0.5);
            let r = time[a as usize].sample(&mut rng) <= cfg.tau;
            let y = (!r).then(|| score[a as usize].sample(&mut rng));
            TrialRecord::new(a, r, y, cfg.gamma)
        })
        .collect()
}
