//! Monte Carlo oracle for the closed-form models.
//!
//! Two levels are simulated: the energy detector itself (sample statistics of `M`) and whole
//! frames of PU/SU activity. Randomness comes from ChaCha8 (`rand_chacha`). Work is cut into fixed
//! chunks; chunk `k` draws from stream `k` of the generator seeded with the run seed, so results
//! are bit-identical however the chunks are scheduled.

mod detector;
mod system;

pub use detector::{
    draw_metric, simulate_detector, simulate_metric_moments, Hypothesis, MetricMoments, SampleGenerator,
    SampleTrialResult,
};
pub use system::{on_intervals, simulate_system, DetectorModel, SystemSimConfig, SystemTrialResult};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Name of the generator, recorded in run metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.3), seed_from_u64(seed), stream = chunk index";

/// Run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Generator for work chunk `chunk`.
    pub fn stream(self, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(chunk);
        rng
    }
}

pub(crate) const CHUNK: u64 = 4096;

/// Largest trial count whose tallies are exact in `f64`.
const MAX_TRIALS: u64 = 1 << 53;

pub(crate) fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    if trials > MAX_TRIALS {
        return Err(Error::Config(format!("{trials} trials exceed the 2^53 counting limit")));
    }
    Ok(())
}

/// Run `f(rng, count)` over consecutive chunks of `total` items and return the per-chunk outputs
/// in chunk order.
pub(crate) fn chunked<T, F>(seed: RngSeed, total: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    let chunks = total.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed.stream(k);
            let n = CHUNK.min(total - k * CHUNK);
            f(&mut rng, n)
        })
        .collect()
}

/// Binomial standard error `sqrt(p(1-p)/n)`.
pub fn binomial_std_err(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}
