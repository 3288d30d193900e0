//! Direct simulation of the number of distinct values `K_n`.
//!
//! A replicate draws `p` from the prior once, then `n` box indices with
//! probabilities `w_j(p)`, and counts distinct indices. Replicate `r` uses
//! its own ChaCha stream `(seed, r)`, and results are reduced in replicate
//! order, so a run is bitwise reproducible for any number of worker threads.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::priors::SuccessPrior;
use crate::weights::{SuccessProbability, WeightFamily};

/// Largest replicate count accepted by [`mc_mean_kn`].
pub const MAX_REPLICATES: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n: u64,
    pub reps: u64,
    pub seed: u64,
    pub prior: SuccessPrior,
    pub family: WeightFamily,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(domain("n", 0.0, "n >= 1"));
        }
        if self.reps < 1 || self.reps > MAX_REPLICATES {
            return Err(domain("reps", self.reps as f64, "1 <= reps <= 2^32"));
        }
        self.prior.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub mean_kn: f64,
    /// Sample standard deviation over `√reps`; zero for a single replicate.
    pub std_error: f64,
    pub reps: u64,
    pub seed: u64,
}

/// Failures before the first success: `⌊log U / log(1−p)⌋`, `U ∈ (0, 1]`.
fn geometric_failures<R: Rng + ?Sized>(p: SuccessProbability, rng: &mut R) -> u64 {
    let u = 1.0 - rng.random::<f64>();
    // `as` saturates at u64::MAX for astronomically small p
    (u.ln() / p.ln_q()).floor() as u64
}

/// Draws `j` with probability `w_j(p)`: `r = 1 + (sum of s geometric failure
/// counts)` has the shifted negative binomial law, and `j` is uniform on
/// `{1, …, r}`.
pub fn sample_box_index<R: Rng + ?Sized>(family: WeightFamily, p: SuccessProbability, rng: &mut R) -> u64 {
    let mut r = 1u64;
    for _ in 0..family.s() {
        r = r.saturating_add(geometric_failures(p, rng));
    }
    rng.random_range(1..=r)
}

/// Geometric weights only: `j = 1 + failures`.
pub fn sample_box_index_geometric<R: Rng + ?Sized>(p: SuccessProbability, rng: &mut R) -> u64 {
    geometric_failures(p, rng).saturating_add(1)
}

/// One draw of `K_n`.
pub fn sample_kn<R: Rng + ?Sized>(prior: SuccessPrior, family: WeightFamily, n: u64, rng: &mut R) -> u64 {
    let p = prior.sample_p(rng);
    let mut seen = HashSet::new();
    for _ in 0..n {
        seen.insert(sample_box_index(family, p, rng));
    }
    seen.len() as u64
}

/// Stream for replicate `r` of a run seeded with `seed`.
pub fn replicate_stream(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Per-replicate `K_n` values in replicate order.
pub fn mc_samples(config: &McConfig) -> Result<Vec<u64>> {
    config.validate()?;
    Ok((0..config.reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_stream(config.seed, r);
            sample_kn(config.prior, config.family, config.n, &mut rng)
        })
        .collect())
}

pub fn mc_mean_kn(config: &McConfig) -> Result<McResult> {
    let samples = mc_samples(config)?;
    let reps = samples.len() as f64;
    let mean = samples.iter().map(|&k| k as f64).sum::<f64>() / reps;
    let std_error = if samples.len() > 1 {
        let var = samples.iter().map(|&k| (k as f64 - mean).powi(2)).sum::<f64>() / (reps - 1.0);
        (var / reps).sqrt()
    } else {
        0.0
    };
    Ok(McResult {
        mean_kn: mean,
        std_error,
        reps: config.reps,
        seed: config.seed,
    })
}
