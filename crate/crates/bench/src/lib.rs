//! Shared fixtures for the solver benchmarks.

use cqexp_core::{random, BipartiteState, CQChannel, Ensemble, Source};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `k` random mixed states of dimension `dim` with random priors.
pub fn ensemble(seed: u64, k: usize, dim: usize) -> Ensemble {
    let mut r = rng(seed);
    let priors = random::distribution(&mut r, k);
    let states = (0..k).map(|_| random::mixed_state(&mut r, dim, dim)).collect();
    Ensemble::new(priors, states).expect("random ensembles are valid")
}

pub fn channel(seed: u64, d: usize, dim: usize) -> CQChannel {
    random::mixed_channel(&mut rng(seed), d, dim)
}

/// CQ state of a random source on `d` letters with `dim`-dimensional outputs.
pub fn cq_state(seed: u64, d: usize, dim: usize) -> BipartiteState {
    let mut r = rng(seed);
    let source = Source::new(random::distribution(&mut r, d), random::mixed_channel(&mut r, d, dim))
        .expect("random sources are valid");
    source.cq_state().expect("random sources have CQ states")
}
