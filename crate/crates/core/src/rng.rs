//! Splittable deterministic randomness.
//!
//! Every stochastic operation in the crate takes an explicit [`RngState`].
//! Streams are derived from a `(seed, lane)` pair, so parallel lanes (batch
//! samples, sweep points, bootstrap replicates) can draw independently while
//! the whole experiment stays reproducible from one master seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Counter-based RNG state. Cloning forks the full state, so a value can be
/// captured and replayed bitwise.
#[derive(Debug, Clone)]
pub struct RngState {
    inner: ChaCha8Rng,
}

impl RngState {
    /// Root stream for a seed (lane 0).
    pub fn from_seed(seed: u64) -> Self {
        Self::derive(seed, 0)
    }

    /// Independent stream identified by `(seed, lane)`.
    pub fn derive(seed: u64, lane: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(lane);
        RngState { inner }
    }

    /// Child stream derived from this state's seed position; advances `self`.
    pub fn split(&mut self, lane: u64) -> Self {
        let seed = self.inner.gen::<u64>();
        Self::derive(seed, lane)
    }

    /// One standard-normal draw.
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// `n` independent standard-normal draws.
    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform integer in `[0, n)`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }
}
