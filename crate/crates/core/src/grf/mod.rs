//! Gibbs random fields `f(y; θ) = exp(θᵀ s(y)) / 𝔓(θ)`.

pub mod ergm;
pub mod exponential;
pub mod io;
pub mod ising;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use ergm::{
    ergm_gibbs_forward, ergm_log_partition_bruteforce, ergm_suff_stats, ErgmModel, Graph,
};
pub use exponential::ExponentialModel;
pub use ising::{
    ising_gibbs_forward, ising_log_partition_exact, ising_posterior_mean_grid,
    ising_posterior_mean_grid_with, ising_suff_stat, ising_suff_stat_with,
    GridPosterior, IsingExactSampler, IsingLattice, IsingModel, IsingSimulator, PairCounting,
};

/// Settings for MCMC-based forward simulation.
///
/// `burn_in` and `lag` count single-site (or single-dyad) updates. Each
/// chain starts from a uniformly random state, discards `burn_in` updates
/// and then returns `draws_per_chain` states separated by `lag` updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub burn_in: usize,
    pub lag: usize,
    #[serde(default = "one")]
    pub draws_per_chain: usize,
}

fn one() -> usize {
    1
}

impl SimConfig {
    pub const ISING_DEFAULT: SimConfig = SimConfig {
        burn_in: 1000,
        lag: 500,
        draws_per_chain: 1,
    };
    pub const ERGM_DEFAULT: SimConfig = SimConfig {
        burn_in: 1000,
        lag: 1000,
        draws_per_chain: 1,
    };
}

/// Draws sufficient statistics from `p(y | θ)` at a fixed `θ`.
pub trait ForwardSampler: Send + Sync {
    /// `count` draws of `s(Y)` using a single stream seeded by `seed`.
    fn draw_stats(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>>;

    /// Preferred number of draws per seeded stream when a batch is split
    /// into parallel jobs.
    fn draws_per_stream(&self) -> usize {
        1
    }
}

/// A Gibbs random field with observed data.
pub trait GrfModel: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// `s(y)` for the observed data.
    fn observed_stats(&self) -> &[f64];

    /// Parameter space restriction of the likelihood itself.
    fn in_support(&self, _theta: &[f64]) -> bool {
        true
    }

    /// Forward simulator at `θ`; may precompute `θ`-dependent tables.
    fn sampler_at(&self, theta: &[f64]) -> Result<Box<dyn ForwardSampler + '_>>;

    /// `log 𝔓(θ)` when it can be computed exactly.
    fn exact_log_partition(&self, _theta: &[f64]) -> Option<Result<f64>> {
        None
    }
}
