#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Reduced-variance control variates for Bayesian estimation with
//! intractable likelihoods.
//!
//! The crate covers score estimation from forward simulations or latent
//! draws ([`score`]), polynomial control variates and their diagnostics
//! ([`cv`]), Gibbs random field and SDE models ([`grf`], [`sde`]), the
//! outer MCMC drivers ([`samplers`]), deterministic parallel simulation
//! ([`parallel`]) and a configuration-driven experiment runner
//! ([`experiments`]).

pub mod cv;
pub mod error;
pub mod experiments;
pub mod grf;
pub mod parallel;
pub mod prior;
pub mod samplers;
pub mod score;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
