//! TOML experiment configuration.
//!
//! ```toml
//! experiment = "exponential"   # exponential | ising | ergm | sir | rho-curve | k-allocation
//! seed = 1
//! replicates = 20
//! iterations = [100, 1000, 10000]
//! k = [1, 10, 100]
//! degrees = [2]
//! burn_in = 1000
//!
//! [exponential]
//! y = 2.0
//! proposal_sd = 1.0
//! ```
//!
//! Model sections (`[exponential]`, `[ising]`, `[ergm]`, `[sir]`,
//! `[k_allocation]`) are optional and fall back to the defaults below.
//! Relative data paths are resolved against the directory of the
//! configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cv::CvOptions;
use crate::error::{Error, Result};
use crate::grf::{IsingSimulator, PairCounting, SimConfig};
use crate::prior::Prior;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Exponential,
    Ising,
    Ergm,
    Sir,
    RhoCurve,
    KAllocation,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Exponential => "exponential",
            ExperimentKind::Ising => "ising",
            ExperimentKind::Ergm => "ergm",
            ExperimentKind::Sir => "sir",
            ExperimentKind::RhoCurve => "rho-curve",
            ExperimentKind::KAllocation => "k-allocation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    /// Independent repetitions used to estimate `std[μ̂]`.
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Grid of recorded chain lengths `I`.
    pub iterations: Vec<usize>,
    /// Grid of score simulations per iterate `K`.
    pub k: Vec<usize>,
    #[serde(default = "default_degrees")]
    pub degrees: Vec<u8>,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Worker threads for forward simulation; defaults to the host's
    /// available parallelism.
    #[serde(default)]
    pub cores: Option<usize>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub cv: CvOptions,
    #[serde(default)]
    pub exponential: ExponentialSection,
    #[serde(default)]
    pub ising: IsingSection,
    #[serde(default)]
    pub ergm: ErgmSection,
    #[serde(default)]
    pub sir: SirSection,
    #[serde(default)]
    pub k_allocation: KAllocationSection,
}

fn default_replicates() -> usize {
    20
}

fn default_degrees() -> Vec<u8> {
    vec![1, 2]
}

fn default_burn_in() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExponentialSection {
    /// The single observation.
    pub y: f64,
    pub proposal_sd: f64,
    pub initial_theta: f64,
}

impl Default for ExponentialSection {
    fn default() -> Self {
        Self {
            y: 2.0,
            proposal_sd: 1.0,
            initial_theta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsingSection {
    /// Lattice file; when absent the data are drawn exactly at
    /// `data_theta` with `data_seed`.
    pub data: Option<PathBuf>,
    pub rows: usize,
    pub cols: usize,
    pub data_theta: f64,
    pub data_seed: u64,
    pub counting: PairCounting,
    pub prior_sd: f64,
    pub proposal_sd: f64,
    pub initial_theta: f64,
    pub simulator: IsingSimulator,
    pub count_exchange_draw: bool,
    /// Compute the grid-quadrature posterior mean alongside the chain.
    pub oracle: bool,
}

impl Default for IsingSection {
    fn default() -> Self {
        Self {
            data: None,
            rows: 16,
            cols: 16,
            data_theta: 0.4,
            data_seed: 1,
            counting: PairCounting::Single,
            prior_sd: 5.0,
            proposal_sd: 0.03,
            initial_theta: 0.0,
            simulator: IsingSimulator::Exact,
            count_exchange_draw: false,
            oracle: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErgmSection {
    /// Adjacency matrix or edge list; when absent a graph is simulated at
    /// `data_theta` with `data_seed`.
    pub data: Option<PathBuf>,
    pub nodes: usize,
    pub data_theta: [f64; 2],
    pub data_seed: u64,
    pub prior: Prior,
    pub proposal_sd: [f64; 2],
    pub initial_theta: [f64; 2],
    pub sim: SimConfig,
    pub count_exchange_draw: bool,
}

impl Default for ErgmSection {
    fn default() -> Self {
        Self {
            data: None,
            nodes: 16,
            data_theta: [-1.5, 0.05],
            data_seed: 1,
            prior: Prior::Normal { mean: 0.0, sd: 10.0 },
            proposal_sd: [0.3, 0.05],
            initial_theta: [-1.0, 0.0],
            sim: SimConfig::ERGM_DEFAULT,
            count_exchange_draw: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SirSection {
    /// Observation file (`time,x1,x2`); when absent observations are
    /// simulated from `data_theta`.
    pub observations: Option<PathBuf>,
    pub population: u64,
    pub data_theta: [f64; 2],
    pub x0: [f64; 2],
    pub t_end: f64,
    pub n_obs: usize,
    /// Euler steps per observation gap when generating data.
    pub data_substeps: usize,
    pub data_seed: u64,
    pub latent_per_gap: usize,
    pub prior: Prior,
    pub proposal_sd: [f64; 2],
    pub initial_theta: [f64; 2],
    pub inner_burn_in: usize,
    pub path_sweeps: usize,
}

impl Default for SirSection {
    fn default() -> Self {
        Self {
            observations: None,
            population: 1000,
            data_theta: [0.5, 0.25],
            x0: [0.99, 0.01],
            t_end: 35.0,
            n_obs: 10,
            data_substeps: 6,
            data_seed: 1,
            latent_per_gap: 5,
            prior: Prior::FlatPositive,
            proposal_sd: [0.03, 0.01],
            initial_theta: [0.5, 0.25],
            inner_burn_in: 50,
            path_sweeps: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KAllocationSection {
    /// Core counts `K₀` to allocate for.
    pub cores: Vec<usize>,
    /// Candidates `K = 1..=factor·K₀`.
    pub k_max_factor: usize,
    /// Serial budget `c`.
    pub budget: f64,
}

impl Default for KAllocationSection {
    fn default() -> Self {
        Self {
            cores: vec![1, 2, 4, 8],
            k_max_factor: 4,
            budget: 10_000.0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Parse a file and resolve relative data paths against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut().filter(|q| q.is_relative()) {
                *q = base.join(&*q);
            }
        };
        resolve(&mut config.ising.data);
        resolve(&mut config.ergm.data);
        resolve(&mut config.sir.observations);
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.replicates == 0 {
            return bad("replicates must be positive".into());
        }
        for (name, grid) in [("iterations", &self.iterations), ("k", &self.k)] {
            if grid.is_empty() || grid.contains(&0) {
                return bad(format!("{name} must be a non-empty list of positive counts"));
            }
        }
        if self.degrees.is_empty() || self.degrees.iter().any(|&d| d == 0 || d > 3) {
            return bad("degrees must be a non-empty list drawn from 1, 2, 3".into());
        }
        if self.cores == Some(0) {
            return bad("cores must be positive".into());
        }
        if self.iterations.iter().any(|&i| i < 4) {
            return bad("every chain length must be at least 4".into());
        }
        match self.experiment {
            ExperimentKind::Exponential | ExperimentKind::RhoCurve | ExperimentKind::KAllocation => {
                let e = &self.exponential;
                if !(e.y > 0.0 && e.proposal_sd > 0.0 && e.initial_theta > 0.0) {
                    return bad("exponential y, proposal_sd and initial_theta must be positive".into());
                }
            }
            ExperimentKind::Ising => {
                let s = &self.ising;
                if s.data.is_none() && (s.rows == 0 || s.cols == 0) {
                    return bad("ising rows and cols must be positive".into());
                }
                if !(s.prior_sd > 0.0 && s.proposal_sd > 0.0) {
                    return bad("ising prior_sd and proposal_sd must be positive".into());
                }
            }
            ExperimentKind::Ergm => {
                let s = &self.ergm;
                if s.data.is_none() && s.nodes < 2 {
                    return bad("ergm needs at least two nodes".into());
                }
                if !s.proposal_sd.iter().all(|&v| v > 0.0) {
                    return bad("ergm proposal_sd must be positive".into());
                }
            }
            ExperimentKind::Sir => {
                let s = &self.sir;
                if s.observations.is_none() && (s.n_obs < 2 || s.data_substeps == 0 || !(s.t_end > 0.0)) {
                    return bad("sir data generation needs n_obs >= 2, data_substeps >= 1 and t_end > 0".into());
                }
                if s.population == 0 || !s.proposal_sd.iter().all(|&v| v > 0.0) {
                    return bad("sir population and proposal_sd must be positive".into());
                }
            }
        }
        if matches!(self.experiment, ExperimentKind::RhoCurve | ExperimentKind::KAllocation) {
            let mut ks = self.k.clone();
            ks.sort_unstable();
            ks.dedup();
            if ks.len() < 2 {
                return bad("a rho curve needs at least two distinct K values".into());
            }
        }
        if self.experiment == ExperimentKind::KAllocation {
            let a = &self.k_allocation;
            if a.cores.is_empty() || a.cores.contains(&0) || a.k_max_factor == 0 || !(a.budget > 0.0) {
                return bad("k_allocation needs positive cores, k_max_factor and budget".into());
            }
        }
        Ok(())
    }

    pub fn max_iterations(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }

    pub fn max_k(&self) -> usize {
        self.k.iter().copied().max().unwrap_or(0)
    }
}
