//! Latent path imputation between noise-free observations.
//!
//! Each gap between consecutive observations holds `m` latent points on
//! the uniform mesh. A sweep proposes a fresh sub-path for every gap from
//! the modified diffusion bridge
//!
//! ```text
//! x_j ~ N(x_{j−1} + (y_b − x_{j−1}) δt/Δ_j,  β(x_{j−1}) δt (Δ_j − δt)/Δ_j)
//! ```
//!
//! where `Δ_j` is the time left until the gap's right endpoint `y_b`, and
//! accepts it with an independence Metropolis–Hastings step targeting the
//! Euler–Maruyama density of the gap. Gaps are conditionally independent
//! given the observations, so they are updated separately.

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{cholesky2, regularise, sir_diffusion, transition, SdePath, SirParams};
use crate::error::{Error, Result};
use crate::parallel::rng_from_seed;

/// Sweeps without a single acceptance in some gap before a warning is
/// attached to the output.
pub const DEFAULT_WARN_WINDOW: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeOutput {
    pub path: SdePath,
    /// Acceptance rate per gap over the run.
    pub acceptance: Vec<f64>,
    pub mixing_warning: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BridgeSampler {
    params: SirParams,
    observations: SdePath,
    latent_per_gap: usize,
    dt: f64,
    warn_window: usize,
}

fn gaussian_log_density(d: Vector2<f64>, cov: &Matrix2<f64>) -> Option<f64> {
    let det = cov.determinant();
    if !(det > 0.0) {
        return None;
    }
    let inv = cov.try_inverse()?;
    Some(-(2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * (d.transpose() * inv * d)[(0, 0)])
}

impl BridgeSampler {
    pub fn new(params: SirParams, observations: &SdePath, latent_per_gap: usize) -> Result<Self> {
        if observations.len() < 2 {
            return Err(Error::invalid("bridge sampling needs at least two observations"));
        }
        let dt = observations.dt() / (latent_per_gap + 1) as f64;
        let observations = SdePath::observed(
            observations.times().to_vec(),
            observations.states().to_vec(),
        )?;
        Ok(Self {
            params,
            observations,
            latent_per_gap,
            dt,
            warn_window: DEFAULT_WARN_WINDOW,
        })
    }

    pub fn with_warn_window(mut self, sweeps: usize) -> Self {
        self.warn_window = sweeps;
        self
    }

    pub fn params(&self) -> &SirParams {
        &self.params
    }

    pub fn set_params(&mut self, params: SirParams) {
        self.params = params;
    }

    pub fn observations(&self) -> &SdePath {
        &self.observations
    }

    pub fn gaps(&self) -> usize {
        self.observations.len() - 1
    }

    pub fn latent_per_gap(&self) -> usize {
        self.latent_per_gap
    }

    /// Full-mesh path with latent points linearly interpolated.
    pub fn initial_path(&self) -> SdePath {
        let m = self.latent_per_gap;
        let obs = &self.observations;
        let n = self.gaps() * (m + 1) + 1;
        let t0 = obs.times()[0];
        let mut states = Vec::with_capacity(n);
        let mut mask = Vec::with_capacity(n);
        for g in 0..self.gaps() {
            let (a, b) = (obs.states()[g], obs.states()[g + 1]);
            for j in 0..=m {
                let w = j as f64 / (m + 1) as f64;
                states.push([a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]);
                mask.push(j == 0);
            }
        }
        states.push(obs.states()[self.gaps()]);
        mask.push(true);
        let times = (0..n).map(|i| t0 + i as f64 * self.dt).collect();
        SdePath::new(times, states, mask).expect("interpolated path is valid")
    }

    fn check_path(&self, path: &SdePath) -> Result<()> {
        let m = self.latent_per_gap;
        if path.len() != self.gaps() * (m + 1) + 1 {
            return Err(Error::invalid(format!(
                "path has {} points, expected {}",
                path.len(),
                self.gaps() * (m + 1) + 1
            )));
        }
        Ok(())
    }

    /// Log Euler–Maruyama density of the transitions inside gap `g`
    /// with its latent points replaced by `latent`.
    fn gap_log_target(&self, path: &SdePath, g: usize, latent: &[[f64; 2]]) -> Option<f64> {
        let a = g * (self.latent_per_gap + 1);
        let points = std::iter::once(path.states()[a])
            .chain(latent.iter().copied())
            .chain(std::iter::once(path.states()[a + self.latent_per_gap + 1]));
        let pts: Vec<[f64; 2]> = points.collect();
        let mut total = 0.0;
        for w in pts.windows(2) {
            total += transition(w[0], w[1], self.dt, &self.params, a).ok()?.0;
        }
        Some(total)
    }

    /// Bridge proposal mean and covariance for the point after `x`, with
    /// `remaining` time left until the endpoint `y`.
    fn proposal_moments(
        &self,
        x: [f64; 2],
        y: [f64; 2],
        remaining: f64,
    ) -> Option<(Vector2<f64>, Matrix2<f64>)> {
        let xv = Vector2::from(x);
        let mean = xv + (Vector2::from(y) - xv) * (self.dt / remaining);
        let d = sir_diffusion(x, &self.params);
        let beta = Matrix2::new(d[0][0], d[0][1], d[1][0], d[1][1]);
        if !(beta.trace() > 0.0) {
            return None;
        }
        let (beta, _) = regularise(beta);
        Some((mean, beta * (self.dt * (remaining - self.dt) / remaining)))
    }

    fn gap_log_proposal(&self, path: &SdePath, g: usize, latent: &[[f64; 2]]) -> Option<f64> {
        let m = self.latent_per_gap;
        let a = g * (m + 1);
        let y = path.states()[a + m + 1];
        let mut x = path.states()[a];
        let mut total = 0.0;
        for (j, next) in latent.iter().enumerate() {
            let remaining = (m + 1 - j) as f64 * self.dt;
            let (mean, cov) = self.proposal_moments(x, y, remaining)?;
            total += gaussian_log_density(Vector2::from(*next) - mean, &cov)?;
            x = *next;
        }
        Some(total)
    }

    fn propose(&self, path: &SdePath, g: usize, rng: &mut impl Rng) -> Option<Vec<[f64; 2]>> {
        let m = self.latent_per_gap;
        let a = g * (m + 1);
        let y = path.states()[a + m + 1];
        let mut x = path.states()[a];
        let mut out = Vec::with_capacity(m);
        for j in 0..m {
            let remaining = (m + 1 - j) as f64 * self.dt;
            let (mean, cov) = self.proposal_moments(x, y, remaining)?;
            let z = Vector2::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
            let next = mean + cholesky2(&cov) * z;
            if next[0] < 0.0 || next[1] < 0.0 || !next.iter().all(|v| v.is_finite()) {
                return None;
            }
            x = [next[0], next[1]];
            out.push(x);
        }
        Some(out)
    }

    /// One independence Metropolis–Hastings update per gap. Returns which
    /// gaps accepted.
    pub fn sweep(&self, path: &mut SdePath, rng: &mut impl Rng) -> Result<Vec<bool>> {
        self.check_path(path)?;
        let m = self.latent_per_gap;
        let mut accepted = vec![false; self.gaps()];
        if m == 0 {
            accepted.iter_mut().for_each(|a| *a = true);
            return Ok(accepted);
        }
        for (g, acc) in accepted.iter_mut().enumerate() {
            let a = g * (m + 1);
            let current: Vec<[f64; 2]> = path.states()[a + 1..=a + m].to_vec();
            // The uniform draw is consumed even when the proposal is
            // invalid so that streams stay aligned across gaps.
            let proposal = self.propose(path, g, rng);
            let log_u = rng.random::<f64>().ln();
            let Some(proposal) = proposal else { continue };
            let new = self
                .gap_log_target(path, g, &proposal)
                .zip(self.gap_log_proposal(path, g, &proposal));
            let Some((target_new, q_new)) = new else { continue };
            let old_target = self.gap_log_target(path, g, &current);
            let old_q = self.gap_log_proposal(path, g, &current);
            let log_ratio = match (old_target, old_q) {
                (Some(t), Some(q)) => (target_new - q_new) - (t - q),
                // A current state outside the target support is always left.
                (None, _) => f64::INFINITY,
                (Some(_), None) => f64::INFINITY,
            };
            if log_u < log_ratio {
                path.states_mut()[a + 1..=a + m].copy_from_slice(&proposal);
                *acc = true;
            }
        }
        Ok(accepted)
    }

    /// Run `sweeps` sweeps from `start`.
    pub fn run(&self, mut start: SdePath, sweeps: usize, rng: &mut impl Rng) -> Result<BridgeOutput> {
        self.check_path(&start)?;
        let mut counts = vec![0usize; self.gaps()];
        for _ in 0..sweeps {
            for (c, a) in counts.iter_mut().zip(self.sweep(&mut start, rng)?) {
                *c += usize::from(a);
            }
        }
        let acceptance: Vec<f64> = if self.latent_per_gap == 0 || sweeps == 0 {
            vec![1.0; self.gaps()]
        } else {
            counts.iter().map(|&c| c as f64 / sweeps as f64).collect()
        };
        let stuck: Vec<usize> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0)
            .map(|(g, _)| g)
            .collect();
        let mixing_warning = (self.latent_per_gap > 0
            && sweeps >= self.warn_window
            && !stuck.is_empty())
        .then(|| format!("no bridge proposal accepted in {sweeps} sweeps for gaps {stuck:?}"));
        Ok(BridgeOutput {
            path: start,
            acceptance,
            mixing_warning,
        })
    }

    /// `∇θ log p(X | θ)` of a full-mesh path.
    pub fn path_score(&self, path: &SdePath) -> Result<[f64; 2]> {
        super::sde_path_score(path, &self.params)
    }
}

/// Impute latent points between `observations` with `n_steps` bridge
/// sweeps started from linear interpolation.
pub fn bridge_sample_latent(
    params: &SirParams,
    observations: &SdePath,
    n_latent_per_gap: usize,
    n_steps: usize,
    seed: u64,
) -> Result<BridgeOutput> {
    let sampler = BridgeSampler::new(*params, observations, n_latent_per_gap)?;
    let mut rng = rng_from_seed(seed);
    sampler.run(sampler.initial_path(), n_steps, &mut rng)
}
