//! Single-observation exponential model `p(y|θ) = θ e^{−θy}`, viewed as a
//! Gibbs random field with `s(y) = −y` and `𝔓(θ) = 1/θ`. Under a flat
//! prior on `θ > 0` the posterior is Gamma(2, rate y).

use rand_distr::{Distribution, Exp};

use super::{ForwardSampler, GrfModel};
use crate::error::{Error, Result};
use crate::parallel::rng_from_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialModel {
    y: f64,
    obs: [f64; 1],
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive (got {v})")))
    }
}

impl ExponentialModel {
    pub fn new(y: f64) -> Result<Self> {
        positive("y", y)?;
        Ok(Self { y, obs: [-y] })
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// Exact posterior score `−y + 1/θ`.
    pub fn score(&self, theta: f64) -> Result<f64> {
        positive("theta", theta)?;
        Ok(-self.y + 1.0 / theta)
    }

    pub fn posterior_mean(&self) -> f64 {
        2.0 / self.y
    }

    /// `y² θ e^{−θy}`.
    pub fn posterior_density(&self, theta: f64) -> Result<f64> {
        positive("theta", theta)?;
        Ok(self.y * self.y * theta * (-theta * self.y).exp())
    }

    pub fn log_posterior(&self, theta: f64) -> f64 {
        if theta > 0.0 {
            theta.ln() - theta * self.y
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Coefficients `[0, 1/(2y)]` of the degree-two zero-variance control
    /// variate for `g(θ) = θ`.
    pub fn zero_variance_coeffs(&self) -> [f64; 2] {
        [0.0, 1.0 / (2.0 * self.y)]
    }
}

struct ExponentialSampler {
    dist: Exp<f64>,
}

impl ForwardSampler for ExponentialSampler {
    fn draw_stats(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = rng_from_seed(seed);
        Ok((0..count)
            .map(|_| vec![-self.dist.sample(&mut rng)])
            .collect())
    }
}

impl GrfModel for ExponentialModel {
    fn name(&self) -> &str {
        "exponential"
    }

    fn dim(&self) -> usize {
        1
    }

    fn observed_stats(&self) -> &[f64] {
        &self.obs
    }

    fn in_support(&self, theta: &[f64]) -> bool {
        theta[0] > 0.0 && theta[0].is_finite()
    }

    fn sampler_at(&self, theta: &[f64]) -> Result<Box<dyn ForwardSampler + '_>> {
        positive("theta", theta[0])?;
        let dist = Exp::new(theta[0]).map_err(|e| Error::invalid(e.to_string()))?;
        Ok(Box::new(ExponentialSampler { dist }))
    }

    fn exact_log_partition(&self, theta: &[f64]) -> Option<Result<f64>> {
        Some(positive("theta", theta[0]).map(|_| -theta[0].ln()))
    }
}
