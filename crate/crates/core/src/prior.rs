//! Independent per-coordinate prior densities with gradients.

use serde::{Deserialize, Serialize};

/// Prior on `θ`, applied independently to every coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Prior {
    /// Improper uniform prior on ℝᵈ.
    Flat,
    /// Improper uniform prior on (0, ∞)ᵈ.
    FlatPositive,
    Normal { mean: f64, sd: f64 },
    /// Gamma with shape `k` and scale `s`: density ∝ θ^(k−1) e^(−θ/s).
    Gamma { shape: f64, scale: f64 },
}

impl Prior {
    pub fn in_support(&self, theta: &[f64]) -> bool {
        match self {
            Prior::Flat | Prior::Normal { .. } => theta.iter().all(|t| t.is_finite()),
            Prior::FlatPositive | Prior::Gamma { .. } => {
                theta.iter().all(|&t| t > 0.0 && t.is_finite())
            }
        }
    }

    /// Log density up to an additive constant; `−∞` outside the support.
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        if !self.in_support(theta) {
            return f64::NEG_INFINITY;
        }
        match *self {
            Prior::Flat | Prior::FlatPositive => 0.0,
            Prior::Normal { mean, sd } => theta
                .iter()
                .map(|t| -0.5 * ((t - mean) / sd).powi(2))
                .sum(),
            Prior::Gamma { shape, scale } => theta
                .iter()
                .map(|t| (shape - 1.0) * t.ln() - t / scale)
                .sum(),
        }
    }

    pub fn grad_log_density(&self, theta: &[f64]) -> Vec<f64> {
        match *self {
            Prior::Flat | Prior::FlatPositive => vec![0.0; theta.len()],
            Prior::Normal { mean, sd } => theta.iter().map(|t| -(t - mean) / (sd * sd)).collect(),
            Prior::Gamma { shape, scale } => theta
                .iter()
                .map(|t| (shape - 1.0) / t - 1.0 / scale)
                .collect(),
        }
    }
}
