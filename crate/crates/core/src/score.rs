//! Unbiased estimates of the posterior score `u(θ|y) = ∇θ log p(θ|y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEstimate {
    pub theta: Vec<f64>,
    pub u_hat: Vec<f64>,
    /// Number of simulations or latent draws averaged.
    pub k: usize,
}

fn check_len(what: &str, v: &[f64], d: usize) -> Result<()> {
    if v.len() != d {
        return Err(Error::invalid(format!(
            "{what} has length {} (expected {d})",
            v.len()
        )));
    }
    Ok(())
}

/// Index-ordered componentwise mean of `K` vectors of length `d`.
fn mean_vector(rows: &[Vec<f64>], d: usize, what: &str) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; d];
    for (k, row) in rows.iter().enumerate() {
        check_len(&format!("{what} {k}"), row, d)?;
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    let kf = rows.len() as f64;
    acc.iter_mut().for_each(|a| *a /= kf);
    Ok(acc)
}

/// Gibbs-random-field score estimate from `K` forward simulations at `θ`:
/// `û = s(y) − K⁻¹ Σ s(Y_k) + ∇ log p(θ)`.
pub fn score_type1(
    theta: &[f64],
    s_obs: &[f64],
    s_sims: &[Vec<f64>],
    grad_log_prior: &[f64],
) -> Result<ScoreEstimate> {
    if s_sims.is_empty() {
        return Err(Error::invalid("score_type1 needs at least one simulation"));
    }
    let d = theta.len();
    check_len("observed statistic", s_obs, d)?;
    check_len("prior gradient", grad_log_prior, d)?;
    let sim_mean = mean_vector(s_sims, d, "simulated statistic")?;
    let u_hat = (0..d)
        .map(|j| s_obs[j] - sim_mean[j] + grad_log_prior[j])
        .collect();
    Ok(ScoreEstimate {
        theta: theta.to_vec(),
        u_hat,
        k: s_sims.len(),
    })
}

/// Latent-variable score estimate through Fisher's identity:
/// `û = K⁻¹ Σ ∇θ log p(θ, X_k | y)` with `X_k ~ p(x | θ, y)`.
pub fn score_type2(theta: &[f64], u_values: &[Vec<f64>]) -> Result<ScoreEstimate> {
    if u_values.is_empty() {
        return Err(Error::invalid("score_type2 needs at least one latent draw"));
    }
    let u_hat = mean_vector(u_values, theta.len(), "latent score")?;
    Ok(ScoreEstimate {
        theta: theta.to_vec(),
        u_hat,
        k: u_values.len(),
    })
}
