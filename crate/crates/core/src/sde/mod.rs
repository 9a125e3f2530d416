//! SIR diffusion with an Euler–Maruyama likelihood.
//!
//! `dX = α(X; θ) dt + β(X; θ)^{1/2} dW` with susceptible and infected
//! proportions `X = (X₁, X₂)`, infection rate `θ₁` and recovery rate `θ₂`.

pub mod bridge;
pub mod io;

use nalgebra::{Matrix2, Vector2};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::rng_from_seed;

pub use bridge::{bridge_sample_latent, BridgeOutput, BridgeSampler};

/// Relative eigenvalue floor below which `β` is regularised.
pub const REGULARISATION_THRESHOLD: f64 = 1e-12;
/// Jitter `ε` in `β + ε (tr β / 2) I`.
pub const REGULARISATION_JITTER: f64 = 1e-8;

/// Discretised trajectory on a uniform time mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdePath {
    times: Vec<f64>,
    states: Vec<[f64; 2]>,
    observed: Vec<bool>,
}

impl SdePath {
    pub fn new(times: Vec<f64>, states: Vec<[f64; 2]>, observed: Vec<bool>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() || times.len() != observed.len() {
            return Err(Error::invalid(format!(
                "path needs matching non-empty times ({}), states ({}) and mask ({})",
                times.len(),
                states.len(),
                observed.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) || states.iter().flatten().any(|x| !x.is_finite())
        {
            return Err(Error::invalid("path contains non-finite values"));
        }
        if times.len() > 1 {
            let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
            if !(dt > 0.0) {
                return Err(Error::invalid("times must be strictly increasing"));
            }
            if let Some(i) = times
                .windows(2)
                .position(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0))
            {
                return Err(Error::invalid(format!(
                    "time mesh is not uniform at index {}",
                    i + 1
                )));
            }
        }
        Ok(Self {
            times,
            states,
            observed,
        })
    }

    /// Fully observed path.
    pub fn observed(times: Vec<f64>, states: Vec<[f64; 2]>) -> Result<Self> {
        let mask = vec![true; times.len()];
        Self::new(times, states, mask)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[[f64; 2]] {
        &self.states
    }

    pub fn observed_mask(&self) -> &[bool] {
        &self.observed
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Mesh size `δt`; zero for a single point.
    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
        }
    }

    pub(crate) fn states_mut(&mut self) -> &mut [[f64; 2]] {
        &mut self.states
    }

    /// Points `from..=to` as a new path.
    pub fn segment(&self, from: usize, to: usize) -> Result<SdePath> {
        if from > to || to >= self.len() {
            return Err(Error::invalid(format!("segment {from}..={to} out of range")));
        }
        SdePath::new(
            self.times[from..=to].to_vec(),
            self.states[from..=to].to_vec(),
            self.observed[from..=to].to_vec(),
        )
    }

    /// Keep every `stride`-th point, all marked observed.
    pub fn subsample(&self, stride: usize) -> Result<SdePath> {
        if stride == 0 {
            return Err(Error::invalid("stride must be positive"));
        }
        let idx: Vec<usize> = (0..self.len()).step_by(stride).collect();
        SdePath::observed(
            idx.iter().map(|&i| self.times[i]).collect(),
            idx.iter().map(|&i| self.states[i]).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    pub theta: [f64; 2],
    pub population: u64,
}

impl SirParams {
    pub fn new(theta: [f64; 2], population: u64) -> Result<Self> {
        if !theta.iter().all(|&t| t > 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!("SIR rates must be positive, got {theta:?}")));
        }
        if population == 0 {
            return Err(Error::invalid("population size must be positive"));
        }
        Ok(Self { theta, population })
    }

    pub fn with_theta(&self, theta: [f64; 2]) -> Result<Self> {
        Self::new(theta, self.population)
    }
}

pub fn sir_drift(x: [f64; 2], p: &SirParams) -> [f64; 2] {
    let infection = p.theta[0] * x[0] * x[1];
    [-infection, infection - p.theta[1] * x[1]]
}

pub fn sir_diffusion(x: [f64; 2], p: &SirParams) -> [[f64; 2]; 2] {
    let n = p.population as f64;
    let infection = p.theta[0] * x[0] * x[1];
    let recovery = p.theta[1] * x[1];
    [
        [infection / n, -infection / n],
        [-infection / n, (infection + recovery) / n],
    ]
}

/// `∂α/∂θⱼ` and `∂β/∂θⱼ` for `j = 1, 2`.
fn sir_derivatives(x: [f64; 2], p: &SirParams) -> ([Vector2<f64>; 2], [Matrix2<f64>; 2]) {
    let n = p.population as f64;
    let xx = x[0] * x[1];
    let d_alpha = [Vector2::new(-xx, xx), Vector2::new(0.0, -x[1])];
    let d_beta = [
        Matrix2::new(xx, -xx, -xx, xx) / n,
        Matrix2::new(0.0, 0.0, 0.0, x[1]) / n,
    ];
    (d_alpha, d_beta)
}

fn to_matrix(m: [[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

/// `β` regularised when nearly singular, together with the matching
/// derivative correction `ε/2 · tr(∂β) I` when the jitter is applied.
pub(crate) fn regularise(beta: Matrix2<f64>) -> (Matrix2<f64>, Option<f64>) {
    let tr = beta.trace();
    let half_gap = (0.25 * (beta[(0, 0)] - beta[(1, 1)]).powi(2) + beta[(0, 1)].powi(2)).sqrt();
    let lambda_min = 0.5 * tr - half_gap;
    if lambda_min < REGULARISATION_THRESHOLD * tr {
        let jitter = REGULARISATION_JITTER * 0.5 * tr;
        (beta + Matrix2::identity() * jitter, Some(REGULARISATION_JITTER))
    } else {
        (beta, None)
    }
}

/// Log density and `θ`-gradient of one Euler–Maruyama transition.
pub(crate) fn transition(
    x: [f64; 2],
    next: [f64; 2],
    dt: f64,
    p: &SirParams,
    step: usize,
) -> Result<(f64, [f64; 2])> {
    let alpha = Vector2::from(sir_drift(x, p));
    let r = Vector2::new(next[0] - x[0], next[1] - x[1]) - alpha * dt;
    let beta = to_matrix(sir_diffusion(x, p));
    if !(beta.trace() > 0.0) {
        if r.iter().all(|v| *v == 0.0) {
            return Ok((0.0, [0.0, 0.0]));
        }
        return Err(Error::NumericalDegeneracy {
            step,
            reason: "zero diffusion with a non-zero increment".into(),
        });
    }
    let (beta, jitter) = regularise(beta);
    let det = beta.determinant();
    let inv = match beta.try_inverse() {
        Some(inv) if det > 0.0 && det.is_finite() => inv,
        _ => {
            return Err(Error::NumericalDegeneracy {
                step,
                reason: format!("diffusion matrix not invertible (det = {det:e})"),
            })
        }
    };
    let quad = (r.transpose() * inv * r)[(0, 0)];
    let log_density = -(2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - dt.ln() - 0.5 * quad / dt;

    let (d_alpha, mut d_beta) = sir_derivatives(x, p);
    if let Some(eps) = jitter {
        for db in d_beta.iter_mut() {
            *db += Matrix2::identity() * (0.5 * eps * db.trace());
        }
    }
    let inv_r = inv * r;
    let mut score = [0.0; 2];
    for j in 0..2 {
        score[j] = -0.5 * (inv * d_beta[j]).trace()
            + d_alpha[j].dot(&inv_r)
            + 0.5 / dt * (inv_r.transpose() * d_beta[j] * inv_r)[(0, 0)];
    }
    Ok((log_density, score))
}

/// Sum of Euler–Maruyama transition log densities, including the
/// `θ`-dependent normalisation.
pub fn em_log_likelihood(path: &SdePath, p: &SirParams) -> Result<f64> {
    let dt = path.dt();
    let mut total = 0.0;
    for (i, w) in path.states.windows(2).enumerate() {
        total += transition(w[0], w[1], dt, p, i + 1)?.0;
    }
    Ok(total)
}

/// Analytic gradient of [`em_log_likelihood`] in `(θ₁, θ₂)`.
pub fn sde_path_score(path: &SdePath, p: &SirParams) -> Result<[f64; 2]> {
    let dt = path.dt();
    let mut total = [0.0; 2];
    for (i, w) in path.states.windows(2).enumerate() {
        let (_, s) = transition(w[0], w[1], dt, p, i + 1)?;
        total[0] += s[0];
        total[1] += s[1];
    }
    Ok(total)
}

/// Lower Cholesky factor of a symmetric positive semi-definite 2×2 matrix.
pub(crate) fn cholesky2(m: &Matrix2<f64>) -> Matrix2<f64> {
    let l11 = m[(0, 0)].max(0.0).sqrt();
    let l21 = if l11 > 0.0 { m[(1, 0)] / l11 } else { 0.0 };
    let l22 = (m[(1, 1)] - l21 * l21).max(0.0).sqrt();
    Matrix2::new(l11, 0.0, l21, l22)
}

/// Euler–Maruyama simulation from time 0 to `t_end` on mesh `dt`.
///
/// States are clamped at zero, which makes both compartments absorbing
/// at the boundary.
pub fn simulate_sir(
    p: &SirParams,
    x0: [f64; 2],
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<SdePath> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::invalid("dt must be positive and t_end non-negative"));
    }
    let steps = (t_end / dt).round() as usize;
    let mut rng = rng_from_seed(seed);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0;
    times.push(0.0);
    states.push(x);
    for i in 1..=steps {
        let a = sir_drift(x, p);
        let l = cholesky2(&(to_matrix(sir_diffusion(x, p)) * dt));
        let z = Vector2::new(
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        );
        let noise = l * z;
        x = [
            (x[0] + a[0] * dt + noise[0]).max(0.0),
            (x[1] + a[1] * dt + noise[1]).max(0.0),
        ];
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::SimulationFailure(format!(
                "non-finite state at step {i}"
            )));
        }
        times.push(i as f64 * dt);
        states.push(x);
    }
    SdePath::observed(times, states)
}
