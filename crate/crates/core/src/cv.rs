//! Reduced-variance control variates.
//!
//! A polynomial trial function `P(θ) = Σ φ_j q_j(θ)` together with a score
//! estimate `û` yields the control variate
//!
//! ```text
//! ĥ(θ) = ΔP(θ) + ∇P(θ) · û  =  φᵀ m(θ, û)
//! ```
//!
//! where `m` is the [`monomial_map`]. The basis polynomials `q_j` are the
//! distinct monomials of degree 1..=`degree`, each scaled by its
//! multinomial multiplicity, so that `φ` matches the symmetric-tensor
//! convention `b_{ij} = b_{ji}`, `c_{ijk} = c_{τ(ijk)}`.
//!
//! Canonical ordering of `m` (and of `φ`): `a_1..a_d`, then `b_{ij}` for
//! `i ≤ j` in lexicographic order, then `c_{ijk}` for `i ≤ j ≤ k` in
//! lexicographic order.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Condition number above which the coefficient solve is refused.
pub const MAX_CONDITION: f64 = 1e12;

/// Degree and dimension of the polynomial trial function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialSpec {
    dim: usize,
    degree: u8,
}

impl PolynomialSpec {
    pub fn new(dim: usize, degree: u8) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("polynomial dimension must be at least 1"));
        }
        if !(1..=3).contains(&degree) {
            return Err(Error::invalid(format!(
                "polynomial degree must be 1, 2 or 3 (got {degree})"
            )));
        }
        Ok(Self { dim, degree })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u8 {
        self.degree
    }

    /// Number of free coefficients: `d`, `+ d(d+1)/2`, `+ C(d+2, 3)`.
    pub fn coefficient_count(&self) -> usize {
        let d = self.dim;
        let mut n = d;
        if self.degree >= 2 {
            n += d * (d + 1) / 2;
        }
        if self.degree >= 3 {
            n += d * (d + 1) * (d + 2) / 6;
        }
        n
    }

    /// Sorted index tuples of every basis monomial in canonical order.
    pub fn monomials(&self) -> Vec<Vec<usize>> {
        let d = self.dim;
        let mut out = Vec::with_capacity(self.coefficient_count());
        for i in 0..d {
            out.push(vec![i]);
        }
        if self.degree >= 2 {
            for i in 0..d {
                for j in i..d {
                    out.push(vec![i, j]);
                }
            }
        }
        if self.degree >= 3 {
            for i in 0..d {
                for j in i..d {
                    for k in j..d {
                        out.push(vec![i, j, k]);
                    }
                }
            }
        }
        out
    }

    /// Human-readable coefficient labels (`a1`, `b12`, `c112`, ...), 1-based.
    pub fn labels(&self) -> Vec<String> {
        self.monomials()
            .iter()
            .map(|idx| {
                let prefix = ["a", "b", "c"][idx.len() - 1];
                let digits: String = idx.iter().map(|i| (i + 1).to_string()).collect();
                format!("{prefix}{digits}")
            })
            .collect()
    }
}

/// Control-variate basis evaluations `m(θ, û)` in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialVector(pub Vec<f64>);

impl MonomialVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `φᵀ m`, the value of the control variate for coefficients `φ`.
    pub fn dot(&self, phi: &[f64]) -> f64 {
        self.0.iter().zip(phi).map(|(m, p)| m * p).sum()
    }
}

fn exponents(idx: &[usize], d: usize) -> Vec<u32> {
    let mut alpha = vec![0u32; d];
    for &i in idx {
        alpha[i] += 1;
    }
    alpha
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn power_product(theta: &[f64], alpha: &[u32]) -> f64 {
    theta
        .iter()
        .zip(alpha)
        .map(|(t, &a)| t.powi(a as i32))
        .product()
}

/// Evaluate `L[q] = Δq + ∇q · û` for `q = mult · θ^α`.
fn apply_generator(theta: &[f64], u_hat: &[f64], alpha: &[u32]) -> f64 {
    let total: u32 = alpha.iter().sum();
    let mult = factorial(total) / alpha.iter().map(|&a| factorial(a)).product::<f64>();
    let mut value = 0.0;
    let mut reduced = alpha.to_vec();
    for i in 0..alpha.len() {
        let a = alpha[i];
        if a == 0 {
            continue;
        }
        reduced[i] = a - 1;
        value += f64::from(a) * power_product(theta, &reduced) * u_hat[i];
        if a >= 2 {
            reduced[i] = a - 2;
            value += f64::from(a * (a - 1)) * power_product(theta, &reduced);
        }
        reduced[i] = a;
    }
    mult * value
}

/// Evaluate the control-variate basis at `(θ, û)`.
///
/// Degree one returns `û` unchanged. For degree two the entries are
/// `û_i`, then `2 + 2θ_i û_i` (diagonal) and `2θ_j û_i + 2θ_i û_j` (off
/// diagonal); cubic terms follow the same generator applied to
/// multiplicity-weighted monomials.
pub fn monomial_map(theta: &[f64], u_hat: &[f64], spec: &PolynomialSpec) -> Result<MonomialVector> {
    let d = spec.dim();
    if theta.len() != d || u_hat.len() != d {
        return Err(Error::invalid(format!(
            "monomial_map expects vectors of length {d}, got theta={} u_hat={}",
            theta.len(),
            u_hat.len()
        )));
    }
    let values = spec
        .monomials()
        .iter()
        .map(|idx| apply_generator(theta, u_hat, &exponents(idx, d)))
        .collect();
    Ok(MonomialVector(values))
}

/// How the cross-moment in the optimal-coefficient formula is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentForm {
    /// `Ĉov[g, m]`; coincides with `Ê[g m]` in expectation since `E[m] = 0`.
    #[default]
    Centered,
    /// The uncentered `Ê[g m]`.
    Raw,
}

/// Whether the coefficients are fitted on the same samples they are
/// evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleSplit {
    #[default]
    None,
    /// Fit on the first half, evaluate on the second half.
    Half,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvOptions {
    #[serde(default)]
    pub moments: MomentForm,
    #[serde(default)]
    pub split: SampleSplit,
}

fn check_design(g: &[f64], ms: &[MonomialVector]) -> Result<usize> {
    if g.len() != ms.len() {
        return Err(Error::invalid(format!(
            "{} target values but {} monomial vectors",
            g.len(),
            ms.len()
        )));
    }
    let p = ms.first().map(MonomialVector::len).unwrap_or(0);
    if p == 0 {
        return Err(Error::invalid("empty design"));
    }
    if let Some(bad) = ms.iter().position(|m| m.len() != p) {
        return Err(Error::invalid(format!(
            "monomial vector {bad} has length {} (expected {p})",
            ms[bad].len()
        )));
    }
    Ok(p)
}

/// Plug-in estimate `φ̂ = −V̂[m]⁻¹ Ĉ[g, m]` of the variance-minimising
/// coefficients.
///
/// The covariance matrix is Jacobi-scaled before its eigen-decomposition;
/// if the scaled condition number exceeds [`MAX_CONDITION`] (or a basis
/// column is constant) a [`Error::DegenerateDesign`] is returned.
pub fn estimate_optimal_coeffs(
    g: &[f64],
    ms: &[MonomialVector],
    moments: MomentForm,
) -> Result<Vec<f64>> {
    let p = check_design(g, ms)?;
    let n = g.len();
    if n < p + 1 {
        return Err(Error::invalid(format!(
            "need at least {} samples for {p} coefficients, got {n}",
            p + 1
        )));
    }
    let nf = n as f64;
    let g_bar = stats::mean(g);
    let mut m_bar = vec![0.0; p];
    for m in ms {
        for (acc, v) in m_bar.iter_mut().zip(m.values()) {
            *acc += v;
        }
    }
    m_bar.iter_mut().for_each(|v| *v /= nf);

    let mut cov = DMatrix::<f64>::zeros(p, p);
    let mut cross = DVector::<f64>::zeros(p);
    let mut centered = vec![0.0; p];
    for (m, &gi) in ms.iter().zip(g) {
        for (c, (v, mb)) in centered.iter_mut().zip(m.values().iter().zip(&m_bar)) {
            *c = v - mb;
        }
        for a in 0..p {
            for b in a..p {
                cov[(a, b)] += centered[a] * centered[b];
            }
            cross[a] += match moments {
                MomentForm::Centered => (gi - g_bar) * centered[a],
                MomentForm::Raw => gi * m.values()[a],
            };
        }
    }
    for a in 0..p {
        for b in a..p {
            cov[(a, b)] /= nf - 1.0;
            cov[(b, a)] = cov[(a, b)];
        }
    }
    match moments {
        MomentForm::Centered => cross /= nf - 1.0,
        MomentForm::Raw => cross /= nf,
    }

    let scale: Vec<f64> = (0..p).map(|a| cov[(a, a)]).collect();
    if scale.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateDesign {
            condition: f64::INFINITY,
        });
    }
    let inv_sd: Vec<f64> = scale.iter().map(|v| 1.0 / v.sqrt()).collect();
    let scaled = DMatrix::from_fn(p, p, |a, b| cov[(a, b)] * inv_sd[a] * inv_sd[b]);
    let eig = SymmetricEigen::new(scaled);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::DegenerateDesign { condition });
    }
    // φ = −D (QΛ⁻¹Qᵀ) D c with D = diag(1/sd).
    let rhs = DVector::from_fn(p, |a, _| cross[a] * inv_sd[a]);
    let qt_rhs = eig.eigenvectors.transpose() * rhs;
    let scaled_sol = &eig.eigenvectors
        * DVector::from_fn(p, |a, _| qt_rhs[a] / eig.eigenvalues[a]);
    Ok((0..p).map(|a| -scaled_sol[a] * inv_sd[a]).collect())
}

/// `g_i + φᵀ m_i` for every sample; the mean is the reduced-variance
/// estimate of `E[g]`.
pub fn controlled_values(g: &[f64], ms: &[MonomialVector], phi: &[f64]) -> Result<Vec<f64>> {
    let p = check_design(g, ms)?;
    if phi.len() != p {
        return Err(Error::invalid(format!(
            "coefficient vector has length {} (expected {p})",
            phi.len()
        )));
    }
    Ok(g.iter().zip(ms).map(|(gi, m)| gi + m.dot(phi)).collect())
}

/// Variance-reduction diagnostics for one target function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvDiagnostics {
    /// `Var[g] / Var[g + ĥ]`; `+∞` when `perfect` is set.
    pub r: f64,
    /// `Corr[g, ĥ]`.
    pub rho: f64,
    /// The controlled samples have (numerically) zero variance.
    pub perfect: bool,
    pub ess_note: String,
}

/// Empirical variance-reduction factor and correlation between `g` and
/// the control variate `controlled − g`.
pub fn variance_reduction_factor(g: &[f64], controlled: &[f64]) -> Result<CvDiagnostics> {
    if g.len() != controlled.len() {
        return Err(Error::invalid("target and controlled samples differ in length"));
    }
    if g.len() < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let var_g = stats::variance(g);
    let var_c = stats::variance(controlled);
    let h: Vec<f64> = controlled.iter().zip(g).map(|(c, gi)| c - gi).collect();
    let rho = stats::correlation(g, &h);
    let level = stats::mean(controlled).abs().max(var_g.sqrt());
    let tiny = (1e-12 * level).powi(2);
    let perfect = var_c <= tiny;
    let r = if perfect { f64::INFINITY } else { var_g / var_c };
    let ess_note = format!(
        "I={}; ESS(g)~{:.0}, ESS(g+h)~{:.0} by batch means; errors assume a well-mixed chain",
        g.len(),
        stats::effective_sample_size(g),
        if perfect {
            g.len() as f64
        } else {
            stats::effective_sample_size(controlled)
        }
    );
    Ok(CvDiagnostics {
        r,
        rho,
        perfect,
        ess_note,
    })
}

/// Result of [`rv_estimate`] for one target function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RvEstimate {
    pub phi: Vec<f64>,
    /// Controlled values on the evaluation samples.
    pub controlled: Vec<f64>,
    pub mu_uncontrolled: f64,
    pub mu_controlled: f64,
    pub diagnostics: CvDiagnostics,
}

/// Fit coefficients and evaluate the controlled estimator in one step.
pub fn rv_estimate(g: &[f64], ms: &[MonomialVector], opts: &CvOptions) -> Result<RvEstimate> {
    check_design(g, ms)?;
    let (fit, eval) = match opts.split {
        SampleSplit::None => (0..g.len(), 0..g.len()),
        SampleSplit::Half => {
            let half = g.len() / 2;
            (0..half, half..g.len())
        }
    };
    let phi = estimate_optimal_coeffs(&g[fit.clone()], &ms[fit], opts.moments)?;
    let g_eval = &g[eval.clone()];
    let controlled = controlled_values(g_eval, &ms[eval], &phi)?;
    let diagnostics = variance_reduction_factor(g_eval, &controlled)?;
    Ok(RvEstimate {
        mu_uncontrolled: stats::mean(g_eval),
        mu_controlled: stats::mean(&controlled),
        phi,
        controlled,
        diagnostics,
    })
}

/// Fitted `ρ(K)² = (1/ρ∞² + C/K)⁻¹`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoCurveFit {
    pub rho_inf: f64,
    pub c: f64,
    /// RMS error of the fit on the linear `1/ρ²` scale.
    pub residual: f64,
}

impl RhoCurveFit {
    pub fn rho_squared(&self, k: f64) -> f64 {
        1.0 / (1.0 / (self.rho_inf * self.rho_inf) + self.c / k)
    }

    pub fn rho(&self, k: f64) -> f64 {
        self.rho_squared(k).sqrt()
    }
}

/// Least-squares fit of `1/ρ(K)² = 1/ρ∞² + C/K`.
///
/// When the unconstrained intercept implies `ρ∞ > 1` the fit is redone with
/// `ρ∞ = 1`. A non-positive slope is rejected since the law requires `C > 0`.
pub fn fit_rho_curve(k_values: &[usize], rho_values: &[f64]) -> Result<RhoCurveFit> {
    if k_values.len() != rho_values.len() {
        return Err(Error::invalid("K and rho vectors differ in length"));
    }
    if k_values.contains(&0) {
        return Err(Error::invalid("K values must be positive"));
    }
    if let Some(r) = rho_values.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::invalid(format!("rho value {r} outside (0, 1)")));
    }
    let mut distinct = k_values.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::invalid("need at least two distinct K values"));
    }
    let xs: Vec<f64> = k_values.iter().map(|&k| 1.0 / k as f64).collect();
    let ys: Vec<f64> = rho_values.iter().map(|r| 1.0 / (r * r)).collect();
    let mx = stats::mean(&xs);
    let my = stats::mean(&ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let mut slope = sxy / sxx;
    let mut intercept = my - slope * mx;
    if intercept < 1.0 {
        intercept = 1.0;
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| x * (y - 1.0)).sum();
        let den: f64 = xs.iter().map(|x| x * x).sum();
        slope = num / den;
    }
    if !(slope > 0.0) {
        return Err(Error::invalid(format!(
            "fitted C = {slope:.4} is not positive; rho(K) does not increase with K"
        )));
    }
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    Ok(RhoCurveFit {
        rho_inf: intercept.sqrt().recip(),
        c: slope,
        residual,
    })
}

/// Cost-normalised variance ratio
/// `r(K) = ⌈K/K₀⌉ / c · (1 − Kρ∞² / (K + Cρ∞²))`
/// at fixed budget `c = I⌈K/K₀⌉` on `K₀` cores.
pub fn cost_normalized_ratio(k: usize, k0: usize, cost: f64, rho_inf: f64, c: f64) -> Result<f64> {
    if k == 0 || k0 == 0 {
        return Err(Error::invalid("K and K0 must be positive"));
    }
    if !(cost > 0.0) || !(c > 0.0) {
        return Err(Error::invalid("cost and C must be positive"));
    }
    if !(rho_inf > 0.0 && rho_inf <= 1.0) {
        return Err(Error::invalid(format!("rho_inf {rho_inf} outside (0, 1]")));
    }
    let kf = k as f64;
    let r2 = rho_inf * rho_inf;
    let blocks = k.div_ceil(k0) as f64;
    // 1 − Kρ²/(K + Cρ²) rearranged to avoid cancellation near ρ∞ = 1.
    let unexplained = (kf * (1.0 - r2) + c * r2) / (kf + c * r2);
    Ok(blocks / cost * unexplained)
}

/// Minimiser of [`cost_normalized_ratio`] over `K = 1..=k_max`; ties go to
/// the smallest `K`.
pub fn argmin_r(k_max: usize, k0: usize, cost: f64, rho_inf: f64, c: f64) -> Result<usize> {
    if k_max == 0 {
        return Err(Error::invalid("k_max must be positive"));
    }
    let mut best = (1, cost_normalized_ratio(1, k0, cost, rho_inf, c)?);
    for k in 2..=k_max {
        let r = cost_normalized_ratio(k, k0, cost, rho_inf, c)?;
        if r < best.1 {
            best = (k, r);
        }
    }
    Ok(best.0)
}
