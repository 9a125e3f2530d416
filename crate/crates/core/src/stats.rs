//! Small descriptive statistics used throughout the crate.
//!
//! Variances and covariances use the unbiased `n - 1` divisor. All
//! reductions run in index order so results do not depend on scheduling.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    covariance(xs, xs)
}

pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "covariance of unequal lengths");
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let s: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    s / (n - 1) as f64
}

/// Pearson correlation; zero when either input has zero variance.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let vx = variance(xs);
    let vy = variance(ys);
    if vx <= 0.0 || vy <= 0.0 {
        return 0.0;
    }
    (covariance(xs, ys) / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0)
}

/// Standard error of the mean treating samples as independent.
pub fn naive_se(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Batch-means standard error of the mean for an autocorrelated trace,
/// using `floor(sqrt(n))` batches of equal size (a trailing remainder is
/// dropped from the batches but not from the overall mean).
pub fn batch_means_se(xs: &[f64]) -> f64 {
    let n = xs.len();
    let batches = (n as f64).sqrt().floor() as usize;
    if batches < 2 {
        return naive_se(xs);
    }
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| mean(&xs[b * size..(b + 1) * size]))
        .collect();
    // Var(batch mean) * size estimates the long-run variance.
    let long_run = variance(&means) * size as f64;
    (long_run / n as f64).sqrt()
}

/// Effective sample size implied by the batch-means standard error.
pub fn effective_sample_size(xs: &[f64]) -> f64 {
    let se = batch_means_se(xs);
    if se <= 0.0 {
        return xs.len() as f64;
    }
    variance(xs) / (se * se)
}

/// Numerically stable `log(sum(exp(xs)))`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert!((correlation(&xs, &[2.0, 4.0, 6.0, 8.0]) - 1.0).abs() < 1e-15);
        assert_eq!(correlation(&xs, &[1.0; 4]), 0.0);
    }

    #[test]
    fn batch_means_matches_naive_for_iid_like_input() {
        // Alternating sequence has negative autocorrelation; batch means
        // should report a smaller error than the naive formula.
        let xs: Vec<f64> = (0..10_000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(batch_means_se(&xs) < naive_se(&xs));
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }
}
