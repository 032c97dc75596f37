//! Small-sample statistics used by the Monte Carlo checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    (mean(xs), (variance(xs) / xs.len() as f64).sqrt())
}

/// Normal-approximation 95% interval for the mean.
pub fn ci95(xs: &[f64]) -> (f64, f64) {
    let (m, se) = mean_se(xs);
    (m - 1.96 * se, m + 1.96 * se)
}

/// Least-squares line `y = a + b x`. Returns `(b, a, se_b)`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let se = if n > 2.0 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (b, a, se)
}

/// Percentile bootstrap interval of `stat` over resamples of `rows`.
pub fn bootstrap_ci<T, F>(rows: &[T], stat: F, n_boot: usize, level: f64, seed: u64) -> (f64, f64)
where
    F: Fn(&[&T]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rows.len();
    let mut stats: Vec<f64> = (0..n_boot)
        .map(|_| {
            let pick: Vec<&T> = (0..n).map(|_| &rows[rng.random_range(0..n)]).collect();
            stat(&pick)
        })
        .filter(|s| s.is_finite())
        .collect();
    if stats.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    stats.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| {
        let idx = (p * (stats.len() - 1) as f64).round() as usize;
        stats[idx]
    };
    let alpha = 0.5 * (1.0 - level);
    (q(alpha), q(1.0 - alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        let (_, se) = mean_se(&xs);
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ols_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (b, a, se) = ols(&x, &y);
        assert!((b + 0.5).abs() < 1e-14 && (a - 2.0).abs() < 1e-14 && se < 1e-12);
    }

    #[test]
    fn bootstrap_brackets_mean() {
        let xs: Vec<f64> = (0..200).map(|i| (i % 10) as f64).collect();
        let (lo, hi) = bootstrap_ci(&xs, |s| s.iter().map(|v| **v).sum::<f64>() / s.len() as f64, 500, 0.95, 1);
        assert!(lo < 4.5 && 4.5 < hi);
    }
}
