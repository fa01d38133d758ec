//! Small statistics toolbox: quantiles, bootstrap confidence intervals,
//! Kolmogorov–Smirnov distance and least-squares fits.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Linear-interpolation quantile (the numpy default) of a sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let q = q.clamp(0.0, 1.0);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

pub fn median_sorted(sorted: &[f64]) -> f64 {
    quantile_sorted(sorted, 0.5)
}

/// Median by selection, leaving `values` in arbitrary order.
pub fn median_unsorted(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    let n = values.len();
    let mid = n / 2;
    let cmp = |a: &f64, b: &f64| a.partial_cmp(b).unwrap();
    if n % 2 == 1 {
        *values.select_nth_unstable_by(mid, cmp).1
    } else {
        let hi = *values.select_nth_unstable_by(mid, cmp).1;
        let lo = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Percentile bootstrap CI for the sample median (200 resamples by default).
pub fn bootstrap_median_ci(
    values: &[f64],
    resamples: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, f64) {
    assert!(!values.is_empty());
    let n = values.len();
    let mut stats = Vec::with_capacity(resamples);
    let mut buf = vec![0.0; n];
    for _ in 0..resamples {
        for slot in buf.iter_mut() {
            *slot = values[rng.gen_range(0..n)];
        }
        stats.push(median_unsorted(&mut buf));
    }
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (
        quantile_sorted(&stats, 0.025),
        quantile_sorted(&stats, 0.975),
    )
}

/// Two-sided binomial standard error for an empirical probability.
pub fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    d
}

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b, r²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        ss_res += (yi - a - b * xi).powi(2);
        ss_tot += (yi - my).powi(2);
    }
    // Clamped at 0: a fit worse than the constant model reports 0.
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).max(0.0) } else { 1.0 };
    (a, b, r2)
}

/// Weighted least squares through the origin, `y ≈ b x`; returns `(b, r²)`.
///
/// r² is computed against the weighted mean, so a through-origin fit of
/// genuinely linear data still reports 1.
pub fn weighted_fit_through_origin(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64) {
    assert!(x.len() == y.len() && y.len() == w.len());
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((&x, &y), &w)| w * x * y).sum();
    let sxx: f64 = x.iter().zip(w).map(|(&x, &w)| w * x * x).sum();
    let b = sxy / sxx;
    let sw: f64 = w.iter().sum();
    let my: f64 = y.iter().zip(w).map(|(&y, &w)| w * y).sum::<f64>() / sw;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((&x, &y), &w)| w * (y - b * x).powi(2))
        .sum();
    let ss_tot: f64 = y.iter().zip(w).map(|(&y, &w)| w * (y - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).max(0.0) } else { 1.0 };
    (b, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert_relative_eq!(quantile_sorted(&v, 0.5), 2.5);
        let mut u = [3.0, 1.0, 2.0];
        assert_eq!(median_unsorted(&mut u), 2.0);
        let mut u = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(median_unsorted(&mut u), 2.5);
    }

    #[test]
    fn ks_of_exact_uniform_grid_is_small() {
        let n = 1000;
        let mut v: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&mut v, |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.5 / n as f64 + 1e-12);
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let (a, b, r2) = linear_fit(&x, &y);
        assert_relative_eq!(a, 3.0, max_relative = 1e-12);
        assert_relative_eq!(b, -2.0, max_relative = 1e-12);
        assert_relative_eq!(r2, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn origin_fit() {
        let x = [1.0, 2.0, 4.0];
        let y = [2.0, 4.0, 8.0];
        let w = [1.0, 1.0, 2.0];
        let (b, r2) = weighted_fit_through_origin(&x, &y, &w);
        assert_relative_eq!(b, 2.0, max_relative = 1e-12);
        assert_relative_eq!(r2, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn bootstrap_ci_brackets_median() {
        let mut rng = stream_rng(1, 0);
        let values: Vec<f64> = (0..500).map(|_| rng.gen::<f64>()).collect();
        let mut ci_rng = stream_rng(1, 1);
        let (lo, hi) = bootstrap_median_ci(&values, 200, &mut ci_rng);
        assert!(lo < 0.5 && 0.5 < hi, "({lo}, {hi})");
        // Deterministic for a fixed rng stream.
        let mut ci_rng = stream_rng(1, 1);
        let again = bootstrap_median_ci(&values, 200, &mut ci_rng);
        assert_eq!((lo, hi), again);
    }
}
