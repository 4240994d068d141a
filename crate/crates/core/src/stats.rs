//! Statistical primitives: Kolmogorov–Smirnov tests, sample moments,
//! correlations, least-squares lines, and equal-population binning.

use crate::{Error, Result};

/// One-sample KS statistic against the uniform law on [a, b].
pub fn ks_statistic_uniform(samples: &[f64], a: f64, b: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientStatistics("no samples for KS".into()));
    }
    if !(b > a) {
        return Err(Error::invalid("KS interval must satisfy b > a"));
    }
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = ((x - a) / (b - a)).clamp(0.0, 1.0);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    Ok(d)
}

/// Kolmogorov asymptotic survival function Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0f64;
    let mut sign = 1.0f64;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic KS p-value with Stephens' finite-sample correction
/// λ = (√n + 0.12 + 0.11/√n)·D.
pub fn ks_p_value(statistic: f64, n: usize) -> f64 {
    let rn = (n as f64).sqrt();
    kolmogorov_q((rn + 0.12 + 0.11 / rn) * statistic)
}

/// Two-sample KS statistic and p-value (effective n = nm/(n+m)).
pub fn two_sample_ks(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::InsufficientStatistics(
            "two-sample KS needs both samples nonempty".into(),
        ));
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|p, q| p.partial_cmp(q).unwrap());
    b.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let rn = ne.sqrt();
    Ok((d, kolmogorov_q((rn + 0.12 + 0.11 / rn) * d)))
}

/// Sample mean, population variance, and (non-excess) kurtosis.
pub fn moments(samples: &[f64]) -> Result<(f64, f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InsufficientStatistics(
            "moments need at least 2 samples".into(),
        ));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if var == 0.0 {
        return Ok((mean, 0.0, 0.0));
    }
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Ok((mean, var, m4 / (var * var)))
}

/// Pearson correlation; defined as 0 when either sequence is constant.
pub fn sample_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("correlation inputs must have equal length"));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientStatistics(
            "correlation needs at least 2 points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..xs.len() {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (residual-based; n−2 degrees of freedom).
    pub slope_stderr: f64,
}

/// Ordinary least squares y = slope·x + intercept.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::invalid(
            "linear fit needs equal-length inputs with at least 3 points",
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..xs.len() {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if sxx == 0.0 {
        return Err(Error::invalid("linear fit with constant x"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - slope * x - intercept).powi(2))
        .sum();
    let stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr: stderr,
    })
}

/// Split `n` items into `k` contiguous chunks whose sizes differ by ≤ 1.
pub fn equal_population_chunks(n: usize, k: usize) -> Vec<std::ops::Range<usize>> {
    let k = k.min(n).max(1);
    let base = n / k;
    let rem = n % k;
    let mut out = Vec::with_capacity(k);
    let mut start = 0usize;
    for c in 0..k {
        let len = base + usize::from(c < rem);
        out.push(start..start + len);
        start += len;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn ks_accepts_uniform_grid() {
        // An exact uniform grid at cell midpoints minimizes the statistic.
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic_uniform(&xs, 0.0, 1.0).unwrap();
        assert!(d <= 0.5 / n as f64 + 1e-12);
        assert!(ks_p_value(d, n) > 0.99);
    }

    #[test]
    fn ks_rejects_clustered_samples() {
        let xs: Vec<f64> = (0..500).map(|i| 0.1 + 1e-4 * i as f64).collect();
        let d = ks_statistic_uniform(&xs, 0.0, 1.0).unwrap();
        assert!(d > 0.8);
        assert!(ks_p_value(d, 500) < 1e-6);
    }

    #[test]
    fn ks_p_value_is_calibrated_on_uniform_draws() {
        // Median p over many uniform batches should sit near 0.5.
        let mut rng = crate::rng::substream(11, "ks-calib", 0);
        let mut ps = Vec::new();
        for _ in 0..200 {
            let xs: Vec<f64> = (0..256).map(|_| rng.gen::<f64>()).collect();
            let d = ks_statistic_uniform(&xs, 0.0, 1.0).unwrap();
            ps.push(ks_p_value(d, 256));
        }
        ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = ps[ps.len() / 2];
        assert!((0.25..=0.75).contains(&median), "median p = {median}");
        let frac_below_01 =
            ps.iter().filter(|&&p| p < 0.01).count() as f64 / ps.len() as f64;
        assert!(frac_below_01 <= 0.05, "false-reject rate {frac_below_01}");
    }

    #[test]
    fn two_sample_ks_separates_shifted_distributions() {
        let xs: Vec<f64> = (0..400).map(|i| i as f64 / 400.0).collect();
        let ys: Vec<f64> = (0..400).map(|i| 0.3 + i as f64 / 400.0).collect();
        let (d, p) = two_sample_ks(&xs, &ys).unwrap();
        assert!(d >= 0.29);
        assert!(p < 1e-6);
        let (d2, p2) = two_sample_ks(&xs, &xs).unwrap();
        assert!(d2 <= 1.0 / 400.0 + 1e-12);
        assert!(p2 > 0.99);
    }

    #[test]
    fn moments_of_standard_normal_draws() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = crate::rng::substream(5, "moments", 0);
        let xs: Vec<f64> = (0..200_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let (mean, var, kurt) = moments(&xs).unwrap();
        assert!(mean.abs() < 0.02);
        assert!((var - 1.0).abs() < 0.03);
        assert!((kurt - 3.0).abs() < 0.1);
    }

    #[test]
    fn correlation_detects_linear_dependence() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 7.0).collect();
        assert!((sample_correlation(&xs, &ys).unwrap() - 1.0).abs() < 1e-12);
        let zs = vec![1.0; 100];
        assert_eq!(sample_correlation(&xs, &zs).unwrap(), 0.0);
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -0.5 * x + 3.0).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
        assert!(fit.slope_stderr < 1e-12);
    }

    #[test]
    fn chunks_cover_everything_evenly() {
        let chunks = equal_population_chunks(10, 3);
        assert_eq!(chunks, vec![0..4, 4..7, 7..10]);
        let all = equal_population_chunks(4, 16);
        assert_eq!(all.len(), 4);
    }
}
