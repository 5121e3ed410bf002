//! Small statistical helpers: moment summaries, empirical quantiles,
//! Kolmogorov-Smirnov distances, and least-squares line fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::fingerprint;

/// Monte Carlo point estimate with its standard error and provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    /// Hash of the estimator configuration that produced the estimate.
    pub fingerprint: u64,
}

impl EstimateWithError {
    pub fn from_samples(samples: &[f64], fingerprint: u64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::domain(
                "an estimate needs at least two samples".to_string(),
            ));
        }
        let (mean, stderr) = mean_stderr(samples);
        Ok(EstimateWithError {
            mean,
            stderr,
            n: samples.len(),
            fingerprint,
        })
    }

    /// Exact (zero-variance) value, e.g. an analytic cost component.
    pub fn exact(value: f64, fingerprint: u64) -> Self {
        EstimateWithError {
            mean: value,
            stderr: 0.0,
            n: usize::MAX,
            fingerprint,
        }
    }

    /// Shifts the estimate by an exact constant.
    pub fn shifted(mut self, delta: f64) -> Self {
        self.mean += delta;
        self
    }

    /// Sum of independent estimates; standard errors add in quadrature.
    pub fn sum(parts: &[EstimateWithError]) -> Self {
        let mean = parts.iter().map(|p| p.mean).sum();
        let var: f64 = parts.iter().map(|p| p.stderr * p.stderr).sum();
        EstimateWithError {
            mean,
            stderr: var.sqrt(),
            n: parts.iter().map(|p| p.n).min().unwrap_or(0),
            fingerprint: fingerprint(&parts.iter().map(|p| p.fingerprint).collect::<Vec<_>>()),
        }
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Empirical quantile of a sorted slice (linear interpolation).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// One-sample Kolmogorov-Smirnov distance between the empirical law of
/// `samples` and the CDF `cdf`.
pub fn ks_distance_to(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_distance_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Critical KS distance for a two-sample test at the 1% level
/// (asymptotic): c(0.01) * sqrt((n + m) / (n m)), c(0.01) = 1.628.
pub fn ks_two_sample_critical_1pct(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Ordinary least squares fit y = a + b x; returns (intercept, slope, r2).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (intercept, slope, r2)
}
