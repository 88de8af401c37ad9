//! Descriptive statistics and the bootstrap.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    covariance(x, y) / (variance(x) * variance(y)).sqrt()
}

/// Linearly interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(x: &[f64], p: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, p)
}

/// Width of the 95 % prediction band, `2 × sample standard deviation`.
pub fn prediction_interval(r: &[f64]) -> Result<f64> {
    if r.len() < 30 {
        return Err(Error::domain(format!(
            "prediction interval needs at least 30 samples, got {}",
            r.len()
        )));
    }
    Ok(2.0 * variance(r).sqrt())
}

/// Bootstrap distribution summary of a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapBands {
    pub median: f64,
    pub q05: f64,
    pub q25: f64,
    pub q75: f64,
    pub q95: f64,
    pub std_error: f64,
}

impl BootstrapBands {
    pub fn from_replicates(mut reps: Vec<f64>) -> Self {
        let std_error = variance(&reps).sqrt();
        reps.sort_by(f64::total_cmp);
        Self {
            median: quantile_sorted(&reps, 0.5),
            q05: quantile_sorted(&reps, 0.05),
            q25: quantile_sorted(&reps, 0.25),
            q75: quantile_sorted(&reps, 0.75),
            q95: quantile_sorted(&reps, 0.95),
            std_error,
        }
    }
}

/// Resamples `samples` with replacement `b` times and summarises the
/// recomputed statistic.
pub fn bootstrap_ci<T: Clone, R: Rng + ?Sized>(
    statistic: impl Fn(&[T]) -> f64,
    samples: &[T],
    b: usize,
    rng: &mut R,
) -> Result<BootstrapBands> {
    if b < 200 {
        return Err(Error::domain(format!("bootstrap needs B >= 200, got {b}")));
    }
    if samples.is_empty() {
        return Err(Error::domain("bootstrap of an empty sample"));
    }
    let n = samples.len();
    let mut buf = Vec::with_capacity(n);
    let reps = (0..b)
        .map(|_| {
            buf.clear();
            buf.extend((0..n).map(|_| samples[rng.random_range(0..n)].clone()));
            statistic(&buf)
        })
        .collect();
    Ok(BootstrapBands::from_replicates(reps))
}

/// Mode of a one-dimensional sample: the maximum of a Gaussian kernel
/// density estimate with the normal-reference bandwidth, located on a
/// 512-point grid over the data range.
pub fn marginal_mode(x: &[f64]) -> f64 {
    let n = x.len();
    if n == 0 {
        return f64::NAN;
    }
    let sd = variance(x).sqrt();
    let h = 1.06 * sd * (n as f64).powf(-0.2);
    if !(h > 0.0) {
        return x[0];
    }
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let density = |t: f64| x.iter().map(|v| (-0.5 * ((t - v) / h).powi(2)).exp()).sum::<f64>();
    (0..512)
        .map(|i| lo + (hi - lo) * i as f64 / 511.0)
        .map(|t| (t, density(t)))
        .fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
        .0
}
