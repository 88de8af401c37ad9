//! Convergence diagnostics for parallel chains.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ChainArchive, PosteriorSamples};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsrfValue {
    /// Corrected univariate factor per parameter.
    pub univariate: Vec<f64>,
    pub multivariate: f64,
}

impl PsrfValue {
    pub fn max(&self) -> f64 {
        self.univariate
            .iter()
            .copied()
            .fold(self.multivariate, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsrfPoint {
    /// Generations seen so far; the factor uses the second half of them.
    pub iteration: usize,
    pub psrf: PsrfValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSamples {
    pub per_parameter: Vec<f64>,
    /// `1 + 2 Σ ρ̂_l` per parameter.
    pub denominators: Vec<f64>,
    /// Truncation lag per parameter.
    pub lags: Vec<usize>,
    /// Thinning lag: the largest denominator rounded up.
    pub thinning_lag: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsOptions {
    pub threshold: f64,
    /// Spacing of the PSRF trace; `None` picks one from the run length.
    pub step: Option<usize>,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            threshold: 1.1,
            step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub names: Vec<String>,
    pub chains: usize,
    pub generations: usize,
    pub psrf_trace: Vec<PsrfPoint>,
    pub burn_in: usize,
    /// The PSRF stayed below the threshold from `burn_in` on.
    pub converged: bool,
    pub acceptance_per_chain: Vec<f64>,
    pub acceptance_overall: f64,
    pub effective_samples: EffectiveSamples,
    pub thinning_lag: usize,
    pub thinned_draws: usize,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn sample_cov(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / (x.len() as f64 - 1.0)
}

/// Brooks–Gelman corrected factor `√((d̂+3)/(d̂+1) · V̂/W)` for one parameter.
fn univariate(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let vars: Vec<f64> = chains.iter().map(|c| sample_var(c)).collect();
    let grand = mean(&means);
    let b = n * sample_var(&means);
    let w = mean(&vars);
    if !(w > 0.0) {
        return if b > 0.0 { f64::INFINITY } else { 1.0 };
    }
    let v = (n - 1.0) / n * w + (1.0 + 1.0 / m) * b / n;
    let sq_means: Vec<f64> = means.iter().map(|x| x * x).collect();
    let var_v = ((n - 1.0) / n).powi(2) / m * sample_var(&vars)
        + ((m + 1.0) / (m * n)).powi(2) * 2.0 / (m - 1.0) * b * b
        + 2.0 * (m + 1.0) * (n - 1.0) / (m * n * n) * (n / m)
            * (sample_cov(&vars, &sq_means) - 2.0 * grand * sample_cov(&vars, &means));
    let correction = if var_v > 0.0 {
        let d = 2.0 * v * v / var_v;
        (d + 3.0) / (d + 1.0)
    } else {
        1.0
    };
    (correction * v / w).sqrt()
}

/// Multivariate factor `(n−1)/n + (m+1)/m · λ₁(W⁻¹ B/n)`.
fn multivariate(archive: &ChainArchive, lo: usize, hi: usize) -> f64 {
    let m = archive.chains();
    let d = archive.dim();
    let n = (hi - lo) as f64;
    let mut w = DMatrix::<f64>::zeros(d, d);
    let mut means = Vec::with_capacity(m);
    for j in 0..m {
        let mut mu = DVector::<f64>::zeros(d);
        for g in lo..hi {
            mu += DVector::from_column_slice(archive.state(g, j));
        }
        mu /= n;
        for g in lo..hi {
            let e = DVector::from_column_slice(archive.state(g, j)) - &mu;
            w += &e * e.transpose();
        }
        means.push(mu);
    }
    w /= m as f64 * (n - 1.0);
    let grand = means.iter().fold(DVector::<f64>::zeros(d), |a, b| a + b) / m as f64;
    let mut b = DMatrix::<f64>::zeros(d, d);
    for mu in &means {
        let e = mu - &grand;
        b += &e * e.transpose();
    }
    b /= m as f64 - 1.0;

    // Parameters frozen in every chain carry no information.
    let keep: Vec<usize> = (0..d).filter(|&i| w[(i, i)] > 0.0).collect();
    if keep.is_empty() {
        return if b.iter().any(|&x| x != 0.0) { f64::INFINITY } else { 1.0 };
    }
    let w = w.select_rows(&keep).select_columns(&keep);
    let b = b.select_rows(&keep).select_columns(&keep);
    let Some(chol) = w.cholesky() else {
        return f64::INFINITY;
    };
    let l = chol.l();
    let Some(l_inv) = l.clone().try_inverse() else {
        return f64::INFINITY;
    };
    let s = &l_inv * b * l_inv.transpose();
    let s = (&s + s.transpose()) * 0.5;
    let lambda = s.symmetric_eigenvalues().max();
    (n - 1.0) / n + (m as f64 + 1.0) / m as f64 * lambda
}

/// Potential scale reduction factors over generations `lo..hi`.
pub fn psrf(archive: &ChainArchive, lo: usize, hi: usize) -> Result<PsrfValue> {
    if hi > archive.generations() || lo >= hi {
        return Err(Error::domain(format!(
            "window {lo}..{hi} outside the {} stored generations",
            archive.generations()
        )));
    }
    if hi - lo < 10 {
        return Err(Error::domain(format!(
            "PSRF needs a window of at least 10 generations, got {}",
            hi - lo
        )));
    }
    let univariate = (0..archive.dim())
        .map(|p| {
            let chains: Vec<Vec<f64>> = (0..archive.chains())
                .map(|j| archive.trace(j, p, lo, hi))
                .collect();
            univariate(&chains)
        })
        .collect();
    Ok(PsrfValue {
        univariate,
        multivariate: multivariate(archive, lo, hi),
    })
}

fn auto_step(generations: usize) -> usize {
    (generations / 50).clamp(10, 50)
}

/// PSRF after every `step` generations, each from the second half of the
/// generations seen so far.
pub fn psrf_trace(archive: &ChainArchive, step: usize) -> Vec<PsrfPoint> {
    let total = archive.generations();
    let step = step.max(1);
    let mut points: Vec<usize> = (1..).map(|i| i * step).take_while(|&t| t <= total).collect();
    if points.last() != Some(&total) {
        points.push(total);
    }
    points
        .into_iter()
        .filter(|&t| t >= 20)
        .filter_map(|t| {
            psrf(archive, t / 2, t).ok().map(|psrf| PsrfPoint { iteration: t, psrf })
        })
        .collect()
}

fn burn_in_from_trace(trace: &[PsrfPoint], threshold: f64) -> Option<usize> {
    let mut start = None;
    for p in trace.iter().rev() {
        if p.psrf.max() < threshold {
            start = Some(p.iteration);
        } else {
            break;
        }
    }
    start
}

/// First trace iteration from which every univariate factor and the
/// multivariate factor stay below `threshold`.
pub fn detect_burn_in(archive: &ChainArchive, threshold: f64, step: Option<usize>) -> Option<usize> {
    let step = step.unwrap_or_else(|| auto_step(archive.generations()));
    burn_in_from_trace(&psrf_trace(archive, step), threshold)
}

/// Pooled variogram autocorrelations `ρ̂_1..ρ̂_{max_lag}` of parameter `p`
/// over generations `lo..` of all chains.
pub fn autocorrelation(archive: &ChainArchive, p: usize, lo: usize, max_lag: usize) -> Vec<f64> {
    let hi = archive.generations();
    let chains: Vec<Vec<f64>> = (0..archive.chains()).map(|j| archive.trace(j, p, lo, hi)).collect();
    let m = chains.len() as f64;
    let n = hi - lo;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = mean(&chains.iter().map(|c| sample_var(c)).collect::<Vec<_>>());
    let b = n as f64 * sample_var(&means);
    let var_plus = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
    (1..=max_lag.min(n.saturating_sub(1)))
        .map(|t| {
            if !(var_plus > 0.0) {
                return 0.0;
            }
            let v: f64 = chains
                .iter()
                .map(|c| (t..n).map(|i| (c[i] - c[i - t]).powi(2)).sum::<f64>())
                .sum::<f64>()
                / (m * (n - t) as f64);
            1.0 - v / (2.0 * var_plus)
        })
        .collect()
}

/// Effective sample sizes after discarding `burn_in` generations. The
/// autocorrelation sum stops at the first odd lag `L` with
/// `ρ̂_{L+1} + ρ̂_{L+2} < 0`.
pub fn effective_samples(archive: &ChainArchive, burn_in: usize) -> Result<EffectiveSamples> {
    let total = archive.generations();
    if burn_in + 4 > total {
        return Err(Error::domain(format!(
            "burn-in {burn_in} leaves too few of {total} generations"
        )));
    }
    let n = total - burn_in;
    let m = archive.chains();
    let mut per_parameter = Vec::new();
    let mut denominators = Vec::new();
    let mut lags = Vec::new();
    for p in 0..archive.dim() {
        let rho = autocorrelation(archive, p, burn_in, n - 1);
        let mut lag = 1;
        while lag + 2 <= rho.len() && rho[lag] + rho[lag + 1] >= 0.0 {
            lag += 2;
        }
        let lag = lag.min(rho.len());
        let denom = (1.0 + 2.0 * rho[..lag].iter().sum::<f64>()).max(1e-12);
        per_parameter.push((m * n) as f64 / denom);
        denominators.push(denom);
        lags.push(lag);
    }
    let thinning_lag = denominators
        .iter()
        .map(|d| d.ceil() as usize)
        .max()
        .unwrap_or(1)
        .max(1);
    Ok(EffectiveSamples {
        per_parameter,
        denominators,
        lags,
        thinning_lag,
    })
}

/// Every `lag`-th state after `burn_in`, chain by chain.
pub fn thin(archive: &ChainArchive, burn_in: usize, lag: usize) -> PosteriorSamples {
    let lag = lag.max(1);
    let mut draws = Vec::new();
    let mut log_posterior = Vec::new();
    for j in 0..archive.chains() {
        for g in (burn_in..archive.generations()).step_by(lag) {
            draws.push(archive.state(g, j).to_vec());
            log_posterior.push(archive.log_posterior(g, j));
        }
    }
    PosteriorSamples {
        names: archive.meta.names.clone(),
        residual_model: archive.meta.residual_model.clone(),
        draws,
        log_posterior,
    }
}

/// Acceptance rates per chain and overall over generations `from..`; the
/// initial generation never counts.
pub fn acceptance_rates(archive: &ChainArchive, from: usize) -> (Vec<f64>, f64) {
    let lo = from.max(1);
    let hi = archive.generations();
    if lo >= hi {
        return (vec![0.0; archive.chains()], 0.0);
    }
    let per: Vec<f64> = (0..archive.chains())
        .map(|j| (lo..hi).filter(|&g| archive.accepted(g, j)).count() as f64 / (hi - lo) as f64)
        .collect();
    let overall = mean(&per);
    (per, overall)
}

pub fn diagnose(archive: &ChainArchive, opts: &DiagnosticsOptions) -> Result<DiagnosticsReport> {
    let total = archive.generations();
    let step = opts.step.unwrap_or_else(|| auto_step(total));
    let trace = psrf_trace(archive, step);
    let detected = burn_in_from_trace(&trace, opts.threshold);
    let burn_in = detected.unwrap_or(total / 2).min(total.saturating_sub(4));
    let effective = effective_samples(archive, burn_in)?;
    let (per_chain, overall) = acceptance_rates(archive, 1);
    let thinned = thin(archive, burn_in, effective.thinning_lag).len();
    Ok(DiagnosticsReport {
        names: archive.meta.names.clone(),
        chains: archive.chains(),
        generations: total,
        psrf_trace: trace,
        burn_in,
        converged: detected.is_some(),
        acceptance_per_chain: per_chain,
        acceptance_overall: overall,
        thinning_lag: effective.thinning_lag,
        effective_samples: effective,
        thinned_draws: thinned,
    })
}

/// Whether the chains have converged and every parameter has more than
/// `target` effective samples past the burn-in.
pub(crate) fn stopping_rule(archive: &ChainArchive, target: f64) -> bool {
    let Some(burn_in) = detect_burn_in(archive, 1.1, None) else {
        return false;
    };
    effective_samples(archive, burn_in)
        .map(|e| e.per_parameter.iter().all(|&n| n > target))
        .unwrap_or(false)
}
