use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ObservationRecord, Prior, Qoi, ResidualModel};
use crate::error::Result;
use crate::forward::{simulate_with, DamCase, ErosionParams, SimulationOptions};
use crate::stochastic::RngStream;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodOptions {
    /// Monte-Carlo sample size of the first pass.
    pub initial_draws: usize,
    /// Upper limit of the doubling schedule.
    pub max_draws: usize,
    /// Target relative standard error of the density estimate.
    pub target_precision: f64,
    /// Share of failed forward runs above which the estimate is flagged.
    pub failure_tolerance: f64,
    pub simulation: SimulationOptions,
}

impl Default for LikelihoodOptions {
    fn default() -> Self {
        Self {
            initial_draws: 512,
            max_draws: 1 << 17,
            target_precision: 0.01,
            failure_tolerance: 0.01,
            simulation: SimulationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodEstimate {
    /// Natural log of the estimated density.
    pub log_value: f64,
    /// Number of Monte-Carlo draws used.
    pub draws: usize,
    /// Estimated relative standard error of the density.
    pub relative_precision: f64,
    pub failures: usize,
    /// The draw cap was hit before the precision target.
    pub imprecise: bool,
    /// Too many forward runs failed.
    pub failure_flagged: bool,
}

/// One realisation of the experiment-specific inputs and the model outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawOutcome {
    pub case: DamCase,
    pub erosion: ErosionParams,
    /// `(log₁₀ Q_p, log₁₀ W_f)`; `None` when the forward run failed.
    pub outputs: Option<[f64; 2]>,
}

/// Draws `(z, γ)` from `stream` and runs the forward model.
pub fn simulate_draw(
    record: &ObservationRecord,
    q: &Qoi,
    stream: RngStream,
    opts: &SimulationOptions,
) -> Result<DrawOutcome> {
    let mut rng = stream.rng();
    let case = record.draw_case(&mut rng)?;
    let z: f64 = StandardNormal.sample(&mut rng);
    let erosion = ErosionParams {
        gamma: (q.lambda + q.zeta * z).exp(),
        nu: q.nu,
        eta: q.eta,
    };
    let outputs = simulate_with(&case, &erosion, opts)
        .ok()
        .map(|h| [h.peak_discharge.log10(), h.final_width.log10()])
        .filter(|o| o.iter().all(|v| v.is_finite()));
    Ok(DrawOutcome {
        case,
        erosion,
        outputs,
    })
}

/// Log density of independent zero-mean normal residuals. A one-element
/// residual uses the peak-discharge scale only.
pub fn residual_log_density(eps: &[f64], sigma: [f64; 2]) -> f64 {
    eps.iter()
        .zip(sigma)
        .map(|(&e, s)| {
            if s > 0.0 {
                let u = e / s;
                -0.5 * u * u - s.ln() - LN_SQRT_2PI
            } else if e == 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        })
        .sum()
}

/// Normal-reference bandwidths `σ̂_j (4/(d+2))^{1/(d+4)} n^{-1/(d+4)}`.
pub fn kde_bandwidths(samples: &[Vec<f64>]) -> Vec<f64> {
    let n = samples.len();
    let Some(d) = samples.first().map(Vec::len) else {
        return Vec::new();
    };
    let factor = (4.0 / (d as f64 + 2.0)).powf(1.0 / (d as f64 + 4.0))
        * (n as f64).powf(-1.0 / (d as f64 + 4.0));
    (0..d)
        .map(|j| {
            if n < 2 {
                return 0.0;
            }
            let mean = samples.iter().map(|s| s[j]).sum::<f64>() / n as f64;
            let var = samples.iter().map(|s| (s[j] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            var.sqrt() * factor
        })
        .collect()
}

/// `ln mean(e^{l_k})` and the relative standard error of that mean.
fn log_mean(terms: &[f64]) -> (f64, f64) {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, f64::NAN);
    }
    if m == f64::INFINITY {
        return (f64::INFINITY, f64::NAN);
    }
    let n = terms.len() as f64;
    let scaled: Vec<f64> = terms.iter().map(|&l| (l - m).exp()).collect();
    let mean = scaled.iter().sum::<f64>() / n;
    let var = scaled.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m + mean.ln(), var.sqrt() / (mean * n.sqrt()))
}

fn observed_vector(record: &ObservationRecord) -> Vec<f64> {
    let (q, w) = record.observed.log10();
    match w {
        Some(w) => vec![q, w],
        None => vec![q],
    }
}

fn summarize(
    outputs: &[Option<[f64; 2]>],
    y: &[f64],
    q: &Qoi,
    model: ResidualModel,
) -> (f64, f64) {
    let d = y.len();
    let residual = |o: &[f64; 2]| -> Vec<f64> { (0..d).map(|j| y[j] - o[j]).collect() };
    let terms: Vec<f64> = match model {
        ResidualModel::Gaussian => {
            let sigma = q.sigma.expect("checked gaussian parameters");
            outputs
                .iter()
                .map(|o| match o {
                    Some(o) => residual_log_density(&residual(o), sigma),
                    None => f64::NEG_INFINITY,
                })
                .collect()
        }
        ResidualModel::ZeroNoise => {
            let eps: Vec<Vec<f64>> = outputs.iter().flatten().map(residual).collect();
            let h = kde_bandwidths(&eps);
            if h.len() != d || h.iter().any(|&h| !(h > 0.0)) {
                return (f64::NEG_INFINITY, f64::NAN);
            }
            let norm: f64 = h.iter().map(|h| h.ln() + LN_SQRT_2PI).sum();
            outputs
                .iter()
                .map(|o| match o {
                    Some(o) => {
                        let e = residual(o);
                        -0.5 * e
                            .iter()
                            .zip(&h)
                            .map(|(e, h)| (e / h).powi(2))
                            .sum::<f64>()
                            - norm
                    }
                    None => f64::NEG_INFINITY,
                })
                .collect()
        }
    };
    log_mean(&terms)
}

/// Monte-Carlo estimate of the record density with the experiment-specific
/// inputs integrated out. Draw `k` always uses sub-stream `k`, so the result
/// depends only on `(q, record, stream)`.
pub fn estimate_likelihood(
    q: &Qoi,
    record: &ObservationRecord,
    model: ResidualModel,
    stream: RngStream,
    opts: &LikelihoodOptions,
) -> Result<LikelihoodEstimate> {
    q.check_model(model)?;
    record.validate()?;
    let y = observed_vector(record);
    let cap = opts.max_draws.max(2);
    let mut k = opts.initial_draws.clamp(2, cap);
    let mut outputs: Vec<Option<[f64; 2]>> = Vec::with_capacity(k);
    loop {
        let fresh: Vec<Option<[f64; 2]>> = (outputs.len()..k)
            .into_par_iter()
            .map(|i| {
                simulate_draw(record, q, stream.child(i as u64), &opts.simulation)
                    .ok()
                    .and_then(|d| d.outputs)
            })
            .collect();
        outputs.extend(fresh);
        let (log_value, rel) = summarize(&outputs, &y, q, model);
        let settled = rel <= opts.target_precision || rel.is_nan();
        if settled || k >= cap {
            let failures = outputs.iter().filter(|o| o.is_none()).count();
            return Ok(LikelihoodEstimate {
                log_value,
                draws: k,
                relative_precision: rel,
                failures,
                imprecise: !(rel <= opts.target_precision),
                failure_flagged: failures as f64 > opts.failure_tolerance * k as f64,
            });
        }
        k = (k * 2).min(cap);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorEvaluation {
    pub log_prior: f64,
    pub log_likelihood: f64,
    /// Unnormalised log posterior.
    pub value: f64,
    /// Per-record estimates; empty when the prior vanishes.
    pub records: Vec<LikelihoodEstimate>,
}

/// Log prior plus the sum of per-record log likelihoods. Record `i` uses
/// sub-stream `i` of `stream`.
pub fn log_posterior(
    q: &Qoi,
    records: &[ObservationRecord],
    model: ResidualModel,
    prior: &Prior,
    stream: RngStream,
    opts: &LikelihoodOptions,
) -> Result<PosteriorEvaluation> {
    let log_prior = prior.ln_density(q, model);
    if log_prior == f64::NEG_INFINITY {
        return Ok(PosteriorEvaluation {
            log_prior,
            log_likelihood: f64::NEG_INFINITY,
            value: f64::NEG_INFINITY,
            records: Vec::new(),
        });
    }
    let estimates = records
        .par_iter()
        .enumerate()
        .map(|(i, r)| estimate_likelihood(q, r, model, stream.child(i as u64), opts))
        .collect::<Result<Vec<_>>>()?;
    let log_likelihood: f64 = estimates.iter().map(|e| e.log_value).sum();
    let value = if log_likelihood.is_nan() {
        f64::NEG_INFINITY
    } else {
        log_prior + log_likelihood
    };
    Ok(PosteriorEvaluation {
        log_prior,
        log_likelihood,
        value,
        records: estimates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{AleatorySpecs, DamKnowns, Observation};
    use crate::stochastic::DistSpec;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn fixed_record() -> ObservationRecord {
        ObservationRecord {
            name: "fixed".into(),
            knowns: DamKnowns {
                height: 15.0,
                released_volume: 2.0e6,
                level_drop: 12.0,
                final_height: 12.0,
                initial_depth_ratio: 0.1,
            },
            aleatory: AleatorySpecs {
                embankment_slope: DistSpec::Fixed(2.0),
                crest_width: DistSpec::Fixed(5.0),
                basin_exponent: DistSpec::Fixed(2.0),
                breach_angle: DistSpec::Fixed(70.0),
            },
            observed: Observation {
                peak_discharge: 800.0,
                final_width: Some(40.0),
            },
        }
    }

    #[test]
    fn residual_density_examples() {
        assert_relative_eq!(
            residual_log_density(&[0.0, 0.0], [1.0, 1.0]),
            -(2.0 * PI).ln(),
            epsilon = 1e-14
        );
        let expected = (1.0 / ((2.0 * PI).sqrt() * 0.22) * (-0.5f64).exp()
            * (1.0 / ((2.0 * PI).sqrt() * 0.14)))
            .ln();
        assert_relative_eq!(
            residual_log_density(&[0.22, 0.0], [0.22, 0.14]),
            expected,
            epsilon = 1e-13
        );
        assert_eq!(
            residual_log_density(&[0.3, -0.1], [0.2, 0.1]),
            residual_log_density(&[-0.3, 0.1], [0.2, 0.1])
        );
        assert_relative_eq!(
            residual_log_density(&[0.5], [0.5, 0.1]),
            -0.5 - 0.5f64.ln() - LN_SQRT_2PI,
            epsilon = 1e-14
        );
    }

    #[test]
    fn bandwidth_rule() {
        let s: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let h = kde_bandwidths(&s);
        let sd = (100.0 * 101.0 / 12.0f64).sqrt();
        assert_relative_eq!(h[0], sd * 100f64.powf(-1.0 / 6.0), max_relative = 1e-12);
        assert_relative_eq!(h[1], 2.0 * h[0], max_relative = 1e-12);
        let s1: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        assert_relative_eq!(
            kde_bandwidths(&s1)[0],
            sd * (4.0f64 / 3.0).powf(0.2) * 100f64.powf(-0.2),
            max_relative = 1e-12
        );
    }

    #[test]
    fn degenerate_record_matches_residual_density() {
        let r = fixed_record();
        let q = Qoi {
            lambda: -7.0,
            zeta: 0.0,
            nu: 4.0,
            eta: -0.5,
            sigma: Some([0.2, 0.1]),
        };
        let opts = LikelihoodOptions {
            initial_draws: 16,
            ..Default::default()
        };
        let est =
            estimate_likelihood(&q, &r, ResidualModel::Gaussian, RngStream::new(1, 0), &opts).unwrap();
        let d = simulate_draw(&r, &q, RngStream::new(5, 5), &opts.simulation).unwrap();
        let o = d.outputs.unwrap();
        let eps = [800f64.log10() - o[0], 40f64.log10() - o[1]];
        assert_relative_eq!(est.log_value, residual_log_density(&eps, [0.2, 0.1]), epsilon = 1e-12);
        assert_eq!(est.draws, 16);
        assert!(!est.imprecise);

        let post = log_posterior(
            &q,
            std::slice::from_ref(&r),
            ResidualModel::Gaussian,
            &Prior::default(),
            RngStream::new(3, 0),
            &opts,
        )
        .unwrap();
        assert_relative_eq!(
            post.value,
            Prior::default().ln_density(&q, ResidualModel::Gaussian)
                + residual_log_density(&eps, [0.2, 0.1]),
            epsilon = 1e-12
        );
    }

    #[test]
    fn wide_errors_flatten_the_likelihood() {
        let mut r = fixed_record();
        r.aleatory = AleatorySpecs::defaults();
        let q = Qoi {
            lambda: -7.0,
            zeta: 0.5,
            nu: 4.0,
            eta: -0.5,
            sigma: Some([1e3, 1e3]),
        };
        let opts = LikelihoodOptions {
            initial_draws: 32,
            ..Default::default()
        };
        let est =
            estimate_likelihood(&q, &r, ResidualModel::Gaussian, RngStream::new(2, 0), &opts).unwrap();
        assert_relative_eq!(est.log_value, -(2.0 * PI * 1e6).ln(), epsilon = 1e-5);
    }

    #[test]
    fn model_mismatch_is_rejected() {
        let r = fixed_record();
        let q = Qoi {
            lambda: -7.0,
            zeta: 0.5,
            nu: 4.0,
            eta: -0.5,
            sigma: Some([0.2, 0.1]),
        };
        let opts = LikelihoodOptions::default();
        assert!(
            estimate_likelihood(&q, &r, ResidualModel::ZeroNoise, RngStream::new(1, 0), &opts).is_err()
        );
    }

    #[test]
    fn vanishing_prior_skips_the_model() {
        let q = Qoi {
            lambda: 6.0,
            zeta: 0.5,
            nu: 4.0,
            eta: -0.5,
            sigma: None,
        };
        // An invalid record would error if any likelihood were evaluated.
        let mut r = fixed_record();
        r.knowns.height = -1.0;
        let post = log_posterior(
            &q,
            &[r],
            ResidualModel::ZeroNoise,
            &Prior::default(),
            RngStream::new(1, 0),
            &LikelihoodOptions::default(),
        )
        .unwrap();
        assert_eq!(post.value, f64::NEG_INFINITY);
        assert!(post.records.is_empty());
    }

    #[test]
    fn log_mean_is_shift_stable() {
        let (v, rel) = log_mean(&[-1000.0, -1000.0, -1000.0]);
        assert_relative_eq!(v, -1000.0);
        assert_eq!(rel, 0.0);
        let (v, _) = log_mean(&[0.0, f64::NEG_INFINITY]);
        assert_relative_eq!(v, 0.5f64.ln());
    }
}
