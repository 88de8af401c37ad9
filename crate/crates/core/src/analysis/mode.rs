use rand::Rng;
use serde::{Deserialize, Serialize};

use super::stats::variance;
use crate::error::{Error, Result};
use crate::mcmc::PosteriorSamples;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEstimate {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// Bootstrap standard errors over the draws.
    pub std_errors: Vec<f64>,
    pub log_posterior: f64,
}

fn best(draws: &[Vec<f64>], log_post: &[f64], idx: impl Iterator<Item = usize>) -> usize {
    idx.reduce(|a, b| {
        match log_post[b].total_cmp(&log_post[a]) {
            std::cmp::Ordering::Greater => b,
            std::cmp::Ordering::Less => a,
            // Ties resolve on the state itself so row order never matters.
            std::cmp::Ordering::Equal => {
                let ord = draws[b]
                    .iter()
                    .zip(&draws[a])
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal);
                if ord.is_lt() {
                    b
                } else {
                    a
                }
            }
        }
    })
    .expect("non-empty draws")
}

/// The stored draw with the highest log posterior, with bootstrap errors
/// from `b` resamples of the draws.
pub fn mode_estimate<R: Rng + ?Sized>(
    samples: &PosteriorSamples,
    b: usize,
    rng: &mut R,
) -> Result<ModeEstimate> {
    let n = samples.draws.len();
    if n == 0 {
        return Err(Error::domain("no posterior draws"));
    }
    if samples.log_posterior.len() != n {
        return Err(Error::domain("log-posterior column missing or incomplete"));
    }
    let i = best(&samples.draws, &samples.log_posterior, 0..n);
    let d = samples.draws[i].len();
    let mut reps = vec![Vec::with_capacity(b); d];
    let mut idx = Vec::with_capacity(n);
    for _ in 0..b {
        idx.clear();
        idx.extend((0..n).map(|_| rng.random_range(0..n)));
        let k = best(&samples.draws, &samples.log_posterior, idx.iter().copied());
        for (p, r) in reps.iter_mut().enumerate() {
            r.push(samples.draws[k][p]);
        }
    }
    Ok(ModeEstimate {
        names: samples.names.clone(),
        values: samples.draws[i].clone(),
        std_errors: reps.iter().map(|r| variance(r).sqrt()).collect(),
        log_posterior: samples.log_posterior[i],
    })
}
