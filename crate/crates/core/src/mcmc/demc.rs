use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{diagnostics, ArchiveMeta, ChainArchive, LogTarget};
use crate::error::{Error, Result};
use crate::stochastic::RngStream;

const PROPOSAL: u64 = 1;
const EVALUATION: u64 = 2;

/// `2.38 / √(2d)`.
pub fn demc_scale(dim: usize) -> f64 {
    2.38 / (2.0 * dim as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeMcConfig {
    pub chains: usize,
    /// Generation budget including the initial states.
    pub iterations: usize,
    /// Jump scale; `None` takes [`demc_scale`].
    pub scale: Option<f64>,
    /// Per-parameter jitter standard deviation.
    pub jitter: Vec<f64>,
    /// Generations between checkpoint callbacks.
    pub checkpoint_every: usize,
    /// Stop once every parameter has this many effective samples.
    pub target_effective: Option<f64>,
    pub seed: u64,
}

impl DeMcConfig {
    pub fn new(chains: usize, iterations: usize, jitter: Vec<f64>, seed: u64) -> Self {
        Self {
            chains,
            iterations,
            scale: None,
            jitter,
            checkpoint_every: 50,
            target_effective: None,
            seed,
        }
    }

    pub fn meta(&self, names: Vec<String>) -> ArchiveMeta {
        let dim = self.jitter.len();
        ArchiveMeta {
            seed: self.seed,
            chains: self.chains,
            dim,
            names,
            scale: self.scale.unwrap_or_else(|| demc_scale(dim)),
            jitter: self.jitter.clone(),
            residual_model: None,
            budget: self.iterations,
            checkpoint_every: self.checkpoint_every,
            target_effective: self.target_effective,
            burn_in: None,
            thinning_lag: None,
            target_reached: false,
            target: None,
        }
    }
}

/// `x_j + δ (x_{r2} − x_{r1}) + e` with distinct partners `r1 ≠ r2 ≠ j`.
pub fn propose<R: Rng + ?Sized>(
    j: usize,
    states: &[Vec<f64>],
    scale: f64,
    jitter: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = states.len();
    if n < 3 {
        return Err(Error::Config(format!(
            "differential evolution needs at least 3 chains, got {n}"
        )));
    }
    let mut pick = |exclude: &[usize]| loop {
        let r = rng.random_range(0..n);
        if !exclude.contains(&r) {
            break r;
        }
    };
    let r1 = pick(&[j]);
    let r2 = pick(&[j, r1]);
    Ok(states[j]
        .iter()
        .zip(&states[r1])
        .zip(&states[r2])
        .zip(jitter)
        .map(|(((&x, &a), &b), &s)| {
            let e = if s > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                s * z
            } else {
                0.0
            };
            x + scale * (b - a) + e
        })
        .collect())
}

/// Metropolis rule in log space. `u` is a uniform draw on `[0, 1)`.
pub fn metropolis_accept(current: f64, candidate: f64, u: f64) -> bool {
    if candidate >= current {
        return true;
    }
    if candidate == f64::NEG_INFINITY || candidate.is_nan() {
        return false;
    }
    u.ln() < candidate - current
}

/// Runs (or resumes) generation-synchronous DE-MC until the archive holds
/// its generation budget or the effective-sample target is met. Every random
/// number is addressed by `(generation, chain)`, so the result does not
/// depend on the thread count and a resumed run matches an uninterrupted one.
pub fn run<T: LogTarget + ?Sized>(
    target: &T,
    archive: &mut ChainArchive,
    initial: &[Vec<f64>],
    mut checkpoint: impl FnMut(&ChainArchive) -> Result<()>,
) -> Result<()> {
    let meta = archive.meta.clone();
    let n = meta.chains;
    let d = meta.dim;
    if target.dim() != d {
        return Err(Error::Config(format!(
            "target has dimension {}, archive {d}",
            target.dim()
        )));
    }
    let root = RngStream::new(meta.seed, 0);

    let mut states: Vec<Vec<f64>>;
    let mut log_post: Vec<f64>;
    if archive.generations() == 0 {
        if initial.len() != n || initial.iter().any(|s| s.len() != d) {
            return Err(Error::Config("initial states do not match chains x dimension".into()));
        }
        states = initial.to_vec();
        log_post = states
            .par_iter()
            .enumerate()
            .map(|(j, x)| target.log_density(x, root.descend(&[EVALUATION, 0, j as u64])))
            .collect::<Result<Vec<_>>>()?;
        archive.push_generation(&states, &log_post, &vec![true; n])?;
    } else {
        let g = archive.generations() - 1;
        states = (0..n).map(|j| archive.state(g, j).to_vec()).collect();
        log_post = (0..n).map(|j| archive.log_posterior(g, j)).collect();
    }

    let interval = meta.checkpoint_every.max(1);
    while archive.generations() < meta.budget && !archive.meta.target_reached {
        let g = archive.generations() as u64;
        let step = (0..n)
            .into_par_iter()
            .map(|j| -> Result<(Vec<f64>, f64, bool)> {
                let mut rng = root.descend(&[PROPOSAL, g, j as u64]).rng();
                let candidate = propose(j, &states, meta.scale, &meta.jitter, &mut rng)?;
                let u: f64 = rng.random();
                let lp = target.log_density(&candidate, root.descend(&[EVALUATION, g, j as u64]))?;
                if metropolis_accept(log_post[j], lp, u) {
                    Ok((candidate, lp, true))
                } else {
                    Ok((states[j].clone(), log_post[j], false))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let accepted: Vec<bool> = step.iter().map(|s| s.2).collect();
        log_post = step.iter().map(|s| s.1).collect();
        states = step.into_iter().map(|s| s.0).collect();
        archive.push_generation(&states, &log_post, &accepted)?;

        let gens = archive.generations();
        if gens % interval == 0 || gens >= meta.budget {
            if let Some(t) = meta.target_effective {
                archive.meta.target_reached = diagnostics::stopping_rule(archive, t);
            }
            checkpoint(archive)?;
        }
    }
    Ok(())
}
