//! Differential-evolution Markov chain sampling and convergence diagnostics.

mod demc;
mod diagnostics;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastic::RngStream;

pub use demc::{demc_scale, metropolis_accept, propose, run, DeMcConfig};
pub use diagnostics::{
    acceptance_rates, autocorrelation, detect_burn_in, diagnose, effective_samples, psrf,
    psrf_trace, thin, DiagnosticsOptions, DiagnosticsReport, EffectiveSamples, PsrfPoint,
    PsrfValue,
};

/// Unnormalised log density, possibly estimated with random numbers drawn
/// from the supplied stream.
pub trait LogTarget: Sync {
    fn dim(&self) -> usize;
    fn log_density(&self, x: &[f64], stream: RngStream) -> Result<f64>;
}

/// Run metadata stored next to the chain states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveMeta {
    pub seed: u64,
    pub chains: usize,
    pub dim: usize,
    pub names: Vec<String>,
    /// Differential-evolution jump scale `δ`.
    pub scale: f64,
    /// Per-parameter standard deviation of the proposal jitter.
    pub jitter: Vec<f64>,
    #[serde(default)]
    pub residual_model: Option<String>,
    /// Generation budget including the initial states.
    pub budget: usize,
    pub checkpoint_every: usize,
    #[serde(default)]
    pub target_effective: Option<f64>,
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub thinning_lag: Option<usize>,
    /// Sampling stopped because every parameter reached the requested
    /// effective sample size.
    #[serde(default)]
    pub target_reached: bool,
    /// Settings of the sampled density, recorded so a resumed run can
    /// rebuild the same target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<serde_json::Value>,
}

/// All states visited by the chains. Generation 0 holds the initial states.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainArchive {
    pub meta: ArchiveMeta,
    /// Generation-major, then chain, then parameter.
    states: Vec<f64>,
    log_post: Vec<f64>,
    accepted: Vec<bool>,
}

impl ChainArchive {
    pub fn new(meta: ArchiveMeta) -> Result<Self> {
        if meta.chains < 3 {
            return Err(Error::Config(format!(
                "differential evolution needs at least 3 chains, got {}",
                meta.chains
            )));
        }
        if meta.names.len() != meta.dim || meta.jitter.len() != meta.dim || meta.dim == 0 {
            return Err(Error::Config(
                "parameter names and jitter must match the dimension".into(),
            ));
        }
        Ok(Self {
            meta,
            states: Vec::new(),
            log_post: Vec::new(),
            accepted: Vec::new(),
        })
    }

    pub fn chains(&self) -> usize {
        self.meta.chains
    }

    pub fn dim(&self) -> usize {
        self.meta.dim
    }

    /// Number of stored generations.
    pub fn generations(&self) -> usize {
        self.log_post.len() / self.meta.chains
    }

    pub fn push_generation(&mut self, states: &[Vec<f64>], log_post: &[f64], accepted: &[bool]) -> Result<()> {
        let n = self.meta.chains;
        if states.len() != n || log_post.len() != n || accepted.len() != n {
            return Err(Error::Validation("generation size differs from chain count".into()));
        }
        for s in states {
            if s.len() != self.meta.dim {
                return Err(Error::Validation("state dimension mismatch".into()));
            }
            self.states.extend_from_slice(s);
        }
        self.log_post.extend_from_slice(log_post);
        self.accepted.extend_from_slice(accepted);
        Ok(())
    }

    pub fn state(&self, generation: usize, chain: usize) -> &[f64] {
        let d = self.meta.dim;
        let i = (generation * self.meta.chains + chain) * d;
        &self.states[i..i + d]
    }

    pub fn log_posterior(&self, generation: usize, chain: usize) -> f64 {
        self.log_post[generation * self.meta.chains + chain]
    }

    pub fn accepted(&self, generation: usize, chain: usize) -> bool {
        self.accepted[generation * self.meta.chains + chain]
    }

    /// Parameter `p` of `chain` over generations `lo..hi`.
    pub fn trace(&self, chain: usize, p: usize, lo: usize, hi: usize) -> Vec<f64> {
        (lo..hi).map(|g| self.state(g, chain)[p]).collect()
    }

    /// Drops generations from `len` on.
    pub fn truncate(&mut self, len: usize) {
        let n = self.meta.chains;
        self.states.truncate(len * n * self.meta.dim);
        self.log_post.truncate(len * n);
        self.accepted.truncate(len * n);
    }
}

/// Thinned posterior draws pooled over chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    pub names: Vec<String>,
    #[serde(default)]
    pub residual_model: Option<String>,
    pub draws: Vec<Vec<f64>>,
    pub log_posterior: Vec<f64>,
}

impl PosteriorSamples {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn column(&self, p: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[p]).collect()
    }
}
