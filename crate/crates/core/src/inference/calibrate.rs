use super::{log_posterior, LikelihoodOptions, ObservationRecord, Prior, Qoi, ResidualModel};
use crate::error::Result;
use crate::mcmc::{ChainArchive, DeMcConfig, LogTarget};
use crate::stochastic::RngStream;

const INITIAL: u64 = 3;

/// Jitter standard deviation relative to each prior range.
pub const JITTER_FRACTION: f64 = 1e-4;

/// The calibration posterior as a sampling target.
#[derive(Debug, Clone)]
pub struct PosteriorTarget<'a> {
    pub records: &'a [ObservationRecord],
    pub model: ResidualModel,
    pub prior: Prior,
    pub options: LikelihoodOptions,
}

impl LogTarget for PosteriorTarget<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn log_density(&self, x: &[f64], stream: RngStream) -> Result<f64> {
        let q = Qoi::from_slice(self.model, x)?;
        Ok(log_posterior(&q, self.records, self.model, &self.prior, stream, &self.options)?.value)
    }
}

/// Sampler settings for a calibration run with jitter scaled to the prior.
pub fn calibration_config(
    prior: &Prior,
    model: ResidualModel,
    chains: usize,
    iterations: usize,
    seed: u64,
) -> DeMcConfig {
    let jitter = prior
        .ranges(model)
        .into_iter()
        .map(|r| JITTER_FRACTION * r)
        .collect();
    DeMcConfig::new(chains, iterations, jitter, seed)
}

/// Starting states drawn from the prior, one sub-stream per chain.
pub fn initial_states(
    prior: &Prior,
    model: ResidualModel,
    chains: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let root = RngStream::new(seed, 0);
    (0..chains)
        .map(|j| {
            let mut rng = root.descend(&[INITIAL, j as u64]).rng();
            Ok(prior.sample(model, &mut rng)?.to_vec())
        })
        .collect()
}

/// Empty archive for a calibration run.
pub fn new_archive(config: &DeMcConfig, model: ResidualModel) -> Result<ChainArchive> {
    let names = model.parameter_names().iter().map(|s| s.to_string()).collect();
    let mut meta = config.meta(names);
    meta.residual_model = Some(model.as_str().to_string());
    ChainArchive::new(meta)
}
