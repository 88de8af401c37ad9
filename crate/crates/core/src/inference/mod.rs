//! Bayesian calibration of the erosion law against observed failures.
//!
//! The inferred globals are the lognormal parameters `(λ, ζ)` of the
//! transport coefficient `γ`, the exponents `(ν, η)` and, under the gaussian
//! residual model, the output error scales `(σ_Q, σ_W)` in log₁₀ units.

mod calibrate;
mod likelihood;
mod prior;
mod record;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::ErosionParams;

pub use calibrate::{
    calibration_config, initial_states, new_archive, PosteriorTarget, JITTER_FRACTION,
};
pub use likelihood::{
    estimate_likelihood, kde_bandwidths, log_posterior, residual_log_density, simulate_draw,
    DrawOutcome, LikelihoodEstimate, LikelihoodOptions, PosteriorEvaluation,
};
pub use prior::{log_prior, Prior};
pub use record::{AleatorySpecs, DamKnowns, Observation, ObservationRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResidualModel {
    #[serde(rename = "gaussian")]
    Gaussian,
    #[serde(rename = "zero-noise")]
    ZeroNoise,
}

impl ResidualModel {
    pub fn as_str(self) -> &'static str {
        match self {
            ResidualModel::Gaussian => "gaussian",
            ResidualModel::ZeroNoise => "zero-noise",
        }
    }

    /// Names of the calibrated parameters, in vector order.
    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            ResidualModel::Gaussian => &["lambda", "zeta", "nu", "eta", "sigma_q", "sigma_w"],
            ResidualModel::ZeroNoise => &["lambda", "zeta", "nu", "eta"],
        }
    }

    pub fn dim(self) -> usize {
        self.parameter_names().len()
    }
}

impl fmt::Display for ResidualModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResidualModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(ResidualModel::Gaussian),
            "zero-noise" | "zero_noise" => Ok(ResidualModel::ZeroNoise),
            other => Err(Error::Config(format!(
                "unknown residual model `{other}` (expected gaussian or zero-noise)"
            ))),
        }
    }
}

/// Calibrated global parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Qoi {
    /// Location of `ln γ`.
    pub lambda: f64,
    /// Scale of `ln γ`.
    pub zeta: f64,
    pub nu: f64,
    pub eta: f64,
    /// `(σ_Q, σ_W)` in log₁₀ units; present only under the gaussian model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<[f64; 2]>,
}

impl Qoi {
    pub fn model(&self) -> ResidualModel {
        if self.sigma.is_some() {
            ResidualModel::Gaussian
        } else {
            ResidualModel::ZeroNoise
        }
    }

    /// Checks the parameter set against a residual model: the gaussian model
    /// needs error scales, the zero-noise model refuses them.
    pub fn check_model(&self, model: ResidualModel) -> Result<()> {
        match (model, self.sigma) {
            (ResidualModel::Gaussian, None) => Err(Error::Validation(
                "gaussian residual model needs sigma_q and sigma_w".into(),
            )),
            (ResidualModel::ZeroNoise, Some(_)) => Err(Error::Validation(
                "zero-noise residual model takes no sigma parameters".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.lambda, self.zeta, self.nu, self.eta];
        if let Some(s) = self.sigma {
            v.extend_from_slice(&s);
        }
        v
    }

    pub fn from_slice(model: ResidualModel, x: &[f64]) -> Result<Self> {
        if x.len() != model.dim() {
            return Err(Error::Validation(format!(
                "{model} model has {} parameters, got {}",
                model.dim(),
                x.len()
            )));
        }
        Ok(Self {
            lambda: x[0],
            zeta: x[1],
            nu: x[2],
            eta: x[3],
            sigma: (model == ResidualModel::Gaussian).then(|| [x[4], x[5]]),
        })
    }

    /// Erosion law with the median transport coefficient `e^λ`.
    pub fn median_erosion(&self) -> ErosionParams {
        ErosionParams {
            gamma: self.lambda.exp(),
            nu: self.nu,
            eta: self.eta,
        }
    }
}
