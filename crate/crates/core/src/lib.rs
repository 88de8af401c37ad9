//! Probabilistic embankment dam breach hydrographs.

pub mod analysis;
pub mod error;
pub mod forward;
pub mod inference;
pub mod io;
pub mod mcmc;
pub mod predict;
pub mod stochastic;

pub use error::{Error, Result};
