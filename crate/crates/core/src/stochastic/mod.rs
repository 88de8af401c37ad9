//! Distributions, random streams and Latin Hypercube designs.

mod dist;
mod exponents;
mod lhs;
mod rng;

pub use dist::{DistSpec, SpecParseError};
pub use exponents::{erosion_exponent_prior_bounds, transport_exponents, ExponentBounds};
pub use lhs::lhs_sample;
pub use rng::{RngStream, StreamRng};
