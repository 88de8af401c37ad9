//! Deterministic breach simulator.
//!
//! The reservoir level `H_r` and breach top width `W_b` are integrated as a
//! coupled ODE system; the breach bottom `H_b` is slaved to `W_b`.

pub mod geometry;
pub mod hydraulics;
pub mod erosion;
pub mod reservoir;
pub mod simulate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use erosion::{breach_volume, breach_volume_rate, sediment_transport};
pub use geometry::{
    erodible_perimeter, hydraulic_radius, section_geometry, shape_exponent, side_wall_length,
    BreachShape, Section, Stage,
};
pub use hydraulics::{breach_discharge, critical_flow, reference_discharge, G};
pub use reservoir::{initial_conditions, reservoir_rate, InitialState};
pub use simulate::{
    eroded_volume, reservoir_volume, simulate, simulate_fixed, simulate_with, FailureMode, Hydrograph,
    HydrographSample, SimulationOptions,
};

/// Dam body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamGeometry {
    /// Dam height `h_d` [m].
    pub height: f64,
    /// Crest width `w_c` [m].
    pub crest_width: f64,
    /// Embankment slope `s_e` (horizontal per vertical).
    pub embankment_slope: f64,
    /// Breach side angle `β` [deg].
    pub breach_angle: f64,
}

/// Reservoir storage law `V_r ∝ H_r^α` and the released volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirSpec {
    /// Basin shape exponent `α`.
    pub basin_exponent: f64,
    /// Level drop `ΔH_r` [m].
    pub level_drop: f64,
    /// Released volume `ΔV_r` [m³].
    pub released_volume: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreachSpec {
    /// Final breach height `ΔH_b` [m].
    pub final_height: f64,
    /// Initial breach depth relative to `ΔH_r`.
    pub initial_depth_ratio: f64,
}

/// Sediment transport law `q_s = γ v^ν r_h^η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErosionParams {
    pub gamma: f64,
    pub nu: f64,
    pub eta: f64,
}

/// One fully specified dam-reservoir system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamCase {
    pub geometry: DamGeometry,
    pub reservoir: ReservoirSpec,
    pub breach: BreachSpec,
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}

impl DamGeometry {
    pub fn validate(&self) -> Result<()> {
        require(self.height.is_finite() && self.height > 0.0, || {
            format!("dam height must be > 0, got {}", self.height)
        })?;
        require(self.crest_width.is_finite() && self.crest_width >= 0.0, || {
            format!("crest width must be >= 0, got {}", self.crest_width)
        })?;
        require(
            self.embankment_slope.is_finite() && self.embankment_slope >= 0.0,
            || format!("embankment slope must be >= 0, got {}", self.embankment_slope),
        )?;
        require(self.breach_angle > 0.0 && self.breach_angle <= 90.0, || {
            format!("breach angle must lie in (0, 90], got {}", self.breach_angle)
        })
    }
}

impl ReservoirSpec {
    pub fn validate(&self) -> Result<()> {
        require(self.basin_exponent.is_finite() && self.basin_exponent >= 1.0, || {
            format!("basin exponent must be >= 1, got {}", self.basin_exponent)
        })?;
        require(self.level_drop.is_finite() && self.level_drop > 0.0, || {
            format!("reservoir level drop must be > 0, got {}", self.level_drop)
        })?;
        require(
            self.released_volume.is_finite() && self.released_volume > 0.0,
            || format!("released volume must be > 0, got {}", self.released_volume),
        )
    }
}

impl BreachSpec {
    pub fn validate(&self, dam_height: f64) -> Result<()> {
        require(
            self.final_height > 0.0 && self.final_height <= dam_height,
            || {
                format!(
                    "final breach height must lie in (0, h_d={dam_height}], got {}",
                    self.final_height
                )
            },
        )?;
        require(
            self.initial_depth_ratio > 0.0 && self.initial_depth_ratio <= 1.0,
            || {
                format!(
                    "initial depth ratio must lie in (0, 1], got {}",
                    self.initial_depth_ratio
                )
            },
        )
    }
}

impl ErosionParams {
    pub fn validate(&self) -> Result<()> {
        require(self.gamma.is_finite() && self.gamma >= 0.0, || {
            format!("gamma must be >= 0, got {}", self.gamma)
        })?;
        require(self.nu.is_finite() && self.nu > 0.0, || {
            format!("nu must be > 0, got {}", self.nu)
        })?;
        require(self.eta.is_finite() && self.eta <= 0.0, || {
            format!("eta must be <= 0, got {}", self.eta)
        })
    }
}

impl DamCase {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.reservoir.validate()?;
        self.breach.validate(self.geometry.height)
    }
}
