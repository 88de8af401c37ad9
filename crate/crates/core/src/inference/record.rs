use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{BreachSpec, DamCase, DamGeometry, ReservoirSpec};
use crate::stochastic::DistSpec;

/// Deterministic knowns of one historical failure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamKnowns {
    /// Dam height `h_d` [m].
    pub height: f64,
    /// Released volume `ΔV_r` [m³].
    pub released_volume: f64,
    /// Reservoir level drop `ΔH_r` [m].
    pub level_drop: f64,
    /// Final breach height `ΔH_b` [m].
    pub final_height: f64,
    /// Initial breach depth relative to `ΔH_r`.
    pub initial_depth_ratio: f64,
}

/// Distributions of the experiment-specific uncertain inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AleatorySpecs {
    pub embankment_slope: DistSpec,
    pub crest_width: DistSpec,
    pub basin_exponent: DistSpec,
    pub breach_angle: DistSpec,
}

impl AleatorySpecs {
    pub fn defaults() -> Self {
        Self {
            embankment_slope: DistSpec::TruncatedNormal {
                mean: 2.16,
                sd: 0.66,
                lo: 1.0,
                hi: 10.0,
            },
            crest_width: DistSpec::LogNormal {
                location: 1.55,
                scale: 0.51,
            },
            basin_exponent: DistSpec::Uniform { lo: 1.0, hi: 4.0 },
            breach_angle: DistSpec::Uniform { lo: 45.0, hi: 90.0 },
        }
    }

    pub fn all(&self) -> [DistSpec; 4] {
        [
            self.embankment_slope,
            self.crest_width,
            self.basin_exponent,
            self.breach_angle,
        ]
    }
}

/// Observed peak outflow and, when reported, final breach width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// `Q_p` [m³/s].
    pub peak_discharge: f64,
    /// `W_f` [m].
    pub final_width: Option<f64>,
}

impl Observation {
    /// `(log₁₀ Q_p, log₁₀ W_f)`.
    pub fn log10(&self) -> (f64, Option<f64>) {
        (self.peak_discharge.log10(), self.final_width.map(f64::log10))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub name: String,
    pub knowns: DamKnowns,
    pub aleatory: AleatorySpecs,
    pub observed: Observation,
}

impl ObservationRecord {
    pub fn validate(&self) -> Result<()> {
        let k = &self.knowns;
        for (name, v) in [
            ("h_d", k.height),
            ("dV_r", k.released_volume),
            ("dH_r", k.level_drop),
            ("dH_b", k.final_height),
            ("r_0", k.initial_depth_ratio),
            ("Q_p", self.observed.peak_discharge),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!(
                    "{}: {name} must be positive, got {v}",
                    self.name
                )));
            }
        }
        if let Some(w) = self.observed.final_width {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Validation(format!(
                    "{}: W_f must be positive, got {w}",
                    self.name
                )));
            }
        }
        for spec in self.aleatory.all() {
            spec.validate()?;
            if spec.dim() != 1 {
                return Err(Error::Validation(format!(
                    "{}: aleatory inputs must be one-dimensional, got {spec}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn has_width(&self) -> bool {
        self.observed.final_width.is_some()
    }

    /// Dam case for given values of the uncertain inputs.
    pub fn case(&self, s_e: f64, w_c: f64, alpha: f64, beta: f64) -> DamCase {
        let k = &self.knowns;
        DamCase {
            geometry: DamGeometry {
                height: k.height,
                crest_width: w_c,
                embankment_slope: s_e,
                breach_angle: beta,
            },
            reservoir: ReservoirSpec {
                basin_exponent: alpha,
                level_drop: k.level_drop,
                released_volume: k.released_volume,
            },
            breach: BreachSpec {
                final_height: k.final_height,
                initial_depth_ratio: k.initial_depth_ratio,
            },
        }
    }

    /// Dam case with the uncertain inputs drawn in the order
    /// `s_e, w_c, α, β`.
    pub fn draw_case<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DamCase> {
        let a = &self.aleatory;
        let s_e = a.embankment_slope.sample(rng)?;
        let w_c = a.crest_width.sample(rng)?;
        let alpha = a.basin_exponent.sample(rng)?;
        let beta = a.breach_angle.sample(rng)?;
        Ok(self.case(s_e, w_c, alpha, beta))
    }
}
