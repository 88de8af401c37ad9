//! Reservoir storage law and the initial breach state.

use serde::{Deserialize, Serialize};

use super::{BreachSpec, DamGeometry, ReservoirSpec};
use crate::error::{Error, Result};

/// `dV_r/dH_r = α V_r0 / H_r0^α · H_r^(α-1)` [m²].
pub fn reservoir_rate(h_r: f64, alpha: f64, v_r0: f64, h_r0: f64) -> Result<f64> {
    if !(h_r >= 0.0 && h_r.is_finite()) {
        return Err(Error::domain(format!("reservoir level must be >= 0, got {h_r}")));
    }
    if !(alpha >= 1.0 && v_r0 > 0.0 && h_r0 > 0.0) {
        return Err(Error::domain(format!(
            "reservoir law needs alpha >= 1, V_r0 > 0, H_r0 > 0 (alpha={alpha}, V_r0={v_r0}, H_r0={h_r0})"
        )));
    }
    Ok(alpha * v_r0 / h_r0.powf(alpha) * h_r.powf(alpha - 1.0))
}

/// Levels and volumes at breach initiation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    /// Lowest possible breach bottom `H_b,min` [m].
    pub bottom_min: f64,
    /// Initial breach bottom `H_b,0` [m].
    pub bottom: f64,
    /// Initial reservoir level `H_r,0` [m].
    pub level: f64,
    /// Reservoir volume at `H_r,0` [m³].
    pub volume: f64,
    /// Initial breach top width `W_b,0` [m].
    pub width: f64,
}

impl InitialState {
    /// Initial breach height `h_d - H_b,0`.
    pub fn breach_height(&self, dam_height: f64) -> f64 {
        dam_height - self.bottom
    }
}

pub fn initial_conditions(
    geometry: &DamGeometry,
    reservoir: &ReservoirSpec,
    breach: &BreachSpec,
) -> Result<InitialState> {
    geometry.validate()?;
    reservoir.validate()?;
    breach.validate(geometry.height)?;

    let bottom_min = geometry.height - breach.final_height;
    let bottom = bottom_min + (1.0 - breach.initial_depth_ratio) * reservoir.level_drop;
    let level = bottom_min + reservoir.level_drop;
    let alpha = reservoir.basin_exponent;
    let denom = level.powf(alpha) - bottom_min.powf(alpha);
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::domain(format!(
            "degenerate reservoir: H_r0^alpha - H_b,min^alpha = {denom}"
        )));
    }
    let volume = reservoir.released_volume * level.powf(alpha) / denom;
    let h_b0 = geometry.height - bottom;
    if !(h_b0 > 0.0) {
        return Err(Error::domain(format!(
            "initial breach height must be > 0, got {h_b0} (bottom {bottom} above dam height {})",
            geometry.height
        )));
    }
    let width = 16.0 * (5.0 - geometry.breach_angle / 24.0) / 25.0 * h_b0;
    Ok(InitialState {
        bottom_min,
        bottom,
        level,
        volume,
        width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn icold() -> (DamGeometry, ReservoirSpec, BreachSpec) {
        (
            DamGeometry {
                height: 61.0,
                crest_width: 24.0,
                embankment_slope: 3.0,
                breach_angle: 45.0,
            },
            ReservoirSpec {
                basin_exponent: 3.0,
                level_drop: 61.0,
                released_volume: 38_276_344.0,
            },
            BreachSpec {
                final_height: 61.0,
                initial_depth_ratio: 0.82,
            },
        )
    }

    #[test]
    fn rate_values() {
        assert_relative_eq!(reservoir_rate(3.0, 1.0, 500.0, 10.0).unwrap(), 50.0);
        assert_relative_eq!(reservoir_rate(5.0, 3.0, 1e6, 10.0).unwrap(), 7.5e4, max_relative = 1e-14);
        assert_relative_eq!(reservoir_rate(10.0, 2.5, 1e6, 10.0).unwrap(), 2.5e5, max_relative = 1e-14);
        assert!(reservoir_rate(-1.0, 2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn icold_initial_state() {
        let (g, r, b) = icold();
        let s = initial_conditions(&g, &r, &b).unwrap();
        assert_eq!(s.bottom_min, 0.0);
        assert_relative_eq!(s.bottom, 0.18 * 61.0, max_relative = 1e-12);
        assert_relative_eq!(s.level, 61.0);
        assert_relative_eq!(s.volume, 38_276_344.0, max_relative = 1e-14);
        // 45 degrees gives exactly the triangular width.
        assert_eq!(s.width, 2.0 * (61.0 - s.bottom));
    }

    #[test]
    fn breach_from_foundation() {
        let (g, mut r, mut b) = icold();
        b.initial_depth_ratio = 1.0;
        r.level_drop = 40.0;
        let s = initial_conditions(&g, &r, &b).unwrap();
        assert_eq!(s.bottom, 0.0);
    }

    #[test]
    fn released_volume_is_reproduced() {
        let g = DamGeometry {
            height: 20.0,
            crest_width: 5.0,
            embankment_slope: 2.0,
            breach_angle: 60.0,
        };
        let r = ReservoirSpec {
            basin_exponent: 2.2,
            level_drop: 15.0,
            released_volume: 3e6,
        };
        let b = BreachSpec {
            final_height: 18.0,
            initial_depth_ratio: 0.3,
        };
        let s = initial_conditions(&g, &r, &b).unwrap();
        let v = |h: f64| s.volume * (h / s.level).powf(r.basin_exponent);
        assert_relative_eq!(v(s.level) - v(s.bottom_min), 3e6, max_relative = 1e-12);
    }
}
