//! Critical flow through the breach control section.

use crate::error::{Error, Result};

/// Gravitational acceleration [m/s²].
pub const G: f64 = 9.81;

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {v}")))
    }
}

/// Critical depth and velocity for energy head `h_e`.
///
/// Returns `(0, 0)` when the head is not positive.
pub fn critical_flow(h_e: f64, k: f64) -> Result<(f64, f64)> {
    finite("H_e", h_e)?;
    finite("k", k)?;
    if k <= 1.0 {
        return Err(Error::domain(format!("shape exponent must exceed 1, got {k}")));
    }
    Ok(critical_flow_unchecked(h_e, k))
}

#[inline]
pub(crate) fn critical_flow_unchecked(h_e: f64, k: f64) -> (f64, f64) {
    if h_e <= 0.0 {
        return (0.0, 0.0);
    }
    let h_c = 2.0 * k / (2.0 * k + 1.0) * h_e;
    (h_c, (G * h_c / k).sqrt())
}

/// Breach outflow `Q_b` for energy head `h_e`; zero when `h_e <= 0`.
pub fn breach_discharge(h_e: f64, k: f64, w_b: f64, h_b: f64) -> Result<f64> {
    finite("H_e", h_e)?;
    finite("W_b", w_b)?;
    finite("h_b", h_b)?;
    if k <= 1.0 || !k.is_finite() {
        return Err(Error::domain(format!("shape exponent must exceed 1, got {k}")));
    }
    if w_b <= 0.0 || h_b <= 0.0 {
        return Err(Error::domain(format!(
            "breach needs W_b > 0 and h_b > 0 (W_b={w_b}, h_b={h_b})"
        )));
    }
    Ok(discharge_unchecked(h_e, k, w_b, h_b))
}

#[inline]
pub(crate) fn discharge_unchecked(h_e: f64, k: f64, w_b: f64, h_b: f64) -> f64 {
    if h_e <= 0.0 {
        return 0.0;
    }
    let (h_c, _) = critical_flow_unchecked(h_e, k);
    w_b / h_b.powf(k - 1.0) * (G / (k * k * k)).sqrt() * h_c.powf(k + 0.5)
}

/// Outflow of a triangular breach as wide as twice its depth, `√(512 g H_e⁵ / 3125)`.
pub fn reference_discharge(h_e: f64) -> f64 {
    if h_e <= 0.0 {
        return 0.0;
    }
    (512.0 / 3125.0 * G * h_e.powi(5)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::geometry::K_MIN;
    use approx::assert_relative_eq;

    #[test]
    fn rectangular_critical_depth() {
        let (h_c, _) = critical_flow(1.0, K_MIN).unwrap();
        assert!((h_c - 2.0 / 3.0).abs() < 1e-6);
        assert_eq!(critical_flow(0.0, 1.7).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn triangular_critical_flow() {
        let (h_c, v_c) = critical_flow(2.0, 2.0).unwrap();
        assert_relative_eq!(h_c, 1.6, epsilon = 1e-12);
        assert_relative_eq!(v_c, (9.81f64 * 0.8).sqrt(), epsilon = 1e-12);
        assert!((v_c - 2.8014).abs() < 1e-4);
    }

    #[test]
    fn triangular_discharge_matches_reference() {
        for h_e in [0.3, 1.0, 7.5] {
            let q = breach_discharge(h_e, 2.0, 2.0 * 6.0, 6.0).unwrap();
            assert_relative_eq!(q, reference_discharge(h_e), max_relative = 1e-12);
        }
        assert!((reference_discharge(1.0) - 1.2678).abs() < 1e-4);
    }

    #[test]
    fn rectangular_discharge() {
        let q = breach_discharge(1.0, K_MIN, 5.0, 3.0).unwrap();
        assert!((q - 5.0 * 9.81f64.sqrt() * (2.0f64 / 3.0).powf(1.5)).abs() < 1e-3);
        assert!((q - 8.524).abs() < 1e-3);
    }

    #[test]
    fn no_head_no_flow() {
        assert_eq!(breach_discharge(0.0, 1.5, 4.0, 2.0).unwrap(), 0.0);
        assert_eq!(breach_discharge(-1.0, 1.5, 4.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn discharge_is_area_times_velocity() {
        use crate::forward::geometry::BreachShape;
        let (k, w_b, h_b, h_e) = (1.4, 12.0, 5.0, 4.0);
        let (h_c, v_c) = critical_flow(h_e, k).unwrap();
        let area = BreachShape::new(k, w_b, h_b).unwrap().area(h_c);
        assert_relative_eq!(
            breach_discharge(h_e, k, w_b, h_b).unwrap(),
            area * v_c,
            max_relative = 1e-12
        );
    }
}
