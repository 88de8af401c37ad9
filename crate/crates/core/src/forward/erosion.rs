//! Sediment transport and breach volume.

use super::geometry::Stage;
use crate::error::{Error, Result};

/// Transport rate per unit perimeter, `γ v^ν r_h^η` [m²/s].
pub fn sediment_transport(v: f64, r_h: f64, gamma: f64, nu: f64, eta: f64) -> Result<f64> {
    for (name, x) in [("v", v), ("r_h", r_h), ("gamma", gamma), ("nu", nu), ("eta", eta)] {
        if !x.is_finite() {
            return Err(Error::domain(format!("{name} must be finite, got {x}")));
        }
    }
    if v < 0.0 || r_h < 0.0 {
        return Err(Error::domain(format!(
            "sediment transport needs v >= 0 and r_h >= 0 (v={v}, r_h={r_h})"
        )));
    }
    if r_h == 0.0 && eta < 0.0 {
        if v == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::domain("r_h = 0 with eta < 0 and v > 0"));
    }
    Ok(transport_unchecked(v, r_h, gamma, nu, eta))
}

#[inline]
pub(crate) fn transport_unchecked(v: f64, r_h: f64, gamma: f64, nu: f64, eta: f64) -> f64 {
    if gamma == 0.0 || v == 0.0 {
        return 0.0;
    }
    gamma * v.powf(nu) * r_h.powf(eta)
}

/// Eroded breach volume `V_b = (W_b h_b / k)(w_c + 2 s_e h_b / (k+1))`.
pub fn breach_volume(w_b: f64, k: f64, h_b: f64, w_c: f64, s_e: f64) -> f64 {
    w_b * h_b / k * (w_c + 2.0 * s_e * h_b / (k + 1.0))
}

/// `dV_b/dW_b` for the given stage.
///
/// In the vertical stage `h_b ∝ W_b` with `k` fixed, so `V_b` has a part
/// quadratic and a part cubic in `W_b`. In the lateral stage `h_b` is fixed
/// and `k` follows the side-angle relation, `dk/dW_b = -(k-1)/W_b`.
pub fn breach_volume_rate(k: f64, h_b: f64, w_c: f64, s_e: f64, stage: Stage) -> Result<f64> {
    if !(k > 1.0 && k.is_finite()) {
        return Err(Error::domain(format!("shape exponent must exceed 1, got {k}")));
    }
    if !(h_b > 0.0 && h_b.is_finite() && w_c >= 0.0 && s_e >= 0.0) {
        return Err(Error::domain(format!(
            "breach volume rate needs h_b > 0, w_c >= 0, s_e >= 0 (h_b={h_b}, w_c={w_c}, s_e={s_e})"
        )));
    }
    Ok(volume_rate_unchecked(k, h_b, w_c, s_e, stage))
}

#[inline]
pub(crate) fn volume_rate_unchecked(k: f64, h_b: f64, w_c: f64, s_e: f64, stage: Stage) -> f64 {
    let kp1 = k + 1.0;
    match stage {
        Stage::Vertical => h_b * (2.0 / k * w_c + 6.0 / (k * kp1) * s_e * h_b),
        Stage::Lateral => {
            let k2 = k * k;
            h_b * ((2.0 * k - 1.0) / k2 * w_c
                + 2.0 * (3.0 * k2 - 1.0) / (k2 * kp1 * kp1) * s_e * h_b)
        }
    }
}
