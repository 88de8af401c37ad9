//! Power-law breach cross-section.
//!
//! The breach side wall is `S(w) = h_b (2|w|/W_b)^(1/(k-1))`, so the flow
//! area grows as `h^k`. `k = 1` is a rectangle and `k = 2` a triangle.
//! Below [`K_RECTANGULAR`] the closed rectangular forms are used because the
//! wall exponent `1/(k-1)` makes the general formulas cancel catastrophically.

use crate::error::{Error, Result};

/// Lower clamp applied to every shape exponent.
pub const K_MIN: f64 = 1.0 + 1e-6;

/// Shape exponents below this value use rectangular closed forms.
pub const K_RECTANGULAR: f64 = 1.0 + 1e-4;

/// Slope magnitude bounds separating the three integration zones of the wall
/// profile. Inside the outer zones the binomial series ratio is at most 1/4.
const SLOPE_GENTLE: f64 = 0.5;
const SLOPE_STEEP: f64 = 2.0;

/// Breach stage, see [`crate::forward::simulate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Self-similar deepening until the breach bottom reaches the foundation.
    Vertical,
    /// Widening with a fixed bottom.
    Lateral,
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {v}")))
    }
}

/// Shape exponent from breach height, top width and side angle in degrees.
///
/// The result is clamped to at least [`K_MIN`].
pub fn shape_exponent(h_b: f64, w_b: f64, beta_deg: f64) -> Result<f64> {
    check_finite("h_b", h_b)?;
    check_finite("beta", beta_deg)?;
    if w_b.is_nan() {
        return Err(Error::domain("W_b must not be NaN"));
    }
    if h_b <= 0.0 || w_b <= 0.0 {
        return Err(Error::domain(format!(
            "shape exponent needs h_b > 0 and W_b > 0 (h_b={h_b}, W_b={w_b})"
        )));
    }
    if !(beta_deg > 0.0 && beta_deg <= 90.0) {
        return Err(Error::domain(format!("beta must lie in (0, 90], got {beta_deg}")));
    }
    Ok(shape_exponent_unchecked(h_b, w_b, beta_deg.to_radians().tan()))
}

#[inline]
pub(crate) fn shape_exponent_unchecked(h_b: f64, w_b: f64, tan_beta: f64) -> f64 {
    (2.0 * h_b / (w_b * tan_beta) + 1.0).max(K_MIN)
}

/// Water-surface width and flow area at depth `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub width: f64,
    pub area: f64,
}

/// Breach cross-section with top width `w_b`, height `h_b` and exponent `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreachShape {
    pub k: f64,
    pub w_b: f64,
    pub h_b: f64,
}

impl BreachShape {
    pub fn new(k: f64, w_b: f64, h_b: f64) -> Result<Self> {
        check_finite("k", k)?;
        check_finite("W_b", w_b)?;
        check_finite("h_b", h_b)?;
        if k <= 1.0 {
            return Err(Error::domain(format!("shape exponent must exceed 1, got {k}")));
        }
        if w_b <= 0.0 || h_b <= 0.0 {
            return Err(Error::domain(format!(
                "breach needs W_b > 0 and h_b > 0 (W_b={w_b}, h_b={h_b})"
            )));
        }
        Ok(Self::unchecked(k, w_b, h_b))
    }

    #[inline]
    pub(crate) fn unchecked(k: f64, w_b: f64, h_b: f64) -> Self {
        Self {
            k: k.max(K_MIN),
            w_b,
            h_b,
        }
    }

    #[inline]
    pub fn is_rectangular(&self) -> bool {
        self.k < K_RECTANGULAR
    }

    /// Water-surface width `W(h)`.
    #[inline]
    pub fn width(&self, h: f64) -> f64 {
        if self.is_rectangular() {
            self.w_b
        } else {
            self.w_b * (h / self.h_b).powf(self.k - 1.0)
        }
    }

    /// Flow area `A(h)`.
    #[inline]
    pub fn area(&self, h: f64) -> f64 {
        if self.is_rectangular() {
            self.w_b * h
        } else {
            let k = self.k;
            self.w_b * h.powf(k) / (k * self.h_b.powf(k - 1.0))
        }
    }

    /// Coefficient and exponent of the wall slope `S'(x) = c x^p` in the
    /// normalised coordinate `x = 2w/W_b`.
    #[inline]
    fn slope_law(&self) -> (f64, f64) {
        let k = self.k;
        (
            2.0 * self.h_b / ((k - 1.0) * self.w_b),
            (2.0 - k) / (k - 1.0),
        )
    }

    /// Wall height `S(w)`.
    pub fn wall_height(&self, w: f64) -> f64 {
        let x = (2.0 * w.abs() / self.w_b).max(0.0);
        self.h_b * x.powf(1.0 / (self.k - 1.0))
    }

    /// Wall length between transverse positions `a <= b` (metres from the
    /// breach centre).
    pub(crate) fn wall_length_unchecked(&self, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let half = 0.5 * self.w_b;
        if self.is_rectangular() {
            // L-shaped wall: flat bottom then a vertical face.
            return Ok((b - a) + (self.wall_height(b) - self.wall_height(a)));
        }
        let (c, p) = self.slope_law();
        Ok(half * profile_arc(c, p, a / half, b / half)?)
    }

    /// Wetted perimeter `P_w(h)` of both walls up to the water surface.
    pub fn wetted_perimeter(&self, h: f64) -> Result<f64> {
        if h <= 0.0 {
            return Ok(0.0);
        }
        if self.is_rectangular() {
            return Ok(self.w_b + 2.0 * h);
        }
        Ok(2.0 * self.wall_length_unchecked(0.0, 0.5 * self.width(h))?)
    }

    /// Start of the erodible part of the wall, as a transverse position.
    pub fn erodible_start(&self, h: f64, stage: Stage) -> f64 {
        match stage {
            Stage::Vertical => 0.0,
            Stage::Lateral => {
                let k = self.k;
                (((2.0 - k) / k) * 0.5 * self.width(h)).max(0.0)
            }
        }
    }

    /// Erodible perimeter `P_e(h)`.
    pub fn erodible_perimeter(&self, h: f64, stage: Stage) -> Result<f64> {
        Ok(self.perimeters(h, stage)?.1)
    }

    /// Wetted and erodible perimeter in one pass.
    pub(crate) fn perimeters(&self, h: f64, stage: Stage) -> Result<(f64, f64)> {
        self.perimeters_at(h, self.width(h), stage)
    }

    /// As [`Self::perimeters`] with the surface width `W(h)` already known.
    pub(crate) fn perimeters_at(&self, h: f64, width: f64, stage: Stage) -> Result<(f64, f64)> {
        if h <= 0.0 {
            return Ok((0.0, 0.0));
        }
        if self.is_rectangular() {
            let wetted = self.w_b + 2.0 * h;
            let erodible = match stage {
                Stage::Vertical => wetted,
                Stage::Lateral => 2.0 * h,
            };
            return Ok((wetted, erodible));
        }
        // Normalised coordinates x = 2w/W_b; lengths scale by W_b/2.
        let x_top = width / self.w_b;
        let x_start = match stage {
            Stage::Vertical => 0.0,
            Stage::Lateral => ((2.0 - self.k) / self.k * x_top).clamp(0.0, x_top),
        };
        let (c, p) = self.slope_law();
        let profile = WallProfile::new(c, p)?;
        let inner = profile.arc(0.0, x_start)?;
        let outer = profile.arc(x_start, x_top)?;
        // Two walls of half-width W_b/2 each.
        Ok((self.w_b * (inner + outer), self.w_b * outer))
    }

    /// Hydraulic radius `A/P_w` at depth `h`.
    pub fn hydraulic_radius(&self, h: f64) -> Result<f64> {
        let p = self.wetted_perimeter(h)?;
        if p <= 0.0 {
            return Err(Error::domain("degenerate wetted perimeter"));
        }
        Ok(self.area(h) / p)
    }
}

/// `W(h)` and `A(h)` for a breach of top width `w_b`, height `h_b`.
pub fn section_geometry(h: f64, k: f64, w_b: f64, h_b: f64) -> Result<Section> {
    check_finite("h", h)?;
    if h < 0.0 {
        return Err(Error::domain(format!("water depth must be >= 0, got {h}")));
    }
    let shape = BreachShape::new(k, w_b, h_b)?;
    Ok(Section {
        width: shape.width(h),
        area: shape.area(h),
    })
}

/// Length of one breach side wall between transverse positions `a` and `b`.
pub fn side_wall_length(a: f64, b: f64, k: f64, w_b: f64, h_b: f64) -> Result<f64> {
    check_finite("a", a)?;
    check_finite("b", b)?;
    let shape = BreachShape::new(k, w_b, h_b)?;
    let half = 0.5 * w_b;
    if a < 0.0 || b < a || b > half * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "wall interval must satisfy 0 <= a <= b <= W_b/2 (a={a}, b={b}, W_b/2={half})"
        )));
    }
    shape.wall_length_unchecked(a, b.min(half))
}

/// Hydraulic radius of the section at depth `h_c`.
pub fn hydraulic_radius(h_c: f64, k: f64, w_b: f64, h_b: f64) -> Result<f64> {
    check_finite("h_c", h_c)?;
    if h_c <= 0.0 {
        return Err(Error::domain(format!("hydraulic radius needs h_c > 0, got {h_c}")));
    }
    BreachShape::new(k, w_b, h_b)?.hydraulic_radius(h_c)
}

/// Erodible perimeter at depth `h` for the given breach stage.
pub fn erodible_perimeter(h: f64, k: f64, w_b: f64, h_b: f64, stage: Stage) -> Result<f64> {
    check_finite("h", h)?;
    if h < 0.0 {
        return Err(Error::domain(format!("water depth must be >= 0, got {h}")));
    }
    BreachShape::new(k, w_b, h_b)?.erodible_perimeter(h, stage)
}

// ---------------------------------------------------------------------------
// Wall profile arc length
// ---------------------------------------------------------------------------

/// `∫_{x0}^{x1} sqrt(1 + c² x^{2p}) dx` for `0 <= x0 <= x1`, `c > 0`, `p > -1`.
///
/// The interval is split by slope magnitude. Where the slope is below
/// 1/2 the integrand is expanded in `c² x^{2p}`, where it exceeds 2 in
/// `c⁻² x^{-2p}`, both termwise exact. The remaining band is integrated by
/// Gauss–Legendre in `ln x`, where the integrand is analytic.
pub(crate) fn profile_arc(c: f64, p: f64, x0: f64, x1: f64) -> Result<f64> {
    WallProfile::new(c, p)?.arc(x0, x1)
}

/// Wall slope law `c x^p` with its zone boundaries resolved.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WallProfile {
    c: f64,
    p: f64,
    /// Where the slope equals [`SLOPE_GENTLE`] and [`SLOPE_STEEP`].
    x_gentle: f64,
    x_steep: f64,
}

impl WallProfile {
    pub(crate) fn new(c: f64, p: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite() && p > -1.0 && p.is_finite()) {
            return Err(Error::numerical(format!(
                "wall profile out of range (c={c}, p={p})"
            )));
        }
        let (x_gentle, x_steep) = if p.abs() < 1e-12 {
            (f64::NAN, f64::NAN)
        } else {
            let ln_c = c.ln();
            (
                ((SLOPE_GENTLE.ln() - ln_c) / p).exp(),
                ((SLOPE_STEEP.ln() - ln_c) / p).exp(),
            )
        };
        Ok(Self {
            c,
            p,
            x_gentle,
            x_steep,
        })
    }

    pub(crate) fn arc(&self, x0: f64, x1: f64) -> Result<f64> {
        if x1 <= x0 {
            return Ok(0.0);
        }
        let (c, p) = (self.c, self.p);
        if p.abs() < 1e-12 {
            return Ok((x1 - x0) * (1.0 + c * c).sqrt());
        }
        let clip = |lo: f64, hi: f64| -> Option<(f64, f64)> {
            let a = lo.max(x0);
            let b = hi.min(x1);
            (b > a).then_some((a, b))
        };
        let (xg, xs) = (self.x_gentle, self.x_steep);

        let mut total = 0.0;
        if p > 0.0 {
            if let Some((a, b)) = clip(0.0, xg) {
                total += gentle_series(c, p, a, b)?;
            }
            if let Some((a, b)) = clip(xg, xs) {
                total += middle_band(c, p, a, b);
            }
            if let Some((a, b)) = clip(xs, f64::INFINITY) {
                total += steep_series(c, p, a, b)?;
            }
        } else {
            if let Some((a, b)) = clip(0.0, xs) {
                total += steep_series(c, p, a, b)?;
            }
            if let Some((a, b)) = clip(xs, xg) {
                total += middle_band(c, p, a, b);
            }
            if let Some((a, b)) = clip(xg, f64::INFINITY) {
                total += gentle_series(c, p, a, b)?;
            }
        }
        if total.is_finite() {
            Ok(total)
        } else {
            Err(Error::numerical(format!(
                "non-finite wall length (c={c}, p={p}, x0={x0}, x1={x1})"
            )))
        }
    }
}

/// Difference `[A(x) r(x)^n]_a^b / e` where `A r^n` scales as `x^e`.
#[inline]
fn power_term_difference(ta: f64, tb: f64, e: f64, ln_ratio: f64) -> f64 {
    if e.abs() > 0.05 || !ln_ratio.is_finite() {
        (tb - ta) / e
    } else if e == 0.0 {
        ta * ln_ratio
    } else {
        ta * (e * ln_ratio).exp_m1() / e
    }
}

const SERIES_MAX_TERMS: usize = 200;

/// Termwise integral of `Σ C(1/2,n) u^n`, `u = c² x^{2p} <= 1/2`.
fn gentle_series(c: f64, p: f64, a: f64, b: f64) -> Result<f64> {
    let ua = if a > 0.0 { (c * a.powf(p)).powi(2) } else { 0.0 };
    let ub = (c * b.powf(p)).powi(2);
    let ln_ratio = if a > 0.0 { (b / a).ln() } else { f64::INFINITY };
    series_sum(a, b, ua, ub, ln_ratio, |n| 2.0 * p * n as f64 + 1.0)
}

/// Termwise integral of `σ Σ C(1/2,n) σ^{-2n}`, `σ = c x^p`, `σ^{-2} <= 1/2`.
fn steep_series(c: f64, p: f64, a: f64, b: f64) -> Result<f64> {
    // A(x) = c x^{1+p}; r(x) = σ(x)^{-2}.
    let (aa, ra) = if a > 0.0 {
        let s = c * a.powf(p);
        (a * s, 1.0 / (s * s))
    } else {
        (0.0, 0.0)
    };
    let sb = c * b.powf(p);
    let (ab, rb) = (b * sb, 1.0 / (sb * sb));
    let ln_ratio = if a > 0.0 { (b / a).ln() } else { f64::INFINITY };
    series_sum(aa, ab, ra, rb, ln_ratio, |n| 1.0 + p - 2.0 * p * n as f64)
}

fn series_sum(
    a0: f64,
    b0: f64,
    ra: f64,
    rb: f64,
    ln_ratio: f64,
    exponent: impl Fn(usize) -> f64,
) -> Result<f64> {
    let mut coeff = 1.0; // C(1/2, n)
    let mut ta = a0;
    let mut tb = b0;
    let mut sum = 0.0;
    for n in 0..SERIES_MAX_TERMS {
        let term = coeff * power_term_difference(ta, tb, exponent(n), ln_ratio);
        sum += term;
        if term.abs() <= 1e-14 * sum.abs() || (ta == 0.0 && tb == 0.0) {
            return Ok(sum);
        }
        coeff *= (0.5 - n as f64) / (n as f64 + 1.0);
        ta *= ra;
        tb *= rb;
    }
    Err(Error::numerical(format!(
        "wall-length series did not converge in {SERIES_MAX_TERMS} terms (ratio {})",
        ra.max(rb)
    )))
}

// 8-point Gauss–Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Band where the slope lies between 1/2 and 2; `a > 0`.
fn middle_band(c: f64, p: f64, a: f64, b: f64) -> f64 {
    let f = |s: f64| {
        let x = s.exp();
        let slope = c * (p * s).exp();
        x * (1.0 + slope * slope).sqrt()
    };
    let hi = b.ln();
    let mut lo = a.ln();
    let mut total = 0.0;
    // Below e^-30 of the upper end the band contributes < 1e-13 relative.
    const MAX_SPAN: f64 = 30.0;
    if hi - lo > MAX_SPAN {
        let cut = hi - MAX_SPAN;
        let x_cut = cut.exp();
        let mid_slope: f64 = 1.0;
        total += (x_cut - a) * (1.0 + mid_slope * mid_slope).sqrt();
        lo = cut;
    }
    let panels = ((hi - lo) / 2.0).ceil().max(1.0) as usize;
    let width = (hi - lo) / panels as f64;
    for i in 0..panels {
        let centre = lo + (i as f64 + 0.5) * width;
        let half = 0.5 * width;
        let mut acc = 0.0;
        for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
            acc += weight * (f(centre - half * node) + f(centre + half * node));
        }
        total += acc * half;
    }
    total
}
