//! Admissible ranges of the sediment-transport exponents.
//!
//! Classic transport formulas scale as `q_s ∝ v^(2 c1 + c2) r_h^(c1 (1 - 2 c4) + c3)`
//! once the bed shear is written through a friction law. Bounding the
//! building-block exponents bounds `(ν, η)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentBounds {
    /// Excess-shear exponent.
    pub c1: (f64, f64),
    /// Additional velocity exponent.
    pub c2: (f64, f64),
    /// Additional hydraulic-radius exponent.
    pub c3: (f64, f64),
    /// Friction-law depth exponent.
    pub c4: (f64, f64),
}

pub fn erosion_exponent_prior_bounds() -> ExponentBounds {
    ExponentBounds {
        c1: (1.0, 2.2),
        c2: (0.0, 2.0),
        c3: (-0.6, 0.0),
        c4: (0.4, 0.72),
    }
}

/// `(ν, η)` from the four building-block exponents.
pub fn transport_exponents(c: [f64; 4]) -> (f64, f64) {
    (2.0 * c[0] + c[1], c[0] * (1.0 - 2.0 * c[3]) + c[2])
}

fn product_range(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let p = [a.0 * b.0, a.0 * b.1, a.1 * b.0, a.1 * b.1];
    (
        p.iter().copied().fold(f64::INFINITY, f64::min),
        p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

impl ExponentBounds {
    pub fn nu_range(&self) -> (f64, f64) {
        (2.0 * self.c1.0 + self.c2.0, 2.0 * self.c1.1 + self.c2.1)
    }

    pub fn eta_range(&self) -> (f64, f64) {
        let slope = (1.0 - 2.0 * self.c4.1, 1.0 - 2.0 * self.c4.0);
        let (lo, hi) = product_range(self.c1, slope);
        (lo + self.c3.0, hi + self.c3.1)
    }

    /// `(ν, η)` for `n` uniform draws over the exponent box.
    pub fn sample_cloud<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<(f64, f64)> {
        let mut draw = |r: (f64, f64)| r.0 + (r.1 - r.0) * rng.random::<f64>();
        (0..n)
            .map(|_| {
                let c = [draw(self.c1), draw(self.c2), draw(self.c3), draw(self.c4)];
                transport_exponents(c)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::RngStream;
    use approx::assert_relative_eq;

    #[test]
    fn classic_pairing() {
        let (nu, eta) = transport_exponents([1.5, 0.0, 0.0, 2.0 / 3.0]);
        assert_relative_eq!(nu, 3.0);
        assert_relative_eq!(eta, -0.5, epsilon = 1e-15);
        assert_eq!(transport_exponents([1.0, 0.0, 0.0, 0.5]).1, 0.0);
    }

    #[test]
    fn ranges() {
        let b = erosion_exponent_prior_bounds();
        assert_eq!(b.nu_range(), (2.0, 6.4));
        let (lo, hi) = b.eta_range();
        assert_relative_eq!(lo, 2.2 * (1.0 - 1.44) - 0.6, epsilon = 1e-12);
        assert_relative_eq!(hi, 2.2 * 0.2, epsilon = 1e-12);
        let mut rng = RngStream::new(9, 0).rng();
        for (nu, eta) in b.sample_cloud(&mut rng, 10_000) {
            assert!(nu >= 2.0 && nu <= 6.4);
            assert!(eta >= lo && eta <= hi);
        }
    }
}
