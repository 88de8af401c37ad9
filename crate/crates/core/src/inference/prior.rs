use serde::{Deserialize, Serialize};

use super::{Qoi, ResidualModel};
use crate::stochastic::DistSpec;

/// Joint prior: bivariate normal on `(ν, η)`, independent uniforms elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    pub exponents: DistSpec,
    pub lambda: DistSpec,
    pub zeta: DistSpec,
    pub sigma_q: DistSpec,
    pub sigma_w: DistSpec,
}

impl Default for Prior {
    fn default() -> Self {
        Self {
            exponents: DistSpec::BivariateNormal {
                mean: [4.0, -0.5],
                sd: [0.9, 0.3],
                rho: -0.1,
            },
            lambda: DistSpec::Uniform { lo: -15.0, hi: 5.0 },
            zeta: DistSpec::Uniform { lo: 0.0, hi: 2.0 },
            sigma_q: DistSpec::Uniform { lo: 0.0, hi: 0.6 },
            sigma_w: DistSpec::Uniform { lo: 0.0, hi: 0.6 },
        }
    }
}

fn ln1(spec: &DistSpec, x: f64) -> f64 {
    spec.ln_density(&[x]).unwrap_or(f64::NEG_INFINITY)
}

impl Prior {
    pub fn ln_density(&self, q: &Qoi, model: ResidualModel) -> f64 {
        if q.check_model(model).is_err() {
            return f64::NEG_INFINITY;
        }
        // Physical admissibility of the transport law.
        if !(q.nu > 0.0 && q.eta <= 0.0 && q.zeta >= 0.0) {
            return f64::NEG_INFINITY;
        }
        let mut lp = ln1(&self.lambda, q.lambda) + ln1(&self.zeta, q.zeta);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        lp += self
            .exponents
            .ln_density(&[q.nu, q.eta])
            .unwrap_or(f64::NEG_INFINITY);
        if let Some([sq, sw]) = q.sigma {
            lp += ln1(&self.sigma_q, sq) + ln1(&self.sigma_w, sw);
        }
        if lp.is_nan() {
            f64::NEG_INFINITY
        } else {
            lp
        }
    }

    /// Marginal priors in parameter-vector order, for initialisation and
    /// jitter scaling. The exponents appear as their two marginals.
    pub fn marginals(&self, model: ResidualModel) -> Vec<DistSpec> {
        let (nu, eta) = match self.exponents {
            DistSpec::BivariateNormal { mean, sd, .. } => (
                DistSpec::Normal {
                    mean: mean[0],
                    sd: sd[0],
                },
                DistSpec::Normal {
                    mean: mean[1],
                    sd: sd[1],
                },
            ),
            other => (other, other),
        };
        let mut v = vec![self.lambda, self.zeta, nu, eta];
        if model == ResidualModel::Gaussian {
            v.push(self.sigma_q);
            v.push(self.sigma_w);
        }
        v
    }

    /// Width of each marginal: the interval length for bounded priors and
    /// six standard deviations for normal ones.
    pub fn ranges(&self, model: ResidualModel) -> Vec<f64> {
        self.marginals(model)
            .iter()
            .map(|m| match *m {
                DistSpec::Uniform { lo, hi } | DistSpec::TruncatedNormal { lo, hi, .. } => hi - lo,
                DistSpec::Normal { sd, .. } | DistSpec::LogNormal { scale: sd, .. } => 6.0 * sd,
                DistSpec::Fixed(_) => 0.0,
                DistSpec::BivariateNormal { sd, .. } => 6.0 * sd[0],
            })
            .collect()
    }

    /// A draw from the joint prior that satisfies the admissibility limits.
    pub fn sample<R: rand::Rng + ?Sized>(
        &self,
        model: ResidualModel,
        rng: &mut R,
    ) -> crate::error::Result<Qoi> {
        for _ in 0..10_000 {
            let lambda = self.lambda.sample(rng)?;
            let zeta = self.zeta.sample(rng)?;
            let ne = self.exponents.sample_vec(rng)?;
            let sigma = match model {
                ResidualModel::Gaussian => Some([self.sigma_q.sample(rng)?, self.sigma_w.sample(rng)?]),
                ResidualModel::ZeroNoise => None,
            };
            let q = Qoi {
                lambda,
                zeta,
                nu: ne[0],
                eta: ne[1],
                sigma,
            };
            if self.ln_density(&q, model).is_finite() {
                return Ok(q);
            }
        }
        Err(crate::error::Error::numerical("prior has no admissible mass"))
    }
}

/// Log prior density under the default prior.
pub fn log_prior(q: &Qoi, model: ResidualModel) -> f64 {
    Prior::default().ln_density(q, model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn at_mode() -> Qoi {
        Qoi {
            lambda: -8.0,
            zeta: 0.5,
            nu: 4.0,
            eta: -0.5,
            sigma: Some([0.2, 0.1]),
        }
    }

    #[test]
    fn value_at_mode() {
        let expected = (0.5925_f64).ln();
        let exact = (1.0 / (2.0 * std::f64::consts::PI * 0.9 * 0.3 * 0.99f64.sqrt())
            * (1.0 / 20.0)
            * 0.5
            / (0.6 * 0.6))
            .ln();
        let lp = log_prior(&at_mode(), ResidualModel::Gaussian);
        assert_relative_eq!(lp, exact, epsilon = 1e-12);
        assert!((lp - (expected + (0.05f64 * 0.5 / 0.36).ln())).abs() < 5e-4);
    }

    #[test]
    fn out_of_support() {
        let mut q = at_mode();
        q.lambda = 6.0;
        assert_eq!(log_prior(&q, ResidualModel::Gaussian), f64::NEG_INFINITY);
        let mut q = at_mode();
        q.zeta = -0.1;
        assert_eq!(log_prior(&q, ResidualModel::Gaussian), f64::NEG_INFINITY);
        let mut q = at_mode();
        q.sigma = Some([0.7, 0.1]);
        assert_eq!(log_prior(&q, ResidualModel::Gaussian), f64::NEG_INFINITY);
        // Model mismatch is not a valid point either.
        assert_eq!(log_prior(&at_mode(), ResidualModel::ZeroNoise), f64::NEG_INFINITY);
    }

    #[test]
    fn prior_draws_are_admissible() {
        let mut rng = crate::stochastic::RngStream::new(1, 1).rng();
        let p = Prior::default();
        for _ in 0..1000 {
            let q = p.sample(ResidualModel::ZeroNoise, &mut rng).unwrap();
            assert!(log_prior(&q, ResidualModel::ZeroNoise).is_finite());
        }
        assert_eq!(p.ranges(ResidualModel::Gaussian), vec![20.0, 2.0, 5.4, 1.7999999999999998, 0.6, 0.6]);
    }
}
