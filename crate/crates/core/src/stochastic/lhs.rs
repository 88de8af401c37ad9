//! Latin Hypercube sampling with independent marginals.

use rand::seq::SliceRandom;
use rand::Rng;

use super::DistSpec;
use crate::error::{Error, Result};

/// `n × d` design: row `i` is one sample, column `j` follows `specs[j]`.
///
/// Each marginal is split into `n` equiprobable strata; every stratum gets
/// exactly one point drawn uniformly inside it, and strata are permuted
/// independently per dimension.
pub fn lhs_sample<R: Rng + ?Sized>(specs: &[DistSpec], n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if n < 1 {
        return Err(Error::domain("Latin Hypercube needs at least one sample"));
    }
    for s in specs {
        s.validate()?;
        if s.dim() != 1 {
            return Err(Error::Domain(format!(
                "Latin Hypercube needs independent one-dimensional marginals, got {s}"
            )));
        }
    }
    let mut rows = vec![vec![0.0; specs.len()]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for (j, spec) in specs.iter().enumerate() {
        strata.shuffle(rng);
        for (row, &stratum) in rows.iter_mut().zip(&strata) {
            // Uniform offset within the stratum, kept strictly inside (0, 1).
            let offset: f64 = rng.random();
            let u = ((stratum as f64 + offset) / n as f64).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            row[j] = spec.quantile(u)?;
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::RngStream;

    #[test]
    fn one_point_per_stratum() {
        let mut rng = RngStream::new(11, 0).rng();
        let u = DistSpec::Uniform { lo: 0.0, hi: 1.0 };
        let rows = lhs_sample(&[u, u], 4, &mut rng).unwrap();
        for j in 0..2 {
            let mut bins: Vec<usize> = rows.iter().map(|r| (r[j] * 4.0) as usize).collect();
            bins.sort();
            assert_eq!(bins, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn rejects_empty_and_joint_specs() {
        let mut rng = RngStream::new(11, 0).rng();
        let u = DistSpec::Uniform { lo: 0.0, hi: 1.0 };
        assert!(lhs_sample(&[u], 0, &mut rng).is_err());
        let bvn = DistSpec::BivariateNormal {
            mean: [0.0, 0.0],
            sd: [1.0, 1.0],
            rho: 0.0,
        };
        assert!(lhs_sample(&[bvn], 5, &mut rng).is_err());
    }

    #[test]
    fn marginal_ranks_are_permutations() {
        let mut rng = RngStream::new(12, 0).rng();
        let specs = [
            DistSpec::Normal { mean: 0.0, sd: 1.0 },
            DistSpec::LogNormal {
                location: -8.25,
                scale: 0.833,
            },
            DistSpec::Uniform { lo: 50.0, hi: 85.0 },
        ];
        let n = 257;
        let rows = lhs_sample(&specs, n, &mut rng).unwrap();
        for (j, spec) in specs.iter().enumerate() {
            let mut bins: Vec<usize> = rows
                .iter()
                .map(|r| ((spec.cdf(r[j]).unwrap() * n as f64) as usize).min(n - 1))
                .collect();
            bins.sort();
            assert_eq!(bins, (0..n).collect::<Vec<_>>());
        }
    }
}
