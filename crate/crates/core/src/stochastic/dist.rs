//! Distribution specifications and their text grammar.
//!
//! ```text
//! N(loc,sd)   LN(loc,sd)   U(lo,hi)   TN(loc,sd,lo,hi)
//! BVN(loc1,loc2,sd1,sd2,rho)   3.5   (a bare number is a point mass)
//! ```
//! `LN(λ,ζ)` is `exp` of `N(λ,ζ)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Rejection sampling of a truncated normal gives up after this many tries.
const MAX_REJECTIONS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistSpec {
    /// Point mass.
    Fixed(f64),
    Normal { mean: f64, sd: f64 },
    /// `exp` of `Normal(location, scale)`.
    LogNormal { location: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    TruncatedNormal { mean: f64, sd: f64, lo: f64, hi: f64 },
    BivariateNormal { mean: [f64; 2], sd: [f64; 2], rho: f64 },
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match *self {
            DistSpec::Fixed(x) if !x.is_finite() => bad(format!("point mass must be finite, got {x}")),
            DistSpec::Normal { mean, sd } | DistSpec::LogNormal { location: mean, scale: sd }
                if !(finite(&[mean, sd]) && sd > 0.0) =>
            {
                bad(format!("{self}: scale must be > 0 and parameters finite"))
            }
            DistSpec::Uniform { lo, hi } if !(finite(&[lo, hi]) && lo < hi) => {
                bad(format!("{self}: bounds must satisfy lo < hi"))
            }
            DistSpec::TruncatedNormal { mean, sd, lo, hi }
                if !(finite(&[mean, sd]) && sd > 0.0 && lo < hi && !lo.is_nan() && !hi.is_nan()) =>
            {
                bad(format!("{self}: needs sd > 0 and lo < hi"))
            }
            DistSpec::TruncatedNormal { mean, sd, lo, hi } => {
                let n = std_normal();
                let mass = n.cdf((hi - mean) / sd) - n.cdf((lo - mean) / sd);
                if mass <= 0.0 {
                    bad(format!("{self}: bounds carry no probability mass"))
                } else {
                    Ok(())
                }
            }
            DistSpec::BivariateNormal { mean, sd, rho }
                if !(finite(&[mean[0], mean[1], sd[0], sd[1], rho])
                    && sd[0] > 0.0
                    && sd[1] > 0.0
                    && rho.abs() < 1.0) =>
            {
                bad(format!("{self}: needs positive scales and |rho| < 1"))
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DistSpec::BivariateNormal { .. } => 2,
            _ => 1,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, DistSpec::Fixed(_))
    }

    /// Mean of a one-dimensional spec.
    pub fn mean(&self) -> Result<f64> {
        Ok(match *self {
            DistSpec::Fixed(x) => x,
            DistSpec::Normal { mean, .. } => mean,
            DistSpec::LogNormal { location, scale } => (location + 0.5 * scale * scale).exp(),
            DistSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
            DistSpec::TruncatedNormal { mean, sd, lo, hi } => {
                let n = std_normal();
                let (a, b) = ((lo - mean) / sd, (hi - mean) / sd);
                let z = n.cdf(b) - n.cdf(a);
                mean + sd * (n.pdf(a) - n.pdf(b)) / z
            }
            DistSpec::BivariateNormal { .. } => return Err(self.not_univariate()),
        })
    }

    fn not_univariate(&self) -> Error {
        Error::Domain(format!("{self} is not a one-dimensional distribution"))
    }

    /// One draw from a one-dimensional spec.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(match *self {
            DistSpec::Fixed(x) => x,
            DistSpec::Normal { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
            DistSpec::LogNormal { location, scale } => {
                (location + scale * rng.sample::<f64, _>(StandardNormal)).exp()
            }
            DistSpec::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            DistSpec::TruncatedNormal { mean, sd, lo, hi } => {
                for _ in 0..MAX_REJECTIONS {
                    let x = mean + sd * rng.sample::<f64, _>(StandardNormal);
                    if x >= lo && x <= hi {
                        return Ok(x);
                    }
                }
                return Err(Error::numerical(format!(
                    "{self}: no accepted draw in {MAX_REJECTIONS} tries"
                )));
            }
            DistSpec::BivariateNormal { .. } => return Err(self.not_univariate()),
        })
    }

    /// `n` independent draws.
    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<f64>> {
        self.validate()?;
        (0..n).map(|_| self.sample(rng)).collect()
    }

    /// One draw from any spec, as a vector of length [`Self::dim`].
    pub fn sample_vec<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        match *self {
            DistSpec::BivariateNormal { mean, sd, rho } => {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                Ok(vec![
                    mean[0] + sd[0] * z1,
                    mean[1] + sd[1] * (rho * z1 + (1.0 - rho * rho).sqrt() * z2),
                ])
            }
            _ => Ok(vec![self.sample(rng)?]),
        }
    }

    /// Natural log of the density at `x` (length [`Self::dim`]).
    pub fn ln_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Domain(format!(
                "{self} expects {} coordinates, got {}",
                self.dim(),
                x.len()
            )));
        }
        let v = x[0];
        Ok(match *self {
            DistSpec::Fixed(p) => {
                if v == p {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            }
            DistSpec::Normal { mean, sd } => normal_ln_pdf(v, mean, sd),
            DistSpec::LogNormal { location, scale } => {
                if v <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    normal_ln_pdf(v.ln(), location, scale) - v.ln()
                }
            }
            DistSpec::Uniform { lo, hi } => {
                if v >= lo && v <= hi {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            DistSpec::TruncatedNormal { mean, sd, lo, hi } => {
                if v < lo || v > hi {
                    f64::NEG_INFINITY
                } else {
                    let n = std_normal();
                    let mass = n.cdf((hi - mean) / sd) - n.cdf((lo - mean) / sd);
                    normal_ln_pdf(v, mean, sd) - mass.ln()
                }
            }
            DistSpec::BivariateNormal { mean, sd, rho } => {
                let z1 = (x[0] - mean[0]) / sd[0];
                let z2 = (x[1] - mean[1]) / sd[1];
                let one_m = 1.0 - rho * rho;
                -(2.0 * PI * sd[0] * sd[1] * one_m.sqrt()).ln()
                    - (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / (2.0 * one_m)
            }
        })
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.ln_density(x)?.exp())
    }

    /// Cumulative distribution of a one-dimensional spec.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let n = std_normal();
        Ok(match *self {
            DistSpec::Fixed(p) => {
                if x >= p {
                    1.0
                } else {
                    0.0
                }
            }
            DistSpec::Normal { mean, sd } => n.cdf((x - mean) / sd),
            DistSpec::LogNormal { location, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    n.cdf((x.ln() - location) / scale)
                }
            }
            DistSpec::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            DistSpec::TruncatedNormal { mean, sd, lo, hi } => {
                let (fa, fb) = (n.cdf((lo - mean) / sd), n.cdf((hi - mean) / sd));
                ((n.cdf((x.clamp(lo, hi) - mean) / sd) - fa) / (fb - fa)).clamp(0.0, 1.0)
            }
            DistSpec::BivariateNormal { .. } => return Err(self.not_univariate()),
        })
    }

    /// Inverse CDF of a one-dimensional spec at probability `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("probability must lie in (0, 1), got {u}")));
        }
        let n = std_normal();
        Ok(match *self {
            DistSpec::Fixed(p) => p,
            DistSpec::Normal { mean, sd } => mean + sd * n.inverse_cdf(u),
            DistSpec::LogNormal { location, scale } => (location + scale * n.inverse_cdf(u)).exp(),
            DistSpec::Uniform { lo, hi } => lo + u * (hi - lo),
            DistSpec::TruncatedNormal { mean, sd, lo, hi } => {
                let (fa, fb) = (n.cdf((lo - mean) / sd), n.cdf((hi - mean) / sd));
                let p = (fa + u * (fb - fa)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
                (mean + sd * n.inverse_cdf(p)).clamp(lo, hi)
            }
            DistSpec::BivariateNormal { .. } => return Err(self.not_univariate()),
        })
    }

    /// Support of a one-dimensional spec.
    pub fn support(&self) -> Result<(f64, f64)> {
        Ok(match *self {
            DistSpec::Fixed(p) => (p, p),
            DistSpec::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            DistSpec::LogNormal { .. } => (0.0, f64::INFINITY),
            DistSpec::Uniform { lo, hi } | DistSpec::TruncatedNormal { lo, hi, .. } => (lo, hi),
            DistSpec::BivariateNormal { .. } => return Err(self.not_univariate()),
        })
    }
}

#[inline]
fn normal_ln_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * PI).ln()
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DistSpec::Fixed(x) => write!(f, "{x}"),
            DistSpec::Normal { mean, sd } => write!(f, "N({mean},{sd})"),
            DistSpec::LogNormal { location, scale } => write!(f, "LN({location},{scale})"),
            DistSpec::Uniform { lo, hi } => write!(f, "U({lo},{hi})"),
            DistSpec::TruncatedNormal { mean, sd, lo, hi } => {
                write!(f, "TN({mean},{sd},{lo},{hi})")
            }
            DistSpec::BivariateNormal { mean, sd, rho } => write!(
                f,
                "BVN({},{},{},{},{rho})",
                mean[0], mean[1], sd[0], sd[1]
            ),
        }
    }
}

/// Error produced while parsing the distribution grammar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecParseError(pub String);

impl fmt::Display for SpecParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SpecParseError {}

impl FromStr for DistSpec {
    type Err = SpecParseError;

    fn from_str(text: &str) -> std::result::Result<Self, Self::Err> {
        let s = text.trim();
        let err = |msg: &str| SpecParseError(format!("invalid distribution `{text}`: {msg}"));
        if let Ok(x) = s.parse::<f64>() {
            let spec = DistSpec::Fixed(x);
            return spec.validate().map(|_| spec).map_err(|e| err(&e.to_string()));
        }
        let open = s.find('(').ok_or_else(|| err("expected NAME(args)"))?;
        if !s.ends_with(')') {
            return Err(err("missing closing parenthesis"));
        }
        let name = s[..open].trim();
        let args: Vec<f64> = s[open + 1..s.len() - 1]
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err("arguments must be numbers"))?;
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(err(&format!("{name} takes {n} arguments, got {}", args.len())))
            }
        };
        let spec = match name {
            "N" => {
                want(2)?;
                DistSpec::Normal {
                    mean: args[0],
                    sd: args[1],
                }
            }
            "LN" => {
                want(2)?;
                DistSpec::LogNormal {
                    location: args[0],
                    scale: args[1],
                }
            }
            "U" => {
                want(2)?;
                DistSpec::Uniform {
                    lo: args[0],
                    hi: args[1],
                }
            }
            "TN" => {
                want(4)?;
                DistSpec::TruncatedNormal {
                    mean: args[0],
                    sd: args[1],
                    lo: args[2],
                    hi: args[3],
                }
            }
            "BVN" => {
                want(5)?;
                DistSpec::BivariateNormal {
                    mean: [args[0], args[1]],
                    sd: [args[2], args[3]],
                    rho: args[4],
                }
            }
            other => return Err(err(&format!("unknown distribution `{other}`"))),
        };
        spec.validate().map_err(|e| err(&e.to_string()))?;
        Ok(spec)
    }
}

impl Serialize for DistSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DistSpec::Fixed(x) => s.serialize_f64(*x),
            _ => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for DistSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(DistSpec::Fixed(x)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::RngStream;
    use approx::assert_relative_eq;

    fn parse(s: &str) -> DistSpec {
        s.parse().unwrap()
    }

    #[test]
    fn grammar() {
        assert_eq!(parse("N(2.5,0.01)"), DistSpec::Normal { mean: 2.5, sd: 0.01 });
        assert_eq!(
            parse(" LN( 1.59 , 0.01 ) "),
            DistSpec::LogNormal {
                location: 1.59,
                scale: 0.01
            }
        );
        assert_eq!(parse("U(1,4)"), DistSpec::Uniform { lo: 1.0, hi: 4.0 });
        assert_eq!(
            parse("TN(2.16,0.66,1,10)"),
            DistSpec::TruncatedNormal {
                mean: 2.16,
                sd: 0.66,
                lo: 1.0,
                hi: 10.0
            }
        );
        assert_eq!(parse("3.25"), DistSpec::Fixed(3.25));
        for bad in ["n(1,2)", "N(1)", "N(1,-2)", "U(4,1)", "N(1,2", "X(1,2)", "N(a,b)", ""] {
            assert!(bad.parse::<DistSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn display_round_trip() {
        for s in [
            "N(2.5,0.01)",
            "LN(-8.25,0.833)",
            "U(45,90)",
            "TN(2.16,0.66,1,10)",
            "BVN(4,-0.5,0.9,0.3,-0.1)",
            "0.1",
        ] {
            assert_eq!(parse(s).to_string(), s);
        }
    }

    #[test]
    fn uniform_mean() {
        let mut rng = RngStream::new(1, 0).rng();
        let xs = parse("U(1,4)").sample_n(&mut rng, 100_000).unwrap();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((m - 2.5).abs() < 0.01);
    }

    #[test]
    fn lognormal_median() {
        let mut rng = RngStream::new(2, 0).rng();
        let mut xs = parse("LN(1.59,0.01)").sample_n(&mut rng, 20_001).unwrap();
        xs.sort_by(f64::total_cmp);
        assert_relative_eq!(xs[10_000], 1.59f64.exp(), max_relative = 0.01);
    }

    #[test]
    fn truncated_within_bounds() {
        let mut rng = RngStream::new(3, 0).rng();
        let xs = parse("TN(2.16,0.66,1,10)").sample_n(&mut rng, 50_000).unwrap();
        assert!(xs.iter().all(|&x| (1.0..=10.0).contains(&x)));
    }

    #[test]
    fn densities() {
        assert_relative_eq!(parse("U(0,2)").density(&[1.0]).unwrap(), 0.5);
        let bvn = parse("BVN(4,-0.5,0.9,0.3,-0.1)");
        let at_mode = bvn.density(&[4.0, -0.5]).unwrap();
        assert_relative_eq!(
            at_mode,
            1.0 / (2.0 * PI * 0.9 * 0.3 * (1.0f64 - 0.01).sqrt()),
            max_relative = 1e-12
        );
        assert!((at_mode - 0.5925).abs() < 1e-4);
        assert_eq!(parse("LN(0,1)").density(&[0.0]).unwrap(), 0.0);
        assert_eq!(parse("LN(0,1)").density(&[-1.0]).unwrap(), 0.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for s in ["N(1,2)", "LN(0.5,0.3)", "U(-1,3)", "TN(2.16,0.66,1,10)"] {
            let d = parse(s);
            for u in [0.01, 0.3, 0.5, 0.77, 0.99] {
                assert_relative_eq!(d.cdf(d.quantile(u).unwrap()).unwrap(), u, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn truncated_mean_matches_samples() {
        let d = parse("TN(2.16,0.66,1,10)");
        let mut rng = RngStream::new(4, 0).rng();
        let xs = d.sample_n(&mut rng, 200_000).unwrap();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((m - d.mean().unwrap()).abs() < 0.01);
    }

    #[test]
    fn bivariate_draws_have_target_correlation() {
        let d = parse("BVN(4,-0.5,0.9,0.3,-0.6)");
        let mut rng = RngStream::new(5, 0).rng();
        let n = 100_000;
        let xs: Vec<Vec<f64>> = (0..n).map(|_| d.sample_vec(&mut rng).unwrap()).collect();
        let mean = |j: usize| xs.iter().map(|x| x[j]).sum::<f64>() / n as f64;
        let (m0, m1) = (mean(0), mean(1));
        let cov = xs.iter().map(|x| (x[0] - m0) * (x[1] - m1)).sum::<f64>() / n as f64;
        let var = |j: usize, m: f64| xs.iter().map(|x| (x[j] - m).powi(2)).sum::<f64>() / n as f64;
        let r = cov / (var(0, m0) * var(1, m1)).sqrt();
        assert!((r + 0.6).abs() < 0.01);
        assert!((m0 - 4.0).abs() < 0.01 && (m1 + 0.5).abs() < 0.005);
    }

    #[test]
    fn serde_number_or_string() {
        let v: Vec<DistSpec> = serde_json::from_str(r#"[3.0, "U(2.5,3.2)"]"#).unwrap();
        assert_eq!(v, vec![DistSpec::Fixed(3.0), DistSpec::Uniform { lo: 2.5, hi: 3.2 }]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"[3.0,"U(2.5,3.2)"]"#);
    }
}
