//! Prediction case files (JSON).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::BreachSpec;
use crate::predict::{ErosionSource, PredictionCase, UncertainGeometry, UncertainReservoir};

pub const CASE_SCHEMA: &str = "breachcast-case/1";

/// Erosion-law parameters of a point prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErosionPoint {
    pub lambda: f64,
    pub zeta: f64,
    pub nu: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub schema: String,
    pub name: String,
    pub dam: UncertainGeometry,
    pub reservoir: UncertainReservoir,
    pub breach: BreachSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub erosion: Option<ErosionPoint>,
}

impl CaseFile {
    /// The prediction case with `erosion` overriding the file's own
    /// parameters.
    pub fn prediction_case(&self, erosion: Option<ErosionSource>) -> Result<PredictionCase> {
        let erosion = match (erosion, self.erosion) {
            (Some(e), _) => e,
            (None, Some(p)) => ErosionSource::Point {
                lambda: p.lambda,
                zeta: p.zeta,
                nu: p.nu,
                eta: p.eta,
            },
            (None, None) => {
                return Err(Error::Validation(
                    "case has no erosion parameters and no posterior was given".into(),
                ))
            }
        };
        let case = PredictionCase {
            name: self.name.clone(),
            geometry: self.dam,
            reservoir: self.reservoir,
            breach: self.breach,
            erosion,
        };
        case.validate()?;
        Ok(case)
    }

    pub fn from_case(case: &PredictionCase) -> Self {
        let erosion = match case.erosion {
            ErosionSource::Point { lambda, zeta, nu, eta } => Some(ErosionPoint { lambda, zeta, nu, eta }),
            ErosionSource::Draws(_) => None,
        };
        Self {
            schema: CASE_SCHEMA.to_string(),
            name: case.name.clone(),
            dam: case.geometry,
            reservoir: case.reservoir,
            breach: case.breach,
            erosion,
        }
    }
}

pub fn parse_case(path: &Path) -> Result<CaseFile> {
    parse_case_str(&super::read_to_string(path)?, path)
}

pub fn parse_case_str(text: &str, origin: &Path) -> Result<CaseFile> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let found = value.get("schema").and_then(|s| s.as_str());
    if found != Some(CASE_SCHEMA) {
        return Err(Error::Schema {
            path: origin.to_path_buf(),
            expected: CASE_SCHEMA.to_string(),
            found: found.unwrap_or("<missing>").to_string(),
        });
    }
    Ok(serde_json::from_value(value)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predict::icold_case;
    use crate::stochastic::DistSpec;

    const ICOLD: &str = include_str!("../../data/icold.json");

    #[test]
    fn bundled_icold_case() {
        let file = parse_case_str(ICOLD, Path::new("icold.json")).unwrap();
        let case = file.prediction_case(None).unwrap();
        let expected = icold_case(ErosionSource::Point {
            lambda: -8.25,
            zeta: 0.833,
            nu: 4.17,
            eta: -0.669,
        });
        assert_eq!(case, expected);
        assert_eq!(file.dam.breach_angle, DistSpec::Uniform { lo: 50.0, hi: 85.0 });
        let back = serde_json::to_string(&CaseFile::from_case(&case)).unwrap();
        assert_eq!(parse_case_str(&back, Path::new("x")).unwrap(), file);
    }

    #[test]
    fn schema_and_field_errors() {
        let old = ICOLD.replace(CASE_SCHEMA, "breachcast-case/0");
        assert!(matches!(parse_case_str(&old, Path::new("x")), Err(Error::Schema { .. })));
        let bad = ICOLD.replace("\"U(50,85)\"", "\"U(85,50)\"");
        assert!(parse_case_str(&bad, Path::new("x")).is_err());
        let steep = ICOLD.replace("\"U(50,85)\"", "\"U(50,95)\"");
        let file = parse_case_str(&steep, Path::new("x")).unwrap();
        assert!(file.prediction_case(None).is_err());
        let unknown = ICOLD.replace("\"name\"", "\"nmae\"");
        assert!(parse_case_str(&unknown, Path::new("x")).is_err());
    }
}
