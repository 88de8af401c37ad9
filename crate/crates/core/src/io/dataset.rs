//! Observation dataset CSV.
//!
//! The file opens with `# key: value` metadata lines: `schema` must match
//! [`DATASET_SCHEMA`] and `volume_factor` converts the `dV_r` column to m³.
//! A distribution cell reading `default` takes the population default for
//! that input; an empty `W_f` cell marks a discharge-only record.

use std::path::Path;

use crate::error::{Error, Result};
use crate::inference::{AleatorySpecs, DamKnowns, Observation, ObservationRecord};
use crate::stochastic::DistSpec;

pub const DATASET_SCHEMA: &str = "breachcast-dataset/1";

const COLUMNS: [&str; 12] = [
    "name", "h_d", "dV_r", "dH_r", "dH_b", "r_0", "s_e", "w_c", "alpha", "beta", "Q_p", "W_f",
];

const UNITS: &str =
    "h_d m; dV_r volume_factor m3; dH_r m; dH_b m; r_0 -; s_e -; w_c m; alpha -; beta deg; Q_p m3/s; W_f m";

const BUNDLED: &str = include_str!("../../data/dams.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    /// Multiplier from the stored `dV_r` values to m³.
    pub volume_factor: f64,
    pub records: Vec<ObservationRecord>,
}

/// The fifteen historical embankment failures shipped with the crate.
pub fn bundled_dataset() -> DatasetFile {
    parse_dataset_str(BUNDLED, Path::new("<bundled>")).expect("bundled dataset is valid")
}

pub fn parse_dataset(path: &Path) -> Result<DatasetFile> {
    let text = super::read_to_string(path)?;
    parse_dataset_str(&text, path)
}

fn parse_error(row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

pub fn parse_dataset_str(text: &str, origin: &Path) -> Result<DatasetFile> {
    let mut schema = None;
    let mut volume_factor = None;
    let mut meta_lines = 0;
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if !(trimmed.starts_with('#') || trimmed.is_empty()) {
            break;
        }
        body_start += line.len();
        meta_lines += 1;
        let Some((key, value)) = trimmed.trim_start_matches('#').split_once(':') else {
            continue;
        };
        match key.trim() {
            "schema" => schema = Some(value.trim().to_string()),
            "volume_factor" => {
                let v: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| parse_error(meta_lines, "volume_factor", "not a number"))?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(parse_error(meta_lines, "volume_factor", "must be positive"));
                }
                volume_factor = Some(v);
            }
            _ => {}
        }
    }
    match schema.as_deref() {
        Some(DATASET_SCHEMA) => {}
        found => {
            return Err(Error::Schema {
                path: origin.to_path_buf(),
                expected: DATASET_SCHEMA.to_string(),
                found: found.unwrap_or("<missing>").to_string(),
            })
        }
    }
    let volume_factor = volume_factor
        .ok_or_else(|| parse_error(meta_lines, "volume_factor", "missing metadata line"))?;

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text[body_start..].as_bytes());
    let header_row = meta_lines + 1;
    let headers = reader.headers()?.clone();
    let mut index = [0usize; 12];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_error(header_row, name, "missing column"))?;
    }

    let defaults = AleatorySpecs::defaults();
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = meta_lines + row.position().map_or(0, |p| p.line() as usize);
        let cell = |c: usize| row.get(index[c]).unwrap_or("");
        let number = |c: usize| -> Result<f64> {
            cell(c)
                .parse::<f64>()
                .map_err(|_| parse_error(line, COLUMNS[c], format!("`{}` is not a number", cell(c))))
        };
        let spec = |c: usize, default: DistSpec| -> Result<DistSpec> {
            match cell(c) {
                "default" => Ok(default),
                s => s
                    .parse::<DistSpec>()
                    .map_err(|e| parse_error(line, COLUMNS[c], e.0)),
            }
        };
        let final_width = match cell(11) {
            "" => None,
            _ => Some(number(11)?),
        };
        let record = ObservationRecord {
            name: cell(0).to_string(),
            knowns: DamKnowns {
                height: number(1)?,
                released_volume: number(2)? * volume_factor,
                level_drop: number(3)?,
                final_height: number(4)?,
                initial_depth_ratio: number(5)?,
            },
            aleatory: AleatorySpecs {
                embankment_slope: spec(6, defaults.embankment_slope)?,
                crest_width: spec(7, defaults.crest_width)?,
                basin_exponent: spec(8, defaults.basin_exponent)?,
                breach_angle: spec(9, defaults.breach_angle)?,
            },
            observed: Observation {
                peak_discharge: number(10)?,
                final_width,
            },
        };
        if record.name.is_empty() {
            return Err(parse_error(line, "name", "empty name"));
        }
        record.validate()?;
        records.push(record);
    }
    Ok(DatasetFile {
        volume_factor,
        records,
    })
}

impl DatasetFile {
    pub fn to_csv_string(&self) -> Result<String> {
        let defaults = AleatorySpecs::defaults();
        let spec = |s: DistSpec, d: DistSpec| {
            if s == d {
                "default".to_string()
            } else {
                s.to_string()
            }
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(COLUMNS)?;
        for r in &self.records {
            let k = &r.knowns;
            let a = &r.aleatory;
            w.write_record([
                r.name.clone(),
                k.height.to_string(),
                (k.released_volume / self.volume_factor).to_string(),
                k.level_drop.to_string(),
                k.final_height.to_string(),
                k.initial_depth_ratio.to_string(),
                spec(a.embankment_slope, defaults.embankment_slope),
                spec(a.crest_width, defaults.crest_width),
                spec(a.basin_exponent, defaults.basin_exponent),
                spec(a.breach_angle, defaults.breach_angle),
                r.observed.peak_discharge.to_string(),
                r.observed.final_width.map(|w| w.to_string()).unwrap_or_default(),
            ])?;
        }
        let body = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        let body = String::from_utf8(body).map_err(|e| Error::Config(e.to_string()))?;
        Ok(format!(
            "# schema: {DATASET_SCHEMA}\n# units: {UNITS}\n# volume_factor: {:e}\n{body}",
            self.volume_factor
        ))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        super::atomic_write(path, self.to_csv_string()?.as_bytes())
    }
}
