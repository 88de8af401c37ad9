//! Chain archives, posterior samples, hydrographs and ensemble outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{atomic_write, format_float, read_to_string};
use crate::error::{Error, Result};
use crate::forward::Hydrograph;
use crate::mcmc::{ArchiveMeta, ChainArchive, PosteriorSamples};
use crate::predict::EnsembleSummary;

pub const ARCHIVE_SCHEMA: &str = "breachcast-archive/1";
pub const SAMPLES_SCHEMA: &str = "breachcast-samples/1";

#[derive(Serialize, Deserialize)]
struct Sidecar {
    schema: String,
    meta: ArchiveMeta,
}

/// Metadata file stored next to an archive CSV.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn check_schema(path: &Path, expected: &str, found: Option<&str>) -> Result<()> {
    match found {
        Some(f) if f == expected => Ok(()),
        found => Err(Error::Schema {
            path: path.to_path_buf(),
            expected: expected.to_string(),
            found: found.unwrap_or("<missing>").to_string(),
        }),
    }
}

/// Leading `# key: value` lines and the remaining body.
fn split_metadata(text: &str) -> (Vec<(String, String)>, &str) {
    let mut meta = Vec::new();
    let mut start = 0;
    for line in text.split_inclusive('\n') {
        let t = line.trim();
        if !t.starts_with('#') {
            break;
        }
        start += line.len();
        if let Some((k, v)) = t.trim_start_matches('#').split_once(':') {
            meta.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    (meta, &text[start..])
}

fn lookup<'a>(meta: &'a [(String, String)], key: &str) -> Option<&'a str> {
    meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn float_cell(row: usize, column: &str, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse {
        row,
        column: column.to_string(),
        message: format!("`{s}` is not a number"),
    })
}

pub fn archive_to_csv(archive: &ChainArchive) -> String {
    let mut out = format!("# schema: {ARCHIVE_SCHEMA}\n# units: parameters -; log_posterior nat\nchain,iteration");
    for n in &archive.meta.names {
        out.push(',');
        out.push_str(n);
    }
    out.push_str(",log_posterior,accepted\n");
    for g in 0..archive.generations() {
        for j in 0..archive.chains() {
            let _ = write!(out, "{j},{g}");
            for &x in archive.state(g, j) {
                out.push(',');
                out.push_str(&format_float(x));
            }
            let _ = writeln!(
                out,
                ",{},{}",
                format_float(archive.log_posterior(g, j)),
                u8::from(archive.accepted(g, j))
            );
        }
    }
    out
}

/// Writes the archive CSV and its JSON sidecar.
pub fn write_archive(path: &Path, archive: &ChainArchive) -> Result<()> {
    let sidecar = Sidecar {
        schema: ARCHIVE_SCHEMA.to_string(),
        meta: archive.meta.clone(),
    };
    let json = serde_json::to_string_pretty(&sidecar)? + "\n";
    atomic_write(path, archive_to_csv(archive).as_bytes())?;
    atomic_write(&sidecar_path(path), json.as_bytes())
}

pub fn read_archive(path: &Path) -> Result<ChainArchive> {
    let side_path = sidecar_path(path);
    let side: serde_json::Value = serde_json::from_str(&read_to_string(&side_path)?)?;
    check_schema(&side_path, ARCHIVE_SCHEMA, side.get("schema").and_then(|s| s.as_str()))?;
    let side: Sidecar = serde_json::from_value(side)?;
    let text = read_to_string(path)?;
    let (meta_lines, body) = split_metadata(&text);
    check_schema(path, ARCHIVE_SCHEMA, lookup(&meta_lines, "schema"))?;

    let mut archive = ChainArchive::new(side.meta)?;
    let (n, d) = (archive.chains(), archive.dim());
    let offset = meta_lines.len() + 1;
    let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let headers = reader.headers()?.clone();
    let mut expected = vec!["chain".to_string(), "iteration".to_string()];
    expected.extend(archive.meta.names.iter().cloned());
    expected.extend(["log_posterior".to_string(), "accepted".to_string()]);
    if headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse {
            row: offset,
            column: "header".into(),
            message: format!("expected columns {}", expected.join(",")),
        });
    }
    let mut states = Vec::with_capacity(n);
    let mut log_post = Vec::with_capacity(n);
    let mut accepted = Vec::with_capacity(n);
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = offset + i + 1;
        let (g, j) = (i / n, i % n);
        let chain: usize = row[0].parse().unwrap_or(usize::MAX);
        let iteration: usize = row[1].parse().unwrap_or(usize::MAX);
        if chain != j || iteration != g {
            return Err(Error::Parse {
                row: line,
                column: "chain".into(),
                message: format!("expected chain {j} at iteration {g}"),
            });
        }
        let state = (0..d)
            .map(|p| float_cell(line, &expected[p + 2], &row[p + 2]))
            .collect::<Result<Vec<_>>>()?;
        states.push(state);
        log_post.push(float_cell(line, "log_posterior", &row[d + 2])?);
        accepted.push(match &row[d + 3] {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::Parse {
                    row: line,
                    column: "accepted".into(),
                    message: format!("`{other}` is not 0 or 1"),
                })
            }
        });
        if j + 1 == n {
            archive.push_generation(&states, &log_post, &accepted)?;
            states.clear();
            log_post.clear();
            accepted.clear();
        }
    }
    if !states.is_empty() {
        return Err(Error::Validation("archive ends inside a generation".into()));
    }
    Ok(archive)
}

pub fn samples_to_csv(samples: &PosteriorSamples) -> String {
    let mut out = format!("# schema: {SAMPLES_SCHEMA}\n");
    if let Some(m) = &samples.residual_model {
        let _ = writeln!(out, "# residual_model: {m}");
    }
    out.push_str("# units: parameters -; log_posterior nat\n");
    out.push_str(&samples.names.join(","));
    out.push_str(",log_posterior\n");
    for (d, lp) in samples.draws.iter().zip(&samples.log_posterior) {
        for x in d {
            out.push_str(&format_float(*x));
            out.push(',');
        }
        out.push_str(&format_float(*lp));
        out.push('\n');
    }
    out
}

pub fn write_samples(path: &Path, samples: &PosteriorSamples) -> Result<()> {
    atomic_write(path, samples_to_csv(samples).as_bytes())
}

pub fn read_samples(path: &Path) -> Result<PosteriorSamples> {
    let text = read_to_string(path)?;
    let (meta, body) = split_metadata(&text);
    check_schema(path, SAMPLES_SCHEMA, lookup(&meta, "schema"))?;
    let offset = meta.len() + 1;
    let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if headers.last().map(String::as_str) != Some("log_posterior") || headers.len() < 2 {
        return Err(Error::Parse {
            row: offset,
            column: "header".into(),
            message: "last column must be log_posterior".into(),
        });
    }
    let d = headers.len() - 1;
    let mut draws = Vec::new();
    let mut log_posterior = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = offset + i + 1;
        let values = (0..=d)
            .map(|c| float_cell(line, &headers[c], &row[c]))
            .collect::<Result<Vec<_>>>()?;
        log_posterior.push(values[d]);
        draws.push(values[..d].to_vec());
    }
    Ok(PosteriorSamples {
        names: headers[..d].to_vec(),
        residual_model: lookup(&meta, "residual_model").map(str::to_string),
        draws,
        log_posterior,
    })
}

pub fn hydrograph_to_csv(h: &Hydrograph) -> String {
    let mut out = String::from("# units: t s; Q_b m3/s; W_b m; H_b m; H_r m\nt,Q_b,W_b,H_b,H_r\n");
    for s in &h.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_float(s.t),
            format_float(s.discharge),
            format_float(s.width),
            format_float(s.bottom),
            format_float(s.level)
        );
    }
    out
}

pub fn write_hydrograph(path: &Path, h: &Hydrograph) -> Result<()> {
    atomic_write(path, hydrograph_to_csv(h).as_bytes())
}

pub fn members_to_csv(e: &EnsembleSummary) -> String {
    let mut out = String::from(
        "# units: w_c m; s_e -; beta deg; alpha -; gamma -; nu -; eta -; Q_p m3/s; W_f m; t_peak s; duration s\n\
         member,w_c,s_e,beta,alpha,gamma,nu,eta,status,failure_mode,Q_p,W_f,t_peak,duration,wider_than_dam\n",
    );
    for m in &e.members {
        let i = &m.inputs;
        let _ = write!(out, "{}", m.index);
        for x in [i.crest_width, i.embankment_slope, i.breach_angle, i.basin_exponent, i.gamma, i.nu, i.eta] {
            out.push(',');
            out.push_str(&format_float(x));
        }
        match &m.result {
            Some(r) => {
                let _ = writeln!(
                    out,
                    ",{},{},{},{},{},{},{}",
                    if r.horizon_reached { "horizon" } else { "ok" },
                    r.failure_mode.as_str(),
                    format_float(r.peak_discharge),
                    format_float(r.final_width),
                    format_float(r.time_to_peak),
                    format_float(r.duration),
                    u8::from(r.wider_than_dam)
                );
            }
            None => out.push_str(",failed,,,,,,\n"),
        }
    }
    out
}

pub fn bands_to_csv(e: &EnsembleSummary) -> String {
    let b = &e.discharge_bands;
    let mut out = String::from("# units: t s; quantile columns Q_b m3/s\nt");
    for p in &b.levels {
        let _ = write!(out, ",q{p}");
    }
    out.push('\n');
    for (k, &t) in b.time.iter().enumerate() {
        out.push_str(&format_float(t));
        for band in &b.bands {
            out.push(',');
            out.push_str(&format_float(band[k]));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct EnsembleReport<'a> {
    name: &'a str,
    members: usize,
    total_failures: usize,
    partial_failures: usize,
    failed_runs: usize,
    wider_than_dam: usize,
    peak_histogram: &'a crate::predict::Histogram,
    width_histogram: &'a crate::predict::Histogram,
}

/// Writes `members.csv`, `bands.csv` and `summary.json` into `dir`.
pub fn write_ensemble(dir: &Path, e: &EnsembleSummary) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|err| Error::io(dir, err))?;
    let report = EnsembleReport {
        name: &e.name,
        members: e.members.len(),
        total_failures: e.total_failures,
        partial_failures: e.partial_failures,
        failed_runs: e.failed_runs,
        wider_than_dam: e.wider_than_dam,
        peak_histogram: &e.peak_histogram,
        width_histogram: &e.width_histogram,
    };
    atomic_write(&dir.join("members.csv"), members_to_csv(e).as_bytes())?;
    atomic_write(&dir.join("bands.csv"), bands_to_csv(e).as_bytes())?;
    write_json(&dir.join("summary.json"), &report)
}

/// Pretty JSON with a trailing newline, written atomically.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)? + "\n";
    atomic_write(path, json.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::ArchiveMeta;

    fn archive() -> ChainArchive {
        let meta = ArchiveMeta {
            seed: 3,
            chains: 3,
            dim: 2,
            names: vec!["a".into(), "b".into()],
            scale: 1.19,
            jitter: vec![1e-4, 1e-4],
            residual_model: None,
            budget: 10,
            checkpoint_every: 5,
            target_effective: None,
            burn_in: None,
            thinning_lag: None,
            target_reached: false,
            target: None,
        };
        let mut a = ChainArchive::new(meta).unwrap();
        for g in 0..4 {
            let s: Vec<Vec<f64>> = (0..3).map(|j| vec![0.1 * g as f64 + j as f64 / 3.0, -1e-300]).collect();
            a.push_generation(&s, &[-1.5, f64::NEG_INFINITY, 2.0 / 3.0], &[true, false, g % 2 == 0])
                .unwrap();
        }
        a
    }

    #[test]
    fn archive_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chains.csv");
        let a = archive();
        write_archive(&path, &a).unwrap();
        let b = read_archive(&path).unwrap();
        assert_eq!(a, b);
        assert_eq!(archive_to_csv(&a), archive_to_csv(&b));
    }

    #[test]
    fn archive_schema_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chains.csv");
        write_archive(&path, &archive()).unwrap();
        let side = sidecar_path(&path);
        let text = std::fs::read_to_string(&side).unwrap().replace(ARCHIVE_SCHEMA, "breachcast-archive/0");
        std::fs::write(&side, text).unwrap();
        assert!(matches!(read_archive(&path), Err(Error::Schema { .. })));
    }

    #[test]
    fn samples_round_trip() {
        let s = PosteriorSamples {
            names: vec!["lambda".into(), "zeta".into()],
            residual_model: Some("zero-noise".into()),
            draws: vec![vec![-8.3, 0.1 + 0.2], vec![-7.0, 1e-17]],
            log_posterior: vec![-3.0, -4.25],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("posterior.csv");
        write_samples(&path, &s).unwrap();
        assert_eq!(read_samples(&path).unwrap(), s);
    }
}
