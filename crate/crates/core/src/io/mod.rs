//! File formats and artifact writing.

mod artifacts;
mod case;
mod dataset;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use artifacts::{
    archive_to_csv, bands_to_csv, hydrograph_to_csv, members_to_csv, read_archive, read_samples,
    samples_to_csv, sidecar_path, write_archive, write_ensemble, write_hydrograph, write_json,
    write_samples, ARCHIVE_SCHEMA, SAMPLES_SCHEMA,
};
pub use case::{parse_case, parse_case_str, CaseFile, ErosionPoint, CASE_SCHEMA};
pub use dataset::{bundled_dataset, parse_dataset, parse_dataset_str, DatasetFile, DATASET_SCHEMA};

/// Shortest-exact float formatting with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and an atomic rename, so readers never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))
            .map_err(|e| Error::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Reads a whole file, mapping failures to [`Error::Io`].
pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
