//! C interface to the breachcast simulator, likelihood and ensemble
//! prediction.
//!
//! Objects are opaque handles created by `bc_*_new`/`bc_*_load` functions and
//! released with the matching `bc_*_free`. Every fallible call returns a
//! [`BcStatus`]; on failure `bc_last_error` describes the problem for the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use breachcast::forward::{
    simulate_with, BreachSpec, DamCase, DamGeometry, ErosionParams, FailureMode, Hydrograph, ReservoirSpec,
    SimulationOptions,
};
use breachcast::inference::{log_posterior, LikelihoodOptions, ObservationRecord, Prior, Qoi, ResidualModel};
use breachcast::predict::{predict_ensemble, EnsembleOptions, EnsembleSummary, PredictionCase};
use breachcast::stochastic::RngStream;
use breachcast::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    Numerical = 4,
    Io = 5,
    Parse = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcResidualModel {
    Gaussian = 0,
    ZeroNoise = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcFailureMode {
    Total = 0,
    Partial = 1,
}

/// Scalar results of one forward run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcHydrographSummary {
    /// m³/s
    pub peak_discharge: f64,
    /// s
    pub time_to_peak: f64,
    /// m
    pub final_width: f64,
    /// s
    pub duration: f64,
    pub failure_mode: BcFailureMode,
    /// Nonzero when the run stopped at the time horizon.
    pub horizon_reached: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BcEnsembleCounts {
    pub members: usize,
    pub total_failures: usize,
    pub partial_failures: usize,
    pub failed_runs: usize,
}

/// Dam, reservoir and breach inputs of a single forward run.
pub struct BcCase(DamCase);

pub struct BcHydrograph(Hydrograph);

pub struct BcDataset(Vec<ObservationRecord>);

pub struct BcPredictionCase(PredictionCase);

pub struct BcEnsemble(EnsembleSummary);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BcStatus {
    match e {
        Error::Domain(_) | Error::Config(_) => BcStatus::InvalidArgument,
        Error::Validation(_) => BcStatus::Validation,
        Error::Numerical(_) => BcStatus::Numerical,
        Error::Io { .. } => BcStatus::Io,
        Error::Parse { .. } | Error::Schema { .. } | Error::Csv(_) | Error::Json(_) => BcStatus::Parse,
    }
}

struct Fail(BcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(BcStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            BcStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            BcStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Fail(BcStatus::InvalidArgument, "path is not UTF-8".into()))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn bc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a deterministic dam case. Lengths in m, angle in degrees,
/// volume in m³.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn bc_case_new(
    dam_height: f64,
    crest_width: f64,
    embankment_slope: f64,
    breach_angle: f64,
    basin_exponent: f64,
    level_drop: f64,
    released_volume: f64,
    final_breach_height: f64,
    initial_depth_ratio: f64,
    out: *mut *mut BcCase,
) -> BcStatus {
    guard(|| {
        let case = DamCase {
            geometry: DamGeometry {
                height: dam_height,
                crest_width,
                embankment_slope,
                breach_angle,
            },
            reservoir: ReservoirSpec {
                basin_exponent,
                level_drop,
                released_volume,
            },
            breach: BreachSpec {
                final_height: final_breach_height,
                initial_depth_ratio,
            },
        };
        case.validate()?;
        store(out, BcCase(case))
    })
}

/// # Safety
/// `case` must be null or a handle from `bc_case_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bc_case_free(case: *mut BcCase) {
    if !case.is_null() {
        drop(Box::from_raw(case));
    }
}

/// Runs the forward model with transport coefficient `gamma` and exponents
/// `nu`, `eta`.
///
/// # Safety
/// `case` must be a live handle and `out` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn bc_simulate(
    case: *const BcCase,
    gamma: f64,
    nu: f64,
    eta: f64,
    out: *mut *mut BcHydrograph,
) -> BcStatus {
    guard(|| {
        let case = borrow(case, "case")?;
        let erosion = ErosionParams { gamma, nu, eta };
        erosion.validate()?;
        let h = simulate_with(&case.0, &erosion, &SimulationOptions::default())?;
        store(out, BcHydrograph(h))
    })
}

/// # Safety
/// `h` must be null or a live hydrograph handle.
#[no_mangle]
pub unsafe extern "C" fn bc_hydrograph_free(h: *mut BcHydrograph) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of time samples, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live hydrograph handle.
#[no_mangle]
pub unsafe extern "C" fn bc_hydrograph_len(h: *const BcHydrograph) -> usize {
    h.as_ref().map_or(0, |h| h.0.samples.len())
}

/// # Safety
/// `h` must be a live handle and `out` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn bc_hydrograph_summary(h: *const BcHydrograph, out: *mut BcHydrographSummary) -> BcStatus {
    guard(|| {
        let h = &borrow(h, "hydrograph")?.0;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = BcHydrographSummary {
            peak_discharge: h.peak_discharge,
            time_to_peak: h.time_to_peak,
            final_width: h.final_width,
            duration: h.duration(),
            failure_mode: match h.failure_mode {
                FailureMode::Total => BcFailureMode::Total,
                FailureMode::Partial => BcFailureMode::Partial,
            },
            horizon_reached: i32::from(h.horizon_reached),
        };
        Ok(())
    })
}

/// Copies the time series into caller buffers of length `len`, which must
/// equal `bc_hydrograph_len`. Any buffer may be null to skip that series:
/// time [s], breach discharge [m³/s], breach width [m], breach bottom [m]
/// and reservoir level [m].
///
/// # Safety
/// Non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bc_hydrograph_series(
    h: *const BcHydrograph,
    time: *mut f64,
    discharge: *mut f64,
    width: *mut f64,
    bottom: *mut f64,
    level: *mut f64,
    len: usize,
) -> BcStatus {
    guard(|| {
        let h = &borrow(h, "hydrograph")?.0;
        if len != h.samples.len() {
            return Err(Fail(
                BcStatus::InvalidArgument,
                format!("buffer length {len} differs from {} samples", h.samples.len()),
            ));
        }
        let columns: [(*mut f64, fn(&breachcast::forward::HydrographSample) -> f64); 5] = [
            (time, |s| s.t),
            (discharge, |s| s.discharge),
            (width, |s| s.width),
            (bottom, |s| s.bottom),
            (level, |s| s.level),
        ];
        for (buf, get) in columns {
            if !buf.is_null() {
                let dst = std::slice::from_raw_parts_mut(buf, len);
                for (d, s) in dst.iter_mut().zip(&h.samples) {
                    *d = get(s);
                }
            }
        }
        Ok(())
    })
}

/// The fifteen bundled historical records.
///
/// # Safety
/// `out` must be valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn bc_dataset_bundled(out: *mut *mut BcDataset) -> BcStatus {
    guard(|| store(out, BcDataset(breachcast::io::bundled_dataset().records)))
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn bc_dataset_load(path: *const c_char, out: *mut *mut BcDataset) -> BcStatus {
    guard(|| {
        let d = breachcast::io::parse_dataset(path_arg(path)?)?;
        store(out, BcDataset(d.records))
    })
}

/// # Safety
/// `d` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn bc_dataset_len(d: *const BcDataset) -> usize {
    d.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `d` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn bc_dataset_free(d: *mut BcDataset) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Monte-Carlo estimate of the log posterior at `params` (lambda, zeta, nu,
/// eta, then sigma_q, sigma_w for the gaussian model) under the default
/// prior. `max_draws` caps the per-record sample size.
///
/// # Safety
/// `d` must be a live dataset, `params` must hold `len` doubles and `out`
/// must be valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn bc_log_posterior(
    d: *const BcDataset,
    model: BcResidualModel,
    params: *const f64,
    len: usize,
    seed: u64,
    initial_draws: usize,
    max_draws: usize,
    out: *mut f64,
) -> BcStatus {
    guard(|| {
        let d = borrow(d, "dataset")?;
        if params.is_null() {
            return Err(null("params"));
        }
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        if initial_draws == 0 || max_draws < initial_draws {
            return Err(Fail(BcStatus::InvalidArgument, "need 0 < initial_draws <= max_draws".into()));
        }
        let model = match model {
            BcResidualModel::Gaussian => ResidualModel::Gaussian,
            BcResidualModel::ZeroNoise => ResidualModel::ZeroNoise,
        };
        let q = Qoi::from_slice(model, std::slice::from_raw_parts(params, len))?;
        let opts = LikelihoodOptions {
            initial_draws,
            max_draws,
            ..LikelihoodOptions::default()
        };
        let eval = log_posterior(&q, &d.0, model, &Prior::default(), RngStream::new(seed, 0), &opts)?;
        *out = eval.value;
        Ok(())
    })
}

/// Loads a prediction case JSON file; it must carry an erosion block.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn bc_prediction_case_load(path: *const c_char, out: *mut *mut BcPredictionCase) -> BcStatus {
    guard(|| {
        let file = breachcast::io::parse_case(path_arg(path)?)?;
        store(out, BcPredictionCase(file.prediction_case(None)?))
    })
}

/// # Safety
/// `c` must be null or a live prediction case handle.
#[no_mangle]
pub unsafe extern "C" fn bc_prediction_case_free(c: *mut BcPredictionCase) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Latin Hypercube ensemble of `n` forward runs.
///
/// # Safety
/// `c` must be a live prediction case and `out` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn bc_predict(
    c: *const BcPredictionCase,
    n: usize,
    seed: u64,
    out: *mut *mut BcEnsemble,
) -> BcStatus {
    guard(|| {
        let c = borrow(c, "prediction case")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let e = predict_ensemble(&c.0, n, RngStream::new(seed, 0), &EnsembleOptions::default())?;
        store(out, BcEnsemble(e))
    })
}

/// # Safety
/// `e` must be a live ensemble and `out` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn bc_ensemble_counts(e: *const BcEnsemble, out: *mut BcEnsembleCounts) -> BcStatus {
    guard(|| {
        let e = &borrow(e, "ensemble")?.0;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = BcEnsembleCounts {
            members: e.members.len(),
            total_failures: e.total_failures,
            partial_failures: e.partial_failures,
            failed_runs: e.failed_runs,
        };
        Ok(())
    })
}

/// Peak discharge of every member in index order; failed members give NaN.
///
/// # Safety
/// `buf` must hold `len` doubles, with `len` equal to the member count.
#[no_mangle]
pub unsafe extern "C" fn bc_ensemble_peaks(e: *const BcEnsemble, buf: *mut f64, len: usize) -> BcStatus {
    guard(|| {
        let e = &borrow(e, "ensemble")?.0;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        if len != e.members.len() {
            return Err(Fail(BcStatus::InvalidArgument, "buffer length differs from member count".into()));
        }
        let dst = std::slice::from_raw_parts_mut(buf, len);
        for (d, m) in dst.iter_mut().zip(&e.members) {
            *d = m.result.map_or(f64::NAN, |r| r.peak_discharge);
        }
        Ok(())
    })
}

/// Writes `members.csv`, `bands.csv` and `summary.json` into `dir`.
///
/// # Safety
/// `e` must be a live ensemble and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bc_ensemble_write(e: *const BcEnsemble, dir: *const c_char) -> BcStatus {
    guard(|| {
        let e = &borrow(e, "ensemble")?.0;
        breachcast::io::write_ensemble(path_arg(dir)?, e)?;
        Ok(())
    })
}

/// # Safety
/// `e` must be null or a live ensemble handle.
#[no_mangle]
pub unsafe extern "C" fn bc_ensemble_free(e: *mut BcEnsemble) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}
