//! Ensemble prediction of breach hydrographs for a new dam.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::quantile_sorted;
use crate::error::{Error, Result};
use crate::forward::{
    simulate_with, BreachSpec, DamCase, DamGeometry, ErosionParams, FailureMode, ReservoirSpec,
    SimulationOptions,
};
use crate::inference::Qoi;
use crate::stochastic::{lhs_sample, DistSpec, RngStream};

/// Dam geometry whose uncertain fields may carry distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertainGeometry {
    pub height: f64,
    pub crest_width: DistSpec,
    pub embankment_slope: DistSpec,
    pub breach_angle: DistSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertainReservoir {
    pub basin_exponent: DistSpec,
    pub level_drop: f64,
    pub released_volume: f64,
}

/// Where the erosion law comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ErosionSource {
    /// Fixed exponents with `γ ~ LN(λ, ζ)`.
    Point { lambda: f64, zeta: f64, nu: f64, eta: f64 },
    /// Posterior draws of `(λ, ζ, ν, η)`; each member picks one.
    Draws(Vec<[f64; 4]>),
}

impl ErosionSource {
    pub fn from_mode(q: &Qoi) -> Self {
        ErosionSource::Point {
            lambda: q.lambda,
            zeta: q.zeta,
            nu: q.nu,
            eta: q.eta,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionCase {
    pub name: String,
    pub geometry: UncertainGeometry,
    pub reservoir: UncertainReservoir,
    pub breach: BreachSpec,
    pub erosion: ErosionSource,
}

impl PredictionCase {
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        for s in [g.crest_width, g.embankment_slope, g.breach_angle, self.reservoir.basin_exponent] {
            s.validate()?;
            if s.dim() != 1 {
                return Err(Error::Validation(format!("uncertain inputs must be scalar, got {s}")));
            }
        }
        // Check the forward-model ranges at the support bounds.
        let lo_hi = |s: DistSpec| s.support();
        let (w0, w1) = lo_hi(g.crest_width)?;
        let (s0, s1) = lo_hi(g.embankment_slope)?;
        let (b0, b1) = lo_hi(g.breach_angle)?;
        let (a0, a1) = lo_hi(self.reservoir.basin_exponent)?;
        for (w, s, b, a) in [(w0, s0, b0, a0), (w1, s1, b1, a1)] {
            let case = self.case(
                if w.is_finite() { w } else { 1.0 },
                if s.is_finite() { s } else { 1.0 },
                b,
                if a.is_finite() { a } else { 1.0 },
            );
            case.validate()?;
        }
        match &self.erosion {
            ErosionSource::Point { zeta, nu, eta, lambda } => {
                if !(lambda.is_finite() && zeta.is_finite() && *zeta >= 0.0) {
                    return Err(Error::Validation("erosion needs finite lambda and zeta >= 0".into()));
                }
                ErosionParams {
                    gamma: lambda.exp(),
                    nu: *nu,
                    eta: *eta,
                }
                .validate()
            }
            ErosionSource::Draws(d) if d.is_empty() => {
                Err(Error::Validation("posterior draw set is empty".into()))
            }
            ErosionSource::Draws(_) => Ok(()),
        }
    }

    fn case(&self, w_c: f64, s_e: f64, beta: f64, alpha: f64) -> DamCase {
        DamCase {
            geometry: DamGeometry {
                height: self.geometry.height,
                crest_width: w_c,
                embankment_slope: s_e,
                breach_angle: beta,
            },
            reservoir: ReservoirSpec {
                basin_exponent: alpha,
                level_drop: self.reservoir.level_drop,
                released_volume: self.reservoir.released_volume,
            },
            breach: self.breach,
        }
    }

    /// LHS marginals: crest width, slope, angle, basin exponent, then the
    /// erosion dimension.
    fn marginals(&self) -> Vec<DistSpec> {
        let g = &self.geometry;
        let erosion = match self.erosion {
            ErosionSource::Point { lambda, zeta, .. } if zeta > 0.0 => DistSpec::LogNormal {
                location: lambda,
                scale: zeta,
            },
            ErosionSource::Point { lambda, .. } => DistSpec::Fixed(lambda.exp()),
            ErosionSource::Draws(_) => DistSpec::Uniform { lo: 0.0, hi: 1.0 },
        };
        let mut v = vec![
            g.crest_width,
            g.embankment_slope,
            g.breach_angle,
            self.reservoir.basin_exponent,
            erosion,
        ];
        if matches!(self.erosion, ErosionSource::Draws(_)) {
            v.push(DistSpec::Normal { mean: 0.0, sd: 1.0 });
        }
        v
    }

    fn erosion_for(&self, row: &[f64]) -> ErosionParams {
        match &self.erosion {
            ErosionSource::Point { nu, eta, .. } => ErosionParams {
                gamma: row[4],
                nu: *nu,
                eta: *eta,
            },
            ErosionSource::Draws(d) => {
                let k = ((row[4] * d.len() as f64) as usize).min(d.len() - 1);
                let [lambda, zeta, nu, eta] = d[k];
                ErosionParams {
                    gamma: (lambda + zeta * row[5]).exp(),
                    nu,
                    eta,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    /// Probability levels of the hydrograph bands.
    pub levels: Vec<f64>,
    pub grid_points: usize,
    /// Member duration percentile that sets the grid end.
    pub grid_end_percentile: f64,
    pub histogram_bins: usize,
    pub simulation: SimulationOptions,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            levels: vec![0.05, 0.25, 0.5, 0.75, 0.95],
            grid_points: 512,
            grid_end_percentile: 0.99,
            histogram_bins: 40,
            simulation: SimulationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemberInputs {
    pub crest_width: f64,
    pub embankment_slope: f64,
    pub breach_angle: f64,
    pub basin_exponent: f64,
    pub gamma: f64,
    pub nu: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemberResult {
    pub peak_discharge: f64,
    pub final_width: f64,
    pub time_to_peak: f64,
    pub duration: f64,
    pub failure_mode: FailureMode,
    pub switch_time: Option<f64>,
    /// Mean final width exceeds the dam height.
    pub wider_than_dam: bool,
    pub horizon_reached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub index: usize,
    pub inputs: MemberInputs,
    /// `None` when the forward run failed.
    pub result: Option<MemberResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileBands {
    pub levels: Vec<f64>,
    pub time: Vec<f64>,
    /// `bands[l][t]`: level `l` at grid time `t`.
    pub bands: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() {
            return Self {
                edges: Vec::new(),
                counts: Vec::new(),
            };
        }
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let i = (((v - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Self { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub name: String,
    pub members: Vec<Member>,
    pub total_failures: usize,
    pub partial_failures: usize,
    pub failed_runs: usize,
    pub wider_than_dam: usize,
    pub discharge_bands: QuantileBands,
    pub peak_histogram: Histogram,
    pub width_histogram: Histogram,
}

/// Linear interpolation of a hydrograph at `t`, zero past its end.
fn discharge_at(t_series: &[f64], q_series: &[f64], t: f64) -> f64 {
    let n = t_series.len();
    if n == 0 || t > t_series[n - 1] {
        return 0.0;
    }
    let i = t_series.partition_point(|&x| x <= t);
    if i == 0 {
        return q_series[0];
    }
    if i == n {
        return q_series[n - 1];
    }
    let (t0, t1) = (t_series[i - 1], t_series[i]);
    if t1 == t0 {
        return q_series[i];
    }
    q_series[i - 1] + (t - t0) / (t1 - t0) * (q_series[i] - q_series[i - 1])
}

/// Pointwise quantiles over members at each grid time; `bands[l][t]`.
fn pooled_bands(series: &[&(Vec<f64>, Vec<f64>)], time: &[f64], levels: &[f64]) -> Vec<Vec<f64>> {
    let columns: Vec<Vec<f64>> = time
        .par_iter()
        .map(|&t| {
            let mut col: Vec<f64> = series.iter().map(|(ts, qs)| discharge_at(ts, qs, t)).collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect();
    levels
        .iter()
        .map(|&p| columns.iter().map(|c| quantile_sorted(c, p)).collect())
        .collect()
}

/// Latin Hypercube ensemble of `n` forward runs. The design is drawn from
/// `stream`; the forward runs themselves are deterministic.
pub fn predict_ensemble(
    case: &PredictionCase,
    n: usize,
    stream: RngStream,
    opts: &EnsembleOptions,
) -> Result<EnsembleSummary> {
    if n < 2 {
        return Err(Error::Validation(format!("ensemble needs at least 2 members, got {n}")));
    }
    if opts.grid_points < 2 || opts.levels.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Config("grid needs 2+ points and levels in [0, 1]".into()));
    }
    case.validate()?;
    let design = lhs_sample(&case.marginals(), n, &mut stream.rng())?;

    type Run = (Member, Option<(Vec<f64>, Vec<f64>)>);
    let runs: Vec<Run> = design
        .par_iter()
        .enumerate()
        .map(|(index, row)| {
            let erosion = case.erosion_for(row);
            let inputs = MemberInputs {
                crest_width: row[0],
                embankment_slope: row[1],
                breach_angle: row[2],
                basin_exponent: row[3],
                gamma: erosion.gamma,
                nu: erosion.nu,
                eta: erosion.eta,
            };
            let dam = case.case(row[0], row[1], row[2], row[3]);
            match simulate_with(&dam, &erosion, &opts.simulation) {
                Ok(h) => {
                    let result = MemberResult {
                        peak_discharge: h.peak_discharge,
                        final_width: h.final_width,
                        time_to_peak: h.time_to_peak,
                        duration: h.duration(),
                        failure_mode: h.failure_mode,
                        switch_time: h.switch_time,
                        wider_than_dam: h.wider_than_dam(case.geometry.height),
                        horizon_reached: h.horizon_reached,
                    };
                    let t = h.samples.iter().map(|s| s.t).collect();
                    let q = h.samples.iter().map(|s| s.discharge).collect();
                    (
                        Member {
                            index,
                            inputs,
                            result: Some(result),
                        },
                        Some((t, q)),
                    )
                }
                Err(_) => (
                    Member {
                        index,
                        inputs,
                        result: None,
                    },
                    None,
                ),
            }
        })
        .collect();

    let ok: Vec<&MemberResult> = runs.iter().filter_map(|r| r.0.result.as_ref()).collect();
    let mut durations: Vec<f64> = ok.iter().map(|r| r.duration).collect();
    durations.sort_by(f64::total_cmp);
    let end = quantile_sorted(&durations, opts.grid_end_percentile);
    let end = if end.is_finite() && end > 0.0 { end } else { 1.0 };
    let m = opts.grid_points;
    let time: Vec<f64> = (0..m).map(|i| end * i as f64 / (m - 1) as f64).collect();

    let series: Vec<&(Vec<f64>, Vec<f64>)> = runs.iter().filter_map(|r| r.1.as_ref()).collect();
    let bands = pooled_bands(&series, &time, &opts.levels);

    let peaks: Vec<f64> = ok.iter().map(|r| r.peak_discharge).collect();
    let widths: Vec<f64> = ok.iter().map(|r| r.final_width).collect();
    let total = ok.iter().filter(|r| r.failure_mode == FailureMode::Total).count();
    let succeeded = ok.len();
    let wider = ok.iter().filter(|r| r.wider_than_dam).count();
    drop(series);
    let members: Vec<Member> = runs.into_iter().map(|r| r.0).collect();
    Ok(EnsembleSummary {
        name: case.name.clone(),
        total_failures: total,
        partial_failures: succeeded - total,
        failed_runs: n - succeeded,
        wider_than_dam: wider,
        discharge_bands: QuantileBands {
            levels: opts.levels.clone(),
            time,
            bands,
        },
        peak_histogram: Histogram::new(&peaks, opts.histogram_bins),
        width_histogram: Histogram::new(&widths, opts.histogram_bins),
        members,
    })
}

/// Deterministic transport law at the median coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportFormula {
    pub coefficient: f64,
    pub nu: f64,
    pub eta: f64,
    pub text: String,
}

pub fn transport_formula_report(lambda: f64, nu: f64, eta: f64) -> TransportFormula {
    let coefficient = lambda.exp();
    TransportFormula {
        coefficient,
        nu,
        eta,
        text: format!("q_s = {coefficient:.3e} * v^{nu} * r_h^{eta}"),
    }
}

/// The ICOLD benchmark dam with the given erosion source.
pub fn icold_case(erosion: ErosionSource) -> PredictionCase {
    PredictionCase {
        name: "icold".into(),
        geometry: UncertainGeometry {
            height: 61.0,
            crest_width: DistSpec::Fixed(24.0),
            embankment_slope: DistSpec::Fixed(3.0),
            breach_angle: DistSpec::Uniform { lo: 50.0, hi: 85.0 },
        },
        reservoir: UncertainReservoir {
            basin_exponent: DistSpec::Uniform { lo: 2.5, hi: 3.2 },
            level_drop: 61.0,
            released_volume: 38_276_344.0,
        },
        breach: BreachSpec {
            final_height: 61.0,
            initial_depth_ratio: 0.82,
        },
        erosion,
    }
}
