//! Goodness of fit `r = ỹ − y + ε` at fixed global parameters.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{bootstrap_ci, correlation, mean, variance, BootstrapBands};
use crate::error::{Error, Result};
use crate::forward::SimulationOptions;
use crate::inference::{simulate_draw, ObservationRecord, Qoi, ResidualModel};
use crate::stochastic::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofOptions {
    /// Forward runs per record.
    pub replications: usize,
    pub simulation: SimulationOptions,
}

impl Default for GofOptions {
    fn default() -> Self {
        Self {
            replications: 2000,
            simulation: SimulationOptions::default(),
        }
    }
}

/// Samples of one output component for one record, all in log₁₀ units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSamples {
    /// `r = ỹ − y + ε`.
    pub r: Vec<f64>,
    /// `y − ỹ`.
    pub discrepancy: Vec<f64>,
    /// `ε`.
    pub noise: Vec<f64>,
    /// `Pr[r ≤ 0]`.
    pub percentile: f64,
}

impl ComponentSamples {
    fn new(r: Vec<f64>, discrepancy: Vec<f64>, noise: Vec<f64>) -> Self {
        let percentile = fraction_nonpositive(&r);
        Self {
            r,
            discrepancy,
            noise,
            percentile,
        }
    }
}

fn fraction_nonpositive(r: &[f64]) -> f64 {
    r.iter().filter(|&&x| x <= 0.0).count() as f64 / r.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofRecord {
    pub name: String,
    pub discharge: ComponentSamples,
    pub width: Option<ComponentSamples>,
    pub failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Overall,
    Discharge,
    Width,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::Overall, Component::Discharge, Component::Width];

    pub fn as_str(self) -> &'static str {
        match self {
            Component::Overall => "overall",
            Component::Discharge => "discharge",
            Component::Width => "width",
        }
    }
}

impl GofRecord {
    pub fn components(&self, c: Component) -> Vec<&ComponentSamples> {
        match c {
            Component::Discharge => vec![&self.discharge],
            Component::Width => self.width.iter().collect(),
            Component::Overall => std::iter::once(&self.discharge).chain(self.width.iter()).collect(),
        }
    }
}

/// Replicates every record `opts.replications` times with fresh draws of the
/// experiment-specific inputs and, under the gaussian model, of `ε`.
/// Record `i`, replicate `k` uses sub-stream `(i, k)` of `stream`.
pub fn gof_evaluate(
    q: &Qoi,
    records: &[ObservationRecord],
    model: ResidualModel,
    stream: RngStream,
    opts: &GofOptions,
) -> Result<Vec<GofRecord>> {
    q.check_model(model)?;
    if opts.replications == 0 {
        return Err(Error::Config("GoF needs at least one replication".into()));
    }
    records
        .par_iter()
        .enumerate()
        .map(|(i, rec)| {
            rec.validate()?;
            let (yq, yw) = rec.observed.log10();
            let sigma = q.sigma.unwrap_or([0.0, 0.0]);
            let reps = (0..opts.replications)
                .into_par_iter()
                .map(|k| -> Result<Option<([f64; 2], [f64; 2])>> {
                    let s = stream.descend(&[i as u64, k as u64]);
                    let draw = simulate_draw(rec, q, s, &opts.simulation)?;
                    let Some(out) = draw.outputs else {
                        return Ok(None);
                    };
                    let mut rng = s.child(1).rng();
                    let mut noise = [0.0; 2];
                    if model == ResidualModel::Gaussian {
                        for (e, sd) in noise.iter_mut().zip(sigma) {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            *e = sd * z;
                        }
                    }
                    Ok(Some((out, noise)))
                })
                .collect::<Result<Vec<_>>>()?;
            let failures = reps.iter().filter(|r| r.is_none()).count();
            let ok: Vec<([f64; 2], [f64; 2])> = reps.into_iter().flatten().collect();
            let component = |j: usize, y: f64| {
                ComponentSamples::new(
                    ok.iter().map(|(o, e)| o[j] - y + e[j]).collect(),
                    ok.iter().map(|(o, _)| y - o[j]).collect(),
                    ok.iter().map(|(_, e)| e[j]).collect(),
                )
            };
            Ok(GofRecord {
                name: rec.name.clone(),
                discharge: component(0, yq),
                width: yw.map(|y| component(1, y)),
                failures,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceDecomposition {
    pub r: f64,
    pub discrepancy: f64,
    pub noise: f64,
    /// `Var[r] − Var[y−ỹ] − Var[ε]`, the covariance contribution.
    pub cross: f64,
}

pub fn variance_decomposition(r: &[f64], discrepancy: &[f64], noise: &[f64]) -> Result<VarianceDecomposition> {
    if r.len() != discrepancy.len() || r.len() != noise.len() {
        return Err(Error::domain("variance decomposition needs equal sample counts"));
    }
    let (vr, vd, vn) = (variance(r), variance(discrepancy), variance(noise));
    Ok(VarianceDecomposition {
        r: vr,
        discrepancy: vd,
        noise: vn,
        cross: vr - vd - vn,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub component: Component,
    pub mean: f64,
    pub mean_bands: BootstrapBands,
    pub i95: f64,
    pub i95_bands: BootstrapBands,
    pub variances: VarianceDecomposition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofSummary {
    pub model: ResidualModel,
    pub components: Vec<ComponentSummary>,
    /// Correlation of paired `(r_Q, r_W)` samples.
    pub correlation: f64,
    pub correlation_bands: BootstrapBands,
    pub failures: usize,
}

fn pooled(gof: &[GofRecord], idx: &[usize], c: Component) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut r = Vec::new();
    let mut d = Vec::new();
    let mut e = Vec::new();
    for &i in idx {
        for s in gof[i].components(c) {
            r.extend_from_slice(&s.r);
            d.extend_from_slice(&s.discrepancy);
            e.extend_from_slice(&s.noise);
        }
    }
    (r, d, e)
}

fn paired(gof: &[GofRecord], idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for &i in idx {
        if let Some(w) = &gof[i].width {
            a.extend_from_slice(&gof[i].discharge.r);
            b.extend_from_slice(&w.r);
        }
    }
    (a, b)
}

/// Pooled GoF statistics with bootstrap bands over records.
pub fn gof_summary<R: Rng + ?Sized>(
    gof: &[GofRecord],
    model: ResidualModel,
    b: usize,
    rng: &mut R,
) -> Result<GofSummary> {
    if gof.is_empty() {
        return Err(Error::domain("no GoF records"));
    }
    let all: Vec<usize> = (0..gof.len()).collect();
    let mut components = Vec::new();
    for c in Component::ALL {
        let (r, d, e) = pooled(gof, &all, c);
        if r.is_empty() {
            continue;
        }
        let mean_bands = bootstrap_ci(|idx: &[usize]| mean(&pooled(gof, idx, c).0), &all, b, rng)?;
        let i95_bands = bootstrap_ci(
            |idx: &[usize]| 2.0 * variance(&pooled(gof, idx, c).0).sqrt(),
            &all,
            b,
            rng,
        )?;
        components.push(ComponentSummary {
            component: c,
            mean: mean(&r),
            mean_bands,
            i95: 2.0 * variance(&r).sqrt(),
            i95_bands,
            variances: variance_decomposition(&r, &d, &e)?,
        });
    }
    let (a, w) = paired(gof, &all);
    let correlation_bands = bootstrap_ci(
        |idx: &[usize]| {
            let (a, w) = paired(gof, idx);
            correlation(&a, &w)
        },
        &all,
        b,
        rng,
    )?;
    Ok(GofSummary {
        model,
        components,
        correlation: correlation(&a, &w),
        correlation_bands,
        failures: gof.iter().map(|g| g.failures).sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileEntry {
    pub name: String,
    pub component: Component,
    pub percentile: f64,
    pub bands: BootstrapBands,
    /// Expected position `(i − ½)/n` of this rank under a perfect model.
    pub uniform: f64,
}

/// Per-record percentiles `Pr[r ≤ 0]` sorted ascending with bootstrap bands.
/// The overall sequence lists both components of every record.
pub fn percentile_sequence<R: Rng + ?Sized>(
    gof: &[GofRecord],
    component: Component,
    b: usize,
    rng: &mut R,
) -> Result<Vec<PercentileEntry>> {
    let mut entries = Vec::new();
    for g in gof {
        let parts: Vec<(Component, &ComponentSamples)> = match component {
            Component::Overall => std::iter::once((Component::Discharge, &g.discharge))
                .chain(g.width.iter().map(|w| (Component::Width, w)))
                .collect(),
            Component::Discharge => vec![(Component::Discharge, &g.discharge)],
            Component::Width => g.width.iter().map(|w| (Component::Width, w)).collect(),
        };
        for (c, s) in parts {
            if s.r.is_empty() {
                continue;
            }
            let bands = bootstrap_ci(fraction_nonpositive, &s.r, b, rng)?;
            entries.push(PercentileEntry {
                name: g.name.clone(),
                component: c,
                percentile: s.percentile,
                bands,
                uniform: 0.0,
            });
        }
    }
    if entries.is_empty() {
        return Err(Error::domain("no GoF samples for the requested component"));
    }
    entries.sort_by(|a, b| a.percentile.total_cmp(&b.percentile).then_with(|| a.name.cmp(&b.name)));
    let n = entries.len() as f64;
    for (i, e) in entries.iter_mut().enumerate() {
        e.uniform = (i as f64 + 0.5) / n;
    }
    Ok(entries)
}
