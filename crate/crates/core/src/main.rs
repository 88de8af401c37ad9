use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use breachcast::analysis::{gof_evaluate, gof_summary, mode_estimate, percentile_sequence, Component, GofOptions};
use breachcast::forward::{simulate_with, DamCase, DamGeometry, ErosionParams, ReservoirSpec, SimulationOptions};
use breachcast::inference::{
    calibration_config, initial_states, new_archive, LikelihoodOptions, PosteriorTarget, Prior, Qoi, ResidualModel,
};
use breachcast::io::{self, DatasetFile};
use breachcast::mcmc::{self, DiagnosticsOptions, PosteriorSamples};
use breachcast::predict::{predict_ensemble, transport_formula_report, EnsembleOptions, ErosionSource};
use breachcast::stochastic::{DistSpec, RngStream};
use breachcast::{Error, Result};

const GOF_STREAM: u64 = 10;
const GOF_BOOTSTRAP_STREAM: u64 = 11;
const PREDICT_STREAM: u64 = 20;
const REPORT_STREAM: u64 = 30;

#[derive(Parser)]
#[command(name = "breachcast", version, about = "Embankment dam breach hydrographs: simulation, calibration and prediction")]
struct Cli {
    /// Master random seed.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "BREACHCAST_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "gaussian")]
    residual_model: ModelArg,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Gaussian,
    ZeroNoise,
}

impl From<ModelArg> for ResidualModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Gaussian => ResidualModel::Gaussian,
            ModelArg::ZeroNoise => ResidualModel::ZeroNoise,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Sampler {
    Lhs,
}

#[derive(Subcommand)]
enum Command {
    /// One forward run written as a hydrograph CSV.
    Simulate(SimulateArgs),
    /// DE-MC calibration against an observation dataset.
    Calibrate(CalibrateArgs),
    /// Convergence diagnostics and thinned posterior draws from an archive.
    Diagnose(DiagnoseArgs),
    /// Goodness-of-fit statistics at the posterior mode.
    Gof(GofArgs),
    /// Ensemble prediction for a new dam.
    Predict(PredictArgs),
    /// Posterior mode table and transport formula.
    Report(ReportArgs),
    /// Bundled observation dataset.
    #[command(subcommand)]
    Dataset(DatasetCommand),
}

#[derive(Args)]
struct SimulateArgs {
    /// Case JSON; uncertain inputs are taken at their median.
    #[arg(long)]
    case: PathBuf,
    /// Erosion coefficient; defaults to exp(lambda) from the case.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Args)]
struct LikelihoodArgs {
    /// Monte-Carlo draws of the first likelihood pass.
    #[arg(long, default_value_t = 512)]
    initial_draws: usize,
    /// Cap of the doubling schedule.
    #[arg(long, default_value_t = 1 << 17)]
    max_draws: usize,
    /// Target relative standard error of each likelihood estimate.
    #[arg(long, default_value_t = 0.01)]
    precision: f64,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Dataset CSV; the bundled records when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    chains: usize,
    /// Generation budget including the initial states.
    #[arg(long, default_value_t = 3000)]
    iters: usize,
    #[arg(long, default_value_t = 50)]
    checkpoint_every: usize,
    /// Stop early once every parameter has this many effective samples.
    #[arg(long)]
    target_neff: Option<f64>,
    /// Continue the archive in the output directory.
    #[arg(long)]
    resume: bool,
    #[command(flatten)]
    likelihood: LikelihoodArgs,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Chain archive CSV (with its JSON sidecar).
    #[arg(long)]
    archive: PathBuf,
    #[arg(long, default_value_t = 1.1)]
    threshold: f64,
    /// Spacing of the convergence trace; automatic when omitted.
    #[arg(long)]
    step: Option<usize>,
}

#[derive(Args)]
struct GofArgs {
    /// Posterior samples CSV; the mode is its highest-density draw.
    #[arg(long)]
    posterior: PathBuf,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    replications: usize,
    #[arg(long, default_value_t = 1000)]
    bootstrap: usize,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    case: PathBuf,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, value_enum, default_value = "lhs")]
    sampler: Sampler,
    /// Posterior samples CSV; its mode replaces the case's erosion block.
    #[arg(long)]
    posterior: Option<PathBuf>,
    /// Draw the erosion parameters from every posterior sample instead of
    /// the mode.
    #[arg(long, requires = "posterior")]
    full_posterior: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    posterior: PathBuf,
    #[arg(long, default_value_t = 1000)]
    bootstrap: usize,
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Write the bundled dataset as `dams.csv`.
    Export,
    /// Parse and validate a dataset file.
    Check {
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(Serialize, Deserialize)]
struct CalibrationSettings {
    data: Option<PathBuf>,
    likelihood: LikelihoodOptions,
}

fn load_data(path: Option<&Path>) -> Result<DatasetFile> {
    match path {
        Some(p) => io::parse_dataset(p),
        None => Ok(io::bundled_dataset()),
    }
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn median(spec: DistSpec) -> Result<f64> {
    spec.quantile(0.5)
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<()> {
    let file = io::parse_case(&args.case)?;
    let case = DamCase {
        geometry: DamGeometry {
            height: file.dam.height,
            crest_width: median(file.dam.crest_width)?,
            embankment_slope: median(file.dam.embankment_slope)?,
            breach_angle: median(file.dam.breach_angle)?,
        },
        reservoir: ReservoirSpec {
            basin_exponent: median(file.reservoir.basin_exponent)?,
            level_drop: file.reservoir.level_drop,
            released_volume: file.reservoir.released_volume,
        },
        breach: file.breach,
    };
    let point = file.erosion;
    let pick = |v: Option<f64>, f: fn(&io::ErosionPoint) -> f64, name: &str| {
        v.or(point.as_ref().map(f))
            .ok_or_else(|| Error::Validation(format!("{name} is neither given nor in the case file")))
    };
    let erosion = ErosionParams {
        gamma: pick(args.gamma, |p| p.lambda.exp(), "gamma")?,
        nu: pick(args.nu, |p| p.nu, "nu")?,
        eta: pick(args.eta, |p| p.eta, "eta")?,
    };
    case.validate()?;
    erosion.validate()?;
    let h = simulate_with(&case, &erosion, &SimulationOptions::default())?;
    create_out(&cli.out)?;
    io::write_hydrograph(&cli.out.join("hydrograph.csv"), &h)?;
    println!(
        "peak discharge {:.6e} m3/s at {:.6e} s, final width {:.6e} m, {:?} failure",
        h.peak_discharge, h.time_to_peak, h.final_width, h.failure_mode
    );
    Ok(())
}

fn calibrate(cli: &Cli, args: &CalibrateArgs) -> Result<()> {
    let model: ResidualModel = cli.residual_model.into();
    let path = cli.out.join("chains.csv");
    let prior = Prior::default();
    let (mut archive, settings) = if args.resume {
        let mut archive = io::read_archive(&path)?;
        let settings: CalibrationSettings = archive
            .meta
            .target
            .clone()
            .map(serde_json::from_value)
            .transpose()?
            .ok_or_else(|| Error::Validation("archive lacks calibration settings".into()))?;
        if archive.meta.residual_model.as_deref() != Some(model.as_str()) {
            return Err(Error::Validation(format!(
                "archive uses residual model {:?}, not {}",
                archive.meta.residual_model,
                model.as_str()
            )));
        }
        archive.meta.budget = args.iters;
        archive.meta.target_effective = args.target_neff.or(archive.meta.target_effective);
        (archive, settings)
    } else {
        if args.likelihood.initial_draws == 0
            || args.likelihood.max_draws < args.likelihood.initial_draws
            || !(args.likelihood.precision > 0.0)
        {
            return Err(Error::Validation("likelihood draws and precision must be positive".into()));
        }
        let mut config = calibration_config(&prior, model, args.chains, args.iters, cli.seed);
        config.checkpoint_every = args.checkpoint_every;
        config.target_effective = args.target_neff;
        let settings = CalibrationSettings {
            data: args.data.clone(),
            likelihood: LikelihoodOptions {
                initial_draws: args.likelihood.initial_draws,
                max_draws: args.likelihood.max_draws,
                target_precision: args.likelihood.precision,
                ..LikelihoodOptions::default()
            },
        };
        let mut archive = new_archive(&config, model)?;
        archive.meta.target = Some(serde_json::to_value(&settings)?);
        (archive, settings)
    };
    let data = load_data(settings.data.as_deref())?;
    let target = PosteriorTarget {
        records: &data.records,
        model,
        prior,
        options: settings.likelihood,
    };
    let initial = initial_states(&prior, model, archive.chains(), archive.meta.seed)?;
    create_out(&cli.out)?;
    mcmc::run(&target, &mut archive, &initial, |a| {
        eprintln!("generation {} of {}", a.generations(), a.meta.budget);
        io::write_archive(&path, a)
    })?;
    io::write_archive(&path, &archive)?;
    Ok(())
}

fn diagnose(cli: &Cli, args: &DiagnoseArgs) -> Result<()> {
    let archive = io::read_archive(&args.archive)?;
    let opts = DiagnosticsOptions {
        threshold: args.threshold,
        step: args.step,
    };
    let report = mcmc::diagnose(&archive, &opts)?;
    let mut samples = mcmc::thin(&archive, report.burn_in, report.thinning_lag);
    samples.residual_model = archive.meta.residual_model.clone();
    create_out(&cli.out)?;
    io::write_json(&cli.out.join("diagnostics.json"), &report)?;
    io::write_samples(&cli.out.join("posterior.csv"), &samples)?;
    println!(
        "burn-in {} ({}), thinning lag {}, {} draws, acceptance {:.3}",
        report.burn_in,
        if report.converged { "converged" } else { "not converged" },
        report.thinning_lag,
        report.thinned_draws,
        report.acceptance_overall
    );
    Ok(())
}

fn samples_model(samples: &PosteriorSamples, fallback: ResidualModel) -> Result<ResidualModel> {
    match &samples.residual_model {
        Some(m) => m.parse().map_err(|_| Error::Validation(format!("unknown residual model `{m}`"))),
        None => Ok(fallback),
    }
}

fn posterior_mode(samples: &PosteriorSamples, model: ResidualModel) -> Result<Qoi> {
    let names: Vec<&str> = samples.names.iter().map(String::as_str).collect();
    if names != model.parameter_names() {
        return Err(Error::Validation(format!(
            "posterior columns {names:?} do not match the {} model",
            model.as_str()
        )));
    }
    let mode = mode_estimate(samples, 0, &mut RngStream::new(0, 0).rng())?;
    Qoi::from_slice(model, &mode.values)
}

fn gof(cli: &Cli, args: &GofArgs) -> Result<()> {
    let samples = io::read_samples(&args.posterior)?;
    let model = samples_model(&samples, cli.residual_model.into())?;
    let q = posterior_mode(&samples, model)?;
    let data = load_data(args.data.as_deref())?;
    let opts = GofOptions {
        replications: args.replications,
        ..GofOptions::default()
    };
    let records = gof_evaluate(&q, &data.records, model, RngStream::new(cli.seed, GOF_STREAM), &opts)?;
    let mut rng = RngStream::new(cli.seed, GOF_BOOTSTRAP_STREAM).rng();
    let summary = gof_summary(&records, model, args.bootstrap, &mut rng)?;
    let mut tables = Vec::new();
    for c in Component::ALL {
        tables.push((c, percentile_sequence(&records, c, args.bootstrap, &mut rng)?));
    }
    create_out(&cli.out)?;
    io::write_json(&cli.out.join("gof.json"), &summary)?;
    let mut rows = String::from("# units: r log10\nname,component,percentile,mean_r,sd_r,failures\n");
    for g in &records {
        let parts = [(Component::Discharge, Some(&g.discharge)), (Component::Width, g.width.as_ref())];
        for (c, s) in parts {
            let Some(s) = s else { continue };
            let m = breachcast::analysis::mean(&s.r);
            let sd = breachcast::analysis::variance(&s.r).sqrt();
            rows.push_str(&format!(
                "{},{},{},{},{},{}\n",
                g.name,
                c.as_str(),
                io::format_float(s.percentile),
                io::format_float(m),
                io::format_float(sd),
                g.failures
            ));
        }
    }
    io::atomic_write(&cli.out.join("gof_records.csv"), rows.as_bytes())?;
    for (c, entries) in tables {
        let mut t = String::from("# units: percentile -\nrank,name,component,percentile,q05,q95,uniform\n");
        for (i, e) in entries.iter().enumerate() {
            t.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                i,
                e.name,
                e.component.as_str(),
                io::format_float(e.percentile),
                io::format_float(e.bands.q05),
                io::format_float(e.bands.q95),
                io::format_float(e.uniform)
            ));
        }
        io::atomic_write(&cli.out.join(format!("percentiles_{}.csv", c.as_str())), t.as_bytes())?;
    }
    for c in &summary.components {
        println!("{:>9}: mean r {:+.4}, I95 {:.4}", c.component.as_str(), c.mean, c.i95);
    }
    println!("corr(r_Q, r_W) {:.4}", summary.correlation);
    Ok(())
}

fn predict(cli: &Cli, args: &PredictArgs) -> Result<()> {
    let Sampler::Lhs = args.sampler;
    if args.n < 2 {
        return Err(Error::Validation(format!("ensemble needs at least 2 members, got {}", args.n)));
    }
    let file = io::parse_case(&args.case)?;
    let erosion = match &args.posterior {
        None => None,
        Some(p) => {
            let samples = io::read_samples(p)?;
            let model = samples_model(&samples, cli.residual_model.into())?;
            if args.full_posterior {
                let draws = samples.draws.iter().map(|d| [d[0], d[1], d[2], d[3]]).collect();
                posterior_mode(&samples, model)?;
                Some(ErosionSource::Draws(draws))
            } else {
                Some(ErosionSource::from_mode(&posterior_mode(&samples, model)?))
            }
        }
    };
    let case = file.prediction_case(erosion)?;
    let e = predict_ensemble(&case, args.n, RngStream::new(cli.seed, PREDICT_STREAM), &EnsembleOptions::default())?;
    io::write_ensemble(&cli.out, &e)?;
    println!(
        "{} members: {} total, {} partial, {} failed runs",
        e.members.len(),
        e.total_failures,
        e.partial_failures,
        e.failed_runs
    );
    Ok(())
}

fn report(cli: &Cli, args: &ReportArgs) -> Result<()> {
    let samples = io::read_samples(&args.posterior)?;
    let model = samples_model(&samples, cli.residual_model.into())?;
    posterior_mode(&samples, model)?;
    let mode = mode_estimate(&samples, args.bootstrap, &mut RngStream::new(cli.seed, REPORT_STREAM).rng())?;
    let formula = transport_formula_report(mode.values[0], mode.values[2], mode.values[3]);
    create_out(&cli.out)?;
    let mut table = String::from("parameter,mode,std_error\n");
    for ((n, v), s) in mode.names.iter().zip(&mode.values).zip(&mode.std_errors) {
        table.push_str(&format!("{n},{},{}\n", io::format_float(*v), io::format_float(*s)));
        println!("{n:>8} {v:>12.5} +- {s:.5}");
    }
    io::atomic_write(&cli.out.join("mode.csv"), table.as_bytes())?;
    #[derive(Serialize)]
    struct Report<'a> {
        residual_model: &'a str,
        mode: &'a breachcast::analysis::ModeEstimate,
        transport: &'a breachcast::predict::TransportFormula,
    }
    io::write_json(
        &cli.out.join("report.json"),
        &Report {
            residual_model: model.as_str(),
            mode: &mode,
            transport: &formula,
        },
    )?;
    println!("{}", formula.text);
    Ok(())
}

fn dataset(cli: &Cli, cmd: &DatasetCommand) -> Result<()> {
    match cmd {
        DatasetCommand::Export => {
            create_out(&cli.out)?;
            io::bundled_dataset().write(&cli.out.join("dams.csv"))
        }
        DatasetCommand::Check { data } => {
            let d = io::parse_dataset(data)?;
            let q_only = d.records.iter().filter(|r| !r.has_width()).count();
            println!("{} records, {} without final width", d.records.len(), q_only);
            Ok(())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a),
        Command::Calibrate(a) => calibrate(cli, a),
        Command::Diagnose(a) => diagnose(cli, a),
        Command::Gof(a) => gof(cli, a),
        Command::Predict(a) => predict(cli, a),
        Command::Report(a) => report(cli, a),
        Command::Dataset(c) => dataset(cli, c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
