use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use breachcast::io::{read_archive, write_archive, write_samples};
use breachcast::mcmc::{ArchiveMeta, ChainArchive, PosteriorSamples};
use breachcast::stochastic::RngStream;
use rand::Rng;

const ICOLD: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/icold.json");
const DAMS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/dams.csv");

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_breachcast"))
        .args(args)
        .env_remove("BREACHCAST_THREADS")
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_and_validation_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bin(&["predict", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(&["--residual-model", "lognormal", "dataset", "export"]).status.code(), Some(2));

    let out = dir.path().join("ensemble");
    let r = bin(&["predict", "--case", ICOLD, "--n", "0", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("at least 2"));
    assert!(!out.exists());

    let stale = dir.path().join("stale.json");
    std::fs::write(&stale, std::fs::read_to_string(ICOLD).unwrap().replace("case/1", "case/0")).unwrap();
    let r = bin(&["predict", "--case", s(&stale), "--n", "10", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("schema"));
}

#[test]
fn dataset_export_matches_bundled_file() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["dataset", "export", "--out", s(dir.path())]);
    assert_eq!(read(&dir.path().join("dams.csv")), read(Path::new(DAMS)));
    let out = run_ok(&["dataset", "check", "--data", DAMS]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("15 records, 1 without final width"));
}

#[test]
fn simulate_without_erosion_keeps_width() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["simulate", "--case", ICOLD, "--gamma", "0", "--out", s(dir.path())]);
    let text = std::fs::read_to_string(dir.path().join("hydrograph.csv")).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("t,Q_b,W_b,H_b,H_r"));
    let widths: Vec<&str> = lines.map(|l| l.split(',').nth(2).unwrap()).collect();
    assert!(widths.len() > 2);
    assert!(widths.iter().all(|w| *w == widths[0]));
}

#[test]
fn predict_is_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok(&["predict", "--case", ICOLD, "--n", "200", "--sampler", "lhs", "--threads", "1", "--out", s(&a)]);
    run_ok(&["predict", "--case", ICOLD, "--n", "200", "--threads", "3", "--out", s(&b)]);
    for f in ["members.csv", "bands.csv", "summary.json"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f} differs");
    }
    let members = std::fs::read_to_string(a.join("members.csv")).unwrap();
    assert_eq!(members.lines().filter(|l| !l.starts_with('#')).count(), 201);
}

fn calibrate(out: &Path, iters: &str, threads: &str, resume: bool) {
    let mut args = vec![
        "calibrate", "--chains", "4", "--iters", iters, "--initial-draws", "16", "--max-draws", "16",
        "--seed", "9", "--threads", threads, "--checkpoint-every", "2", "--out", s(out),
    ];
    if resume {
        args.push("--resume");
    }
    run_ok(&args);
}

#[test]
fn calibration_archive_is_reproducible_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    calibrate(&a, "5", "1", false);
    calibrate(&b, "5", "2", false);
    calibrate(&c, "3", "2", false);
    calibrate(&c, "5", "1", true);
    for f in ["chains.csv", "chains.json"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f} depends on threads");
        assert_eq!(read(&a.join(f)), read(&c.join(f)), "{f} differs after resume");
    }
    let archive = read_archive(&a.join("chains.csv")).unwrap();
    assert_eq!(archive.generations(), 5);
    assert_eq!(archive.meta.names.len(), 6);
    assert!((archive.meta.scale - 0.6870).abs() < 5e-5);
    let side = std::fs::read_to_string(a.join("chains.json")).unwrap();
    assert!(side.contains("\"residual_model\": \"gaussian\""));

    let r = bin(&["calibrate", "--residual-model", "zero-noise", "--resume", "--out", s(&a)]);
    assert_eq!(r.status.code(), Some(1));
}

fn synthetic_archive(dir: &Path) -> PathBuf {
    let names: Vec<String> = ["lambda", "zeta", "nu", "eta"].iter().map(|s| s.to_string()).collect();
    let meta = ArchiveMeta {
        seed: 1,
        chains: 4,
        dim: 4,
        names,
        scale: 0.84,
        jitter: vec![1e-4; 4],
        residual_model: Some("zero-noise".into()),
        budget: 300,
        checkpoint_every: 50,
        target_effective: None,
        burn_in: None,
        thinning_lag: None,
        target_reached: false,
        target: None,
    };
    let mut archive = ChainArchive::new(meta).unwrap();
    let mut rng = RngStream::new(3, 0).rng();
    for _ in 0..300 {
        let states: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                vec![
                    -8.3 + 0.3 * rng.random_range(-1.0..1.0),
                    0.8 + 0.1 * rng.random_range(-1.0..1.0),
                    4.1 + 0.2 * rng.random_range(-1.0..1.0),
                    -0.6 + 0.1 * rng.random_range(-1.0..1.0),
                ]
            })
            .collect();
        let lp: Vec<f64> = states.iter().map(|x| -(x[0] + 8.3).powi(2)).collect();
        archive.push_generation(&states, &lp, &[true, false, true, true]).unwrap();
    }
    let path = dir.join("chains.csv");
    write_archive(&path, &archive).unwrap();
    path
}

#[test]
fn diagnose_is_idempotent_and_feeds_downstream_commands() {
    let dir = tempfile::tempdir().unwrap();
    let archive = synthetic_archive(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(&["diagnose", "--archive", s(&archive), "--out", s(&a)]);
    run_ok(&["diagnose", "--archive", s(&archive), "--out", s(&b), "--threads", "2"]);
    run_ok(&["diagnose", "--archive", s(&archive), "--out", s(&a)]);
    for f in ["diagnostics.json", "posterior.csv"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f} not idempotent");
    }
    let posterior = a.join("posterior.csv");
    let report = run_ok(&["report", "--posterior", s(&posterior), "--bootstrap", "200", "--out", s(&a)]);
    let text = String::from_utf8_lossy(&report.stdout);
    assert!(text.contains("q_s = "), "{text}");
    assert!(a.join("mode.csv").exists() && a.join("report.json").exists());

    run_ok(&["gof", "--posterior", s(&posterior), "--replications", "40", "--bootstrap", "200", "--out", s(&a)]);
    for f in ["gof.json", "gof_records.csv", "percentiles_overall.csv", "percentiles_discharge.csv", "percentiles_width.csv"] {
        assert!(a.join(f).exists(), "{f} missing");
    }
    let records = std::fs::read_to_string(a.join("gof_records.csv")).unwrap();
    assert_eq!(records.lines().filter(|l| !l.starts_with('#')).count(), 1 + 15 + 14);

    let e = dir.path().join("e");
    run_ok(&["predict", "--case", ICOLD, "--n", "20", "--posterior", s(&posterior), "--full-posterior", "--out", s(&e)]);
    assert!(e.join("members.csv").exists());
}

#[test]
fn samples_from_other_model_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("posterior.csv");
    let samples = PosteriorSamples {
        names: vec!["lambda".into(), "zeta".into()],
        residual_model: Some("zero-noise".into()),
        draws: vec![vec![-8.0, 0.5]],
        log_posterior: vec![0.0],
    };
    write_samples(&path, &samples).unwrap();
    let r = bin(&["report", "--posterior", s(&path), "--out", s(dir.path())]);
    assert_eq!(r.status.code(), Some(1));
}
