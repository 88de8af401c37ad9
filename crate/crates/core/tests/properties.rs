mod common;

use breachcast::analysis::{mode_estimate, quantile};
use breachcast::forward::{simulate, FailureMode};
use breachcast::inference::{log_prior, Qoi, ResidualModel};
use breachcast::io::{archive_to_csv, read_archive, write_archive};
use breachcast::mcmc::{metropolis_accept, psrf, ArchiveMeta, ChainArchive, PosteriorSamples};
use breachcast::stochastic::{lhs_sample, DistSpec, RngStream};
use proptest::prelude::*;

fn scalar_spec() -> impl Strategy<Value = DistSpec> {
    prop_oneof![
        (-1e3..1e3f64).prop_map(DistSpec::Fixed),
        (-50.0..50.0f64, 0.01..10.0f64).prop_map(|(mean, sd)| DistSpec::Normal { mean, sd }),
        (-5.0..5.0f64, 0.01..2.0f64).prop_map(|(location, scale)| DistSpec::LogNormal { location, scale }),
        (-50.0..50.0f64, 0.01..20.0f64).prop_map(|(lo, w)| DistSpec::Uniform { lo, hi: lo + w }),
        (-5.0..5.0f64, 0.1..3.0f64, 0.5..4.0f64).prop_map(|(mean, sd, w)| DistSpec::TruncatedNormal {
            mean,
            sd,
            lo: mean - w,
            hi: mean + 0.5 * w,
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spec_text_round_trips(spec in scalar_spec()) {
        let text = spec.to_string();
        let back: DistSpec = text.parse().unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn quantile_inverts_cdf(spec in scalar_spec(), u in 0.01..0.99f64) {
        prop_assume!(!spec.is_degenerate());
        let x = spec.quantile(u).unwrap();
        prop_assert!((spec.cdf(x).unwrap() - u).abs() < 1e-8);
    }

    #[test]
    fn lhs_has_one_draw_per_stratum(specs in prop::collection::vec(scalar_spec(), 1..4), n in 2usize..60, seed in any::<u64>()) {
        let rows = lhs_sample(&specs, n, &mut RngStream::new(seed, 0).rng()).unwrap();
        prop_assert_eq!(rows.len(), n);
        for (c, spec) in specs.iter().enumerate() {
            if spec.is_degenerate() {
                continue;
            }
            let mut hits = vec![0usize; n];
            for row in &rows {
                let u = spec.cdf(row[c]).unwrap();
                let k = ((u * n as f64 - 1e-9).floor().max(0.0) as usize).min(n - 1);
                hits[k] += 1;
            }
            prop_assert!(hits.iter().all(|&h| h == 1), "strata {:?}", hits);
        }
    }

    #[test]
    fn metropolis_never_rejects_uphill(current in -1e6..1e6f64, gain in 0.0..1e6f64, u in 0.0..1.0f64) {
        prop_assert!(metropolis_accept(current, current + gain, u));
        prop_assert!(!metropolis_accept(current, f64::NEG_INFINITY, u));
        prop_assert!(!metropolis_accept(current, f64::NAN, u));
    }

    #[test]
    fn prior_support_is_admissible(lambda in -20.0..10.0f64, zeta in -1.0..3.0f64, nu in -1.0..8.0f64, eta in -2.0..1.0f64) {
        let q = Qoi { lambda, zeta, nu, eta, sigma: None };
        let lp = log_prior(&q, ResidualModel::ZeroNoise);
        let inside = (-15.0..=5.0).contains(&lambda) && (0.0..=2.0).contains(&zeta) && nu > 0.0 && eta <= 0.0;
        prop_assert_eq!(lp.is_finite(), inside);
    }

    #[test]
    fn mode_ignores_draw_order(values in prop::collection::vec((-10.0..10.0f64, -5.0..0.0f64), 2..40), shift in 0usize..40) {
        let draws: Vec<Vec<f64>> = values.iter().map(|v| vec![v.0]).collect();
        let lp: Vec<f64> = values.iter().map(|v| v.1).collect();
        let a = PosteriorSamples { names: vec!["x".into()], residual_model: None, draws: draws.clone(), log_posterior: lp.clone() };
        let k = shift % draws.len();
        let mut d2 = draws.clone();
        let mut l2 = lp.clone();
        d2.rotate_left(k);
        l2.rotate_left(k);
        let b = PosteriorSamples { names: vec!["x".into()], residual_model: None, draws: d2, log_posterior: l2 };
        let ma = mode_estimate(&a, 0, &mut RngStream::new(0, 0).rng()).unwrap();
        let mb = mode_estimate(&b, 0, &mut RngStream::new(0, 0).rng()).unwrap();
        prop_assert_eq!(ma.values, mb.values);
    }

    #[test]
    fn quantiles_are_monotone(x in prop::collection::vec(-1e3..1e3f64, 1..100), p in 0.0..1.0f64, q in 0.0..1.0f64) {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        prop_assert!(quantile(&x, lo) <= quantile(&x, hi));
    }
}

fn archive_from(values: &[f64], chains: usize, dim: usize) -> ChainArchive {
    let meta = ArchiveMeta {
        seed: 0,
        chains,
        dim,
        names: (0..dim).map(|i| format!("p{i}")).collect(),
        scale: 0.5,
        jitter: vec![1e-3; dim],
        residual_model: None,
        budget: 0,
        checkpoint_every: 1,
        target_effective: None,
        burn_in: None,
        thinning_lag: None,
        target_reached: false,
        target: None,
    };
    let mut a = ChainArchive::new(meta).unwrap();
    for gen in values.chunks_exact(chains * dim) {
        let states: Vec<Vec<f64>> = gen.chunks_exact(dim).map(|c| c.to_vec()).collect();
        let lp: Vec<f64> = states.iter().map(|s| -s[0].abs()).collect();
        a.push_generation(&states, &lp, &vec![true; chains]).unwrap();
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn archive_csv_is_exact(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 3 * 2 * 5)) {
        let a = archive_from(&values, 3, 2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chains.csv");
        write_archive(&path, &a).unwrap();
        let b = read_archive(&path).unwrap();
        prop_assert_eq!(archive_to_csv(&a), archive_to_csv(&b));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn psrf_is_affine_invariant(seed in any::<u64>(), scale in 0.01..100.0f64, offset in -1e3..1e3f64) {
        let mut rng = RngStream::new(seed, 0).rng();
        let values: Vec<f64> = (0..4 * 2 * 40).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let moved: Vec<f64> = values.iter().map(|v| scale * v + offset).collect();
        let a = psrf(&archive_from(&values, 4, 2), 0, 40).unwrap();
        let b = psrf(&archive_from(&moved, 4, 2), 0, 40).unwrap();
        prop_assert!((a.multivariate - b.multivariate).abs() < 1e-6 * a.multivariate);
        for (x, y) in a.univariate.iter().zip(&b.univariate) {
            prop_assert!((x - y).abs() < 1e-6 * x);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forward_runs_conserve_and_stay_monotone(seed in any::<u64>()) {
        let (case, erosion) = common::random_case(&mut RngStream::new(seed, 0).rng());
        let h = simulate(&case, &erosion).unwrap();
        prop_assert!(common::monotone(&h));
        let (water, sediment) = common::balance_errors(&case, &h);
        prop_assert!(water <= 0.01, "water balance {}", water);
        prop_assert!(sediment <= 0.01, "sediment balance {}", sediment);
        prop_assert!(h.peak_discharge >= h.samples.iter().map(|s| s.discharge).fold(0.0, f64::max));
        if h.failure_mode == FailureMode::Total {
            prop_assert!(h.switch_time.is_some());
            prop_assert!(h.final_width.is_finite() && h.time_to_peak.is_finite());
        }
    }

    #[test]
    fn more_erosion_never_lowers_the_peak(seed in any::<u64>(), boost in 1.0..5.0f64) {
        let (case, erosion) = common::random_case(&mut RngStream::new(seed, 0).rng());
        let slow = simulate(&case, &erosion).unwrap();
        let mut fast_law = erosion;
        fast_law.gamma *= boost;
        let fast = simulate(&case, &fast_law).unwrap();
        prop_assert!(fast.peak_discharge >= slow.peak_discharge * (1.0 - 2e-3));
        prop_assert!(fast.final_width >= slow.final_width * (1.0 - 2e-3));
    }
}
