#![allow(dead_code)]

use breachcast::forward::{BreachSpec, DamCase, DamGeometry, ErosionParams, Hydrograph, HydrographSample, ReservoirSpec};
use rand::Rng;

/// A random admissible dam case and erosion law spanning the historical
/// dataset: small to large dams, shallow to deep initial breaches and slow
/// to fast erosion.
pub fn random_case<R: Rng + ?Sized>(rng: &mut R) -> (DamCase, ErosionParams) {
    let height = rng.random_range(5.0..60.0);
    let final_height = height * rng.random_range(0.5..1.0);
    let case = DamCase {
        geometry: DamGeometry {
            height,
            crest_width: rng.random_range(2.0..30.0),
            embankment_slope: rng.random_range(1.5..4.0),
            breach_angle: rng.random_range(45.0..90.0),
        },
        reservoir: ReservoirSpec {
            basin_exponent: rng.random_range(1.0..4.0),
            level_drop: final_height * rng.random_range(0.6..1.0),
            released_volume: 10f64.powf(rng.random_range(5.0..8.0)),
        },
        breach: BreachSpec {
            final_height,
            initial_depth_ratio: rng.random_range(0.1..0.9),
        },
    };
    let erosion = ErosionParams {
        gamma: rng.random_range(-10.0f64..-6.5).exp(),
        nu: rng.random_range(3.0..5.0),
        eta: rng.random_range(-1.0..-0.2),
    };
    (case, erosion)
}

pub fn trapezoid(samples: &[HydrographSample], f: impl Fn(&HydrographSample) -> f64) -> f64 {
    samples
        .windows(2)
        .map(|w| 0.5 * (f(&w[0]) + f(&w[1])) * (w[1].t - w[0].t))
        .sum()
}

/// Relative errors of the released-water and eroded-sediment balances.
pub fn balance_errors(case: &DamCase, h: &Hydrograph) -> (f64, f64) {
    use breachcast::forward::{eroded_volume, reservoir_volume};
    let last = h.samples.last().unwrap();
    let init = &h.initial;
    let released = init.volume - reservoir_volume(init, case.reservoir.basin_exponent, last.level);
    let outflow = trapezoid(&h.samples, |s| s.discharge);
    let water = (outflow - released).abs() / released;
    let eroded = eroded_volume(case, last.width).unwrap() - eroded_volume(case, h.samples[0].width).unwrap();
    let transported = trapezoid(&h.samples, |s| s.sediment);
    let sediment = if eroded > 0.0 {
        (transported - eroded).abs() / eroded
    } else {
        transported
    };
    (water, sediment)
}

/// Whether time, width and the breach bottom and reservoir level move
/// monotonically through the run.
pub fn monotone(h: &Hydrograph) -> bool {
    h.samples.windows(2).all(|w| {
        w[1].t >= w[0].t && w[1].width >= w[0].width && w[1].bottom <= w[0].bottom && w[1].level <= w[0].level
    })
}
