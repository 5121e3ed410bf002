//! Distributional invariants of the fGN/fBM generator: statistical
//! self-similarity, stationary increments, the covariance structure,
//! and schedule-independence of parallel sampling.

use fbmq::fgn::{FgnGenerator, FgnScratch};
use fbmq::stats;
use fbmq::{fbm_covariance, fbm_path, HurstParameter, SeedSpec, TimeGrid};
use rayon::prelude::*;

/// Terminal path values over independent streams.
fn terminal_values(h: HurstParameter, grid: TimeGrid, master: u64, n: usize) -> Vec<f64> {
    let gen = FgnGenerator::new(h, grid.n_steps(), grid.dt()).unwrap();
    (0..n as u64)
        .into_par_iter()
        .map_init(
            || (FgnScratch::default(), Vec::new()),
            |(scratch, buf), i| {
                gen.sample_into(SeedSpec::new(master, i), scratch, buf);
                buf.iter().sum::<f64>()
            },
        )
        .collect()
}

#[test]
fn self_similarity_two_sample_ks() {
    // a^{-H} W(a t) at t = 1 against W(1), a = 4: same law, checked at
    // the 1% level with 10^4 samples per arm.
    let h = HurstParameter::new(0.8).unwrap();
    let n = 10_000;
    let base = TimeGrid::new(1.0 / 32.0, 32).unwrap();
    let scaled_grid = TimeGrid::new(4.0 / 32.0, 32).unwrap();
    let mut direct = terminal_values(h, base, 811, n);
    let a_pow = 4f64.powf(-h.value());
    let mut rescaled: Vec<f64> = terminal_values(h, scaled_grid, 887, n)
        .into_iter()
        .map(|w| w * a_pow)
        .collect();
    let d = stats::ks_distance_two_sample(&mut direct, &mut rescaled);
    let critical = stats::ks_two_sample_critical_1pct(n, n);
    assert!(d < critical, "KS {d} >= critical {critical}");
}

#[test]
fn stationary_increments_two_sample_ks() {
    // W(t0 + s) - W(t0) against W(s): compare the late-window increment
    // with the from-zero increment across independent paths.
    let h = HurstParameter::new(0.7).unwrap();
    let n = 10_000;
    let dt = 0.125;
    let gen = FgnGenerator::new(h, 24, dt).unwrap();
    let offset = 16; // t0 = 2.0
    let span = 8; // s = 1.0
    let (mut from_zero, mut late): (Vec<f64>, Vec<f64>) = (0..n as u64)
        .into_par_iter()
        .map_init(
            || (FgnScratch::default(), Vec::new()),
            |(scratch, buf), i| {
                gen.sample_into(SeedSpec::new(911, i), scratch, buf);
                let early: f64 = buf[..span].iter().sum();
                let late: f64 = buf[offset..offset + span].iter().sum();
                (early, late)
            },
        )
        .collect();
    let d = stats::ks_distance_two_sample(&mut from_zero, &mut late);
    let critical = stats::ks_two_sample_critical_1pct(n, n);
    assert!(d < critical, "KS {d} >= critical {critical}");
}

#[test]
fn empirical_covariance_matches_formula_up_to_lag_ten() {
    // Cov(W(t_i), W(t_j)) over nodes i, j <= 10 against the closed
    // form, within three standard errors of the covariance estimator.
    let h = HurstParameter::new(0.7).unwrap();
    let dt = 0.25;
    let grid = TimeGrid::new(dt, 10).unwrap();
    let n = 60_000;
    let paths: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            fbm_path(grid, h, SeedSpec::new(977, i))
                .unwrap()
                .values()
                .to_vec()
        })
        .collect();
    for i in 1..=10usize {
        for j in i..=10usize {
            let mut cross = 0.0;
            for p in &paths {
                cross += p[i] * p[j];
            }
            let mean_cross = cross / n as f64;
            let target = fbm_covariance(grid.t(i), grid.t(j), h).unwrap();
            // Var of the product estimator for joint Gaussians:
            // (s_ii s_jj + s_ij^2) / n.
            let s_ii = fbm_covariance(grid.t(i), grid.t(i), h).unwrap();
            let s_jj = fbm_covariance(grid.t(j), grid.t(j), h).unwrap();
            let stderr = ((s_ii * s_jj + target * target) / n as f64).sqrt();
            assert!(
                (mean_cross - target).abs() < 3.0 * stderr,
                "lag pair ({i}, {j}): {mean_cross} vs {target} (stderr {stderr})"
            );
        }
    }
}

#[test]
fn increment_autocovariance_lag_one_high_h() {
    // Sample autocovariance at lag 1 for H = 0.75, dt = 1: target
    // (2^1.5 - 2)/2 within three standard errors on 10^6 draw pairs.
    let h = HurstParameter::new(0.75).unwrap();
    let gen = FgnGenerator::new(h, 2_000, 1.0).unwrap();
    let n_paths = 500; // 500 * 1999 lag pairs
    let products: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map_init(
            || (FgnScratch::default(), Vec::new()),
            |(scratch, buf), i| {
                gen.sample_into(SeedSpec::new(991, i), scratch, buf);
                buf.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (buf.len() - 1) as f64
            },
        )
        .collect();
    let (mean, stderr) = stats::mean_stderr(&products);
    let target = 0.5 * (2f64.powf(1.5) - 2.0);
    assert!(
        (mean - target).abs() < 3.0 * stderr,
        "lag-1 autocovariance {mean} vs {target} (stderr {stderr})"
    );
}

#[test]
fn parallel_and_sequential_ensembles_are_identical() {
    let h = HurstParameter::new(0.75).unwrap();
    let grid = TimeGrid::new(0.1, 256).unwrap();
    let run = |threads: usize| -> Vec<f64> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| terminal_values(h, grid, 1001, 512))
    };
    let sequential = run(1);
    let parallel = run(8);
    assert_eq!(sequential, parallel);
}

#[test]
fn brownian_path_variance_at_unit_time() {
    // H = 1/2, dt = 0.01: Var W(1) = 1 within three standard errors.
    let h = HurstParameter::new(0.5).unwrap();
    let grid = TimeGrid::new(0.01, 100).unwrap();
    let squares: Vec<f64> = terminal_values(h, grid, 1013, 100_000)
        .into_iter()
        .map(|w| w * w)
        .collect();
    let (mean, stderr) = stats::mean_stderr(&squares);
    assert!(
        (mean - 1.0).abs() < 3.0 * stderr,
        "Var = {mean}, stderr {stderr}"
    );
}
