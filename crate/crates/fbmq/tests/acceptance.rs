//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line (visible with `--nocapture`). Criterion 10 is excluded from the
//! default run (`--ignored`) because the prelimit convergence check is
//! slow by nature.
//!
//! Every tolerance is pinned here in code; the Monte Carlo
//! configurations were sized so each check passes with margin at the
//! fixed seeds.

use std::sync::OnceLock;

use fbmq::control::{
    abelian_check, constrained_curve, optimize_ergodic, AbelianTarget, OptimizationResult,
    SearchOptions,
};
use fbmq::costs::{ergodic_cost_direct, regulator_rate, CostFunctionSpec, EstimatorConfig};
use fbmq::onoff::{input_scaling_report, OnOffSpec};
use fbmq::stationary::{
    coupling_time, sample_zu, tail_slope, theta_star, Z0_STREAM_OFFSET,
};
use fbmq::stats;
use fbmq::{
    fbm_path, reflect, workload, HurstParameter, ModelSpec, SamplePath, SeedSpec, TimeGrid,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const ACC_SEED: u64 = 20260810;

fn hurst(v: f64) -> HurstParameter {
    HurstParameter::new(v).unwrap()
}

fn quadratic_example(penalty: f64) -> (ModelSpec, CostFunctionSpec, CostFunctionSpec) {
    (
        ModelSpec::standard(hurst(0.5), 0.0, penalty).unwrap(),
        CostFunctionSpec::quadratic(),
        CostFunctionSpec::linear(),
    )
}

/// Ergodic optima of the quadratic example (p = 1 and p = 0), shared
/// between criteria 2 and 9.
fn quadratic_optima() -> &'static (OptimizationResult, OptimizationResult) {
    static CELL: OnceLock<(OptimizationResult, OptimizationResult)> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = EstimatorConfig::default_zu(4000, 6e-4, ACC_SEED);
        let opts = SearchOptions::default();
        let (model1, h, c) = quadratic_example(1.0);
        let (model0, _, _) = quadratic_example(0.0);
        let p1 = optimize_ergodic(&model1, &h, &c, &cfg, &opts).unwrap();
        let p0 = optimize_ergodic(&model0, &h, &c, &cfg, &opts).unwrap();
        (p1, p0)
    })
}

#[test]
fn criterion_01_exponential_oracle_for_stationary_supremum() {
    // H = 1/2: Z_u is Exponential(2u). Mean within 3%, KS below 0.02,
    // 10^5 samples per control.
    let h = hurst(0.5);
    for u in [0.5, 1.0, 2.0] {
        let cfg = EstimatorConfig::default_zu(100_000, 1.2e-4, ACC_SEED);
        let set = sample_zu(u, h, &cfg).unwrap();
        let (mean, _) = stats::mean_stderr(&set.samples);
        let target = 1.0 / (2.0 * u);
        let rel_err = (mean - target).abs() / target;
        let mut samples = set.samples.clone();
        let ks = stats::ks_distance_to(&mut samples, |z| 1.0 - (-2.0 * u * z).exp());
        let pass = rel_err < 0.03 && ks < 0.02;
        println!(
            "acceptance 01 exponential-oracle u={u}: {} mean={mean:.5} (target {target:.4}, rel err {:.2}%), ks={ks:.4}",
            if pass { "PASS" } else { "FAIL" },
            100.0 * rel_err
        );
        assert!(pass);
    }
}

#[test]
fn criterion_02_ergodic_optimum_reproduction() {
    // h(u) = u^2, p = 1, C(x) = x, H = 1/2: u* = 1/2, I* = 1.75;
    // p = 0 variant: u* = 4^(-1/3).
    let (p1, p0) = quadratic_optima();
    let u_err = (p1.u_star - 0.5).abs();
    let v_err = (p1.value.mean - 1.75).abs() / 1.75;
    let u0_target = 0.25f64.powf(1.0 / 3.0);
    let u0_err = (p0.u_star - u0_target).abs();
    let pass = u_err <= 0.03 && v_err <= 0.05 && u0_err <= 0.03;
    println!(
        "acceptance 02 ergodic-optimum: {} u*={:.4} (err {u_err:.4}), I*={:.4} (rel err {:.2}%), p0 u*={:.4} (err {u0_err:.4})",
        if pass { "PASS" } else { "FAIL" },
        p1.u_star,
        p1.value.mean,
        100.0 * v_err,
        p0.u_star
    );
    assert!(pass);
}

const DYADIC_SCALE: f64 = 1.0 / 1024.0;

fn dyadic_path(rng: &mut ChaCha8Rng, len: usize) -> SamplePath {
    let grid = TimeGrid::new(0.25, len - 1).unwrap();
    let mut acc = 0i64;
    let values = (0..len)
        .map(|k| {
            if k > 0 {
                acc += rng.gen_range(-4096i64..=4096);
            }
            acc as f64 * DYADIC_SCALE
        })
        .collect();
    SamplePath::new(grid, values).unwrap()
}

fn dyadic_nondecreasing(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut acc = 0i64;
    (0..len)
        .map(|k| {
            if k > 0 {
                acc += rng.gen_range(0i64..=2048);
            }
            acc as f64 * DYADIC_SCALE
        })
        .collect()
}

#[test]
fn criterion_03_reflection_property_suite() {
    // Bound, monotonicity, convexity, minimality: exact (zero
    // tolerance) on 500 randomized dyadic paths each.
    let n_paths = 500;
    let len = 64;

    let mut rng = SeedSpec::new(ACC_SEED, 1).rng();
    for _ in 0..n_paths {
        let f = dyadic_path(&mut rng, len);
        let (gamma, _) = reflect(&f);
        let sup = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for &g in gamma.values() {
            assert!(g.abs() <= 2.0 * sup);
        }
    }

    let mut rng = SeedSpec::new(ACC_SEED, 2).rng();
    for _ in 0..n_paths {
        let g = dyadic_path(&mut rng, len);
        let eta = dyadic_nondecreasing(&mut rng, len);
        let f: Vec<f64> = g.values().iter().zip(&eta).map(|(a, b)| a + b).collect();
        let f = SamplePath::new(g.grid(), f).unwrap();
        let (gamma_f, _) = reflect(&f);
        let (gamma_g, _) = reflect(&g);
        for k in 0..len {
            assert!(gamma_f.values()[k] >= gamma_g.values()[k]);
        }
    }

    let mut rng = SeedSpec::new(ACC_SEED, 3).rng();
    for _ in 0..n_paths {
        let f = dyadic_path(&mut rng, len);
        let g = dyadic_path(&mut rng, len);
        let r = rng.gen_range(1i64..=15) as f64 / 16.0;
        let mix: Vec<f64> = f
            .values()
            .iter()
            .zip(g.values())
            .map(|(a, b)| r * a + (1.0 - r) * b)
            .collect();
        let mix = SamplePath::new(f.grid(), mix).unwrap();
        let (gamma_mix, _) = reflect(&mix);
        let (gamma_f, _) = reflect(&f);
        let (gamma_g, _) = reflect(&g);
        for k in 0..len {
            assert!(
                gamma_mix.values()[k] <= r * gamma_f.values()[k] + (1.0 - r) * gamma_g.values()[k]
            );
        }
    }

    let mut rng = SeedSpec::new(ACC_SEED, 4).rng();
    for _ in 0..n_paths {
        let phi = dyadic_path(&mut rng, len);
        let (x, l) = reflect(&phi);
        let extra = dyadic_nondecreasing(&mut rng, len);
        let eta: Vec<f64> = l.values().iter().zip(&extra).map(|(a, b)| a + b).collect();
        for k in 0..len {
            let psi = phi.values()[k] + eta[k];
            assert!(psi >= 0.0);
            assert!(psi >= x.values()[k]);
            assert!(eta[k] >= l.values()[k]);
        }
    }

    println!(
        "acceptance 03 reflection-properties: PASS bound/monotonicity/convexity/minimality exact on {n_paths} paths each"
    );
}

#[test]
fn criterion_04_regulator_rate() {
    // E L(T)/T at T = 500 within max(3 stderr, 2 T^(H-1)) of u = 1.
    for hv in [0.5, 0.7, 0.85] {
        let model = ModelSpec::standard(hurst(hv), 0.0, 0.0).unwrap();
        let cfg = EstimatorConfig::new(100, 0.01, 500.0, ACC_SEED);
        let est = regulator_rate(1.0, &model, &cfg).unwrap();
        let allowance = (3.0 * est.stderr).max(2.0 * 500f64.powf(hv - 1.0));
        let err = (est.mean - 1.0).abs();
        let pass = err < allowance;
        println!(
            "acceptance 04 regulator-rate H={hv}: {} rate={:.4} (err {err:.4}, allowance {allowance:.4})",
            if pass { "PASS" } else { "FAIL" },
            est.mean
        );
        assert!(pass);
    }
}

#[test]
fn criterion_05_coupling() {
    // H = 0.7, u = 1, x = 1, 10^3 paths: at least 99% couple, coupled
    // paths agree bit-exactly afterwards, and the mean coupling time
    // moves by < 5% when the horizon doubles.
    let h = hurst(0.7);
    let n_paths: usize = 1000;
    let (x, u) = (1.0, 1.0);
    let z_cfg = EstimatorConfig::default_zu(n_paths, 5e-3, ACC_SEED)
        .with_stream_offset(Z0_STREAM_OFFSET);
    let z0 = sample_zu(u, h, &z_cfg).unwrap().samples;

    let full_grid = TimeGrid::covering(0.005, 120.0).unwrap();
    let half_nodes = full_grid.n_steps() / 2;
    let half_grid = TimeGrid::new(full_grid.dt(), half_nodes).unwrap();

    let mut coupled_half = 0usize;
    let mut coupled_full = 0usize;
    let mut sum_half = 0.0;
    let mut sum_full = 0.0;
    for i in 0..n_paths {
        let w = fbm_path(full_grid, h, SeedSpec::new(ACC_SEED, i as u64)).unwrap();
        let w_half =
            SamplePath::new(half_grid, w.values()[..=half_nodes].to_vec()).unwrap();
        let full = coupling_time(x, u, &w, z0[i]).unwrap();
        let half = coupling_time(x, u, &w_half, z0[i]).unwrap();
        if let Some(t) = half.tau0 {
            coupled_half += 1;
            sum_half += t;
            assert_eq!(half.max_post_coupling_gap, 0.0, "path {i} gap not exact");
        }
        if let Some(t) = full.tau0 {
            coupled_full += 1;
            sum_full += t;
            assert_eq!(full.max_post_coupling_gap, 0.0, "path {i} gap not exact");
        }
    }
    let frac = coupled_half as f64 / n_paths as f64;
    let mean_half = sum_half / coupled_half as f64;
    let mean_full = sum_full / coupled_full as f64;
    let shift = (mean_full - mean_half).abs() / mean_half;
    let pass = frac >= 0.99 && shift < 0.05;
    println!(
        "acceptance 05 coupling: {} coupled={:.1}% mean tau0={mean_half:.3} (horizon doubled: {mean_full:.3}, shift {:.2}%)",
        if pass { "PASS" } else { "FAIL" },
        100.0 * frac,
        100.0 * shift
    );
    assert!(pass);
}

#[test]
fn criterion_06_tail_asymptotics() {
    // H = 1/2: fitted tail slope within 15% of -2u. H = 0.75: slope
    // negative and within 35% of -theta*(u) (logarithmic limit).
    let h05 = hurst(0.5);
    for u in [0.5, 1.0] {
        let cfg = EstimatorConfig::default_zu(30_000, 1e-3, ACC_SEED);
        let set = sample_zu(u, h05, &cfg).unwrap();
        let report = tail_slope(&set).unwrap();
        let slope = report.slope.expect("tail fit");
        let rel = (slope - report.expected).abs() / report.expected.abs();
        let pass = rel < 0.15;
        println!(
            "acceptance 06 tail-slope H=0.5 u={u}: {} slope={slope:.4} (target {:.4}, rel err {:.2}%)",
            if pass { "PASS" } else { "FAIL" },
            report.expected,
            100.0 * rel
        );
        assert!(pass);
    }

    let h75 = hurst(0.75);
    let cfg = EstimatorConfig::default_zu(30_000, 0.02, ACC_SEED);
    let set = sample_zu(1.0, h75, &cfg).unwrap();
    let report = tail_slope(&set).unwrap();
    let slope = report.slope.expect("tail fit");
    let theta = theta_star(1.0, h75).unwrap();
    let rel = (slope + theta).abs() / theta;
    let pass = slope < 0.0 && rel < 0.35;
    println!(
        "acceptance 06 tail-slope H=0.75 u=1: {} slope={slope:.4} (target {:.4}, rel err {:.2}%)",
        if pass { "PASS" } else { "FAIL" },
        -theta,
        100.0 * rel
    );
    assert!(pass);
}

#[test]
fn criterion_07_abelian_limits() {
    // Quadratic example: alpha V_alpha and V(x,T)/T approach the
    // ergodic value with shrinking deviations, final rows within 7%,
    // and the final inner optima within 0.1 of the ergodic control.
    // The reference is the closed form of the quadratic example
    // (V0 = 1.75 at u* = 1/2), so the check is not polluted by the
    // error of a Monte Carlo reference.
    let (v0, u0) = (1.75, 0.5);
    let (model, h, c) = quadratic_example(1.0);
    let cfg = EstimatorConfig::new(800, 5e-4, 1.0, ACC_SEED);
    let opts = SearchOptions::default();
    let report = abelian_check(
        0.0,
        &model,
        &h,
        &c,
        &[0.2, 0.05, 0.0125],
        &[25.0, 100.0, 400.0],
        &cfg,
        &opts,
        AbelianTarget::Optimize,
    )
    .unwrap();
    let deviations = |rows: &[fbmq::control::AbelianRow]| -> Vec<f64> {
        rows.iter().map(|r| (r.scaled_value - v0).abs()).collect()
    };
    let alpha_dev = deviations(&report.alpha_rows);
    let horizon_dev = deviations(&report.horizon_rows);
    let monotone = |d: &[f64]| d.windows(2).all(|w| w[1] <= w[0]);
    let alpha_final = report.alpha_rows.last().unwrap();
    let horizon_final = report.horizon_rows.last().unwrap();
    let pass = monotone(&alpha_dev)
        && monotone(&horizon_dev)
        && *alpha_dev.last().unwrap() <= 0.07 * v0
        && *horizon_dev.last().unwrap() <= 0.07 * v0
        && (alpha_final.u_star - u0).abs() <= 0.1
        && (horizon_final.u_star - u0).abs() <= 0.1;
    println!(
        "acceptance 07 abelian-limits: {} V0={v0} (estimated {:.4}) u*={u0} (estimated {:.4})",
        if pass { "PASS" } else { "FAIL" },
        report.ergodic_value,
        report.ergodic_u_star
    );
    for (row, dev) in report.alpha_rows.iter().zip(&alpha_dev) {
        println!(
            "  alpha={:<7} alpha*V={:.4} dev={dev:.4} u*={:.4}",
            row.parameter, row.scaled_value, row.u_star
        );
    }
    for (row, dev) in report.horizon_rows.iter().zip(&horizon_dev) {
        println!(
            "  T={:<11} V/T={:.4} dev={dev:.4} u*={:.4}",
            row.parameter, row.scaled_value, row.u_star
        );
    }
    assert!(pass);
}

#[test]
fn criterion_08_constrained_truncation() {
    // u*(m) = min(m, u0*) over ten budgets, nondecreasing, and the
    // independent grid-scan argmin over (0, m] agrees within grid
    // resolution.
    let (model, h, c) = quadratic_example(0.0);
    let cfg = EstimatorConfig::default_zu(2000, 1e-3, ACC_SEED);
    let opts = SearchOptions::default();
    let budgets: Vec<f64> = (1..=10).map(|i| 0.1 * i as f64).collect();
    let curve = constrained_curve(&model, &h, &c, &budgets, &cfg, &opts).unwrap();
    let u0 = curve[0].u0_star;
    let u0_target = 0.25f64.powf(1.0 / 3.0);
    assert!(
        (u0 - u0_target).abs() <= 0.03,
        "u0* = {u0} vs {u0_target}"
    );

    // Independent scan of the constrained objective on a fine grid.
    let scan_step = 0.025;
    let scan: Vec<(f64, f64)> = (1..=40)
        .map(|i| {
            let u = scan_step * i as f64;
            let est = fbmq::costs::ergodic_cost_reduced(u, &model, &h, &c, &cfg).unwrap();
            (u, est.value.mean)
        })
        .collect();

    let resolution = 2.5 * scan_step;
    for (i, point) in curve.iter().enumerate() {
        let m = budgets[i];
        assert_eq!(point.u_star, m.min(u0), "truncation rule at m={m}");
        if i > 0 {
            assert!(point.u_star >= curve[i - 1].u_star, "monotone at m={m}");
        }
        let scan_argmin = scan
            .iter()
            .filter(|(u, _)| *u <= m + 1e-12)
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .map(|(u, _)| *u)
            .unwrap();
        assert!(
            (scan_argmin - point.u_star).abs() <= resolution,
            "scan argmin {scan_argmin} vs u*({m}) = {} (resolution {resolution})",
            point.u_star
        );
    }
    println!(
        "acceptance 08 constrained-truncation: PASS u0*={u0:.4}, ten budgets truncate correctly, scan argmin agrees"
    );
}

#[test]
fn criterion_09_x_independence() {
    // Reduced cost and optimal control identical for x = 0 and x = 7
    // under shared seeds, exactly; direct estimates at x = 0 and x = 5
    // agree within 3 combined standard errors.
    let h = CostFunctionSpec::quadratic();
    let c = CostFunctionSpec::linear();
    let cfg = EstimatorConfig::default_zu(1000, 2e-3, ACC_SEED);
    let opts = SearchOptions::default();
    let m0 = ModelSpec::standard(hurst(0.5), 0.0, 1.0).unwrap();
    let m7 = ModelSpec::standard(hurst(0.5), 7.0, 1.0).unwrap();

    let r0 = fbmq::costs::ergodic_cost_reduced(0.5, &m0, &h, &c, &cfg).unwrap();
    let r7 = fbmq::costs::ergodic_cost_reduced(0.5, &m7, &h, &c, &cfg).unwrap();
    assert_eq!(r0.value.mean, r7.value.mean);
    assert_eq!(r0.value.stderr, r7.value.stderr);

    let o0 = optimize_ergodic(&m0, &h, &c, &cfg, &opts).unwrap();
    let o7 = optimize_ergodic(&m7, &h, &c, &cfg, &opts).unwrap();
    assert_eq!(o0.u_star, o7.u_star);
    assert_eq!(o0.value.mean, o7.value.mean);

    // Direct time averages: the x-transient of order x^2/(2uT) must sit
    // inside the Monte Carlo band.
    let zero_h = CostFunctionSpec::constant(0.0);
    let direct_cfg = EstimatorConfig::new(32, 2e-3, 2000.0, ACC_SEED);
    let d0 = ergodic_cost_direct(
        1.0,
        &ModelSpec::standard(hurst(0.5), 0.0, 0.0).unwrap(),
        &zero_h,
        &c,
        &direct_cfg,
    )
    .unwrap();
    let d5 = ergodic_cost_direct(
        1.0,
        &ModelSpec::standard(hurst(0.5), 5.0, 0.0).unwrap(),
        &zero_h,
        &c,
        &direct_cfg,
    )
    .unwrap();
    let combined = (d0.value.stderr.powi(2) + d5.value.stderr.powi(2)).sqrt();
    let gap = (d0.value.mean - d5.value.mean).abs();
    let pass = gap <= 3.0 * combined;
    println!(
        "acceptance 09 x-independence: {} reduced/optimum exactly equal; direct gap {gap:.5} vs 3*stderr {:.5}",
        if pass { "PASS" } else { "FAIL" },
        3.0 * combined
    );
    assert!(pass);
}

#[test]
#[ignore = "slow prelimit convergence check; run with --ignored"]
fn criterion_10_onoff_variance_exponent() {
    // Tail index 1.4 (H = 0.8), n = 200 sources, tau = 500: the
    // variance-growth exponent of the scaled input within 0.1 of 2H.
    let spec = OnOffSpec::heavy_traffic(1.4, 1.4, 1.0, 3.0, 200, 500.0, 1.0, 0.0).unwrap();
    let report =
        input_scaling_report(&spec, 256.0, 0.25, 16, SeedSpec::new(ACC_SEED, 0)).unwrap();
    let target = 2.0 * report.hurst;
    let err = (report.fitted_exponent - target).abs();
    let pass = err < 0.1;
    println!(
        "acceptance 10 onoff-variance-exponent: {} fitted={:.4} target={target:.2} (err {err:.4})",
        if pass { "PASS" } else { "FAIL" },
        report.fitted_exponent
    );
    for row in &report.rows {
        println!(
            "  lag={:<8} var={:.6e} windows={}",
            row.lag, row.variance, row.windows
        );
    }
    assert!(pass);
}

#[test]
fn workload_invariants_on_acceptance_paths() {
    // Complementarity and regulator monotonicity on simulated paths,
    // supporting the property suite.
    let h = hurst(0.7);
    let model = ModelSpec::standard(h, 2.0, 0.0).unwrap();
    let grid = TimeGrid::covering(0.01, 40.0).unwrap();
    for i in 0..100 {
        let w = fbm_path(grid, h, SeedSpec::new(ACC_SEED, 7000 + i)).unwrap();
        let wp = workload(&model, 1.0, &w).unwrap();
        wp.check_invariants(wp.complementarity_tol()).unwrap();
    }
}
