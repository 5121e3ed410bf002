//! Dev utility: precision of the optimizers and the tail fit at
//! acceptance-scale configurations.

use fbmq::control::{optimize_discounted, optimize_ergodic, optimize_finite_horizon, SearchOptions};
use fbmq::costs::{CostFunctionSpec, EstimatorConfig};
use fbmq::stationary::{sample_zu, tail_slope};
use fbmq::{HurstParameter, ModelSpec};
use std::time::Instant;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "all".to_string());
    let h05 = HurstParameter::new(0.5).unwrap();
    let quad = CostFunctionSpec::quadratic();
    let lin = CostFunctionSpec::linear();
    let opts = SearchOptions::default();

    if which == "all" || which == "ergodic" {
        for seed in [1, 2, 3] {
            for (n, dt) in [(4000usize, 1e-3), (6000, 1e-3)] {
                let cfg = EstimatorConfig::default_zu(n, dt, seed);
                let start = Instant::now();
                let model = ModelSpec::standard(h05, 0.0, 1.0).unwrap();
                let r1 = optimize_ergodic(&model, &quad, &lin, &cfg, &opts).unwrap();
                let model0 = ModelSpec::standard(h05, 0.0, 0.0).unwrap();
                let r0 = optimize_ergodic(&model0, &quad, &lin, &cfg, &opts).unwrap();
                println!(
                    "seed={seed} n={n} dt={dt:.0e}: p1 u*={:.4} (err {:+.4}) I*={:.4} (err {:+.2}%) | p0 u*={:.4} (err {:+.4}) [{:.0}s, {} probes]",
                    r1.u_star,
                    r1.u_star - 0.5,
                    r1.value.mean,
                    100.0 * (r1.value.mean - 1.75) / 1.75,
                    r0.u_star,
                    r0.u_star - 0.25f64.powf(1.0 / 3.0),
                    start.elapsed().as_secs_f64(),
                    r1.probes.len() + r0.probes.len(),
                );
            }
        }
    }

    if which == "all" || which == "tail" {
        for (hv, u, n, dt) in [(0.75, 1.0, 30_000usize, 0.02), (0.75, 1.0, 30_000, 0.01)] {
            let h = HurstParameter::new(hv).unwrap();
            let cfg = EstimatorConfig::default_zu(n, dt, 99);
            let start = Instant::now();
            let set = sample_zu(u, h, &cfg).unwrap();
            let report = tail_slope(&set).unwrap();
            println!(
                "tail H={hv} u={u} n={n} dt={dt}: slope={:.4} expected={:.4} rel_err={:+.1}% r2={:.4} [{:.0}s]",
                report.slope.unwrap(),
                report.expected,
                100.0 * (report.slope.unwrap() - report.expected) / report.expected.abs(),
                report.r_squared,
                start.elapsed().as_secs_f64(),
            );
        }
    }

    if which == "all" || which == "abelian" {
        let model = ModelSpec::standard(h05, 0.0, 1.0).unwrap();
        let start = Instant::now();
        let cfg = EstimatorConfig::new(400, 5e-4, 1.0, 7);
        let r = optimize_discounted(0.0, 0.0125, &model, &quad, &lin, &cfg, &opts).unwrap();
        println!(
            "discounted alpha=0.0125: u*={:.4} alphaV={:.4} (V0=1.75) [{:.0}s {} probes]",
            r.u_star,
            0.0125 * r.value.mean,
            start.elapsed().as_secs_f64(),
            r.probes.len()
        );
        let start = Instant::now();
        let r = optimize_finite_horizon(0.0, 400.0, &model, &quad, &lin, &cfg, &opts).unwrap();
        println!(
            "finite T=400: u*={:.4} V/T={:.4} [{:.0}s {} probes]",
            r.u_star,
            r.value.mean / 400.0,
            start.elapsed().as_secs_f64(),
            r.probes.len()
        );
    }
}
