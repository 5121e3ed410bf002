//! Dev utility: measures grid bias and KS distance of the Z sampler
//! against the Brownian exponential oracle for a range of base steps.

use fbmq::costs::EstimatorConfig;
use fbmq::stationary::sample_zu;
use fbmq::stats;
use fbmq::HurstParameter;
use std::time::Instant;

fn main() {
    let h = HurstParameter::new(0.5).unwrap();
    let n_samples: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_000);
    for u in [0.5, 1.0, 2.0] {
        for base_dt in [4e-4, 2e-4, 1.2e-4, 8e-5] {
            let cfg = EstimatorConfig::default_zu(n_samples, base_dt, 20260810);
            let start = Instant::now();
            let set = sample_zu(u, h, &cfg).unwrap();
            let elapsed = start.elapsed().as_secs_f64();
            let (mean, stderr) = stats::mean_stderr(&set.samples);
            let target = 1.0 / (2.0 * u);
            let mut samples = set.samples.clone();
            let ks = stats::ks_distance_to(&mut samples, |z| 1.0 - (-2.0 * u * z).exp());
            println!(
                "u={u:<4} dt={base_dt:<8.1e} n_steps={:<8} mean={mean:.5} bias={:+.4}% (3stderr={:.4}%) ks={ks:.4} [{elapsed:.1}s]",
                (set.horizon_used / set.dt_used).round() as u64,
                100.0 * (mean - target) / target,
                300.0 * stderr / target,
            );
        }
    }
}
