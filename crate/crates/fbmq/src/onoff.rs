//! Superposed heavy-tailed ON-OFF sources feeding a constant-rate
//! server: the prelimit network whose scaled queue approaches the
//! fBM-driven workload model.
//!
//! Each of n sources alternates independent ON and OFF periods with
//! Pareto-tailed laws (tail index in (1, 2), so finite mean and
//! infinite variance) and sends work at unit rate while ON. Aggregate
//! input minus constant service, reflected at zero, is the queue. Under
//! the scaling `tau^{-H} n^{-1/2} X(tau t)` with
//! `H = (3 - min(tail indices)) / 2` and the heavy-traffic service rate
//! `mu = n lambda + u tau^{H-1} sqrt(n)`, the scaled drift equals u.
//!
//! Stationary phase initialization is approximated by a burn-in of
//! 10 (m_on + m_off) physical time units per source.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fgn::{HurstParameter, SamplePath, TimeGrid};
use crate::rng::SeedSpec;
use crate::skorokhod::{reflect, WorkloadPath};
use crate::stats;

const BURN_IN_PERIODS: f64 = 10.0;

/// Hurst parameter induced by the heavier of the two period tails:
/// H = (3 - min(alpha_on, alpha_off)) / 2.
pub fn hurst_from_tails(alpha_on: f64, alpha_off: f64) -> Result<HurstParameter> {
    for (name, a) in [("on", alpha_on), ("off", alpha_off)] {
        if !(a > 1.0 && a < 2.0) {
            return Err(Error::domain(format!(
                "{name}-period tail index must lie in (1, 2), got {a}"
            )));
        }
    }
    HurstParameter::new((3.0 - alpha_on.min(alpha_off)) / 2.0)
}

/// Prelimit network description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnOffSpec {
    /// Tail indices of the ON / OFF period laws, in (1, 2).
    pub alpha_on: f64,
    pub alpha_off: f64,
    /// Mean ON / OFF durations (mean_off = 0 degenerates to an
    /// always-on source, used as a deterministic check).
    pub mean_on: f64,
    pub mean_off: f64,
    pub n_sources: usize,
    /// Time-scale parameter tau.
    pub tau: f64,
    /// Constant service rate mu_{n, tau}.
    pub service_rate: f64,
    /// Initial queue in physical units.
    pub initial_queue: f64,
}

impl OnOffSpec {
    /// Spec with the heavy-traffic service rate for target drift u and
    /// a scaled initial queue x (physical initial queue is
    /// x tau^H sqrt(n)).
    #[allow(clippy::too_many_arguments)]
    pub fn heavy_traffic(
        alpha_on: f64,
        alpha_off: f64,
        mean_on: f64,
        mean_off: f64,
        n_sources: usize,
        tau: f64,
        u: f64,
        x_scaled: f64,
    ) -> Result<Self> {
        let h = hurst_from_tails(alpha_on, alpha_off)?.value();
        let n = n_sources as f64;
        let lambda = mean_on / (mean_on + mean_off);
        let spec = OnOffSpec {
            alpha_on,
            alpha_off,
            mean_on,
            mean_off,
            n_sources,
            tau,
            service_rate: n * lambda + u * tau.powf(h - 1.0) * n.sqrt(),
            initial_queue: x_scaled * tau.powf(h) * n.sqrt(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        hurst_from_tails(self.alpha_on, self.alpha_off)?;
        if !(self.mean_on > 0.0) {
            return Err(Error::domain("mean ON duration must be > 0".to_string()));
        }
        if !(self.mean_off >= 0.0) {
            return Err(Error::domain("mean OFF duration must be >= 0".to_string()));
        }
        if self.n_sources == 0 {
            return Err(Error::domain("need at least one source".to_string()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::domain("time scale tau must be > 0".to_string()));
        }
        if !(self.service_rate >= 0.0) || !(self.initial_queue >= 0.0) {
            return Err(Error::domain(
                "service rate and initial queue must be >= 0".to_string(),
            ));
        }
        Ok(())
    }

    /// Long-run ON fraction lambda = m_on / (m_on + m_off).
    pub fn load_fraction(&self) -> f64 {
        self.mean_on / (self.mean_on + self.mean_off)
    }

    pub fn hurst(&self) -> HurstParameter {
        hurst_from_tails(self.alpha_on, self.alpha_off).expect("validated")
    }

    /// Drift of the scaled queue implied by the service rate:
    /// (mu - n lambda) tau^{1-H} / sqrt(n).
    pub fn scaled_drift(&self) -> f64 {
        let h = self.hurst().value();
        let n = self.n_sources as f64;
        (self.service_rate - n * self.load_fraction()) * self.tau.powf(1.0 - h) / n.sqrt()
    }

    fn space_scale(&self) -> f64 {
        self.tau.powf(-self.hurst().value()) / (self.n_sources as f64).sqrt()
    }
}

/// Pareto variate with the prescribed mean: survival (x/x_min)^-alpha,
/// x_min = mean (alpha - 1) / alpha.
fn pareto_duration(rng: &mut impl Rng, alpha: f64, mean: f64) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let x_min = mean * (alpha - 1.0) / alpha;
    let u: f64 = rng.gen::<f64>(); // [0, 1)
    x_min * (1.0 - u).powf(-1.0 / alpha)
}

/// Accumulates per-bin ON time of one source over [0, horizon), after
/// burn-in from a randomized phase.
fn source_on_time(spec: &OnOffSpec, seed: SeedSpec, bins: &mut [f64], bin_width: f64) {
    let mut rng = seed.rng();
    let horizon = bins.len() as f64 * bin_width;
    let burn_in = BURN_IN_PERIODS * (spec.mean_on + spec.mean_off);
    let mut t = -burn_in;
    let mut on = rng.gen::<f64>() < spec.load_fraction();
    while t < horizon {
        let duration = if on {
            pareto_duration(&mut rng, spec.alpha_on, spec.mean_on)
        } else {
            pareto_duration(&mut rng, spec.alpha_off, spec.mean_off)
        };
        if on && duration > 0.0 {
            let a = t.max(0.0);
            let b = (t + duration).min(horizon);
            if b > a {
                let k0 = (a / bin_width) as usize;
                let k1 = (((b / bin_width).ceil() as usize).max(k0 + 1)).min(bins.len());
                for (k, bin) in bins.iter_mut().enumerate().take(k1).skip(k0) {
                    let lo = a.max(k as f64 * bin_width);
                    let hi = b.min((k + 1) as f64 * bin_width);
                    if hi > lo {
                        *bin += hi - lo;
                    }
                }
            }
        }
        t += duration;
        on = !on;
    }
}

/// Aggregate per-bin ON time across sources; source s draws from stream
/// `seed.stream_index + s`, summed in source order regardless of
/// scheduling.
fn aggregate_on_time(spec: &OnOffSpec, seed: SeedSpec, n_bins: usize, bin_width: f64) -> Vec<f64> {
    let per_source: Vec<Vec<f64>> = (0..spec.n_sources as u64)
        .into_par_iter()
        .map(|s| {
            let mut bins = vec![0.0; n_bins];
            source_on_time(
                spec,
                SeedSpec::new(seed.master_seed, seed.stream_index + s),
                &mut bins,
                bin_width,
            );
            bins
        })
        .collect();
    let mut total = vec![0.0; n_bins];
    for bins in &per_source {
        for (acc, v) in total.iter_mut().zip(bins) {
            *acc += v;
        }
    }
    total
}

/// Simulates the prelimit queue and returns it in scaled units: the
/// workload path of `tau^{-H} n^{-1/2} X(tau t)` on the scaled grid
/// `t = k dt_scaled`, with its regulator. The reported control is the
/// scaled drift.
pub fn simulate_onoff_queue(
    spec: &OnOffSpec,
    horizon_scaled: f64,
    dt_scaled: f64,
    seed: SeedSpec,
) -> Result<WorkloadPath> {
    spec.validate()?;
    let grid = TimeGrid::covering(dt_scaled, horizon_scaled)?;
    let n_bins = grid.n_steps();
    let bin_width = dt_scaled * spec.tau;
    let on_time = aggregate_on_time(spec, seed, n_bins, bin_width);

    let scale = spec.space_scale();
    let mut net = Vec::with_capacity(grid.len());
    let mut acc = spec.initial_queue;
    net.push(acc * scale);
    for &work in &on_time {
        acc += work - spec.service_rate * bin_width;
        net.push(acc * scale);
    }
    let net = SamplePath::new(grid, net)?;
    let (queue, regulator) = reflect(&net);
    Ok(WorkloadPath {
        workload: queue,
        regulator,
        control: spec.scaled_drift(),
    })
}

/// One lag of the input variance-growth diagnostic.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LagVariance {
    pub lag: f64,
    pub variance: f64,
    pub windows: usize,
}

/// Variance-growth report for the scaled, centered cumulative input:
/// Var over dyadic lags should grow like lag^2H.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    /// Target Hurst parameter from the period tails.
    pub hurst: f64,
    /// Scaled drift implied by the service rate (arithmetic identity
    /// check against the intended heavy-traffic drift).
    pub scaled_drift: f64,
    pub rows: Vec<LagVariance>,
    /// Log-log slope of variance against lag; compare with 2H.
    pub fitted_exponent: f64,
}

/// Estimates the variance-growth exponent of the scaled centered input
/// over dyadic lags, pooling disjoint windows across independent paths.
pub fn input_scaling_report(
    spec: &OnOffSpec,
    horizon_scaled: f64,
    dt_scaled: f64,
    n_paths: usize,
    seed: SeedSpec,
) -> Result<ScalingReport> {
    spec.validate()?;
    if n_paths == 0 {
        return Err(Error::domain("need at least one path".to_string()));
    }
    let grid = TimeGrid::covering(dt_scaled, horizon_scaled)?;
    let n_bins = grid.n_steps();
    let bin_width = dt_scaled * spec.tau;
    let scale = spec.space_scale();
    let mean_rate = spec.n_sources as f64 * spec.load_fraction();

    // Centered scaled cumulative input per path, at bin boundaries.
    let paths: Vec<Vec<f64>> = (0..n_paths as u64)
        .map(|p| {
            let stream = seed.stream_index + p * spec.n_sources as u64;
            let on_time = aggregate_on_time(
                spec,
                SeedSpec::new(seed.master_seed, stream),
                n_bins,
                bin_width,
            );
            let mut acc = 0.0;
            let mut y = Vec::with_capacity(n_bins + 1);
            y.push(0.0);
            for &work in &on_time {
                acc += work - mean_rate * bin_width;
                y.push(acc * scale);
            }
            y
        })
        .collect();

    let max_pow = {
        let mut p = 0usize;
        while (1usize << (p + 1)) <= n_bins / 8 {
            p += 1;
        }
        p
    };
    let mut rows = Vec::new();
    let mut log_lag = Vec::new();
    let mut log_var = Vec::new();
    for p in 0..=max_pow {
        let step = 1usize << p;
        let mut increments = Vec::new();
        for y in &paths {
            let mut k = 0;
            while k + step < y.len() {
                increments.push(y[k + step] - y[k]);
                k += step;
            }
        }
        if increments.len() < 8 {
            continue;
        }
        let (mean, _) = stats::mean_stderr(&increments);
        let var = increments
            .iter()
            .map(|d| (d - mean) * (d - mean))
            .sum::<f64>()
            / (increments.len() - 1) as f64;
        let lag = step as f64 * dt_scaled;
        rows.push(LagVariance {
            lag,
            variance: var,
            windows: increments.len(),
        });
        log_lag.push(lag.ln());
        log_var.push(var.ln());
    }
    if rows.len() < 3 {
        return Err(Error::precondition(
            "horizon too short for the dyadic-lag variance fit".to_string(),
        ));
    }
    let (_, slope, _) = stats::linear_fit(&log_lag, &log_var);
    Ok(ScalingReport {
        hurst: spec.hurst().value(),
        scaled_drift: spec.scaled_drift(),
        rows,
        fitted_exponent: slope,
    })
}
