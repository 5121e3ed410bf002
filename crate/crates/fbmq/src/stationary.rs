//! The stationary supremum functional Z_u, the stationary workload, the
//! coupling construction, and the cost kernel G(u) = E[C(Z_u)].
//!
//! Z_u is the all-time supremum of W_H(t) - u t. Its Monte Carlo
//! approximation here takes the maximum over the nodes of a uniform grid
//! truncated at
//!
//! ```text
//! T_max = 4 * (q_.999 / u)^(1/(1-H))
//! ```
//!
//! beyond which the drifted path is negative at the endpoint with
//! probability at least 0.999. The grid step scales with the natural
//! time scale of the control, dt_eff = dt * u^(-1/(1-H)), which keeps
//! the relative discretization bias independent of u (the grid sup
//! underestimates the continuous sup). [`zu_bias_check`] measures both
//! truncation and grid bias by doubling the horizon and halving the
//! step on pilot runs.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::{CostFunctionSpec, EstimatorConfig};
use crate::error::{Error, Result};
use crate::fgn::{FgnGenerator, FgnScratch, HurstParameter, SamplePath, TimeGrid};
use crate::rng::{fingerprint, fp_bits, SeedSpec};
use crate::stats::{self, EstimateWithError};

/// 0.999 quantile of the standard normal law.
const Q999: f64 = 3.090_232_306_167_813;

/// Horizon safety factor on top of the quantile rule.
const HORIZON_FACTOR: f64 = 4.0;

/// Stream offset separating independent draws of the stationary initial
/// condition from the driving-path streams.
pub const Z0_STREAM_OFFSET: u64 = 1 << 32;

/// A batch of independent Z_u draws plus the grid that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZuSampleSet {
    pub u: f64,
    pub hurst: HurstParameter,
    pub samples: Vec<f64>,
    pub horizon_used: f64,
    pub dt_used: f64,
    pub seed: SeedSpec,
}

impl ZuSampleSet {
    pub fn fingerprint(&self) -> u64 {
        fingerprint(&[
            fp_bits(self.u),
            fp_bits(self.hurst.value()),
            self.samples.len() as u64,
            fp_bits(self.horizon_used),
            fp_bits(self.dt_used),
            self.seed.master_seed,
            self.seed.stream_index,
        ])
    }
}

/// Outcome of the same-path coupling between the workload started at x
/// and its stationary version.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CouplingReport {
    /// First grid time at which the regulator from zero exceeds
    /// x + X*(0); `None` when the horizon was too short.
    pub tau0: Option<f64>,
    pub coupled: bool,
    /// Largest |X_x(t) - X*(t)| over nodes t >= tau0; zero exactly for
    /// coupled runs because both paths reduce to the same expression.
    pub max_post_coupling_gap: f64,
}

/// Truncation horizon T_max for the grid sup.
pub fn zu_horizon(u: f64, h: HurstParameter) -> f64 {
    HORIZON_FACTOR * (Q999 / u).powf(1.0 / (1.0 - h.value()))
}

/// Control-scaled grid step.
pub fn zu_dt(u: f64, h: HurstParameter, base_dt: f64) -> f64 {
    base_dt * u.powf(-1.0 / (1.0 - h.value()))
}

/// The grid used by [`sample_zu`] for a given control.
pub fn zu_grid(u: f64, h: HurstParameter, base_dt: f64) -> Result<TimeGrid> {
    TimeGrid::covering(zu_dt(u, h, base_dt), zu_horizon(u, h))
}

fn require_positive_control(u: f64) -> Result<()> {
    if u > 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "stationary functionals need u > 0 (the supremum diverges at u = 0), got {u}"
        )))
    }
}

/// Draws `cfg.n_paths` independent samples of the grid supremum of
/// W_H(s) - u s over [0, T_max].
pub fn sample_zu(u: f64, h: HurstParameter, cfg: &EstimatorConfig) -> Result<ZuSampleSet> {
    require_positive_control(u)?;
    cfg.validate()?;
    let grid = zu_grid(u, h, cfg.dt)?;
    sample_zu_on_grid(u, h, &grid, cfg.master_seed, cfg.stream_offset, cfg.n_paths)
}

/// Grid-pinned sampler: the primitive behind [`sample_zu`], also used
/// directly when several controls must share one grid so that pathwise
/// monotonicity and convexity in u hold exactly.
pub fn sample_zu_on_grid(
    u: f64,
    h: HurstParameter,
    grid: &TimeGrid,
    master_seed: u64,
    stream_offset: u64,
    n_samples: usize,
) -> Result<ZuSampleSet> {
    require_positive_control(u)?;
    if n_samples < 2 {
        return Err(Error::domain("need at least two Z samples".to_string()));
    }
    let samples = drifted_sup_samples(u, h, grid, master_seed, stream_offset, n_samples)?;
    Ok(ZuSampleSet {
        u,
        hurst: h,
        samples,
        horizon_used: grid.horizon(),
        dt_used: grid.dt(),
        seed: SeedSpec::new(master_seed, stream_offset),
    })
}

/// Core loop: max over grid nodes of W_H(t_k) - u t_k, one value per
/// stream. Brownian driving noise streams without materializing paths;
/// other H values draw fGN buffers through the circulant generator.
fn drifted_sup_samples(
    u: f64,
    h: HurstParameter,
    grid: &TimeGrid,
    master_seed: u64,
    stream_offset: u64,
    n_samples: usize,
) -> Result<Vec<f64>> {
    let n = grid.n_steps();
    let dt = grid.dt();
    if h.is_brownian() {
        let sqrt_dt = dt.sqrt();
        let drift_step = u * dt;
        let samples = (0..n_samples as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = SeedSpec::new(master_seed, stream_offset + i).rng();
                let mut value = 0.0f64;
                let mut best = 0.0f64;
                for _ in 0..n {
                    let g: f64 = rng.sample(StandardNormal);
                    value += g * sqrt_dt - drift_step;
                    if value > best {
                        best = value;
                    }
                }
                best
            })
            .collect();
        return Ok(samples);
    }
    let gen = FgnGenerator::new(h, n, dt)?;
    let samples = (0..n_samples as u64)
        .into_par_iter()
        .map_init(
            || (FgnScratch::default(), Vec::with_capacity(n)),
            |(scratch, buf), i| {
                gen.sample_into(SeedSpec::new(master_seed, stream_offset + i), scratch, buf);
                let mut value = 0.0f64;
                let mut best = 0.0f64;
                let drift_step = u * dt;
                for &inc in buf.iter() {
                    value += inc - drift_step;
                    if value > best {
                        best = value;
                    }
                }
                best
            },
        )
        .collect();
    Ok(samples)
}

/// Monte Carlo estimate of G(u) = E[C(Z_u)].
pub fn estimate_g(
    u: f64,
    holding: &CostFunctionSpec,
    h: HurstParameter,
    cfg: &EstimatorConfig,
) -> Result<EstimateWithError> {
    let set = sample_zu(u, h, cfg)?;
    g_from_samples(&set, holding)
}

/// G estimate over a pinned grid (common-random-number comparisons).
pub fn estimate_g_on_grid(
    u: f64,
    holding: &CostFunctionSpec,
    h: HurstParameter,
    grid: &TimeGrid,
    master_seed: u64,
    stream_offset: u64,
    n_samples: usize,
) -> Result<EstimateWithError> {
    let set = sample_zu_on_grid(u, h, grid, master_seed, stream_offset, n_samples)?;
    g_from_samples(&set, holding)
}

pub fn g_from_samples(set: &ZuSampleSet, holding: &CostFunctionSpec) -> Result<EstimateWithError> {
    let costs: Vec<f64> = set.samples.iter().map(|&z| holding.eval(z)).collect();
    EstimateWithError::from_samples(&costs, set.fingerprint())
}

/// The constant in the Weibull-type logarithmic tail of Z_u:
/// theta*(u) = u^2H / (2 H^2H (1-H)^(2(1-H))).
pub fn theta_star(u: f64, h: HurstParameter) -> Result<f64> {
    require_positive_control(u)?;
    let hv = h.value();
    Ok(u.powf(2.0 * hv) / (2.0 * hv.powf(2.0 * hv) * (1.0 - hv).powf(2.0 * (1.0 - hv))))
}

/// Tail-slope regression diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailSlopeReport {
    /// Fitted slope of log P(Z >= z) against z^(2-2H); `None` when the
    /// window left too few usable points.
    pub slope: Option<f64>,
    /// Reference value -theta*(u) the slope should approach.
    pub expected: f64,
    pub points_used: usize,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Minimum survivor count for a survival point to enter the fit.
const TAIL_MIN_COUNT: usize = 20;
const TAIL_MIN_POINTS: usize = 8;
const TAIL_GRID_POINTS: usize = 40;

/// Fits the logarithmic tail of the sample set: regresses log empirical
/// survival on z^(2-2H) over the [median, 0.995-quantile] window.
pub fn tail_slope(set: &ZuSampleSet) -> Result<TailSlopeReport> {
    if set.samples.len() < 10_000 {
        return Err(Error::precondition(format!(
            "tail fit needs at least 10^4 samples, got {}",
            set.samples.len()
        )));
    }
    let mut sorted = set.samples.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let z_lo = stats::quantile_sorted(&sorted, 0.5);
    let z_hi = stats::quantile_sorted(&sorted, 0.995);
    let expected = -theta_star(set.u, set.hurst)?;
    if !(z_hi > z_lo && z_lo > 0.0) {
        return Ok(TailSlopeReport {
            slope: None,
            expected,
            points_used: 0,
            r_squared: 0.0,
            window: (z_lo, z_hi),
        });
    }
    let n = sorted.len() as f64;
    let power = 2.0 - 2.0 * set.hurst.value();
    // Evenly spaced points in the transformed coordinate w = z^(2-2H).
    let w_lo = z_lo.powf(power);
    let w_hi = z_hi.powf(power);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..TAIL_GRID_POINTS {
        let w = w_lo + (w_hi - w_lo) * i as f64 / (TAIL_GRID_POINTS - 1) as f64;
        let z = w.powf(1.0 / power);
        let survivors = sorted.len() - sorted.partition_point(|&v| v < z);
        if survivors >= TAIL_MIN_COUNT {
            xs.push(w);
            ys.push((survivors as f64 / n).ln());
        }
    }
    if xs.len() < TAIL_MIN_POINTS {
        return Ok(TailSlopeReport {
            slope: None,
            expected,
            points_used: xs.len(),
            r_squared: 0.0,
            window: (z_lo, z_hi),
        });
    }
    let (_, slope, r2) = stats::linear_fit(&xs, &ys);
    Ok(TailSlopeReport {
        slope: Some(slope),
        expected,
        points_used: xs.len(),
        r_squared: r2,
        window: (z_lo, z_hi),
    })
}

/// Stationary workload on the grid of `w`:
/// X*(t) = W(t) - u t + max(z0, L0(t)) with L0 the regulator from zero.
pub fn stationary_path(u: f64, w: &SamplePath, z0: f64) -> Result<SamplePath> {
    require_positive_control(u)?;
    if !(z0 >= 0.0 && z0.is_finite()) {
        return Err(Error::domain(format!(
            "stationary initial value must be >= 0, got {z0}"
        )));
    }
    let grid = w.grid();
    let mut l0 = 0.0f64;
    let mut values = Vec::with_capacity(w.len());
    for (k, &wk) in w.values().iter().enumerate() {
        let net = wk - u * grid.t(k);
        l0 = l0.max(-net);
        values.push(net + z0.max(l0));
    }
    SamplePath::new(grid, values)
}

/// Runs the coupling construction on one driving path: both the
/// workload from x and the stationary path from z0 are driven by `w`,
/// and after the first time the regulator from zero exceeds x + z0 the
/// two expressions coincide identically.
pub fn coupling_time(x: f64, u: f64, w: &SamplePath, z0: f64) -> Result<CouplingReport> {
    require_positive_control(u)?;
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::domain(format!(
            "initial workload must be >= 0, got {x}"
        )));
    }
    if !(z0 >= 0.0 && z0.is_finite()) {
        return Err(Error::domain(format!(
            "stationary initial value must be >= 0, got {z0}"
        )));
    }
    let grid = w.grid();
    let threshold = x + z0;
    let mut l0 = 0.0f64;
    let mut tau0 = None;
    let mut gap = 0.0f64;
    for (k, &wk) in w.values().iter().enumerate() {
        let net = wk - u * grid.t(k);
        l0 = l0.max(-net);
        if tau0.is_none() && l0 > threshold {
            tau0 = Some(grid.t(k));
        }
        if tau0.is_some() {
            let from_x = net + x.max(l0);
            let stationary = net + z0.max(l0);
            let d = (from_x - stationary).abs();
            if d > gap {
                gap = d;
            }
        }
    }
    Ok(CouplingReport {
        tau0,
        coupled: tau0.is_some(),
        max_post_coupling_gap: gap,
    })
}

/// Result of the automated bias controls on the Z_u grid: doubling the
/// horizon and halving the step on pilot runs must leave the sample
/// mean within the stated multiples of its standard error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZuBiasReport {
    pub mean: f64,
    pub stderr: f64,
    pub horizon_shift: f64,
    pub refine_shift: f64,
    pub horizon_ok: bool,
    pub refine_ok: bool,
}

/// Pilot bias check for the horizon rule (shift under doubled T_max
/// below 1 stderr) and the grid rule (shift under halved dt below
/// 0.5 stderr). Uses `cfg.n_paths` pilot samples per variant.
pub fn zu_bias_check(u: f64, h: HurstParameter, cfg: &EstimatorConfig) -> Result<ZuBiasReport> {
    let base = sample_zu(u, h, cfg)?;
    let (mean, stderr) = stats::mean_stderr(&base.samples);

    let long_grid = TimeGrid::covering(base.dt_used, 2.0 * base.horizon_used)?;
    let long = sample_zu_on_grid(
        u,
        h,
        &long_grid,
        cfg.master_seed,
        cfg.stream_offset,
        cfg.n_paths,
    )?;
    let (mean_long, _) = stats::mean_stderr(&long.samples);

    let fine_grid = TimeGrid::covering(base.dt_used / 2.0, base.horizon_used)?;
    let fine = sample_zu_on_grid(
        u,
        h,
        &fine_grid,
        cfg.master_seed,
        cfg.stream_offset,
        cfg.n_paths,
    )?;
    let (mean_fine, _) = stats::mean_stderr(&fine.samples);

    let horizon_shift = (mean_long - mean).abs();
    let refine_shift = (mean_fine - mean).abs();
    Ok(ZuBiasReport {
        mean,
        stderr,
        horizon_shift,
        refine_shift,
        horizon_ok: horizon_shift <= stderr,
        refine_ok: refine_shift <= 0.5 * stderr.max(f64::EPSILON),
    })
}
