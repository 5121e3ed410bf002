//! Cost functionals over simulated workload paths: long-run average
//! (reduced and direct), infinite-horizon discounted, and finite
//! horizon.
//!
//! The per-unit-time cost of running at control u with workload X is
//! `h(u) + C(X)` plus a penalty `p dL` on regulator increase. Integrals
//! are left-endpoint Riemann sums on the simulation grid, and the
//! discounted regulator term uses the identity
//! `int e^{-at} dL = a int e^{-at} L dt` instead of a Stieltjes sum.
//! All estimators draw path i from stream `stream_offset + i`, so two
//! estimator calls sharing a config see common random numbers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fgn::{FgnGenerator, FgnScratch, TimeGrid};
use crate::rng::{fingerprint, fp_bits, SeedSpec};
use crate::skorokhod::ModelSpec;
use crate::stationary;
use crate::stats::EstimateWithError;

/// Relative tail mass at which the discounted integral is truncated:
/// T_alpha = -ln(eps) / alpha.
const DISCOUNT_TAIL_EPS: f64 = 1e-4;

/// Cost function descriptors: a restricted family closed under the
/// symbolic checks (monotonicity, convexity, growth) the optimizers
/// rely on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostFunctionSpec {
    /// Constant c >= 0.
    Constant { value: f64 },
    /// coef * x^exponent + offset.
    Power {
        coef: f64,
        exponent: f64,
        offset: f64,
    },
    /// Sum of coeffs[j] * x^j.
    Polynomial { coeffs: Vec<f64> },
    /// offset + linear * x + coef * x^exponent. The linear term may be
    /// negative; validity is judged per role below.
    AffinePlusPower {
        offset: f64,
        linear: f64,
        coef: f64,
        exponent: f64,
    },
}

impl CostFunctionSpec {
    pub fn constant(value: f64) -> Self {
        CostFunctionSpec::Constant { value }
    }

    pub fn power(coef: f64, exponent: f64, offset: f64) -> Self {
        CostFunctionSpec::Power {
            coef,
            exponent,
            offset,
        }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        CostFunctionSpec::Polynomial { coeffs }
    }

    pub fn affine_plus_power(offset: f64, linear: f64, coef: f64, exponent: f64) -> Self {
        CostFunctionSpec::AffinePlusPower {
            offset,
            linear,
            coef,
            exponent,
        }
    }

    /// The identity x, the most common holding cost.
    pub fn linear() -> Self {
        CostFunctionSpec::power(1.0, 1.0, 0.0)
    }

    /// u^2, the quadratic control cost.
    pub fn quadratic() -> Self {
        CostFunctionSpec::power(1.0, 2.0, 0.0)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CostFunctionSpec::Constant { value } => *value,
            CostFunctionSpec::Power {
                coef,
                exponent,
                offset,
            } => {
                if *exponent == 1.0 {
                    coef * x + offset
                } else if *exponent == 2.0 {
                    coef * x * x + offset
                } else {
                    coef * x.powf(*exponent) + offset
                }
            }
            CostFunctionSpec::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for &c in coeffs.iter().rev() {
                    acc = acc * x + c;
                }
                acc
            }
            CostFunctionSpec::AffinePlusPower {
                offset,
                linear,
                coef,
                exponent,
            } => {
                let pow = if *exponent == 2.0 {
                    x * x
                } else {
                    x.powf(*exponent)
                };
                offset + linear * x + coef * pow
            }
        }
    }

    pub fn is_nondecreasing(&self) -> bool {
        match self {
            CostFunctionSpec::Constant { .. } => true,
            CostFunctionSpec::Power { coef, exponent, .. } => *coef >= 0.0 && *exponent > 0.0,
            CostFunctionSpec::Polynomial { coeffs } => coeffs.iter().all(|&c| c >= 0.0),
            CostFunctionSpec::AffinePlusPower {
                linear,
                coef,
                exponent,
                ..
            } => {
                if *coef < 0.0 || *exponent <= 0.0 {
                    false
                } else if *exponent == 1.0 {
                    linear + coef >= 0.0
                } else {
                    *linear >= 0.0
                }
            }
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            CostFunctionSpec::Constant { .. } => true,
            CostFunctionSpec::Power { coef, exponent, .. } => {
                *coef == 0.0 || (*coef > 0.0 && (*exponent >= 1.0 || *exponent == 0.0))
            }
            CostFunctionSpec::Polynomial { coeffs } => coeffs.iter().all(|&c| c >= 0.0),
            CostFunctionSpec::AffinePlusPower { coef, exponent, .. } => {
                *coef == 0.0 || (*coef > 0.0 && *exponent >= 1.0)
            }
        }
    }

    pub fn is_strictly_convex(&self) -> bool {
        match self {
            CostFunctionSpec::Constant { .. } => false,
            CostFunctionSpec::Power { coef, exponent, .. } => *coef > 0.0 && *exponent > 1.0,
            CostFunctionSpec::Polynomial { coeffs } => {
                self.is_convex() && coeffs.iter().skip(2).any(|&c| c > 0.0)
            }
            CostFunctionSpec::AffinePlusPower { coef, exponent, .. } => {
                *coef > 0.0 && *exponent > 1.0
            }
        }
    }

    pub fn diverges_at_infinity(&self) -> bool {
        match self {
            CostFunctionSpec::Constant { .. } => false,
            CostFunctionSpec::Power { coef, exponent, .. } => *coef > 0.0 && *exponent > 0.0,
            CostFunctionSpec::Polynomial { coeffs } => coeffs.iter().skip(1).any(|&c| c > 0.0),
            CostFunctionSpec::AffinePlusPower {
                linear,
                coef,
                exponent,
                ..
            } => {
                if *coef > 0.0 && *exponent > 1.0 {
                    true
                } else {
                    let slope = linear + if *exponent == 1.0 { *coef } else { 0.0 };
                    slope > 0.0
                }
            }
        }
    }

    /// Growth envelope (K, gamma) with eval(x) <= K (1 + x^gamma) on
    /// x >= 0, for descriptors that admit one.
    pub fn growth_bound(&self) -> Option<(f64, f64)> {
        match self {
            CostFunctionSpec::Constant { value } => Some((value.max(0.0), 1.0)),
            CostFunctionSpec::Power {
                coef,
                exponent,
                offset,
            } => Some((coef.max(*offset).max(0.0), exponent.max(1.0))),
            CostFunctionSpec::Polynomial { coeffs } => {
                let k: f64 = coeffs.iter().map(|c| c.abs()).sum();
                Some((k, (coeffs.len().saturating_sub(1)).max(1) as f64))
            }
            CostFunctionSpec::AffinePlusPower {
                offset,
                linear,
                coef,
                exponent,
            } => Some((offset.abs() + linear.abs() + coef.abs(), exponent.max(1.0))),
        }
    }

    /// Paper-grade holding cost: nonnegative, non-decreasing,
    /// polynomial growth.
    pub fn validate_holding(&self) -> Result<()> {
        if !self.is_nondecreasing() {
            return Err(Error::precondition(format!(
                "holding cost must be non-decreasing: {self:?}"
            )));
        }
        if self.eval(0.0) < 0.0 {
            return Err(Error::precondition(format!(
                "holding cost must be nonnegative at 0: {self:?}"
            )));
        }
        Ok(())
    }

    /// Paper-grade control cost: non-decreasing, h(0) >= 0, h -> inf.
    pub fn validate_control(&self) -> Result<()> {
        if !self.is_nondecreasing() {
            return Err(Error::precondition(format!(
                "control cost must be non-decreasing: {self:?}"
            )));
        }
        if self.eval(0.0) < 0.0 {
            return Err(Error::precondition(format!(
                "control cost must satisfy h(0) >= 0: {self:?}"
            )));
        }
        if !self.diverges_at_infinity() {
            return Err(Error::precondition(format!(
                "control cost must diverge at infinity: {self:?}"
            )));
        }
        Ok(())
    }

    /// Relaxed control-cost check used by the fixed-alpha / fixed-T
    /// optimizers, where a convex non-monotone h (e.g. (u-1)^2) is a
    /// legitimate deterministic test shape: nonnegative and divergent.
    pub fn validate_control_weak(&self) -> Result<()> {
        if !self.diverges_at_infinity() {
            return Err(Error::precondition(format!(
                "control cost must diverge at infinity: {self:?}"
            )));
        }
        let min_on_grid = (0..400)
            .map(|i| self.eval(i as f64 * 0.05))
            .fold(f64::INFINITY, f64::min);
        if self.eval(0.0) < 0.0 || min_on_grid < -1e-12 {
            return Err(Error::precondition(format!(
                "control cost must be nonnegative on [0, inf): {self:?}"
            )));
        }
        Ok(())
    }
}

/// Which noise drives the simulation: fBM, or the identically-zero
/// test hook that makes every estimator expectation exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Driver {
    Fbm,
    Zero,
}

/// Monte Carlo configuration shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub n_paths: usize,
    /// Base grid step. Path estimators use it directly; the stationary
    /// sampler rescales it with the control's natural time scale.
    pub dt: f64,
    /// Horizon T for the direct / finite-horizon estimators.
    pub horizon: f64,
    pub master_seed: u64,
    /// First stream index used by this estimator call.
    #[serde(default)]
    pub stream_offset: u64,
    /// Reuse one seed bank across controls being compared.
    pub common_random_numbers: bool,
    #[serde(default = "default_driver")]
    pub driver: Driver,
}

fn default_driver() -> Driver {
    Driver::Fbm
}

impl EstimatorConfig {
    pub fn new(n_paths: usize, dt: f64, horizon: f64, master_seed: u64) -> Self {
        EstimatorConfig {
            n_paths,
            dt,
            horizon,
            master_seed,
            stream_offset: 0,
            common_random_numbers: true,
            driver: Driver::Fbm,
        }
    }

    /// Config for stationary sampling, where the horizon comes from the
    /// truncation rule rather than this struct.
    pub fn default_zu(n_samples: usize, dt: f64, master_seed: u64) -> Self {
        EstimatorConfig::new(n_samples, dt, 1.0, master_seed)
    }

    pub fn with_driver(mut self, driver: Driver) -> Self {
        self.driver = driver;
        self
    }

    pub fn with_stream_offset(mut self, offset: u64) -> Self {
        self.stream_offset = offset;
        self
    }

    pub fn with_n_paths(mut self, n_paths: usize) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::domain(format!(
                "estimator needs n_paths >= 2, got {}",
                self.n_paths
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain(format!(
                "estimator dt must be > 0, got {}",
                self.dt
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::domain(format!(
                "estimator horizon must be > 0, got {}",
                self.horizon
            )));
        }
        Ok(())
    }

    pub fn fingerprint(&self, tag: u64, u: f64) -> u64 {
        fingerprint(&[
            tag,
            self.n_paths as u64,
            fp_bits(self.dt),
            fp_bits(self.horizon),
            self.master_seed,
            self.stream_offset,
            self.driver as u64,
            fp_bits(u),
        ])
    }
}

/// Named additive components of one cost estimate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CostComponents {
    pub control: EstimateWithError,
    pub holding: EstimateWithError,
    pub regulator: EstimateWithError,
}

/// Total cost with decomposition; the mean of `value` equals the sum of
/// component means up to float roundoff.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CostEstimate {
    pub value: EstimateWithError,
    pub components: CostComponents,
    /// For truncated discounted integrals: an analytic bound on the
    /// discarded tail mass, derived from the growth envelope of C.
    pub truncation_bound: Option<f64>,
}

struct PathTotals {
    holding: f64,
    regulator_weighted: f64,
    regulator_final: f64,
}

enum IntegralMode {
    Plain,
    Discounted { alpha: f64 },
}

/// Streams every path of the config through the reflected dynamics,
/// accumulating the left-endpoint Riemann sums the estimators need.
fn run_paths(
    model: &ModelSpec,
    u: f64,
    holding: &CostFunctionSpec,
    cfg: &EstimatorConfig,
    grid: &TimeGrid,
    mode: &IntegralMode,
) -> Result<Vec<PathTotals>> {
    if !(u >= 0.0 && u.is_finite()) {
        return Err(Error::domain(format!("control must be >= 0, got {u}")));
    }
    let sigma = model.sigma.eval(u);
    let drift = model.drift.eval(u);
    let x0 = model.x0;
    let n = grid.n_steps();
    let dt = grid.dt();
    let generator = match cfg.driver {
        Driver::Fbm => Some(FgnGenerator::new(model.hurst, n, dt)?),
        Driver::Zero => None,
    };
    let decay = match mode {
        IntegralMode::Plain => 1.0,
        IntegralMode::Discounted { alpha } => (-alpha * dt).exp(),
    };

    let totals: Vec<PathTotals> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map_init(
            || (FgnScratch::default(), Vec::with_capacity(n)),
            |(scratch, buf), i| {
                match &generator {
                    Some(gen) => {
                        gen.sample_into(
                            SeedSpec::new(cfg.master_seed, cfg.stream_offset + i),
                            scratch,
                            buf,
                        );
                    }
                    None => {
                        buf.clear();
                        buf.resize(n, 0.0);
                    }
                }
                let mut net = x0;
                let mut running_max = 0.0f64; // = max(0, -x0) for x0 >= 0
                let mut discount = 1.0f64;
                let mut holding_acc = 0.0f64;
                let mut regulator_acc = 0.0f64;
                // Left endpoint k = 0..n-1.
                for &inc in buf.iter() {
                    let x = net + running_max;
                    holding_acc += discount * holding.eval(x);
                    regulator_acc += discount * running_max;
                    discount *= decay;
                    net += sigma * inc - drift * dt;
                    if -net > running_max {
                        running_max = -net;
                    }
                }
                PathTotals {
                    holding: holding_acc * dt,
                    regulator_weighted: regulator_acc * dt,
                    regulator_final: running_max,
                }
            },
        )
        .collect();
    Ok(totals)
}

fn summarize(
    per_path_control: f64,
    holding: &[f64],
    regulator: &[f64],
    fp: u64,
) -> Result<CostEstimate> {
    let totals: Vec<f64> = holding
        .iter()
        .zip(regulator)
        .map(|(h, r)| per_path_control + h + r)
        .collect();
    Ok(CostEstimate {
        value: EstimateWithError::from_samples(&totals, fp)?,
        components: CostComponents {
            control: EstimateWithError::exact(per_path_control, fp),
            holding: EstimateWithError::from_samples(holding, fp)?,
            regulator: EstimateWithError::from_samples(regulator, fp)?,
        },
        truncation_bound: None,
    })
}

/// Long-run average cost through the stationary reduction:
/// h(u) + p b(u) + G(f(u)), where only G is Monte Carlo.
pub fn ergodic_cost_reduced(
    u: f64,
    model: &ModelSpec,
    control_cost: &CostFunctionSpec,
    holding: &CostFunctionSpec,
    cfg: &EstimatorConfig,
) -> Result<CostEstimate> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::domain(format!(
            "the reduced ergodic cost needs u > 0, got {u}"
        )));
    }
    cfg.validate()?;
    let rate = crate::skorokhod::time_change_rate(model, u)?;
    let g = stationary::estimate_g(rate, holding, model.hurst, cfg)?;
    let fp = cfg.fingerprint(1, u);
    let control = EstimateWithError::exact(control_cost.eval(u), fp);
    let regulator = EstimateWithError::exact(model.penalty * model.drift.eval(u), fp);
    let value = EstimateWithError::sum(&[control, regulator, g]);
    Ok(CostEstimate {
        value,
        components: CostComponents {
            control,
            holding: g,
            regulator,
        },
        truncation_bound: None,
    })
}

/// Long-run average cost by direct time averaging:
/// h(u) + (1/T) [ int C(X) dt + p L(T) ] averaged over paths.
pub fn ergodic_cost_direct(
    u: f64,
    model: &ModelSpec,
    control_cost: &CostFunctionSpec,
    holding: &CostFunctionSpec,
    cfg: &EstimatorConfig,
) -> Result<CostEstimate> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::domain(format!(
            "the direct ergodic cost needs u > 0, got {u}"
        )));
    }
    cfg.validate()?;
    if cfg.driver == Driver::Fbm {
        let rate = crate::skorokhod::time_change_rate(model, u)?;
        let coupling_scale = rate.powf(-1.0 / (1.0 - model.hurst.value()));
        if cfg.horizon < 10.0 * coupling_scale {
            return Err(Error::precondition(format!(
                "direct ergodic averaging needs T >= {:.3} (10x the coupling scale of u = {u}), got {}",
                10.0 * coupling_scale,
                cfg.horizon
            )));
        }
    }
    let grid = TimeGrid::covering(cfg.dt, cfg.horizon)?;
    let totals = run_paths(model, u, holding, cfg, &grid, &IntegralMode::Plain)?;
    let t = grid.horizon();
    let holding_avg: Vec<f64> = totals.iter().map(|p| p.holding / t).collect();
    let regulator_avg: Vec<f64> = totals
        .iter()
        .map(|p| model.penalty * p.regulator_final / t)
        .collect();
    summarize(
        control_cost.eval(u),
        &holding_avg,
        &regulator_avg,
        cfg.fingerprint(2, u),
    )
}

/// E[L(T)] / T, which approaches b(u) as T grows.
pub fn regulator_rate(
    u: f64,
    model: &ModelSpec,
    cfg: &EstimatorConfig,
) -> Result<EstimateWithError> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::domain(format!(
            "the regulator rate needs u > 0, got {u}"
        )));
    }
    cfg.validate()?;
    let grid = TimeGrid::covering(cfg.dt, cfg.horizon)?;
    let zero = CostFunctionSpec::constant(0.0);
    let totals = run_paths(model, u, &zero, cfg, &grid, &IntegralMode::Plain)?;
    let t = grid.horizon();
    let rates: Vec<f64> = totals.iter().map(|p| p.regulator_final / t).collect();
    EstimateWithError::from_samples(&rates, cfg.fingerprint(3, u))
}

/// Infinite-horizon discounted cost
/// J_alpha = h(u)/alpha + E int e^{-at} [C(X) + alpha p L] dt,
/// truncated at T_alpha = -ln(1e-4)/alpha with a recorded tail bound.
/// Only the unit-volatility model is supported.
pub fn discounted_cost(
    u: f64,
    alpha: f64,
    model: &ModelSpec,
    control_cost: &CostFunctionSpec,
    holding: &CostFunctionSpec,
    cfg: &EstimatorConfig,
) -> Result<CostEstimate> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!(
            "discount rate must be > 0, got {alpha}"
        )));
    }
    if !model.has_unit_sigma() {
        return Err(Error::UnsupportedModel(
            "the discounted problem requires sigma(u) = 1".to_string(),
        ));
    }
    cfg.validate()?;
    let t_alpha = -(DISCOUNT_TAIL_EPS.ln()) / alpha;
    let grid = TimeGrid::covering(cfg.dt, t_alpha)?;
    let totals = run_paths(
        model,
        u,
        holding,
        cfg,
        &grid,
        &IntegralMode::Discounted { alpha },
    )?;
    let holding_int: Vec<f64> = totals.iter().map(|p| p.holding).collect();
    let regulator_int: Vec<f64> = totals
        .iter()
        .map(|p| alpha * model.penalty * p.regulator_weighted)
        .collect();
    let mut est = summarize(
        control_cost.eval(u) / alpha,
        &holding_int,
        &regulator_int,
        cfg.fingerprint(4, u),
    )?;
    est.truncation_bound = Some(discount_tail_bound(u, alpha, model, holding, grid.horizon()));
    Ok(est)
}

/// Finite-horizon cumulative cost
/// I(u, x, T) = h(u) T + p E[L(T)] + E int_0^T C(X) dt (not normalized).
pub fn finite_horizon_cost(
    u: f64,
    horizon: f64,
    model: &ModelSpec,
    control_cost: &CostFunctionSpec,
    holding: &CostFunctionSpec,
    cfg: &EstimatorConfig,
) -> Result<CostEstimate> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain(format!("horizon must be > 0, got {horizon}")));
    }
    let cfg = EstimatorConfig { horizon, ..*cfg };
    cfg.validate()?;
    let grid = TimeGrid::covering(cfg.dt, horizon)?;
    let totals = run_paths(model, u, holding, &cfg, &grid, &IntegralMode::Plain)?;
    let holding_int: Vec<f64> = totals.iter().map(|p| p.holding).collect();
    let regulator_int: Vec<f64> = totals
        .iter()
        .map(|p| model.penalty * p.regulator_final)
        .collect();
    summarize(
        control_cost.eval(u) * grid.horizon(),
        &holding_int,
        &regulator_int,
        cfg.fingerprint(5, u),
    )
}

/// Analytic bound on the truncated discounted tail
/// int_T^inf e^{-at} E[C(X_t) + alpha p L_t] dt, using the growth
/// envelope of C, the domination X_t <= 2(x + sup_{s<=t}|W_s|), and a
/// conservative numeric moment bound for the sup of |W_H| on [0, 1]
/// (its mean is below 2 for H >= 1/2, with a Gaussian upper tail).
fn discount_tail_bound(
    u: f64,
    alpha: f64,
    model: &ModelSpec,
    holding: &CostFunctionSpec,
    t_start: f64,
) -> f64 {
    let (k, gamma) = holding.growth_bound().unwrap_or((0.0, 1.0));
    let h = model.hurst.value();
    let x = model.x0;
    // m_gamma >= E[sup_{[0,1]} |W|^gamma] via mean bound 2 + Borell tail.
    let m_gamma = {
        let mut acc = 2f64.powf(gamma);
        let steps = 400;
        let z_max = 2.0 + 12.0;
        let dz = (z_max - 2.0) / steps as f64;
        for i in 0..steps {
            let z = 2.0 + (i as f64 + 0.5) * dz;
            acc += gamma * z.powf(gamma - 1.0) * (-(z - 2.0) * (z - 2.0) / 2.0).exp() * dz;
        }
        acc
    };
    let split = 2f64.powf((gamma - 1.0).max(0.0));
    // E C(X_t) <= k (1 + 2^g' ((2x)^g + 2^g m_g t^{gH})); E L_t <= x + b(u) t + 2 t^H.
    let b = model.drift.eval(u);
    let mut tail = 0.0;
    let steps = 2000;
    let t_end = t_start + 40.0 / alpha;
    let dt = (t_end - t_start) / steps as f64;
    for i in 0..steps {
        let t: f64 = t_start + (i as f64 + 0.5) * dt;
        let ex_c = k * (1.0
            + split * ((2.0 * x).powf(gamma) + 2f64.powf(gamma) * m_gamma * t.powf(gamma * h)));
        let ex_l = alpha * model.penalty * (x + b * t + 2.0 * t.powf(h));
        tail += (-alpha * t).exp() * (ex_c + ex_l) * dt;
    }
    tail
}
