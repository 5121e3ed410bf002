//! One-sided reflection at zero: the regulator process and the
//! controlled workload path.
//!
//! The reflection map sends a free path f to
//!
//! ```text
//! G(f)(t) = f(t) + sup_{s<=t} (-f(s))^+
//! ```
//!
//! On a grid this is evaluated exactly with a running maximum; no Euler
//! scheme is involved, so the regulator is the minimal one by
//! construction and the complementarity condition holds to floating
//! point exactness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fgn::{HurstParameter, SamplePath};

/// Positive function of the control used for volatility and drift
/// descriptors. The supported family is closed under the symbolic
/// checks the optimizers need (positivity, behaviour at zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateFn {
    /// Constant value c > 0.
    Const { value: f64 },
    /// The identity u.
    Identity,
    /// a + b u with a >= 0, b >= 0, a + b > 0.
    Affine { intercept: f64, slope: f64 },
    /// coef * u^exponent with coef > 0, exponent > 0.
    Power { coef: f64, exponent: f64 },
}

impl RateFn {
    pub fn one() -> Self {
        RateFn::Const { value: 1.0 }
    }

    pub fn validate(&self, role: &str) -> Result<()> {
        let ok = match *self {
            RateFn::Const { value } => value > 0.0 && value.is_finite(),
            RateFn::Identity => true,
            RateFn::Affine { intercept, slope } => {
                intercept >= 0.0 && slope >= 0.0 && intercept + slope > 0.0
            }
            RateFn::Power { coef, exponent } => coef > 0.0 && exponent > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "{role} descriptor {self:?} is not positive on u > 0"
            )))
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            RateFn::Const { value } => value,
            RateFn::Identity => u,
            RateFn::Affine { intercept, slope } => intercept + slope * u,
            RateFn::Power { coef, exponent } => coef * u.powf(exponent),
        }
    }

    /// Limit at u -> 0+.
    pub fn limit_at_zero(&self) -> f64 {
        match *self {
            RateFn::Const { value } => value,
            RateFn::Identity => 0.0,
            RateFn::Affine { intercept, .. } => intercept,
            RateFn::Power { .. } => 0.0,
        }
    }
}

/// The controlled model: Hurst parameter, volatility and drift
/// descriptors, initial workload and regulator penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub hurst: HurstParameter,
    pub sigma: RateFn,
    /// Drift descriptor b(u); the plain model has b(u) = u.
    pub drift: RateFn,
    /// Initial workload x >= 0.
    pub x0: f64,
    /// Regulator penalty p >= 0.
    pub penalty: f64,
}

impl ModelSpec {
    /// sigma == 1, b(u) = u.
    pub fn standard(hurst: HurstParameter, x0: f64, penalty: f64) -> Result<Self> {
        ModelSpec::new(hurst, RateFn::one(), RateFn::Identity, x0, penalty)
    }

    pub fn new(
        hurst: HurstParameter,
        sigma: RateFn,
        drift: RateFn,
        x0: f64,
        penalty: f64,
    ) -> Result<Self> {
        sigma.validate("sigma")?;
        drift.validate("drift")?;
        if !(x0 >= 0.0 && x0.is_finite()) {
            return Err(Error::domain(format!(
                "initial workload must be >= 0, got {x0}"
            )));
        }
        if !(penalty >= 0.0 && penalty.is_finite()) {
            return Err(Error::domain(format!(
                "regulator penalty must be >= 0, got {penalty}"
            )));
        }
        Ok(ModelSpec {
            hurst,
            sigma,
            drift,
            x0,
            penalty,
        })
    }

    pub fn with_x0(mut self, x0: f64) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_penalty(mut self, penalty: f64) -> Self {
        self.penalty = penalty;
        self
    }

    pub fn has_unit_sigma(&self) -> bool {
        matches!(self.sigma, RateFn::Const { value } if value == 1.0)
    }
}

/// Workload and regulator produced by reflecting one net-input path.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadPath {
    pub workload: SamplePath,
    pub regulator: SamplePath,
    pub control: f64,
}

impl WorkloadPath {
    /// Verifies nonnegativity, monotone regulator, and discrete
    /// complementarity: the regulator may only increase at nodes where
    /// the workload sits at zero (within `tol`).
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let x = self.workload.values();
        let l = self.regulator.values();
        if l[0] < 0.0 {
            return Err(Error::domain("regulator starts negative".to_string()));
        }
        for k in 0..x.len() {
            if x[k] < 0.0 {
                return Err(Error::domain(format!("workload negative at node {k}")));
            }
            if k > 0 {
                if l[k] < l[k - 1] {
                    return Err(Error::domain(format!("regulator decreases at node {k}")));
                }
                if l[k] > l[k - 1] && x[k - 1].min(x[k]) > tol {
                    return Err(Error::domain(format!(
                        "regulator increases at node {k} with workload {}",
                        x[k - 1].min(x[k])
                    )));
                }
            }
        }
        Ok(())
    }

    /// Complementarity tolerance: floating-point slack proportional to
    /// the path scale.
    pub fn complementarity_tol(&self) -> f64 {
        let scale = self
            .workload
            .values()
            .iter()
            .chain(self.regulator.values())
            .fold(1.0f64, |m, v| m.max(v.abs()));
        1e-9 * scale
    }
}

/// Exact discrete reflection: returns (reflected path, regulator).
pub fn reflect(f: &SamplePath) -> (SamplePath, SamplePath) {
    let mut gamma = Vec::with_capacity(f.len());
    let mut regulator = Vec::with_capacity(f.len());
    let mut running = 0.0f64;
    for &v in f.values() {
        running = running.max(-v);
        gamma.push(v + running);
        regulator.push(running);
    }
    let grid = f.grid();
    (
        SamplePath::new(grid, gamma).expect("same grid"),
        SamplePath::new(grid, regulator).expect("same grid"),
    )
}

/// Workload path X = G(x - b(u) t + sigma(u) W) together with its
/// regulator; `w` is the driving noise path with w[0] = 0.
pub fn workload(model: &ModelSpec, u: f64, w: &SamplePath) -> Result<WorkloadPath> {
    if !(u >= 0.0 && u.is_finite()) {
        return Err(Error::domain(format!("control must be >= 0, got {u}")));
    }
    let sigma = model.sigma.eval(u);
    let drift = model.drift.eval(u);
    let grid = w.grid();
    let net: Vec<f64> = w
        .values()
        .iter()
        .enumerate()
        .map(|(k, &wk)| model.x0 - drift * grid.t(k) + sigma * wk)
        .collect();
    let net = SamplePath::new(grid, net)?;
    let (x, l) = reflect(&net);
    Ok(WorkloadPath {
        workload: x,
        regulator: l,
        control: u,
    })
}

/// Time-change rate f(u) = b(u) / sigma(u)^(1/H) that reduces the
/// general model to the unit-volatility one.
pub fn time_change_rate(model: &ModelSpec, u: f64) -> Result<f64> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::domain(format!(
            "time-change rate needs u > 0, got {u}"
        )));
    }
    let sigma = model.sigma.eval(u);
    let drift = model.drift.eval(u);
    Ok(drift / sigma.powf(1.0 / model.hurst.value()))
}
