//! Declarative experiment configuration: one TOML file drives every
//! subcommand. The file round-trips losslessly through serde, and
//! dotted-path overrides are applied to the parsed value tree before
//! deserialization.

use serde::{Deserialize, Serialize};

use fbmq::control::SearchOptions;
use fbmq::costs::{CostFunctionSpec, Driver, EstimatorConfig};
use fbmq::skorokhod::RateFn;
use fbmq::{HurstParameter, ModelSpec};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub label: String,
    pub output_dir: String,
    pub model: ModelSection,
    pub cost: CostSection,
    pub estimator: EstimatorSection,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub task: TaskSection,
    #[serde(default)]
    pub onoff: Option<OnOffSection>,
    #[serde(default)]
    pub selftest: SelftestSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub hurst: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub penalty: f64,
    #[serde(default = "default_sigma")]
    pub sigma: RateFn,
    #[serde(default = "default_drift")]
    pub drift: RateFn,
}

fn default_sigma() -> RateFn {
    RateFn::Const { value: 1.0 }
}

fn default_drift() -> RateFn {
    RateFn::Identity
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    /// Control cost h(u).
    pub control: CostFunctionSpec,
    /// Holding cost C(x).
    pub holding: CostFunctionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub n_paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub stream_offset: u64,
    #[serde(default = "default_true")]
    pub common_random_numbers: bool,
    #[serde(default = "default_driver")]
    pub driver: Driver,
}

fn default_true() -> bool {
    true
}

fn default_driver() -> Driver {
    Driver::Fbm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub u_lo: f64,
    pub u_hi: f64,
    pub scan_points: usize,
    pub tol: f64,
}

impl Default for SearchSection {
    fn default() -> Self {
        let d = SearchOptions::default();
        SearchSection {
            u_lo: d.u_lo,
            u_hi: d.u_hi,
            scan_points: d.scan_points,
            tol: d.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskSection {
    /// Control for single-control subcommands (simulate, zu,
    /// discounted, finite with fixed u rows).
    pub u: Option<f64>,
    /// Discount rate for `discounted`.
    pub alpha: Option<f64>,
    /// Horizon override for `finite` (defaults to estimator.horizon).
    pub horizon: Option<f64>,
    /// Control grid for cost curves.
    pub u_grid: Vec<f64>,
    /// Budget grid for `constrained`.
    pub m_grid: Vec<f64>,
    /// Decreasing discount sequence for `abelian`.
    pub alpha_seq: Vec<f64>,
    /// Increasing horizon sequence for `abelian`.
    pub horizon_seq: Vec<f64>,
    /// Skip the inner optimization in `abelian` and track this control.
    pub fixed_u: Option<f64>,
    /// Number of sample paths emitted by `simulate`.
    pub n_paths_emit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnOffSection {
    pub alpha_on: f64,
    pub alpha_off: f64,
    pub mean_on: f64,
    pub mean_off: f64,
    pub n_sources: usize,
    pub tau: f64,
    /// Target drift of the scaled queue (sets the service rate).
    pub target_drift: f64,
    #[serde(default)]
    pub x_scaled: f64,
    pub horizon_scaled: f64,
    pub dt_scaled: f64,
    #[serde(default = "default_onoff_paths")]
    pub n_paths: usize,
}

fn default_onoff_paths() -> usize {
    8
}

/// Oracle constants and tolerances for `selftest`; every number used
/// by the check lives here, not in code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelftestSection {
    pub u_star: f64,
    pub value: f64,
    pub u_star_tol: f64,
    pub value_rel_tol: f64,
    pub n_paths: usize,
    pub dt: f64,
}

impl Default for SelftestSection {
    fn default() -> Self {
        SelftestSection {
            u_star: 0.5,
            value: 1.75,
            u_star_tol: 0.05,
            value_rel_tol: 0.07,
            n_paths: 2000,
            dt: 1e-3,
        }
    }
}

impl ExperimentConfig {
    /// Parses the file, applies `key.path=value` overrides, validates.
    pub fn load(path: &str, overrides: &[String]) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {path}: {e}")))?;
        let mut tree: toml::Table = text
            .parse()
            .map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
        for rule in overrides {
            apply_override(&mut tree, rule)?;
        }
        let canonical = toml::to_string(&tree)
            .map_err(|e| CliError::Config(format!("config re-serialization failed: {e}")))?;
        let config: ExperimentConfig = tree
            .try_into()
            .map_err(|e| CliError::Config(format!("config error: {e}")))?;
        config.validate()?;
        Ok((config, canonical))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.label.is_empty() {
            return Err(CliError::Config("label: must not be empty".to_string()));
        }
        HurstParameter::new(self.model.hurst)
            .map_err(|e| CliError::Config(format!("model.hurst: {e}")))?;
        self.model_spec()
            .map_err(|e| CliError::Config(format!("model: {e}")))?;
        self.estimator_config()
            .validate()
            .map_err(|e| CliError::Config(format!("estimator: {e}")))?;
        let s = &self.search;
        self.search_options()
            .validate()
            .map_err(|e| CliError::Config(format!("search ({}, {}): {e}", s.u_lo, s.u_hi)))?;
        if let Some(oo) = &self.onoff {
            crate::onoff_spec(oo).map_err(|e| CliError::Config(format!("onoff: {e}")))?;
        }
        Ok(())
    }

    pub fn model_spec(&self) -> fbmq::Result<ModelSpec> {
        ModelSpec::new(
            HurstParameter::new(self.model.hurst)?,
            self.model.sigma,
            self.model.drift,
            self.model.x0,
            self.model.penalty,
        )
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig {
            n_paths: self.estimator.n_paths,
            dt: self.estimator.dt,
            horizon: self.estimator.horizon,
            master_seed: self.estimator.master_seed,
            stream_offset: self.estimator.stream_offset,
            common_random_numbers: self.estimator.common_random_numbers,
            driver: self.estimator.driver,
        }
    }

    pub fn search_options(&self) -> SearchOptions {
        SearchOptions {
            u_lo: self.search.u_lo,
            u_hi: self.search.u_hi,
            scan_points: self.search.scan_points,
            tol: self.search.tol,
        }
    }
}

/// Applies one `dotted.path=value` override to the TOML tree.
fn apply_override(tree: &mut toml::Table, rule: &str) -> Result<(), CliError> {
    let (path, raw_value) = rule
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{rule}' is not of the form key=value")))?;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(CliError::Config(format!("override path '{path}' is empty")));
    }
    // Parse the right-hand side as a TOML value (numbers, booleans,
    // arrays, inline tables); bare words fall back to strings.
    let value: toml::Value = format!("v = {raw_value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw_value.to_string()));
    let mut node = tree;
    for seg in &segments[..segments.len() - 1] {
        node = node
            .entry(seg.to_string())
            .or_insert(toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                CliError::Config(format!("override path '{path}': '{seg}' is not a table"))
            })?;
    }
    node.insert(segments[segments.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const EXAMPLE: &str = r#"
label = "quadratic"
output_dir = "runs"

[model]
hurst = 0.5
x0 = 0.0
penalty = 1.0
sigma = { kind = "const", value = 1.0 }
drift = { kind = "identity" }

[cost]
control = { kind = "power", coef = 1.0, exponent = 2.0, offset = 0.0 }
holding = { kind = "power", coef = 1.0, exponent = 1.0, offset = 0.0 }

[estimator]
n_paths = 500
dt = 0.002
horizon = 100.0
master_seed = 7
"#;

    #[test]
    fn example_config_parses_and_round_trips() {
        let tree: toml::Table = EXAMPLE.parse().unwrap();
        let config: ExperimentConfig = tree.try_into().unwrap();
        config.validate().unwrap();
        let text = toml::to_string(&config).unwrap();
        let reparsed: ExperimentConfig = text.parse::<toml::Table>().unwrap().try_into().unwrap();
        assert_eq!(config, reparsed);
    }

    #[test]
    fn override_replaces_scalar() {
        let mut tree: toml::Table = EXAMPLE.parse().unwrap();
        apply_override(&mut tree, "model.hurst=0.75").unwrap();
        apply_override(&mut tree, "task.u=2.0").unwrap();
        let config: ExperimentConfig = tree.try_into().unwrap();
        assert_eq!(config.model.hurst, 0.75);
        assert_eq!(config.task.u, Some(2.0));
    }

    #[test]
    fn missing_field_is_named() {
        let broken = EXAMPLE.replace("hurst = 0.5", "");
        let tree: toml::Table = broken.parse().unwrap();
        let err = tree.try_into::<ExperimentConfig>().unwrap_err();
        assert!(err.to_string().contains("hurst"), "{err}");
    }

    #[test]
    fn out_of_range_hurst_is_rejected_with_field_name() {
        let mut tree: toml::Table = EXAMPLE.parse().unwrap();
        apply_override(&mut tree, "model.hurst=1.5").unwrap();
        let config: ExperimentConfig = tree.try_into().unwrap();
        let err = config.validate().unwrap_err();
        assert!(format!("{err}").contains("model.hurst"));
    }
}
