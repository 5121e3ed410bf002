//! Batch front door for the fbmq toolkit: declarative TOML experiment
//! configs, one subcommand per operation family, deterministic result
//! tables plus a run manifest.
//!
//! Exit codes: 0 success, 1 selftest assertion failure, 2 config or
//! validation error, 3 estimator precondition failure, 4 I/O error.

mod config;
mod output;

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use fbmq::control::{
    abelian_check, constrained_curve, optimize_discounted, optimize_ergodic,
    optimize_finite_horizon, AbelianTarget,
};
use fbmq::costs::{
    discounted_cost, ergodic_cost_reduced, finite_horizon_cost, CostEstimate,
};
use fbmq::onoff::{input_scaling_report, simulate_onoff_queue, OnOffSpec};
use fbmq::stationary::{sample_zu, tail_slope, zu_bias_check};
use fbmq::{fbm_path, workload, SeedSpec, TimeGrid};

use config::{ExperimentConfig, OnOffSection};
use output::{cell, cell_opt, sha256_hex, Manifest, Table};

#[derive(Debug)]
pub enum CliError {
    /// Config parse or validation problem (exit 2).
    Config(String),
    /// Estimator precondition failure (exit 3).
    Precondition(String),
    /// Filesystem problem (exit 4).
    Io(String),
    /// A selftest assertion did not hold (exit 1).
    SelftestFailed(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::SelftestFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Precondition(m) => write!(f, "precondition error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::SelftestFailed(m) => write!(f, "selftest failed: {m}"),
        }
    }
}

impl From<fbmq::Error> for CliError {
    fn from(e: fbmq::Error) -> Self {
        match e {
            // Domain errors at run time come from config-supplied values.
            fbmq::Error::Domain(m) => CliError::Config(m),
            fbmq::Error::Precondition(m) => CliError::Precondition(m),
            fbmq::Error::UnsupportedModel(m) => CliError::Precondition(m),
            e @ fbmq::Error::BracketFailure { .. } => CliError::Precondition(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "fbmq", version, about = "Reflected fBM queue simulation and control")]
struct Cli {
    /// Path to the experiment config (TOML).
    #[arg(long, global = true, default_value = "experiment.toml")]
    config: String,
    /// Dotted-path config overrides, e.g. --set model.hurst=0.75
    #[arg(long = "set", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Emit simulated workload and regulator paths.
    Simulate,
    /// Sample the stationary supremum and fit its tail.
    Zu,
    /// Ergodic cost curve plus the ergodic optimum.
    Ergodic,
    /// Constrained optimum across the budget grid.
    Constrained,
    /// Discounted cost curve plus its optimum.
    Discounted,
    /// Finite-horizon cost curve plus its optimum.
    Finite,
    /// Abelian-limit sweep over discount rates and horizons.
    Abelian,
    /// ON-OFF prelimit queue and input variance-growth report.
    Onoff,
    /// Oracle checks on the quadratic example.
    Selftest,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Zu => "zu",
            Command::Ergodic => "ergodic",
            Command::Constrained => "constrained",
            Command::Discounted => "discounted",
            Command::Finite => "finite",
            Command::Abelian => "abelian",
            Command::Onoff => "onoff",
            Command::Selftest => "selftest",
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("FBMQ_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match run(&cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let (config, canonical) = ExperimentConfig::load(&cli.config, &cli.overrides)?;
    let mut deferred: Option<CliError> = None;
    let table = match cli.command {
        Command::Simulate => cmd_simulate(&config)?,
        Command::Zu => cmd_zu(&config)?,
        Command::Ergodic => cmd_ergodic(&config)?,
        Command::Constrained => cmd_constrained(&config)?,
        Command::Discounted => cmd_discounted(&config)?,
        Command::Finite => cmd_finite(&config)?,
        Command::Abelian => cmd_abelian(&config)?,
        Command::Onoff => cmd_onoff(&config)?,
        Command::Selftest => {
            let (table, failure) = cmd_selftest(&config)?;
            deferred = failure;
            table
        }
    };
    let manifest = Manifest {
        subcommand: cli.command.name().to_string(),
        label: config.label.clone(),
        config_sha256: sha256_hex(&canonical),
        master_seed: config.estimator.master_seed,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
        created_unix_secs: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let dir = PathBuf::from(&config.output_dir);
    output::write_run(&dir, &config.label, cli.command.name(), &table, &manifest)?;
    println!(
        "{}: {} rows -> {}/{}_{}.tsv",
        cli.command.name(),
        table.len(),
        config.output_dir,
        config.label,
        cli.command.name()
    );
    match deferred {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn require_u(config: &ExperimentConfig, sub: &str) -> Result<f64, CliError> {
    config
        .task
        .u
        .ok_or_else(|| CliError::Config(format!("task.u: required by `{sub}`")))
}

fn u_grid(config: &ExperimentConfig) -> Result<Vec<f64>, CliError> {
    if config.task.u_grid.is_empty() {
        return Err(CliError::Config(
            "task.u_grid: required by this subcommand".to_string(),
        ));
    }
    Ok(config.task.u_grid.clone())
}

fn curve_row(kind: &str, u: f64, est: &CostEstimate, seed: u64, offset: u64) -> Vec<String> {
    vec![
        kind.to_string(),
        cell(u),
        cell(est.value.mean),
        cell(est.value.stderr),
        cell(est.components.control.mean),
        cell(est.components.holding.mean),
        cell(est.components.regulator.mean),
        cell(seed),
        cell(offset),
    ]
}

const CURVE_COLUMNS: [&str; 9] = [
    "record",
    "u",
    "value",
    "stderr",
    "control_component",
    "holding_component",
    "regulator_component",
    "master_seed",
    "stream_offset",
];

fn cmd_simulate(config: &ExperimentConfig) -> Result<Table, CliError> {
    let model = config.model_spec()?;
    let cfg = config.estimator_config();
    let u = require_u(config, "simulate")?;
    let n_emit = config.task.n_paths_emit.max(1);
    let grid = TimeGrid::covering(cfg.dt, cfg.horizon)?;
    let mut table = Table::new(&[
        "path", "stream", "k", "t", "noise", "workload", "regulator", "master_seed",
    ]);
    for p in 0..n_emit as u64 {
        let stream = cfg.stream_offset + p;
        let w = fbm_path(grid, model.hurst, SeedSpec::new(cfg.master_seed, stream))?;
        let wp = workload(&model, u, &w)?;
        for k in 0..w.len() {
            table.push(vec![
                cell(p),
                cell(stream),
                cell(k),
                cell(w.t(k)),
                cell(w.values()[k]),
                cell(wp.workload.values()[k]),
                cell(wp.regulator.values()[k]),
                cell(cfg.master_seed),
            ]);
        }
    }
    Ok(table)
}

fn cmd_zu(config: &ExperimentConfig) -> Result<Table, CliError> {
    let model = config.model_spec()?;
    let cfg = config.estimator_config();
    let u = require_u(config, "zu")?;
    let set = sample_zu(u, model.hurst, &cfg)?;
    let (mean, stderr) = fbmq::stats::mean_stderr(&set.samples);
    let mut sorted = set.samples.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tail = tail_slope(&set)?;
    let bias = zu_bias_check(u, model.hurst, &cfg.with_n_paths(cfg.n_paths.min(2000)))?;
    let mut table = Table::new(&[
        "u",
        "n_samples",
        "mean",
        "stderr",
        "q50",
        "q90",
        "q99",
        "q995",
        "dt_used",
        "horizon_used",
        "tail_slope",
        "tail_expected",
        "tail_r2",
        "horizon_bias_ok",
        "refine_bias_ok",
        "master_seed",
        "stream_offset",
    ]);
    table.push(vec![
        cell(u),
        cell(set.samples.len()),
        cell(mean),
        cell(stderr),
        cell(fbmq::stats::quantile_sorted(&sorted, 0.5)),
        cell(fbmq::stats::quantile_sorted(&sorted, 0.9)),
        cell(fbmq::stats::quantile_sorted(&sorted, 0.99)),
        cell(fbmq::stats::quantile_sorted(&sorted, 0.995)),
        cell(set.dt_used),
        cell(set.horizon_used),
        cell_opt(tail.slope),
        cell(tail.expected),
        cell(tail.r_squared),
        cell(bias.horizon_ok),
        cell(bias.refine_ok),
        cell(cfg.master_seed),
        cell(cfg.stream_offset),
    ]);
    Ok(table)
}

fn cmd_ergodic(config: &ExperimentConfig) -> Result<Table, CliError> {
    let model = config.model_spec()?;
    let cfg = config.estimator_config();
    let opts = config.search_options();
    let mut table = Table::new(&CURVE_COLUMNS);
    for &u in &u_grid(config)? {
        let est = ergodic_cost_reduced(u, &model, &config.cost.control, &config.cost.holding, &cfg)?;
        table.push(curve_row("curve", u, &est, cfg.master_seed, cfg.stream_offset));
    }
    let opt = optimize_ergodic(&model, &config.cost.control, &config.cost.holding, &cfg, &opts)?;
    let est = ergodic_cost_reduced(
        opt.u_star,
        &model,
        &config.cost.control,
        &config.cost.holding,
        &cfg,
    )?;
    table.push(curve_row(
        "optimum",
        opt.u_star,
        &est,
        cfg.master_seed,
        cfg.stream_offset,
    ));
    Ok(table)
}

fn cmd_constrained(config: &ExperimentConfig) -> Result<Table, CliError> {
    let model = config.model_spec()?;
    let cfg = config.estimator_config();
    let opts = config.search_options();
    if config.task.m_grid.is_empty() {
        return Err(CliError::Config(
            "task.m_grid: required by `constrained`".to_string(),
        ));
    }
    let curve = constrained_curve(
        &model,
        &config.cost.control,
        &config.cost.holding,
        &config.task.m_grid,
        &cfg,
        &opts,
    )?;
    let mut table = Table::new(&[
        "budget",
        "u_star",
        "value",
        "stderr",
        "u0_star",
        "binding",
        "master_seed",
        "stream_offset",
    ]);
    for point in &curve {
        table.push(vec![
            cell(point.budget),
            cell(point.u_star),
            cell(point.value.mean),
            cell(point.value.stderr),
            cell(point.u0_star),
            cell(point.u_star < point.u0_star),
            cell(cfg.master_seed),
            cell(cfg.stream_offset),
        ]);
    }
    Ok(table)
}

fn cmd_discounted(config: &ExperimentConfig) -> Result<Table, CliError> {
    let model = config.model_spec()?;
    let cfg = config.estimator_config();
    let opts = config.search_options();
    let alpha = config
        .task
        .alpha
        .ok_or_else(|| CliError::Config("task.alpha: required by `discounted`".to_string()))?;
    let mut table = Table::new(&CURVE_COLUMNS);
    for &u in &u_grid(config)? {
        let est = discounted_cost(
            u,
            alpha,
            &model,
            &config.cost.control,
            &config.cost.holding,
            &cfg,
        )?;
        table.push(curve_row("curve", u, &est, cfg.master_seed, cfg.stream_offset));
    }
    let opt = optimize_discounted(
        model.x0,
        alpha,
        &model,
        &config.cost.control,
        &config.cost.holding,
        &cfg,
        &opts,
    )?;
    let est = discounted_cost(
        opt.u_star,
        alpha,
        &model,
        &config.cost.control,
        &config.cost.holding,
        &cfg,
    )?;
    table.push(curve_row(
        "optimum",
        opt.u_star,
        &est,
        cfg.master_seed,
        cfg.stream_offset,
    ));
    Ok(table)
}

fn cmd_finite(config: &ExperimentConfig) -> Result<Table, CliError> {
    let model = config.model_spec()?;
    let cfg = config.estimator_config();
    let opts = config.search_options();
    let horizon = config.task.horizon.unwrap_or(cfg.horizon);
    let mut table = Table::new(&CURVE_COLUMNS);
    for &u in &u_grid(config)? {
        let est = finite_horizon_cost(
            u,
            horizon,
            &model,
            &config.cost.control,
            &config.cost.holding,
            &cfg,
        )?;
        table.push(curve_row("curve", u, &est, cfg.master_seed, cfg.stream_offset));
    }
    let opt = optimize_finite_horizon(
        model.x0,
        horizon,
        &model,
        &config.cost.control,
        &config.cost.holding,
        &cfg,
        &opts,
    )?;
    let est = finite_horizon_cost(
        opt.u_star,
        horizon,
        &model,
        &config.cost.control,
        &config.cost.holding,
        &cfg,
    )?;
    table.push(curve_row(
        "optimum",
        opt.u_star,
        &est,
        cfg.master_seed,
        cfg.stream_offset,
    ));
    Ok(table)
}

fn cmd_abelian(config: &ExperimentConfig) -> Result<Table, CliError> {
    let model = config.model_spec()?;
    let cfg = config.estimator_config();
    let opts = config.search_options();
    if config.task.alpha_seq.is_empty() || config.task.horizon_seq.is_empty() {
        return Err(CliError::Config(
            "task.alpha_seq and task.horizon_seq: required by `abelian`".to_string(),
        ));
    }
    let target = match config.task.fixed_u {
        Some(u) => AbelianTarget::FixedControl(u),
        None => AbelianTarget::Optimize,
    };
    let report = abelian_check(
        model.x0,
        &model,
        &config.cost.control,
        &config.cost.holding,
        &config.task.alpha_seq,
        &config.task.horizon_seq,
        &cfg,
        &opts,
        target,
    )?;
    let mut table = Table::new(&[
        "record",
        "parameter",
        "scaled_value",
        "u_star",
        "deviation",
        "trend_monotone",
        "master_seed",
        "stream_offset",
    ]);
    table.push(vec![
        "ergodic".to_string(),
        "0".to_string(),
        cell(report.ergodic_value),
        cell(report.ergodic_u_star),
        "0".to_string(),
        "true".to_string(),
        cell(cfg.master_seed),
        cell(cfg.stream_offset),
    ]);
    for row in &report.alpha_rows {
        table.push(vec![
            "alpha".to_string(),
            cell(row.parameter),
            cell(row.scaled_value),
            cell(row.u_star),
            cell(row.deviation),
            cell(report.alpha_deviation_monotone),
            cell(cfg.master_seed),
            cell(cfg.stream_offset),
        ]);
    }
    for row in &report.horizon_rows {
        table.push(vec![
            "horizon".to_string(),
            cell(row.parameter),
            cell(row.scaled_value),
            cell(row.u_star),
            cell(row.deviation),
            cell(report.horizon_deviation_monotone),
            cell(cfg.master_seed),
            cell(cfg.stream_offset),
        ]);
    }
    Ok(table)
}

pub fn onoff_spec(section: &OnOffSection) -> fbmq::Result<OnOffSpec> {
    OnOffSpec::heavy_traffic(
        section.alpha_on,
        section.alpha_off,
        section.mean_on,
        section.mean_off,
        section.n_sources,
        section.tau,
        section.target_drift,
        section.x_scaled,
    )
}

fn cmd_onoff(config: &ExperimentConfig) -> Result<Table, CliError> {
    let section = config
        .onoff
        .as_ref()
        .ok_or_else(|| CliError::Config("onoff: section required by `onoff`".to_string()))?;
    let spec = onoff_spec(section)?;
    let cfg = config.estimator_config();
    let seed = SeedSpec::new(cfg.master_seed, cfg.stream_offset);
    let mut table = Table::new(&[
        "record", "k", "t", "value", "extra", "master_seed", "stream_offset",
    ]);
    let wp = simulate_onoff_queue(&spec, section.horizon_scaled, section.dt_scaled, seed)?;
    for k in 0..wp.workload.len() {
        table.push(vec![
            "queue".to_string(),
            cell(k),
            cell(wp.workload.t(k)),
            cell(wp.workload.values()[k]),
            cell(wp.regulator.values()[k]),
            cell(seed.master_seed),
            cell(seed.stream_index),
        ]);
    }
    let report = input_scaling_report(
        &spec,
        section.horizon_scaled,
        section.dt_scaled,
        section.n_paths,
        seed,
    )?;
    for row in &report.rows {
        table.push(vec![
            "lag_variance".to_string(),
            cell(row.windows),
            cell(row.lag),
            cell(row.variance),
            "-".to_string(),
            cell(seed.master_seed),
            cell(seed.stream_index),
        ]);
    }
    table.push(vec![
        "exponent".to_string(),
        "0".to_string(),
        "0".to_string(),
        cell(report.fitted_exponent),
        cell(2.0 * report.hurst),
        cell(seed.master_seed),
        cell(seed.stream_index),
    ]);
    table.push(vec![
        "scaled_drift".to_string(),
        "0".to_string(),
        "0".to_string(),
        cell(report.scaled_drift),
        cell(section.target_drift),
        cell(seed.master_seed),
        cell(seed.stream_index),
    ]);
    Ok(table)
}

fn cmd_selftest(config: &ExperimentConfig) -> Result<(Table, Option<CliError>), CliError> {
    let st = &config.selftest;
    let model = config.model_spec()?;
    let cfg = config
        .estimator_config()
        .with_n_paths(st.n_paths);
    let cfg = fbmq::costs::EstimatorConfig { dt: st.dt, ..cfg };
    let opts = config.search_options();
    let opt = optimize_ergodic(&model, &config.cost.control, &config.cost.holding, &cfg, &opts)?;
    let u_err = (opt.u_star - st.u_star).abs();
    let v_err = (opt.value.mean - st.value).abs() / st.value.abs().max(f64::MIN_POSITIVE);
    let u_pass = u_err <= st.u_star_tol;
    let v_pass = v_err <= st.value_rel_tol;
    println!(
        "selftest u*: {:.4} target {} tol {} .. {}",
        opt.u_star,
        st.u_star,
        st.u_star_tol,
        if u_pass { "PASS" } else { "FAIL" }
    );
    println!(
        "selftest value: {:.4} target {} rel_tol {} .. {}",
        opt.value.mean,
        st.value,
        st.value_rel_tol,
        if v_pass { "PASS" } else { "FAIL" }
    );
    let mut table = Table::new(&[
        "check",
        "got",
        "target",
        "tolerance",
        "pass",
        "master_seed",
        "stream_offset",
    ]);
    table.push(vec![
        "u_star".to_string(),
        cell(opt.u_star),
        cell(st.u_star),
        cell(st.u_star_tol),
        cell(u_pass),
        cell(cfg.master_seed),
        cell(cfg.stream_offset),
    ]);
    table.push(vec![
        "value".to_string(),
        cell(opt.value.mean),
        cell(st.value),
        cell(st.value_rel_tol),
        cell(v_pass),
        cell(cfg.master_seed),
        cell(cfg.stream_offset),
    ]);
    let failure = if u_pass && v_pass {
        None
    } else {
        Some(CliError::SelftestFailed(format!(
            "u* error {u_err:.4} (tol {}), value rel error {v_err:.4} (tol {})",
            st.u_star_tol, st.value_rel_tol
        )))
    };
    Ok((table, failure))
}
