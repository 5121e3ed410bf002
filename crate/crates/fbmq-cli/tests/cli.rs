//! End-to-end checks of the batch driver: config validation and exit
//! codes, determinism of result tables, and the selftest oracle.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> PathBuf {
    let mut path = PathBuf::from(env!("CARGO_BIN_EXE_fbmq"));
    if !path.exists() {
        path = PathBuf::from("target/debug/fbmq");
    }
    path
}

fn base_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("experiment.toml");
    let text = format!(
        r#"
label = "t"
output_dir = {:?}

[model]
hurst = 0.5
x0 = 0.0
penalty = 1.0
sigma = {{ kind = "const", value = 1.0 }}
drift = {{ kind = "identity" }}

[cost]
control = {{ kind = "power", coef = 1.0, exponent = 2.0, offset = 0.0 }}
holding = {{ kind = "power", coef = 1.0, exponent = 1.0, offset = 0.0 }}

[estimator]
n_paths = 64
dt = 0.01
horizon = 30.0
master_seed = 42
{extra}
"#,
        dir.join("out").to_str().unwrap()
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn run(config: &Path, args: &[&str]) -> Output {
    Command::new(binary())
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn missing_required_field_names_it_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(
        &path,
        "label = \"t\"\noutput_dir = \"o\"\n[model]\nx0 = 0.0\n[cost]\ncontrol = { kind = \"constant\", value = 1.0 }\nholding = { kind = \"constant\", value = 0.0 }\n[estimator]\nn_paths = 4\ndt = 0.01\nhorizon = 1.0\nmaster_seed = 1\n",
    )
    .unwrap();
    let out = run(&path, &["zu"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("hurst"), "stderr: {err}");
}

#[test]
fn invalid_hurst_override_exits_2_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = base_config(dir.path(), "");
    let out = run(&config, &["--set", "model.hurst=1.5", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("model.hurst"), "stderr: {err}");
}

#[test]
fn missing_task_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let config = base_config(dir.path(), "");
    let out = run(&config, &["zu"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("task.u"));
}

#[test]
fn estimator_precondition_maps_to_exit_3() {
    // Direct ergodic averaging with a horizon far below the coupling
    // scale: the `finite` command is fine, but `ergodic` with a tiny
    // search floor trips the bracket/precondition path. Easiest stable
    // trigger: discounted with non-unit sigma.
    let dir = tempfile::tempdir().unwrap();
    let config = base_config(
        dir.path(),
        "[task]\nu = 1.0\nalpha = 0.5\nu_grid = [0.5, 1.0]\n",
    );
    let out = run(
        &config,
        &[
            "--set",
            "model.sigma={ kind = \"affine\", intercept = 1.0, slope = 1.0 }",
            "discounted",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn unwritable_output_dir_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let config = base_config(dir.path(), "[task]\nu = 1.0\nn_paths_emit = 1\n");
    let out = run(
        &config,
        &["--set", "output_dir=/proc/no_such_dir/x", "simulate"],
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn simulate_runs_twice_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = base_config(dir.path(), "[task]\nu = 1.0\nn_paths_emit = 2\n");
    let out1 = run(&config, &["simulate"]);
    assert!(out1.status.success(), "{}", String::from_utf8_lossy(&out1.stderr));
    let table_path = dir.path().join("out").join("t_simulate.tsv");
    let first = std::fs::read(&table_path).unwrap();
    let out2 = run(&config, &["simulate"]);
    assert!(out2.status.success());
    let second = std::fs::read(&table_path).unwrap();
    assert_eq!(first, second);
    // Header plus (n_steps + 1) rows per path.
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 3001);
    assert!(text.lines().next().unwrap().starts_with("path\tstream"));
}

#[test]
fn zu_emits_summary_row_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let config = base_config(
        dir.path(),
        "[task]\nu = 1.0\n",
    );
    let out = run(
        &config,
        &["--set", "estimator.n_paths=12000", "--set", "estimator.dt=0.01", "zu"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("out").join("t_zu.tsv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.contains("tail_slope"));
    assert!(header.contains("master_seed"));
    let row = lines.next().unwrap();
    assert!(row.split('\t').count() == header.split('\t').count());
}

#[test]
fn manifest_hash_tracks_config_content() {
    let dir = tempfile::tempdir().unwrap();
    let config = base_config(dir.path(), "[task]\nu = 1.0\nn_paths_emit = 1\n");
    let manifest_path = dir.path().join("out").join("t_simulate_manifest.toml");

    assert!(run(&config, &["simulate"]).status.success());
    let first = std::fs::read_to_string(&manifest_path).unwrap();

    // Same content, different whitespace/comments: hash unchanged.
    assert!(run(&config, &["simulate"]).status.success());
    let second = std::fs::read_to_string(&manifest_path).unwrap();
    let hash = |text: &str| {
        text.lines()
            .find(|l| l.starts_with("config_sha256"))
            .unwrap()
            .to_string()
    };
    assert_eq!(hash(&first), hash(&second));

    // A real content change moves the hash.
    assert!(run(&config, &["--set", "estimator.master_seed=43", "simulate"])
        .status
        .success());
    let third = std::fs::read_to_string(&manifest_path).unwrap();
    assert_ne!(hash(&first), hash(&third));
    assert!(first.contains("artifact_version"));
}

#[test]
fn selftest_quadratic_example_passes() {
    let dir = tempfile::tempdir().unwrap();
    let config = base_config(
        dir.path(),
        "[selftest]\nu_star = 0.5\nvalue = 1.75\nu_star_tol = 0.06\nvalue_rel_tol = 0.07\nn_paths = 1200\ndt = 0.002\n",
    );
    let out = run(&config, &["selftest"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "stdout: {stdout} stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout.contains("PASS"));
    let table = std::fs::read_to_string(dir.path().join("out").join("t_selftest.tsv")).unwrap();
    assert!(table.contains("u_star"));
    assert!(table.contains("true"));
}

#[test]
fn selftest_with_impossible_tolerance_exits_1_but_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = base_config(
        dir.path(),
        "[selftest]\nu_star = 0.5\nvalue = 1.75\nu_star_tol = 1e-9\nvalue_rel_tol = 1e-9\nn_paths = 300\ndt = 0.005\n",
    );
    let out = run(&config, &["selftest"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("out").join("t_selftest.tsv").exists());
}

#[test]
fn onoff_reports_exponent_and_drift_identity() {
    let dir = tempfile::tempdir().unwrap();
    let config = base_config(
        dir.path(),
        r#"
[onoff]
alpha_on = 1.5
alpha_off = 1.5
mean_on = 1.0
mean_off = 1.0
n_sources = 10
tau = 20.0
target_drift = 0.5
horizon_scaled = 64.0
dt_scaled = 0.25
n_paths = 3
"#,
    );
    let out = run(&config, &["onoff"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("out").join("t_onoff.tsv")).unwrap();
    assert!(text.contains("queue\t"));
    assert!(text.contains("exponent\t"));
    let drift_row: Vec<&str> = text
        .lines()
        .find(|l| l.starts_with("scaled_drift"))
        .unwrap()
        .split('\t')
        .collect();
    // Scaled drift reproduces the configured heavy-traffic target
    // (up to the powf round trip in the rate arithmetic).
    let drift: f64 = drift_row[3].parse().unwrap();
    assert!((drift - 0.5).abs() < 1e-12, "drift {drift}");
    assert_eq!(drift_row[4], "0.5");
}
