//! Checked-in samples of every output format. Set `GKDV_BLESS=1` to
//! regenerate them after an intentional format change.

use std::path::{Path, PathBuf};

use gkdv_core::config::ExperimentConfig;
use gkdv_core::experiment::{run_subcommand, Subcommand};
use gkdv_core::formats::{
    norm_series_csv, trajectory_from_binary, trajectory_from_text, trajectory_to_binary, trajectory_to_text,
};
use gkdv_core::spaces::norm_series;
use gkdv_core::{Field, Grid, Params, Sign, Trajectory};
use num_complex::Complex64;

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Dyadic rationals only, so the samples are identical on every platform.
fn sample() -> Trajectory {
    let grid = Grid::new(16, 2.0).unwrap();
    let params = Params::new(1, 0.5, Sign::Plus, 10).unwrap();
    let snap = |k: f64| {
        let values = (0..16)
            .map(|i| Complex64::new((i as f64 - 7.5) / 8.0 * k, (i % 3) as f64 / 4.0 - k / 16.0))
            .collect();
        Field::new(grid, values).unwrap()
    };
    Trajectory::new(
        params,
        vec![0.0, 0.0625, 0.125],
        vec![snap(1.0), snap(0.5), snap(-0.25)],
    )
    .unwrap()
}

const LIFESPAN_CONFIG: &str = r#"
[params]
j = 1
alpha = 0.5
[grid]
n_points = 64
half_width = 8.0
[time]
T = 0.01
n_time_steps = 4
[data]
profile = "periodic_bracket"
amplitude = 0.2
[solver]
c_constant = 1.0
[lifespan]
delta = 1.0
lambda = 0.5
grid_delta = [0.5, 2.0]
grid_lambda = [0.25]
"#;

fn check(name: &str, actual: &[u8]) {
    let path = golden_dir().join(name);
    if std::env::var_os("GKDV_BLESS").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == actual, "{name} differs from the golden sample");
}

#[test]
fn trajectory_samples_match() {
    let traj = sample();
    check("trajectory.txt", trajectory_to_text(&traj).as_bytes());
    check("trajectory.bin", &trajectory_to_binary(&traj));
}

#[test]
fn golden_samples_parse_to_the_same_trajectory() {
    let text = std::fs::read_to_string(golden_dir().join("trajectory.txt")).unwrap();
    let bin = std::fs::read(golden_dir().join("trajectory.bin")).unwrap();
    let a = trajectory_from_text(&text).unwrap();
    let b = trajectory_from_binary(&bin).unwrap();
    assert_eq!(a.times(), b.times());
    assert_eq!(a.snapshots(), b.snapshots());
    assert_eq!(a.snapshots(), sample().snapshots());
}

#[test]
fn norm_table_sample_matches() {
    // Norm values go through FFTs; only the layout is frozen here.
    let csv = norm_series_csv(&norm_series(&sample()));
    let golden = std::fs::read_to_string(golden_dir().join("norms.csv")).unwrap_or_default();
    if std::env::var_os("GKDV_BLESS").is_some() {
        check("norms.csv", csv.as_bytes());
        return;
    }
    let header = |s: &str| s.lines().next().map(str::to_string);
    assert_eq!(header(&csv), header(&golden));
    assert_eq!(csv.lines().count(), golden.lines().count());
    for (row, gold) in csv.lines().zip(golden.lines()).skip(1) {
        for (x, y) in row.split(',').zip(gold.split(',')) {
            let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "{x} vs {y}");
        }
    }
}

#[test]
fn report_sample_matches() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::parse(LIFESPAN_CONFIG).unwrap();
    let out = run_subcommand(Subcommand::Lifespan, &config, dir.path()).unwrap();
    check(
        "config.resolved.toml",
        &std::fs::read(out.directory.join("config.resolved.toml")).unwrap(),
    );
    let report = std::fs::read(out.directory.join("report.json")).unwrap();
    if std::env::var_os("GKDV_BLESS").is_some() {
        check("lifespan.report.json", &report);
    }
    // Lifespans go through ln/exp, which may differ in the last ulp between
    // math libraries.
    let golden: serde_json::Value =
        serde_json::from_slice(&std::fs::read(golden_dir().join("lifespan.report.json")).unwrap()).unwrap();
    let actual: serde_json::Value = serde_json::from_slice(&report).unwrap();
    assert_close(&actual, &golden, "$");
}

fn assert_close(a: &serde_json::Value, b: &serde_json::Value, path: &str) {
    use serde_json::Value;
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= 1e-13 * y.abs(), "{path}: {x} vs {y}");
        }
        (Value::Array(x), Value::Array(y)) => {
            assert_eq!(x.len(), y.len(), "{path}");
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                assert_close(p, q, &format!("{path}[{i}]"));
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            assert_eq!(x.keys().collect::<Vec<_>>(), y.keys().collect::<Vec<_>>(), "{path}");
            for (k, p) in x {
                assert_close(p, &y[k], &format!("{path}.{k}"));
            }
        }
        _ => assert_eq!(a, b, "{path}"),
    }
}
