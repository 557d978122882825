//! Runs one subcommand against a resolved configuration and writes its
//! output directory. `report.json` is a pure function of the configuration;
//! wall time goes to `timing.json` so the report stays byte-stable.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, TrajectoryFormat};
use crate::error::{Error, Result};
use crate::estimates::{standard_battery, BatteryInput};
use crate::formats::{norm_series_csv, write_trajectory_binary, write_trajectory_text};
use crate::lifespan::lifespan_lower_bound;
use crate::picard::{ball_conditions, ball_threshold_times, picard_solve};
use crate::reference::{reference_solve_with, ReferenceOptions};
use crate::spaces::{delta_of, norm_series, DataQuantities, Trajectory};
use crate::spectral::{boundary_mass_fraction, top_mode_fraction, truncation_diagnostic, Field, BOUNDARY_FRACTION};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Subcommand {
    Simulate,
    Picard,
    Lifespan,
    Verify,
    Report,
}

impl Subcommand {
    pub const ALL: [Subcommand; 5] = [
        Subcommand::Simulate,
        Subcommand::Picard,
        Subcommand::Lifespan,
        Subcommand::Verify,
        Subcommand::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Picard => "picard",
            Subcommand::Lifespan => "lifespan",
            Subcommand::Verify => "verify",
            Subcommand::Report => "report",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::config("<subcommand>", format!("unknown subcommand {s:?}")))
    }
}

/// Outcome of a run that produced a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    NotConverged,
    ChecksFailed,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Ok => EXIT_OK,
            RunStatus::ChecksFailed => EXIT_NUMERICAL,
            RunStatus::NotConverged => EXIT_NOT_CONVERGED,
        }
    }
}

/// Bad input maps to 2, numerical failures to 3, I/O and format errors to 1.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config { .. }
        | Error::Domain(_)
        | Error::InvalidGrid(_)
        | Error::InvalidField(_)
        | Error::OrderTooHigh { .. }
        | Error::InconsistentData(_) => EXIT_CONFIG,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_OTHER,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match exit_code_for(err) {
        EXIT_CONFIG => "config",
        EXIT_NUMERICAL => "numerical",
        _ => match err {
            Error::Format { .. } => "format",
            Error::Io(_) => "io",
            _ => "other",
        },
    }
}

/// Machine-readable record of a failed run.
pub fn error_record(command: &str, err: &Error) -> Value {
    let mut record = json!({
        "subcommand": command,
        "kind": error_kind(err),
        "exit_code": exit_code_for(err),
        "message": err.to_string(),
        "version": VERSION,
    });
    if let Error::Config { key, .. } = err {
        record["key"] = json!(key);
    }
    record
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub subcommand: Subcommand,
    pub status: RunStatus,
    pub report: Value,
    pub directory: PathBuf,
    pub wall_seconds: f64,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn data_section(u0: &Field, config: &ExperimentConfig) -> Result<(DataQuantities, Value)> {
    let p = &config.params;
    let data = delta_of(u0, p)?;
    let lifespan = if data.lambda > 0.0 {
        match lifespan_lower_bound(data.delta, data.lambda, p, config.c_constant) {
            Ok(r) => to_value(&r),
            Err(e) => json!({ "error": e.to_string() }),
        }
    } else {
        json!({ "error": "lambda is zero on the grid" })
    };
    let value = json!({
        "delta": data.delta,
        "lambda": data.lambda,
        "m": data.m,
        "s": p.s(),
        "j": p.j(),
        "alpha": p.alpha(),
        "h_s": data.h_s,
        "weighted_sup": data.weighted_sup,
        "weighted_deriv": data.weighted_deriv,
        "lifespan": lifespan,
    });
    Ok((data, value))
}

fn truncation_section(fields: &[Field], m: u32) -> Value {
    let worst = |f: &dyn Fn(&Field) -> f64| fields.iter().map(f).fold(0.0, f64::max);
    let band = fields.first().and_then(|f| f.grid().band_limit());
    json!({
        "boundary_weighted_value": worst(&|f| truncation_diagnostic(f, m)),
        "boundary_mass_fraction": worst(&|f| boundary_mass_fraction(f, BOUNDARY_FRACTION)),
        "top_mode_fraction": worst(&|f| top_mode_fraction(f)),
        "band_limit": band,
    })
}

fn write_trajectory_outputs(traj: &Trajectory, config: &ExperimentConfig, dir: &Path) -> Result<Vec<String>> {
    let mut files = Vec::new();
    for format in &config.formats {
        match format {
            TrajectoryFormat::Text => {
                write_trajectory_text(traj, &dir.join("trajectory.txt"))?;
                files.push("trajectory.txt".to_string());
            }
            TrajectoryFormat::Binary => {
                write_trajectory_binary(traj, &dir.join("trajectory.bin"))?;
                files.push("trajectory.bin".to_string());
            }
        }
    }
    std::fs::write(dir.join("norms.csv"), norm_series_csv(&norm_series(traj)))?;
    files.push("norms.csv".to_string());
    Ok(files)
}

fn header(command: Subcommand, config: &ExperimentConfig) -> Value {
    json!({
        "subcommand": command.name(),
        "version": VERSION,
        "config": config.to_toml(),
        "grid": {
            "n_points": config.n_points,
            "half_width": config.half_width,
        },
    })
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn simulate(config: &ExperimentConfig, dir: &Path) -> Result<(RunStatus, Value)> {
    let u0 = config.initial_data()?;
    let (_, data) = data_section(&u0, config)?;
    let options = ReferenceOptions {
        substeps: config.substeps,
        nonlinear: config.nonlinear,
    };
    let traj = reference_solve_with(&u0, &config.params, config.t_final, config.n_time_steps, options)?;
    let files = write_trajectory_outputs(&traj, config, dir)?;
    let l2: Vec<f64> = traj.snapshots().iter().map(Field::l2_norm).collect();
    let base = l2[0] * l2[0];
    let drift = l2.iter().map(|n| (n * n - base).abs()).fold(0.0, f64::max) / base.max(f64::MIN_POSITIVE);
    Ok((
        RunStatus::Ok,
        json!({
            "data": data,
            "truncation": truncation_section(traj.snapshots(), config.params.m()),
            "simulation": {
                "final_time": traj.final_time(),
                "n_snapshots": traj.len(),
                "substeps": config.substeps,
                "nonlinear": config.nonlinear,
                "l2_initial": l2[0],
                "l2_final": l2[l2.len() - 1],
                "l2_squared_relative_drift": drift,
            },
            "files": files,
        }),
    ))
}

fn picard(config: &ExperimentConfig, dir: &Path) -> Result<(RunStatus, Value)> {
    let u0 = config.initial_data()?;
    let (data, data_value) = data_section(&u0, config)?;
    let (traj, report) = picard_solve(&u0, &config.params, &config.picard())?;
    let files = write_trajectory_outputs(&traj, config, dir)?;
    let conditions = match ball_conditions(
        data.delta,
        data.lambda,
        &config.params,
        config.t_final,
        config.c_constant,
    ) {
        Ok(c) => to_value(&c),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let thresholds = ball_threshold_times(data.delta, data.lambda, &config.params, config.c_constant);
    let decreasing = report.distances.windows(2).all(|w| w[1] < w[0]);
    let status = if report.converged {
        RunStatus::Ok
    } else {
        RunStatus::NotConverged
    };
    Ok((
        status,
        json!({
            "data": data_value,
            "truncation": truncation_section(traj.snapshots(), config.params.m()),
            "picard": {
                "converged": report.converged,
                "iterations": report.iterations,
                "distances": report.distances,
                "ratios": report.ratios,
                "distances_strictly_decreasing": decreasing,
                "max_tail_ratio": report.max_tail_ratio(),
                "final_residual": report.final_residual,
                "membership": to_value(&report.membership),
                "norms": to_value(&report.norms),
                "ball_conditions": conditions,
                "threshold_times": {
                    "self_map": thresholds[0],
                    "proximity": thresholds[1],
                    "contraction": thresholds[2],
                },
            },
            "files": files,
        }),
    ))
}

fn lifespan(config: &ExperimentConfig) -> Result<(RunStatus, Value)> {
    let p = &config.params;
    let c = config.c_constant;
    let (delta, lambda, data) = match (config.lifespan_delta, config.lifespan_lambda) {
        (Some(d), Some(l)) => (
            d,
            l,
            json!({ "delta": d, "lambda": l, "m": p.m(), "s": p.s(), "j": p.j(), "alpha": p.alpha(), "source": "config" }),
        ),
        _ => {
            let u0 = config.initial_data()?;
            let (q, mut v) = data_section(&u0, config)?;
            v["source"] = json!("initial data");
            (q.delta, q.lambda, v)
        }
    };
    let result = lifespan_lower_bound(delta, lambda, p, c)?;
    let mut grid = Vec::new();
    for &d in &config.lifespan_grid_delta {
        for &l in &config.lifespan_grid_lambda {
            grid.push(match lifespan_lower_bound(d, l, p, c) {
                Ok(r) => json!({ "delta": d, "lambda": l, "result": to_value(&r) }),
                Err(e) => json!({ "delta": d, "lambda": l, "error": e.to_string() }),
            });
        }
    }
    Ok((
        RunStatus::Ok,
        json!({
            "data": data,
            "lifespan": {
                "delta": delta,
                "lambda": lambda,
                "result": to_value(&result),
                "grid": grid,
            },
        }),
    ))
}

fn verify(config: &ExperimentConfig) -> Result<(RunStatus, Value)> {
    let u0 = config.initial_data()?;
    let (_, data) = data_section(&u0, config)?;
    let input = BatteryInput {
        u0,
        params: config.params,
        t_final: config.t_final,
        n_time_steps: config.n_time_steps,
    };
    let battery = standard_battery(&input, config.ratio_ceiling)?;
    let failures = battery.failures();
    let status = if failures.is_empty() {
        RunStatus::Ok
    } else {
        RunStatus::ChecksFailed
    };
    Ok((
        status,
        json!({
            "data": data,
            "truncation": truncation_section(std::slice::from_ref(&input.u0), config.params.m()),
            "battery": to_value(&battery),
            "green": failures.is_empty(),
            "failures": failures,
        }),
    ))
}

fn report(out_root: &Path) -> Result<(RunStatus, Value)> {
    let mut merged = serde_json::Map::new();
    let mut missing = Vec::new();
    for c in Subcommand::ALL.into_iter().filter(|&c| c != Subcommand::Report) {
        let path = out_root.join(c.name()).join("report.json");
        match std::fs::read_to_string(&path) {
            Ok(text) => {
                let value: Value = serde_json::from_str(&text).map_err(|e| Error::Format {
                    offset: 0,
                    message: format!("{}: {e}", path.display()),
                })?;
                merged.insert(c.name().to_string(), value);
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => missing.push(c.name()),
            Err(e) => return Err(e.into()),
        }
    }
    if merged.is_empty() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no prior reports under {}", out_root.display()),
        )));
    }
    let all_ok = merged.values().all(|v| v["status"] == "ok");
    let status = if all_ok { RunStatus::Ok } else { RunStatus::ChecksFailed };
    Ok((status, json!({ "merged": merged, "missing": missing })))
}

/// Runs `command` and writes `<out_root>/<command>/`. On failure the
/// directory holds `error.json` instead of a report.
pub fn run_subcommand(command: Subcommand, config: &ExperimentConfig, out_root: &Path) -> Result<RunOutcome> {
    let dir = out_root.join(command.name());
    std::fs::create_dir_all(&dir)?;
    for stale in ["report.json", "error.json", "timing.json"] {
        let _ = std::fs::remove_file(dir.join(stale));
    }
    std::fs::write(dir.join("config.resolved.toml"), config.to_toml())?;
    let start = Instant::now();
    let result = match command {
        Subcommand::Simulate => simulate(config, &dir),
        Subcommand::Picard => picard(config, &dir),
        Subcommand::Lifespan => lifespan(config),
        Subcommand::Verify => verify(config),
        Subcommand::Report => report(out_root),
    };
    let wall_seconds = start.elapsed().as_secs_f64();
    write_json(&dir.join("timing.json"), &json!({ "wall_seconds": wall_seconds }))?;
    match result {
        Ok((status, body)) => {
            let mut value = header(command, config);
            value["status"] = to_value(&status);
            merge(&mut value, body);
            write_json(&dir.join("report.json"), &value)?;
            Ok(RunOutcome {
                subcommand: command,
                status,
                report: value,
                directory: dir,
                wall_seconds,
            })
        }
        Err(e) => {
            write_json(&dir.join("error.json"), &error_record(command.name(), &e))?;
            Err(e)
        }
    }
}

/// One `--sweep key=v1,v2,…` axis.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<String>,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (key, values) = s
            .split_once('=')
            .ok_or_else(|| Error::config("--sweep", format!("expected key=v1,v2,..., got {s:?}")))?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
        if key.trim().is_empty() || values.iter().any(String::is_empty) {
            return Err(Error::config("--sweep", format!("empty key or value in {s:?}")));
        }
        Ok(Self {
            key: key.trim().to_string(),
            values,
        })
    }
}

/// Cartesian product of the axes, first axis slowest.
pub fn sweep_points(axes: &[SweepAxis]) -> Vec<Vec<(String, String)>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((axis.key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

/// Directory name of a sweep point, e.g. `time.T=0.01,grid.n_points=512`.
pub fn sweep_label(point: &[(String, String)]) -> String {
    point
        .iter()
        .map(|(k, v)| format!("{k}={}", v.replace(['/', '\\'], "_")))
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug)]
pub struct SweepRun {
    pub label: String,
    pub directory: PathBuf,
    pub result: Result<RunOutcome>,
}

impl SweepRun {
    pub fn exit_code(&self) -> i32 {
        match &self.result {
            Ok(o) => o.exit_code(),
            Err(e) => exit_code_for(e),
        }
    }
}

/// Runs `command` once per sweep point in `<out_root>/<label>/`. A config
/// error at one point is recorded there and does not stop the others.
pub fn run_sweep(command: Subcommand, config_text: &str, axes: &[SweepAxis], out_root: &Path) -> Vec<SweepRun> {
    sweep_points(axes)
        .into_iter()
        .map(|point| {
            let label = sweep_label(&point);
            let directory = out_root.join(&label);
            let result = ExperimentConfig::parse_with(config_text, &point).and_then(|config| {
                let result = run_subcommand(command, &config, &directory);
                if result.is_ok() {
                    log::info!("sweep point {label}: done");
                }
                result
            });
            if let Err(e) = &result {
                if matches!(e, Error::Config { .. }) {
                    let dir = directory.join(command.name());
                    let _ = std::fs::create_dir_all(&dir).and_then(|_| {
                        std::fs::write(dir.join("error.json"), error_record(command.name(), e).to_string())
                    });
                }
                log::error!("sweep point {label}: {e}");
            }
            SweepRun {
                label,
                directory,
                result,
            }
        })
        .collect()
}

/// Overall exit code of a sweep: the largest over its points.
pub fn sweep_exit_code(runs: &[SweepRun]) -> i32 {
    runs.iter().map(SweepRun::exit_code).max().unwrap_or(EXIT_OK)
}
