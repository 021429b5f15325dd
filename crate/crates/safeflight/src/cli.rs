//! Batch front-end: run one scenario or compare controllers on it, emitting
//! trace CSV, metrics JSON and plot-ready comparison tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{apply_overrides, serialize_config, Config, ConfigError};
use crate::qp::QpStatus;
use crate::scenario::SCENARIO_RNG;
use crate::sim::{run_simulation, ControllerId, MetricsReport, SimResult, TraceRecord};

pub const TRACE_SCHEMA: &str = "safeflight-trace v1";

/// Exit status of `run`: 0 clean, 2 collision, 3 hard infeasibility or
/// numerical blowup (I/O and config errors exit 1).
pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_COLLISION: i32 = 2;
pub const EXIT_UNSTABLE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("unknown controller '{0}' (expected ea, clf-cbf-qp or mpcbf)")]
    UnknownController(String),
    #[error("compare needs at least two controllers")]
    TooFewControllers,
}

/// One batch run request.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub scenario: PathBuf,
    pub controller: ControllerId,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub overrides: Vec<(String, String)>,
    /// Emit the per-tick predictive-controller debug CSV (contains wall
    /// times, so it is not byte-reproducible and defaults off).
    pub debug_mpcbf: bool,
}

fn read_config(path: &Path, manifest_seed: Option<u64>, overrides: &[(String, String)]) -> Result<Config, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut all = overrides.to_vec();
    if let Some(seed) = manifest_seed {
        all.push(("scenario.seed".into(), seed.to_string()));
    }
    Ok(apply_overrides(&text, &all)?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| CliError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Nine significant digits, the documented precision of all emitted numbers.
pub fn fmt9(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{:.8e}", x)
    }
}

fn status_str(s: Option<QpStatus>) -> &'static str {
    match s {
        None => "-",
        Some(QpStatus::Optimal) => "optimal",
        Some(QpStatus::Infeasible) => "infeasible",
        Some(QpStatus::MaxIterations) => "maxiter",
    }
}

pub fn trace_csv(trace: &[TraceRecord], controller: ControllerId, seed: u64) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "# {TRACE_SCHEMA} rng={SCENARIO_RNG} controller={} seed={}",
        controller.as_str(),
        seed
    )
    .unwrap();
    writeln!(
        out,
        "t,px,py,pz,vx,vy,vz,roll,pitch,yaw,wx,wy,wz,ref_x,ref_y,ref_z,\
         fdes_x,fdes_y,fdes_z,f_c,tau_x,tau_y,tau_z,m1,m2,m3,m4,\
         min_clearance,pos_status,att_status,delta,dropped"
    )
    .unwrap();
    for r in trace {
        let euler = r
            .euler
            .map(|e| [e.roll, e.pitch, e.yaw])
            .unwrap_or([f64::NAN; 3]);
        let min_clearance = r
            .clearances
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let fields: Vec<String> = [
            r.t,
            r.state.position.x,
            r.state.position.y,
            r.state.position.z,
            r.state.velocity.x,
            r.state.velocity.y,
            r.state.velocity.z,
            euler[0],
            euler[1],
            euler[2],
            r.state.omega.x,
            r.state.omega.y,
            r.state.omega.z,
            r.reference.position.x,
            r.reference.position.y,
            r.reference.position.z,
            r.f_des.x,
            r.f_des.y,
            r.f_des.z,
            r.command.thrust,
            r.command.moment.x,
            r.command.moment.y,
            r.command.moment.z,
            r.motor_fractions[0],
            r.motor_fractions[1],
            r.motor_fractions[2],
            r.motor_fractions[3],
            min_clearance,
        ]
        .iter()
        .map(|v| fmt9(*v))
        .collect();
        writeln!(
            out,
            "{},{},{},{},{}",
            fields.join(","),
            status_str(r.position_status),
            status_str(r.attitude_status),
            fmt9(r.delta),
            r.dropped_rows
        )
        .unwrap();
    }
    out
}

fn metrics_json(metrics: &MetricsReport) -> String {
    serde_json::to_string_pretty(metrics).expect("metrics serialize") + "\n"
}

fn mpcbf_debug_csv(result: &SimResult) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "# safeflight-mpcbf-debug v1\nt,decision_dim,input_rows,clf_rows,cbf_rows,box_rows,iterations,solve_ms,dropped"
    )
    .unwrap();
    for (t, d) in &result.mpcbf_debug {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt9(*t),
            d.decision_dim,
            d.input_rows,
            d.clf_rows,
            d.cbf_rows,
            d.box_rows,
            d.iterations,
            fmt9(d.solve_time.as_secs_f64() * 1e3),
            d.dropped_rows
        )
        .unwrap();
    }
    out
}

fn execute(cfg: &Config, controller: ControllerId) -> Result<SimResult, CliError> {
    let spec = cfg.scenario_spec()?;
    let sim = cfg.sim_config(&spec, controller);
    Ok(run_simulation(&spec, &sim, &cfg.controller_set()))
}

fn exit_code_for(metrics: &MetricsReport) -> i32 {
    if metrics.blowup || metrics.hard_infeasible_ticks > 0 {
        EXIT_UNSTABLE
    } else if metrics.collision_count > 0 {
        EXIT_COLLISION
    } else {
        EXIT_OK
    }
}

/// Runs one manifest, writing `trace.csv`, `metrics.json` and `config.toml`
/// (the normalized, fully-resolved configuration) into the output directory.
pub fn run_command(manifest: &RunManifest) -> Result<i32, CliError> {
    let cfg = read_config(&manifest.scenario, manifest.seed, &manifest.overrides)?;
    let result = execute(&cfg, manifest.controller)?;
    let spec_seed = cfg.scenario.seed;
    write_file(
        &manifest.out_dir.join("trace.csv"),
        &trace_csv(&result.trace, manifest.controller, spec_seed),
    )?;
    write_file(
        &manifest.out_dir.join("metrics.json"),
        &metrics_json(&result.metrics),
    )?;
    write_file(&manifest.out_dir.join("config.toml"), &serialize_config(&cfg))?;
    if manifest.debug_mpcbf && manifest.controller == ControllerId::Mpcbf {
        write_file(
            &manifest.out_dir.join("mpcbf_debug.csv"),
            &mpcbf_debug_csv(&result),
        )?;
    }
    Ok(exit_code_for(&result.metrics))
}

/// Side-by-side comparison row.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ComparisonRow {
    pub controller: String,
    pub e_mean: f64,
    pub energy_proxy: f64,
    pub min_clearance: Option<f64>,
    pub collision_count: usize,
    pub infeasible_solves: usize,
    pub exit_code: i32,
}

/// Runs every controller on the identical scenario and seed, writing each
/// run under `<out>/<controller>/` plus a `comparison.csv`, and returns the
/// formatted table.
pub fn compare_command(
    scenario: &Path,
    controllers: &[ControllerId],
    out_dir: &Path,
    seed: Option<u64>,
    overrides: &[(String, String)],
) -> Result<(String, Vec<ComparisonRow>), CliError> {
    if controllers.len() < 2 {
        return Err(CliError::TooFewControllers);
    }
    let cfg = read_config(scenario, seed, overrides)?;
    let mut rows = Vec::new();
    for &controller in controllers {
        let result = execute(&cfg, controller)?;
        let dir = out_dir.join(controller.as_str());
        write_file(
            &dir.join("trace.csv"),
            &trace_csv(&result.trace, controller, cfg.scenario.seed),
        )?;
        write_file(&dir.join("metrics.json"), &metrics_json(&result.metrics))?;
        rows.push(ComparisonRow {
            controller: controller.as_str().to_string(),
            e_mean: result.metrics.e_mean,
            energy_proxy: result.metrics.energy_proxy,
            min_clearance: result.metrics.min_clearance,
            collision_count: result.metrics.collision_count,
            infeasible_solves: result.metrics.infeasible_solves,
            exit_code: exit_code_for(&result.metrics),
        });
    }

    let mut csv = String::from(
        "controller,e_mean,energy_proxy,min_clearance,collision_count,infeasible_solves,exit_code\n",
    );
    let mut table = format!(
        "{:<12} {:>16} {:>16} {:>14} {:>10} {:>11}\n",
        "controller", "e_mean", "energy", "clearance", "collisions", "infeasible"
    );
    for r in &rows {
        let clearance = r.min_clearance.map(fmt9).unwrap_or_else(|| "inf".into());
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.controller,
            fmt9(r.e_mean),
            fmt9(r.energy_proxy),
            clearance,
            r.collision_count,
            r.infeasible_solves,
            r.exit_code
        )
        .unwrap();
        writeln!(
            table,
            "{:<12} {:>16} {:>16} {:>14} {:>10} {:>11}",
            r.controller,
            fmt9(r.e_mean),
            fmt9(r.energy_proxy),
            clearance,
            r.collision_count,
            r.infeasible_solves
        )
        .unwrap();
    }
    write_file(&out_dir.join("comparison.csv"), &csv)?;
    Ok((table, rows))
}

pub fn parse_controller(s: &str) -> Result<ControllerId, CliError> {
    ControllerId::parse(s).ok_or_else(|| CliError::UnknownController(s.to_string()))
}

/// Splits `key=value` command-line overrides.
pub fn parse_override(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(format!("override '{s}' is not of the form key=value")),
    }
}
