//! Plain-text (TOML) configuration with the full simulation parameter set as
//! defaults. Every field can be overridden from a document or a dotted-key
//! command-line override; unknown keys are rejected.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controllers::{AttitudeCbfParams, AttitudeClfParams, EaGains, PositionClfParams};
use crate::dynamics::PlantParams;
use crate::mpcbf::MpcbfConfig;
use crate::scenario::{
    generate_cluttered, BoxBounds, Obstacle, ObstacleMotion, ReferenceKind, SafetyGeometry,
    ScenarioSpec,
};
use crate::so3::EulerZyx;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid override '{0}': {1}")]
    Override(String, String),
}

fn vec3(v: [f64; 3]) -> Vector3<f64> {
    Vector3::from_row_slice(&v)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PlantTable {
    pub m: f64,
    pub j_diag: [f64; 3],
    pub g: f64,
    pub f_max: f64,
    pub tau_max: [f64; 3],
}

impl Default for PlantTable {
    fn default() -> Self {
        Self {
            m: 1.02,
            j_diag: [5e-3, 5e-3, 9.8e-3],
            g: 9.81,
            f_max: 28.51,
            tau_max: [1.66, 1.66, 0.21],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EaTable {
    pub k: [f64; 3],
    pub k_v: [f64; 3],
    pub k_p: [f64; 3],
    pub k_i: [f64; 3],
    pub k_d: [f64; 3],
}

impl Default for EaTable {
    fn default() -> Self {
        Self {
            k: [4.0, 4.0, 4.0],
            k_v: [3.0, 3.0, 3.0],
            k_p: [0.28, 0.28, 0.17],
            k_i: [0.0, 0.0, 0.0],
            k_d: [0.07, 0.08, 0.02],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PositionClfTable {
    pub k_x: f64,
    pub eps_x: f64,
    pub q_x_diag: [f64; 3],
    pub c_x: [f64; 3],
    pub eta_x: f64,
}

impl Default for PositionClfTable {
    fn default() -> Self {
        Self {
            k_x: 8.0,
            eps_x: 2.0,
            q_x_diag: [5.0, 5.0, 25.0],
            c_x: [0.0, 0.0, 0.0],
            eta_x: 2.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AttitudeQpTable {
    pub k_j_diag: [f64; 3],
    pub c_r_diag: [f64; 3],
    pub e_r_diag: [f64; 3],
    /// Weights on `(f_c, tau_x, tau_y, tau_z, delta)`.
    pub q_r_diag: [f64; 5],
    pub eta_r: f64,
    pub gamma: f64,
    pub beta: f64,
    pub b: f64,
    pub sigma0: f64,
    pub k_sigma: f64,
}

impl Default for AttitudeQpTable {
    fn default() -> Self {
        Self {
            k_j_diag: [1.0, 1.0, 0.1],
            c_r_diag: [30.0, 30.0, 3.0],
            e_r_diag: [4.0, 4.0, 4.0],
            q_r_diag: [25.0, 10.0, 10.0, 10.0, 250.0],
            eta_r: 150.0,
            gamma: 5.0,
            beta: 1.5,
            b: 1.0,
            sigma0: 0.1,
            k_sigma: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct MpcbfTable {
    pub t_s: f64,
    pub n: usize,
    pub n_c: usize,
    pub q_diag: [f64; 6],
    pub q_final_diag: [f64; 6],
    pub r_diag: [f64; 4],
    pub r_delta_diag: [f64; 4],
    /// Slack weight `q`.
    pub q_slack: f64,
    pub eta_x: f64,
    pub gamma: f64,
}

impl Default for MpcbfTable {
    fn default() -> Self {
        Self {
            t_s: 0.1,
            n: 25,
            n_c: 5,
            q_diag: [5.0, 5.0, 2.5, 1.0, 1.0, 0.5],
            q_final_diag: [5.0, 5.0, 2.5, 1.0, 1.0, 0.5],
            r_diag: [2.0, 2.0, 0.1, 1e-12],
            r_delta_diag: [0.2, 0.2, 0.01, 1e-13],
            q_slack: 250.0,
            eta_x: 2.5,
            gamma: 5.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SafetyTable {
    pub r_robot: f64,
    pub r_safety: f64,
}

impl Default for SafetyTable {
    fn default() -> Self {
        Self { r_robot: 0.265, r_safety: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SimTable {
    /// Position-loop rate, Hz.
    pub f_pos: f64,
    /// Attitude-loop (and plant integration) rate, Hz.
    pub f_att: f64,
    /// Optional Gaussian measurement noise, off by default.
    pub noise_position_sigma: f64,
    pub noise_attitude_sigma: f64,
}

impl Default for SimTable {
    fn default() -> Self {
        Self {
            f_pos: 10.0,
            f_att: 500.0,
            noise_position_sigma: 0.0,
            noise_attitude_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ObstacleKind {
    Linear,
    Circle,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ObstacleTable {
    pub kind: ObstacleKind,
    /// Linear path: start position and constant velocity.
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    /// Circular path (x-y plane) parameters.
    pub center: [f64; 3],
    pub orbit_radius: f64,
    pub period: f64,
    pub phase: f64,
    pub clockwise: bool,
    /// Sphere radius, m.
    pub radius: f64,
    /// Activation time, s.
    pub t_start: f64,
}

impl Default for ObstacleTable {
    fn default() -> Self {
        Self {
            kind: ObstacleKind::Linear,
            position: [0.0; 3],
            velocity: [0.0; 3],
            center: [0.0; 3],
            orbit_radius: 1.0,
            period: 15.0,
            phase: 0.0,
            clockwise: true,
            radius: 0.5,
            t_start: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ClutterTable {
    pub count: usize,
    pub box_min: [f64; 3],
    pub box_max: [f64; 3],
    pub radius_min: f64,
    pub radius_max: f64,
}

impl Default for ClutterTable {
    fn default() -> Self {
        Self {
            count: 0,
            box_min: [-4.0, -4.0, -2.0],
            box_max: [4.0, 4.0, 2.0],
            radius_min: 0.2,
            radius_max: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKindTable {
    Hover,
    Setpoint,
    Circle,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioTable {
    pub kind: ReferenceKindTable,
    pub duration: f64,
    pub seed: u64,
    /// Hover / setpoint target.
    pub setpoint: [f64; 3],
    /// Circle parameters.
    pub r_c: f64,
    pub period: f64,
    pub center: [f64; 3],
    /// Explicit obstacles.
    pub obstacles: Vec<ObstacleTable>,
    /// Randomly generated static clutter (merged with `obstacles`).
    pub clutter: ClutterTable,
    /// Optional state box (enables the box rows of the predictive controller).
    pub box_min: Option<[f64; 3]>,
    pub box_max: Option<[f64; 3]>,
    /// Initial-state overrides; on-reference start when absent.
    pub initial_euler_deg: Option<[f64; 3]>,
    pub initial_position: Option<[f64; 3]>,
    pub initial_velocity: Option<[f64; 3]>,
}

impl Default for ScenarioTable {
    fn default() -> Self {
        Self {
            kind: ReferenceKindTable::Hover,
            duration: 10.0,
            seed: 1,
            setpoint: [0.0, 0.0, 0.0],
            r_c: 1.5,
            period: 8.0,
            center: [0.0, 0.0, 0.0],
            obstacles: Vec::new(),
            clutter: ClutterTable::default(),
            box_min: None,
            box_max: None,
            initial_euler_deg: None,
            initial_position: None,
            initial_velocity: None,
        }
    }
}

/// Full configuration document.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub plant: PlantTable,
    pub ea: EaTable,
    pub clf: PositionClfTable,
    pub attitude_qp: AttitudeQpTable,
    pub mpcbf: MpcbfTable,
    pub safety: SafetyTable,
    pub sim: SimTable,
    pub scenario: ScenarioTable,
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if self.plant.m <= 0.0 {
            return fail(format!("plant.m must be positive, got {}", self.plant.m));
        }
        if self.plant.j_diag.iter().any(|&j| j <= 0.0) {
            return fail("plant.j_diag entries must be positive".into());
        }
        if self.plant.f_max <= 0.0 {
            return fail("plant.f_max must be positive".into());
        }
        if self.plant.tau_max.iter().any(|&t| t <= 0.0) {
            return fail("plant.tau_max entries must be positive".into());
        }
        let ea = &self.ea;
        for (name, g) in [("k", ea.k), ("k_v", ea.k_v), ("k_p", ea.k_p), ("k_i", ea.k_i), ("k_d", ea.k_d)] {
            if g.iter().any(|&v| v < 0.0) {
                return fail(format!("ea.{name} entries must be nonnegative"));
            }
        }
        if !self.position_clf().is_positive_definite(self.plant.m) {
            return fail(format!(
                "clf: per-axis form [[k_x/2, eps_x/2], [eps_x/2, m/2]] is not positive definite (k_x = {}, eps_x = {}, m = {})",
                self.clf.k_x, self.clf.eps_x, self.plant.m
            ));
        }
        if self.attitude_qp.q_r_diag.iter().any(|&q| q <= 0.0) {
            return fail("attitude_qp.q_r_diag entries must be positive".into());
        }
        if self.attitude_qp.gamma <= 0.0 {
            return fail("attitude_qp.gamma must be positive".into());
        }
        if self.attitude_qp.sigma0 <= 0.0 || self.attitude_qp.k_sigma <= 0.0 {
            return fail("attitude_qp sigma shape requires sigma0 > 0 and k_sigma > 0".into());
        }
        if !self.attitude_cbf().sigma_bound_ok() {
            return fail(format!(
                "attitude_qp: sigma(0) = {} must stay below (beta - 1) b = {}",
                self.attitude_qp.sigma0,
                (self.attitude_qp.beta - 1.0) * self.attitude_qp.b
            ));
        }
        let mp = &self.mpcbf;
        if mp.t_s <= 0.0 {
            return fail("mpcbf.t_s must be positive".into());
        }
        if mp.n_c == 0 || mp.n_c > mp.n {
            return fail(format!(
                "mpcbf: control horizon must satisfy 0 < n_c <= n, got n_c = {}, n = {}",
                mp.n_c, mp.n
            ));
        }
        if mp.q_slack <= 0.0 {
            return fail("mpcbf.q_slack must be positive".into());
        }
        if mp.gamma <= 0.0 {
            return fail("mpcbf.gamma must be positive".into());
        }
        if mp.q_diag.iter().chain(&mp.q_final_diag).chain(&mp.r_diag).chain(&mp.r_delta_diag).any(|&v| v < 0.0) {
            return fail("mpcbf weight diagonals must be nonnegative".into());
        }
        if self.safety.r_robot <= 0.0 || self.safety.r_safety < 0.0 {
            return fail("safety requires r_robot > 0 and r_safety >= 0".into());
        }
        let sim = &self.sim;
        if sim.f_pos <= 0.0 || sim.f_att <= 0.0 {
            return fail("sim rates must be positive".into());
        }
        let ratio = sim.f_att / sim.f_pos;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return fail(format!(
                "sim.f_att ({}) must be an integer multiple of sim.f_pos ({})",
                sim.f_att, sim.f_pos
            ));
        }
        let sc = &self.scenario;
        if sc.duration <= 0.0 {
            return fail("scenario.duration must be positive".into());
        }
        if sc.kind == ReferenceKindTable::Circle && (sc.r_c <= 0.0 || sc.period <= 0.0) {
            return fail("circle scenario requires r_c > 0 and period > 0".into());
        }
        for (i, o) in sc.obstacles.iter().enumerate() {
            if o.radius <= 0.0 {
                return fail(format!("scenario.obstacles[{i}].radius must be positive"));
            }
            if o.kind == ObstacleKind::Circle && (o.orbit_radius <= 0.0 || o.period <= 0.0) {
                return fail(format!(
                    "scenario.obstacles[{i}]: circular path requires orbit_radius > 0 and period > 0"
                ));
            }
        }
        if sc.clutter.count > 0 {
            if sc.clutter.radius_min <= 0.0 || sc.clutter.radius_max < sc.clutter.radius_min {
                return fail("scenario.clutter radius range must satisfy 0 < min <= max".into());
            }
            for i in 0..3 {
                if sc.clutter.box_min[i] > sc.clutter.box_max[i] {
                    return fail("scenario.clutter box must be well-ordered".into());
                }
            }
        }
        if let (Some(lo), Some(hi)) = (sc.box_min, sc.box_max) {
            for i in 0..3 {
                if lo[i] > hi[i] {
                    return fail("scenario box must be well-ordered".into());
                }
            }
        } else if sc.box_min.is_some() != sc.box_max.is_some() {
            return fail("scenario box needs both box_min and box_max".into());
        }
        Ok(())
    }

    pub fn plant_params(&self) -> PlantParams {
        PlantParams {
            mass: self.plant.m,
            inertia: Matrix3::from_diagonal(&vec3(self.plant.j_diag)),
            gravity: self.plant.g,
            f_max: self.plant.f_max,
            tau_max: vec3(self.plant.tau_max),
        }
    }

    pub fn ea_gains(&self) -> EaGains {
        EaGains {
            k: vec3(self.ea.k),
            k_v: vec3(self.ea.k_v),
            k_p: vec3(self.ea.k_p),
            k_i: vec3(self.ea.k_i),
            k_d: vec3(self.ea.k_d),
        }
    }

    pub fn position_clf(&self) -> PositionClfParams {
        PositionClfParams {
            k_x: self.clf.k_x,
            eps_x: self.clf.eps_x,
            q_x: Matrix3::from_diagonal(&vec3(self.clf.q_x_diag)),
            c_x: vec3(self.clf.c_x),
            eta_x: self.clf.eta_x,
        }
    }

    pub fn attitude_clf(&self) -> AttitudeClfParams {
        AttitudeClfParams {
            k_j: Matrix3::from_diagonal(&vec3(self.attitude_qp.k_j_diag)),
            c_r: Matrix3::from_diagonal(&vec3(self.attitude_qp.c_r_diag)),
            e_r: Matrix3::from_diagonal(&vec3(self.attitude_qp.e_r_diag)),
            q_r: self.attitude_qp.q_r_diag,
            eta_r: self.attitude_qp.eta_r,
        }
    }

    pub fn attitude_cbf(&self) -> AttitudeCbfParams {
        AttitudeCbfParams {
            gamma: self.attitude_qp.gamma,
            beta: self.attitude_qp.beta,
            b: self.attitude_qp.b,
            sigma0: self.attitude_qp.sigma0,
            k_sigma: self.attitude_qp.k_sigma,
        }
    }

    pub fn safety_geometry(&self) -> SafetyGeometry {
        SafetyGeometry {
            r_robot: self.safety.r_robot,
            r_safety: self.safety.r_safety,
        }
    }

    pub fn mpcbf_config(&self) -> MpcbfConfig {
        let sc = &self.scenario;
        let bounds = match (sc.box_min, sc.box_max) {
            (Some(lo), Some(hi)) => Some(BoxBounds { min: vec3(lo), max: vec3(hi) }),
            _ => None,
        };
        MpcbfConfig {
            t_s: self.mpcbf.t_s,
            n: self.mpcbf.n,
            n_c: self.mpcbf.n_c,
            q_diag: self.mpcbf.q_diag,
            q_final_diag: self.mpcbf.q_final_diag,
            r_diag: self.mpcbf.r_diag,
            r_delta_diag: self.mpcbf.r_delta_diag,
            q_slack: self.mpcbf.q_slack,
            eta_x: self.mpcbf.eta_x,
            gamma: self.mpcbf.gamma,
            bounds,
            f_max: self.plant.f_max,
        }
    }

    /// Resolves the scenario, generating clutter from the seed if requested.
    pub fn scenario_spec(&self) -> Result<ScenarioSpec, ConfigError> {
        let sc = &self.scenario;
        let reference = match sc.kind {
            ReferenceKindTable::Hover | ReferenceKindTable::Setpoint => {
                ReferenceKind::Setpoint { point: vec3(sc.setpoint) }
            }
            ReferenceKindTable::Circle => ReferenceKind::Circle {
                r_c: sc.r_c,
                period: sc.period,
                center: vec3(sc.center),
            },
        };
        let mut obstacles: Vec<Obstacle> = sc
            .obstacles
            .iter()
            .map(|o| Obstacle {
                motion: match o.kind {
                    ObstacleKind::Linear => ObstacleMotion::Linear {
                        start: vec3(o.position),
                        velocity: vec3(o.velocity),
                    },
                    ObstacleKind::Circle => ObstacleMotion::Circular {
                        center: vec3(o.center),
                        orbit_radius: o.orbit_radius,
                        period: o.period,
                        phase: o.phase,
                        clockwise: o.clockwise,
                    },
                },
                radius: o.radius,
                t_start: o.t_start,
            })
            .collect();
        if sc.clutter.count > 0 {
            let start = sc
                .initial_position
                .map(vec3)
                .unwrap_or_else(|| reference.sample(0.0).position);
            let generated = generate_cluttered(
                sc.clutter.count,
                &BoxBounds { min: vec3(sc.clutter.box_min), max: vec3(sc.clutter.box_max) },
                (sc.clutter.radius_min, sc.clutter.radius_max),
                sc.seed,
                &start,
                &self.safety_geometry(),
            )
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            obstacles.extend(generated);
        }
        Ok(ScenarioSpec {
            reference,
            obstacles,
            duration: sc.duration,
            bounds: match (sc.box_min, sc.box_max) {
                (Some(lo), Some(hi)) => Some(BoxBounds { min: vec3(lo), max: vec3(hi) }),
                _ => None,
            },
            seed: sc.seed,
            initial_attitude: sc
                .initial_euler_deg
                .map(|e| EulerZyx::from_degrees(e[0], e[1], e[2])),
            initial_position: sc.initial_position.map(vec3),
            initial_velocity: sc.initial_velocity.map(vec3),
        })
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Serializes a configuration back to its normalized document form.
pub fn serialize_config(cfg: &Config) -> String {
    toml::to_string_pretty(cfg).expect("config serializes")
}

/// Applies dotted-key overrides (`mpcbf.n_c = 5`) on top of a document and
/// re-validates. Values are parsed as TOML literals, falling back to strings.
pub fn apply_overrides(text: &str, overrides: &[(String, String)]) -> Result<Config, ConfigError> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    for (path, raw) in overrides {
        let value: toml::Value = match format!("v = {raw}").parse::<toml::Table>() {
            Ok(mut t) => t.remove("v").unwrap(),
            Err(_) => toml::Value::String(raw.clone()),
        };
        set_path(&mut table, path, value)
            .map_err(|msg| ConfigError::Override(path.clone(), msg))?;
    }
    let text = toml::to_string(&table).map_err(|e| ConfigError::Parse(e.to_string()))?;
    parse_config(&text)
}

fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), String> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err("empty key segment".into());
    }
    let mut current = table;
    for part in &parts[..parts.len() - 1] {
        current = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| format!("'{part}' is not a table"))?;
    }
    current.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
