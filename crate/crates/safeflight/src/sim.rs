//! Two-rate closed-loop simulation engine (position loop + attitude loop on
//! the same clock grid), motor mixing and the comparison metrics.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use thiserror::Error;

use crate::config::Config;
use crate::controllers::attitude_qp::ObstacleSnapshot;
use crate::controllers::{
    clf_cbf_attitude_qp, clf_position_qp, desired_attitude, ea_attitude_pid, ea_position,
    obstacle_active, thrust_projection, AttitudeCbfParams, AttitudeClfParams, EaGains, PidState,
    PositionClfParams,
};
use crate::dynamics::{
    integrate_step, saturate_command, ControlCommand, PlantParams, PlantState,
};
use crate::mpcbf::{MpcbfConfig, MpcbfController, MpcbfDebug};
use crate::qp::{QpSolver, QpStatus};
use crate::scenario::{augmented_radius, ReferencePoint, SafetyGeometry, ScenarioSpec};
use crate::so3::{euler_to_rotation, rotation_to_euler, EulerZyx, Rotation};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("metrics window [{0}, {1}] selects no samples")]
    EmptyWindow(f64, f64),
}

/// Which cascaded controller pair drives the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerId {
    /// Euler-Angle position PD + attitude PID.
    Ea,
    /// CLF position QP + CLF-CBF attitude QP.
    ClfCbfQp,
    /// Predictive position controller + Euler-Angle attitude PID.
    Mpcbf,
}

impl ControllerId {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ea" => Some(Self::Ea),
            "clf-cbf-qp" => Some(Self::ClfCbfQp),
            "mpcbf" => Some(Self::Mpcbf),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Ea => "ea",
            Self::ClfCbfQp => "clf-cbf-qp",
            Self::Mpcbf => "mpcbf",
        }
    }
}

/// Loop rates, duration and initial state of one run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub f_pos: f64,
    pub f_att: f64,
    pub duration: f64,
    pub controller: ControllerId,
    pub initial: PlantState,
    pub noise_position_sigma: f64,
    pub noise_attitude_sigma: f64,
    pub seed: u64,
}

/// All controller parameters a run needs.
#[derive(Debug, Clone)]
pub struct ControllerSet {
    pub plant: PlantParams,
    pub ea: EaGains,
    pub position_clf: PositionClfParams,
    pub attitude_clf: AttitudeClfParams,
    pub attitude_cbf: AttitudeCbfParams,
    pub mpcbf: MpcbfConfig,
    pub safety: SafetyGeometry,
}

impl Config {
    pub fn controller_set(&self) -> ControllerSet {
        ControllerSet {
            plant: self.plant_params(),
            ea: self.ea_gains(),
            position_clf: self.position_clf(),
            attitude_clf: self.attitude_clf(),
            attitude_cbf: self.attitude_cbf(),
            mpcbf: self.mpcbf_config(),
            safety: self.safety_geometry(),
        }
    }

    /// Resolves the initial plant state of a scenario: on-reference unless
    /// overridden.
    pub fn sim_config(
        &self,
        spec: &ScenarioSpec,
        controller: ControllerId,
    ) -> SimConfig {
        let r0 = spec.reference.sample(0.0);
        let position = spec.initial_position.unwrap_or(r0.position);
        let velocity = spec.initial_velocity.unwrap_or(r0.velocity);
        let rotation = spec
            .initial_attitude
            .map(|e| euler_to_rotation(&e))
            .unwrap_or_else(|| Rotation::yaw(r0.yaw));
        SimConfig {
            f_pos: self.sim.f_pos,
            f_att: self.sim.f_att,
            duration: spec.duration,
            controller,
            initial: PlantState {
                position,
                velocity,
                rotation,
                omega: Vector3::zeros(),
            },
            noise_position_sigma: self.sim.noise_position_sigma,
            noise_attitude_sigma: self.sim.noise_attitude_sigma,
            seed: spec.seed,
        }
    }
}

/// One attitude-rate sample of the closed loop.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub t: f64,
    pub state: PlantState,
    pub euler: Option<EulerZyx>,
    pub reference: ReferencePoint,
    pub f_des: Vector3<f64>,
    /// Post-saturation command actually applied to the plant.
    pub command: ControlCommand,
    pub motor_fractions: [f64; 4],
    /// Clearance `|x - x_o| - r_tilde` per obstacle (inactive -> +inf).
    pub clearances: Vec<f64>,
    pub position_status: Option<QpStatus>,
    pub attitude_status: Option<QpStatus>,
    /// Largest slack magnitude of the tick's solves.
    pub delta: f64,
    /// Barrier rows dropped this tick.
    pub dropped_rows: usize,
    /// Position-loop solve wall time in seconds (0 between position ticks).
    pub solve_time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub controller: String,
    pub duration_completed: f64,
    pub e_mean: f64,
    pub e_mean_axis: [f64; 3],
    pub energy_proxy: f64,
    pub settling_times: [f64; 3],
    pub settled: [bool; 3],
    pub min_clearance: Option<f64>,
    pub collision_count: usize,
    pub collision_intervals: Vec<[f64; 2]>,
    pub infeasible_solves: usize,
    pub dropped_rows: usize,
    pub hard_infeasible_ticks: usize,
    pub fallback_ticks: usize,
    pub max_position_solve_time: f64,
    pub blowup: bool,
    pub seed: u64,
}

#[derive(Debug)]
pub struct SimResult {
    pub trace: Vec<TraceRecord>,
    pub metrics: MetricsReport,
    pub mpcbf_debug: Vec<(f64, MpcbfDebug)>,
}

/// Normalized per-motor thrust fractions for an X-configuration: moments are
/// scaled by their maxima, clamped to the headroom `min(s_f, 1 - s_f)`,
/// added to the scaled collective thrust and clamped to [0, 1].
pub fn mix_motors(c: &ControlCommand, p: &PlantParams) -> [f64; 4] {
    // (roll, pitch, yaw) signs: motor 1 front-right, 2 back-left,
    // 3 front-left, 4 back-right; 3 and 4 yaw positive.
    const SIGNS: [[f64; 3]; 4] = [
        [-1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0],
        [1.0, 1.0, 1.0],
        [-1.0, -1.0, 1.0],
    ];
    let s_f = (c.thrust / p.f_max).clamp(0.0, 1.0);
    let headroom = s_f.min(1.0 - s_f);
    let scaled = Vector3::new(
        (c.moment.x / p.tau_max.x).clamp(-1.0, 1.0),
        (c.moment.y / p.tau_max.y).clamp(-1.0, 1.0),
        (c.moment.z / p.tau_max.z).clamp(-1.0, 1.0),
    );
    let mut out = [0.0; 4];
    for (i, signs) in SIGNS.iter().enumerate() {
        let m = signs[0] * scaled.x + signs[1] * scaled.y + signs[2] * scaled.z;
        out[i] = (s_f + m.clamp(-headroom, headroom)).clamp(0.0, 1.0);
    }
    out
}

/// Time-averaged Euclidean tracking error over `[t_start, t_end]`.
pub fn mean_error(trace: &[TraceRecord], t_start: f64, t_end: f64) -> Result<f64, SimError> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for r in trace {
        if r.t >= t_start && r.t <= t_end {
            sum += (r.state.position - r.reference.position).norm();
            count += 1;
        }
    }
    if count == 0 {
        return Err(SimError::EmptyWindow(t_start, t_end));
    }
    Ok(sum / count as f64)
}

fn mean_error_axis(trace: &[TraceRecord]) -> [f64; 3] {
    let mut sum = [0.0; 3];
    for r in trace {
        for i in 0..3 {
            sum[i] += (r.state.position[i] - r.reference.position[i]).abs();
        }
    }
    let n = trace.len().max(1) as f64;
    [sum[0] / n, sum[1] / n, sum[2] / n]
}

/// Expected-energy proxy `1/f_att * sum_t sum_i f_i(t)^2` with the per-motor
/// thrust `f_i = fraction_i * f_max / 4`.
pub fn energy_proxy(trace: &[TraceRecord], p: &PlantParams, f_att: f64) -> f64 {
    let scale = p.f_max / 4.0;
    let mut total = 0.0;
    for r in trace {
        for f in r.motor_fractions {
            total += (f * scale) * (f * scale);
        }
    }
    total / f_att
}

/// First time after which `|signal|` stays within `band * |signal(0)|`.
/// Returns `(duration, false)` when it never settles inside the trace.
pub fn settling_time(times: &[f64], signal: &[f64], band: f64) -> (f64, bool) {
    assert_eq!(times.len(), signal.len());
    if signal.is_empty() {
        return (0.0, true);
    }
    let threshold = band * signal[0].abs();
    let mut last_violation: Option<usize> = None;
    for (i, v) in signal.iter().enumerate() {
        if v.abs() > threshold {
            last_violation = Some(i);
        }
    }
    match last_violation {
        None => (0.0, true),
        Some(i) if i + 1 >= times.len() => (*times.last().unwrap(), false),
        Some(i) => (times[i + 1], true),
    }
}

/// Minimum clearance and the contiguous intervals with clearance < 0.
pub fn safety_audit(trace: &[TraceRecord]) -> (Option<f64>, Vec<[f64; 2]>) {
    let mut min_clearance: Option<f64> = None;
    let mut intervals = Vec::new();
    let mut open: Option<f64> = None;
    for r in trace {
        let c = r.clearances.iter().cloned().fold(f64::INFINITY, f64::min);
        if c.is_finite() {
            min_clearance = Some(min_clearance.map_or(c, |m: f64| m.min(c)));
        }
        if c < 0.0 {
            if open.is_none() {
                open = Some(r.t);
            }
        } else if let Some(start) = open.take() {
            intervals.push([start, r.t]);
        }
    }
    if let (Some(start), Some(last)) = (open, trace.last()) {
        intervals.push([start, last.t]);
    }
    (min_clearance, intervals)
}

/// Runs one closed-loop simulation.
pub fn run_simulation(spec: &ScenarioSpec, sim: &SimConfig, set: &ControllerSet) -> SimResult {
    let dt = 1.0 / sim.f_att;
    let ratio = (sim.f_att / sim.f_pos).round() as usize;
    let n_ticks = (sim.duration * sim.f_att).round() as usize;
    let solver = QpSolver::default();

    let mut mpcbf = match sim.controller {
        ControllerId::Mpcbf => Some(MpcbfController::new(
            set.mpcbf.clone(),
            set.position_clf.clone(),
            set.plant.clone(),
        )),
        _ => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let noisy = sim.noise_position_sigma > 0.0 || sim.noise_attitude_sigma > 0.0;

    let r_tildes: Vec<f64> = spec
        .obstacles
        .iter()
        .map(|o| augmented_radius(o, &set.safety))
        .collect();

    let mut state = sim.initial;
    let mut pid = PidState::default();
    let mut f_des = Vector3::new(0.0, 0.0, set.plant.hover_thrust());
    let mut r_c = state.rotation;
    let mut position_status: Option<QpStatus> = None;
    let mut trace: Vec<TraceRecord> = Vec::with_capacity(n_ticks);
    let mut mpcbf_debug = Vec::new();
    let mut infeasible_solves = 0usize;
    let mut dropped_total = 0usize;
    let mut hard_infeasible_ticks = 0usize;
    let mut fallback_ticks = 0usize;
    let mut max_solve_time = 0.0f64;
    let mut blowup = false;

    for tick in 0..n_ticks {
        let t = tick as f64 * dt;
        let reference = spec.reference.sample(t);

        // Measurement (optionally noisy; the plant itself stays exact).
        let measured = if noisy {
            let mut m = state;
            for i in 0..3 {
                m.position[i] += sim.noise_position_sigma * noise.sample(&mut rng);
            }
            if sim.noise_attitude_sigma > 0.0 {
                let p = EulerZyx::new(
                    sim.noise_attitude_sigma * noise.sample(&mut rng),
                    sim.noise_attitude_sigma * noise.sample(&mut rng),
                    sim.noise_attitude_sigma * noise.sample(&mut rng),
                );
                m.rotation = m.rotation * euler_to_rotation(&p);
            }
            m
        } else {
            state
        };

        // Position loop.
        let mut tick_delta = 0.0f64;
        let mut tick_dropped = 0usize;
        let mut solve_time = 0.0f64;
        if tick % ratio == 0 {
            match sim.controller {
                ControllerId::Ea => {
                    f_des = ea_position(&measured, &reference, &set.ea, &set.plant);
                    position_status = None;
                }
                ControllerId::ClfCbfQp => {
                    let start = std::time::Instant::now();
                    let out = clf_position_qp(
                        &measured,
                        &reference,
                        &set.position_clf,
                        &set.ea,
                        &set.plant,
                        &solver,
                    );
                    solve_time = start.elapsed().as_secs_f64();
                    f_des = out.f_des;
                    if out.fell_back {
                        fallback_ticks += 1;
                        infeasible_solves += 1;
                        position_status = Some(QpStatus::Infeasible);
                    } else {
                        position_status = Some(QpStatus::Optimal);
                    }
                }
                ControllerId::Mpcbf => {
                    let ctrl = mpcbf.as_mut().unwrap();
                    let x0 = measured.virtual_state();
                    let (f, sol) =
                        ctrl.step(&x0, t, &spec.reference, &spec.obstacles, &set.safety);
                    f_des = f;
                    solve_time = sol.debug.solve_time.as_secs_f64();
                    position_status = Some(sol.status);
                    if sol.status != QpStatus::Optimal {
                        infeasible_solves += 1;
                    }
                    if sol.hard_infeasible {
                        hard_infeasible_ticks += 1;
                    }
                    tick_dropped += sol.debug.dropped_rows;
                    tick_delta = sol
                        .slacks
                        .iter()
                        .fold(0.0f64, |acc, d| acc.max(d.abs()));
                    mpcbf_debug.push((t, sol.debug.clone()));
                }
            }
            max_solve_time = max_solve_time.max(solve_time);
        }

        // Attitude loop, every tick.
        r_c = desired_attitude(&f_des, reference.yaw).unwrap_or(r_c);
        let mut attitude_status = None;
        let command = match sim.controller {
            ControllerId::Ea | ControllerId::Mpcbf => {
                let thrust = thrust_projection(&f_des, &measured.rotation);
                let moment = ea_attitude_pid(
                    &measured,
                    &r_c,
                    &Vector3::zeros(),
                    &set.ea,
                    &mut pid,
                    dt,
                );
                ControlCommand { thrust, moment }
            }
            ControllerId::ClfCbfQp => {
                let mut snapshots = Vec::new();
                for (o, r_tilde) in spec.obstacles.iter().zip(&r_tildes) {
                    if let Some((pos, vel)) = o.state(t) {
                        if obstacle_active(
                            &measured.position,
                            &measured.velocity,
                            &pos,
                            &vel,
                            *r_tilde,
                        ) {
                            snapshots.push(ObstacleSnapshot {
                                position: pos,
                                velocity: vel,
                                r_tilde: *r_tilde,
                            });
                        }
                    }
                }
                match clf_cbf_attitude_qp(
                    &measured,
                    &f_des,
                    &r_c,
                    &Vector3::zeros(),
                    &snapshots,
                    &set.attitude_clf,
                    &set.attitude_cbf,
                    &set.plant,
                    &solver,
                ) {
                    Ok(out) => {
                        attitude_status = Some(out.status);
                        if out.status != QpStatus::Optimal {
                            infeasible_solves += 1;
                        }
                        tick_dropped += out.dropped_obstacles.len();
                        tick_delta = tick_delta.max(out.delta.abs());
                        ControlCommand { thrust: out.thrust, moment: out.moment }
                    }
                    Err(_) => {
                        hard_infeasible_ticks += 1;
                        attitude_status = Some(QpStatus::Infeasible);
                        // Degrade to the plain attitude PID so the platform
                        // keeps stabilizing while the optimizer is unusable.
                        let thrust = thrust_projection(&f_des, &measured.rotation);
                        let moment = ea_attitude_pid(
                            &measured,
                            &r_c,
                            &Vector3::zeros(),
                            &set.ea,
                            &mut pid,
                            dt,
                        );
                        ControlCommand { thrust, moment }
                    }
                }
            }
        };
        let (command, _saturated) = saturate_command(&command, &set.plant);
        dropped_total += tick_dropped;

        // Log before integrating so the record pairs state with the command
        // computed from it.
        let clearances: Vec<f64> = spec
            .obstacles
            .iter()
            .zip(&r_tildes)
            .map(|(o, r_tilde)| match o.state(t) {
                Some((pos, _)) => (state.position - pos).norm() - r_tilde,
                None => f64::INFINITY,
            })
            .collect();
        trace.push(TraceRecord {
            t,
            state,
            euler: rotation_to_euler(&state.rotation).ok(),
            reference,
            f_des,
            command,
            motor_fractions: mix_motors(&command, &set.plant),
            clearances,
            position_status,
            attitude_status,
            delta: tick_delta,
            dropped_rows: tick_dropped,
            solve_time,
        });

        match integrate_step(&state, &command, &set.plant, dt) {
            Ok(next) => state = next,
            Err(_) => {
                blowup = true;
                break;
            }
        }
    }

    let (min_clearance, collision_intervals) = safety_audit(&trace);
    let times: Vec<f64> = trace.iter().map(|r| r.t).collect();
    let mut settling_times = [0.0; 3];
    let mut settled = [true; 3];
    {
        // Per-axis attitude error signal (Euler angles of the state,
        // held through gimbal-locked samples).
        let mut last = [0.0; 3];
        let mut signals = vec![Vec::with_capacity(trace.len()); 3];
        for r in &trace {
            if let Some(e) = r.euler {
                last = [e.roll, e.pitch, e.yaw];
            }
            for i in 0..3 {
                signals[i].push(last[i]);
            }
        }
        for i in 0..3 {
            let (ts, ok) = settling_time(&times, &signals[i], 0.05);
            settling_times[i] = ts;
            settled[i] = ok;
        }
    }
    let e_mean = if trace.is_empty() {
        0.0
    } else {
        mean_error(&trace, 0.0, f64::INFINITY).unwrap_or(0.0)
    };
    let metrics = MetricsReport {
        controller: sim.controller.as_str().to_string(),
        duration_completed: trace.last().map_or(0.0, |r| r.t + dt),
        e_mean,
        e_mean_axis: mean_error_axis(&trace),
        energy_proxy: energy_proxy(&trace, &set.plant, sim.f_att),
        settling_times,
        settled,
        min_clearance,
        collision_count: collision_intervals.len(),
        collision_intervals,
        infeasible_solves,
        dropped_rows: dropped_total,
        hard_infeasible_ticks,
        fallback_ticks,
        max_position_solve_time: max_solve_time,
        blowup,
        seed: sim.seed,
    };
    SimResult { trace, metrics, mpcbf_debug }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use approx::assert_abs_diff_eq;

    fn hover_run(controller: ControllerId, duration: f64) -> SimResult {
        let cfg = parse_config(&format!(
            "[scenario]\nkind = \"hover\"\nduration = {duration}\n"
        ))
        .unwrap();
        let spec = cfg.scenario_spec().unwrap();
        let sim = cfg.sim_config(&spec, controller);
        run_simulation(&spec, &sim, &cfg.controller_set())
    }

    #[test]
    fn steps_per_position_update_is_fifty_at_default_rates() {
        let cfg = parse_config("").unwrap();
        assert_eq!((cfg.sim.f_att / cfg.sim.f_pos).round() as usize, 50);
    }

    #[test]
    fn hover_with_ea_is_millimeter_accurate() {
        let out = hover_run(ControllerId::Ea, 5.0);
        assert!(!out.metrics.blowup);
        // Steady state after the first second.
        let steady = mean_error(&out.trace, 1.0, 5.0).unwrap();
        assert!(steady < 1e-3, "steady-state error {steady}");
    }

    #[test]
    fn fresh_f_des_every_position_period() {
        // The position loop runs on schedule: with a ramping reference the
        // commanded f_des must change at every position tick.
        let cfg = parse_config(
            "[scenario]\nkind = \"circle\"\nr_c = 1.5\nperiod = 8.0\nduration = 1.0\n",
        )
        .unwrap();
        let spec = cfg.scenario_spec().unwrap();
        let sim = cfg.sim_config(&spec, ControllerId::Ea);
        let out = run_simulation(&spec, &sim, &cfg.controller_set());
        let ratio = 50;
        for chunk in out.trace.chunks(ratio).take(9) {
            let first = chunk[0].f_des;
            for r in chunk {
                assert_eq!(r.f_des, first, "f_des must hold within a position period");
            }
        }
        assert_ne!(out.trace[0].f_des, out.trace[ratio].f_des);
    }

    #[test]
    fn mix_motors_pure_thrust() {
        let cfg = parse_config("").unwrap();
        let p = cfg.plant_params();
        let c = ControlCommand { thrust: 0.4 * p.f_max, moment: Vector3::zeros() };
        let f = mix_motors(&c, &p);
        for v in f {
            assert_abs_diff_eq!(v, 0.4, epsilon = 1e-12);
        }
    }

    #[test]
    fn mix_motors_yaw_headroom() {
        // 30% thrust and full positive yaw: motors 3 and 4 rise to 0.6, the
        // counter-rotating pair drops to zero.
        let cfg = parse_config("").unwrap();
        let p = cfg.plant_params();
        let c = ControlCommand {
            thrust: 0.3 * p.f_max,
            moment: Vector3::new(0.0, 0.0, p.tau_max.z),
        };
        let f = mix_motors(&c, &p);
        assert_abs_diff_eq!(f[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f[2], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(f[3], 0.6, epsilon = 1e-12);
    }

    #[test]
    fn mix_motors_output_range() {
        let cfg = parse_config("").unwrap();
        let p = cfg.plant_params();
        for thrust in [-5.0, 0.0, 10.0, 20.0, 40.0] {
            for m in [
                Vector3::new(5.0, -5.0, 1.0),
                Vector3::new(-0.5, 0.2, -0.1),
                Vector3::zeros(),
            ] {
                let f = mix_motors(&ControlCommand { thrust, moment: m }, &p);
                for v in f {
                    assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }

    #[test]
    fn mean_error_examples() {
        let cfg = parse_config("").unwrap();
        let spec = cfg.scenario_spec().unwrap();
        let sim = cfg.sim_config(&spec, ControllerId::Ea);
        let mut out = run_simulation(&spec, &sim, &cfg.controller_set());
        // Identical trajectories: shift the recorded states onto the
        // reference.
        for r in &mut out.trace {
            r.state.position = r.reference.position;
        }
        assert_eq!(mean_error(&out.trace, 0.0, 10.0).unwrap(), 0.0);
        // Constant offset d on all samples -> d.
        for r in &mut out.trace {
            r.state.position = r.reference.position + Vector3::new(0.3, 0.0, 0.4);
        }
        assert_abs_diff_eq!(mean_error(&out.trace, 0.0, 10.0).unwrap(), 0.5, epsilon = 1e-12);
        assert!(mean_error(&out.trace, 100.0, 200.0).is_err());
    }

    #[test]
    fn mean_error_translation_invariance() {
        let mut a = hover_run(ControllerId::Ea, 2.0);
        let base = mean_error(&a.trace, 0.0, 2.0).unwrap();
        let shift = Vector3::new(10.0, -3.0, 2.0);
        for r in &mut a.trace {
            r.state.position += shift;
            r.reference.position += shift;
        }
        assert_abs_diff_eq!(mean_error(&a.trace, 0.0, 2.0).unwrap(), base, epsilon = 1e-12);
    }

    #[test]
    fn two_sample_mean() {
        let mut out = hover_run(ControllerId::Ea, 2.0);
        out.trace.truncate(2);
        out.trace[0].state.position = out.trace[0].reference.position + Vector3::x();
        out.trace[1].state.position = out.trace[1].reference.position + 3.0 * Vector3::x();
        assert_abs_diff_eq!(mean_error(&out.trace, 0.0, 1.0).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn energy_proxy_examples() {
        let cfg = parse_config("").unwrap();
        let p = cfg.plant_params();
        let mut out = hover_run(ControllerId::Ea, 2.0);
        let t_end = out.trace.last().unwrap().t + 1.0 / cfg.sim.f_att;
        // Zero thrust everywhere -> 0.
        for r in &mut out.trace {
            r.motor_fractions = [0.0; 4];
        }
        assert_eq!(energy_proxy(&out.trace, &p, cfg.sim.f_att), 0.0);
        // Constant hover: 4 (m g / 4)^2 t_end under the per-motor split.
        let hover_fraction = p.hover_thrust() / p.f_max;
        for r in &mut out.trace {
            r.motor_fractions = [hover_fraction; 4];
        }
        let expected = 4.0 * (p.hover_thrust() / 4.0).powi(2) * t_end;
        assert_abs_diff_eq!(
            energy_proxy(&out.trace, &p, cfg.sim.f_att),
            expected,
            epsilon = 1e-6
        );
    }

    #[test]
    fn energy_proxy_monotone_in_thrust() {
        let cfg = parse_config("").unwrap();
        let p = cfg.plant_params();
        let mut low = hover_run(ControllerId::Ea, 1.0);
        let mut high_trace = low.trace.clone();
        for r in &mut low.trace {
            r.motor_fractions = [0.3; 4];
        }
        for r in &mut high_trace {
            r.motor_fractions = [0.5; 4];
        }
        assert!(
            energy_proxy(&low.trace, &p, cfg.sim.f_att)
                < energy_proxy(&high_trace, &p, cfg.sim.f_att)
        );
    }

    #[test]
    fn settling_time_examples() {
        // Already settled.
        let times: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        let flat = vec![0.0; 100];
        assert_eq!(settling_time(&times, &flat, 0.05), (0.0, true));

        // Exact exponential with 5% band settles at ln(20).
        let times: Vec<f64> = (0..5000).map(|i| i as f64 * 0.002).collect();
        let exp_signal: Vec<f64> = times.iter().map(|t| (-t).exp()).collect();
        let (ts, ok) = settling_time(&times, &exp_signal, 0.05);
        assert!(ok);
        assert_abs_diff_eq!(ts, 20f64.ln(), epsilon = 0.01);

        // Tighter band -> later settling.
        let (ts2, _) = settling_time(&times, &exp_signal, 0.02);
        assert!(ts2 > ts);
    }

    #[test]
    fn safety_audit_examples() {
        let mut out = hover_run(ControllerId::Ea, 1.0);
        // No obstacles: infinite clearance marker, zero intervals.
        let (min_c, intervals) = safety_audit(&out.trace);
        assert!(min_c.is_none());
        assert!(intervals.is_empty());

        // Synthetic pass through a sphere: clearance dips below zero.
        let n = out.trace.len();
        for (i, r) in out.trace.iter_mut().enumerate() {
            let x = (i as f64 / n as f64 - 0.5) * 4.0; // -2 .. 2
            r.clearances = vec![x.abs() - 1.0];
        }
        let (min_c, intervals) = safety_audit(&out.trace);
        assert!(min_c.unwrap() <= -0.99);
        assert_eq!(intervals.len(), 1);
    }

    #[test]
    fn determinism_bit_identical_traces() {
        let a = hover_run(ControllerId::ClfCbfQp, 1.0);
        let b = hover_run(ControllerId::ClfCbfQp, 1.0);
        assert_eq!(a.trace.len(), b.trace.len());
        for (ra, rb) in a.trace.iter().zip(&b.trace) {
            assert_eq!(ra.state.position, rb.state.position);
            assert_eq!(ra.command.thrust, rb.command.thrust);
            assert_eq!(ra.command.moment, rb.command.moment);
        }
    }
}
