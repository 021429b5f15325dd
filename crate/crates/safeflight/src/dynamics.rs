//! Quadrotor plant: the full SE(3) simulation model, and the virtual
//! point-mass model with its zero-order-hold discretization used by the
//! predictive position controller.

use nalgebra::{Matrix3, Matrix6, SMatrix, Vector3, Vector4, Vector6};
use thiserror::Error;

use crate::so3::{hat, Rotation};

pub type Matrix6x4 = SMatrix<f64, 6, 4>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("state became non-finite during integration")]
    NumericalBlowup,
}

/// Physical parameters of the plant.
#[derive(Debug, Clone)]
pub struct PlantParams {
    /// Mass, kg.
    pub mass: f64,
    /// Body inertia, kg m^2.
    pub inertia: Matrix3<f64>,
    /// Gravitational acceleration, m/s^2.
    pub gravity: f64,
    /// Maximum collective thrust, N.
    pub f_max: f64,
    /// Per-axis moment limits, N m.
    pub tau_max: Vector3<f64>,
}

impl PlantParams {
    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.gravity
    }

    /// Hover input of the virtual model, `(m g e3, 1)`.
    pub fn hover_input(&self) -> Vector4<f64> {
        Vector4::new(0.0, 0.0, self.hover_thrust(), 1.0)
    }
}

/// Full rigid-body state.
#[derive(Debug, Clone, Copy)]
pub struct PlantState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub rotation: Rotation,
    /// Body angular rate, rad/s.
    pub omega: Vector3<f64>,
}

impl PlantState {
    pub fn at_rest(position: Vector3<f64>) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
            rotation: Rotation::identity(),
            omega: Vector3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.velocity.iter().all(|v| v.is_finite())
            && self.rotation.matrix().iter().all(|v| v.is_finite())
            && self.omega.iter().all(|v| v.is_finite())
    }

    /// Stacked `(position, velocity)` state of the virtual model.
    pub fn virtual_state(&self) -> Vector6<f64> {
        let mut x = Vector6::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.position);
        x.fixed_rows_mut::<3>(3).copy_from(&self.velocity);
        x
    }
}

/// Collective thrust plus body moment command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlCommand {
    /// Collective thrust, N.
    pub thrust: f64,
    /// Body moments, N m.
    pub moment: Vector3<f64>,
}

impl ControlCommand {
    pub fn hover(p: &PlantParams) -> Self {
        Self {
            thrust: p.hover_thrust(),
            moment: Vector3::zeros(),
        }
    }
}

/// Which command components `saturate_command` had to clamp.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SaturationEvent {
    pub thrust: bool,
    pub moment: [bool; 3],
}

impl SaturationEvent {
    pub fn any(&self) -> bool {
        self.thrust || self.moment.iter().any(|&m| m)
    }
}

/// Time derivative of a [`PlantState`] (rotation derivative as a raw matrix).
#[derive(Debug, Clone)]
pub struct StateDerivative {
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
    pub rotation_dot: Matrix3<f64>,
    pub omega_dot: Vector3<f64>,
}

/// Rigid-body dynamics: `m xdd = f R e3 - m g e3`, `Rd = R hat(w)`,
/// `J wd = tau - w x J w`.
pub fn se3_derivative(s: &PlantState, c: &ControlCommand, p: &PlantParams) -> StateDerivative {
    let e3 = Vector3::z();
    let acceleration = s.rotation.body_z() * (c.thrust / p.mass) - p.gravity * e3;
    let rotation_dot = s.rotation.matrix() * hat(&s.omega);
    let j_omega = p.inertia * s.omega;
    let omega_dot = p
        .inertia
        .try_inverse()
        .expect("inertia must be invertible")
        * (c.moment - s.omega.cross(&j_omega));
    StateDerivative {
        velocity: s.velocity,
        acceleration,
        rotation_dot,
        omega_dot,
    }
}

/// One classical RK4 step of [`se3_derivative`] followed by rotation
/// renormalization.
pub fn integrate_step(
    s: &PlantState,
    c: &ControlCommand,
    p: &PlantParams,
    dt: f64,
) -> Result<PlantState, DynamicsError> {
    debug_assert!(dt > 0.0);
    let k1 = se3_derivative(s, c, p);
    let k2 = se3_derivative(&advance(s, &k1, dt / 2.0), c, p);
    let k3 = se3_derivative(&advance(s, &k2, dt / 2.0), c, p);
    let k4 = se3_derivative(&advance(s, &k3, dt), c, p);

    let combined = StateDerivative {
        velocity: (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity) / 6.0,
        acceleration: (k1.acceleration
            + 2.0 * k2.acceleration
            + 2.0 * k3.acceleration
            + k4.acceleration)
            / 6.0,
        rotation_dot: (k1.rotation_dot
            + 2.0 * k2.rotation_dot
            + 2.0 * k3.rotation_dot
            + k4.rotation_dot)
            / 6.0,
        omega_dot: (k1.omega_dot + 2.0 * k2.omega_dot + 2.0 * k3.omega_dot + k4.omega_dot) / 6.0,
    };
    let mut next = advance(s, &combined, dt);
    next.rotation.renormalize();
    if !next.is_finite() {
        return Err(DynamicsError::NumericalBlowup);
    }
    Ok(next)
}

fn advance(s: &PlantState, d: &StateDerivative, dt: f64) -> PlantState {
    PlantState {
        position: s.position + d.velocity * dt,
        velocity: s.velocity + d.acceleration * dt,
        rotation: Rotation::from_matrix_unchecked(s.rotation.matrix() + d.rotation_dot * dt),
        omega: s.omega + d.omega_dot * dt,
    }
}

/// Continuous virtual point-mass model `(A, B)` with state `(x, v)` and
/// input `(f_des, 1)`; the constant fourth input component carries gravity.
pub fn virtual_model(p: &PlantParams) -> (Matrix6<f64>, Matrix6x4) {
    let mut a = Matrix6::zeros();
    a.fixed_view_mut::<3, 3>(0, 3).copy_from(&Matrix3::identity());
    let mut b = Matrix6x4::zeros();
    b.fixed_view_mut::<3, 3>(3, 0)
        .copy_from(&(Matrix3::identity() / p.mass));
    b[(5, 3)] = -p.gravity;
    (a, b)
}

/// Exact zero-order-hold discretization of the virtual model.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    pub phi: Matrix6<f64>,
    pub gamma: Matrix6x4,
    pub t_s: f64,
}

/// ZOH discretization. For the nilpotent double-integrator `A` the closed
/// forms are `Phi = [[I, Ts I], [0, I]]` and
/// `Gamma = [[Ts^2/(2m) I, -g Ts^2/2 e3], [Ts/m I, -g Ts e3]]`.
pub fn discretize_zoh(p: &PlantParams, t_s: f64) -> DiscreteModel {
    debug_assert!(t_s > 0.0);
    let mut phi = Matrix6::identity();
    phi.fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(Matrix3::identity() * t_s));

    let mut gamma = Matrix6x4::zeros();
    gamma
        .fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(Matrix3::identity() * (t_s * t_s / (2.0 * p.mass))));
    gamma
        .fixed_view_mut::<3, 3>(3, 0)
        .copy_from(&(Matrix3::identity() * (t_s / p.mass)));
    gamma[(2, 3)] = -p.gravity * t_s * t_s / 2.0;
    gamma[(5, 3)] = -p.gravity * t_s;

    DiscreteModel { phi, gamma, t_s }
}

/// One discrete step `x+ = Phi x + Gamma u`.
pub fn propagate(x: &Vector6<f64>, u: &Vector4<f64>, dm: &DiscreteModel) -> Vector6<f64> {
    debug_assert!((u[3] - 1.0).abs() < 1e-12, "fourth input component must be 1");
    dm.phi * x + dm.gamma * u
}

/// Clamps thrust to `[0, f_max]` and moments to `+/- tau_max` componentwise.
pub fn saturate_command(c: &ControlCommand, p: &PlantParams) -> (ControlCommand, SaturationEvent) {
    let mut event = SaturationEvent::default();
    let thrust = c.thrust.clamp(0.0, p.f_max);
    event.thrust = thrust != c.thrust;
    let mut moment = c.moment;
    for i in 0..3 {
        let clamped = moment[i].clamp(-p.tau_max[i], p.tau_max[i]);
        event.moment[i] = clamped != moment[i];
        moment[i] = clamped;
    }
    (ControlCommand { thrust, moment }, event)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params() -> PlantParams {
        Config::default().plant_params()
    }

    /// Truncated series `Phi = sum A^k Ts^k / k!`,
    /// `Gamma = sum A^k Ts^(k+1) / (k+1)! B`, 20 terms.
    fn series_oracle(a: &Matrix6<f64>, b: &Matrix6x4, t_s: f64) -> (Matrix6<f64>, Matrix6x4) {
        let mut phi = Matrix6::identity();
        let mut gamma_factor = Matrix6::identity() * t_s;
        let mut a_pow = Matrix6::identity();
        let mut factorial = 1.0;
        for k in 1..=20 {
            a_pow *= a;
            factorial *= k as f64;
            phi += a_pow * (t_s.powi(k) / factorial);
            gamma_factor += a_pow * (t_s.powi(k + 1) / (factorial * (k + 1) as f64));
        }
        (phi, gamma_factor * b)
    }

    #[test]
    fn hover_is_equilibrium_of_derivative() {
        let p = params();
        let s = PlantState::at_rest(Vector3::zeros());
        let d = se3_derivative(&s, &ControlCommand::hover(&p), &p);
        assert_abs_diff_eq!(d.acceleration, Vector3::zeros(), epsilon = 1e-15);
        assert_abs_diff_eq!(d.omega_dot, Vector3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn zero_thrust_free_fall() {
        let p = params();
        let s = PlantState::at_rest(Vector3::zeros());
        let c = ControlCommand {
            thrust: 0.0,
            moment: Vector3::zeros(),
        };
        let d = se3_derivative(&s, &c, &p);
        assert_abs_diff_eq!(
            d.acceleration,
            Vector3::new(0.0, 0.0, -p.gravity),
            epsilon = 1e-15
        );
    }

    #[test]
    fn principal_axis_spin_is_torque_free_equilibrium() {
        let p = params();
        let mut s = PlantState::at_rest(Vector3::zeros());
        s.omega = Vector3::new(0.0, 0.0, 1.0);
        let c = ControlCommand {
            thrust: 0.0,
            moment: Vector3::zeros(),
        };
        let d = se3_derivative(&s, &c, &p);
        assert_abs_diff_eq!(d.omega_dot, Vector3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn hover_step_leaves_state_unchanged() {
        let p = params();
        let s = PlantState::at_rest(Vector3::new(1.0, -2.0, 0.5));
        let next = integrate_step(&s, &ControlCommand::hover(&p), &p, 0.05).unwrap();
        assert_abs_diff_eq!(next.position, s.position, epsilon = 1e-12);
        assert_abs_diff_eq!(next.velocity, s.velocity, epsilon = 1e-12);
        assert_abs_diff_eq!(next.omega, s.omega, epsilon = 1e-12);
    }

    #[test]
    fn ballistic_drop_matches_closed_form() {
        let p = params();
        let s = PlantState::at_rest(Vector3::zeros());
        let c = ControlCommand {
            thrust: 0.0,
            moment: Vector3::zeros(),
        };
        let dt = 0.1;
        let next = integrate_step(&s, &c, &p, dt).unwrap();
        assert_abs_diff_eq!(next.position.z, -0.5 * p.gravity * dt * dt, epsilon = 1e-9);
    }

    #[test]
    fn rotation_stays_orthonormal_over_many_steps() {
        let p = params();
        let mut s = PlantState::at_rest(Vector3::zeros());
        s.omega = Vector3::new(2.0, -1.0, 3.0);
        let c = ControlCommand {
            thrust: p.hover_thrust(),
            moment: Vector3::zeros(),
        };
        for _ in 0..100_000 {
            s = integrate_step(&s, &c, &p, 0.002).unwrap();
        }
        assert!(s.rotation.orthogonality_error() <= 1e-9);
    }

    #[test]
    fn torque_free_body_conserves_kinetic_energy() {
        let p = params();
        let mut s = PlantState::at_rest(Vector3::zeros());
        s.omega = Vector3::new(0.4, -0.3, 0.5);
        let energy = |s: &PlantState| 0.5 * s.omega.dot(&(p.inertia * s.omega));
        let e0 = energy(&s);
        let c = ControlCommand {
            thrust: 0.0,
            moment: Vector3::zeros(),
        };
        for _ in 0..5000 {
            s = integrate_step(&s, &c, &p, 0.002).unwrap();
        }
        assert!((energy(&s) - e0).abs() <= 1e-6, "drift {}", energy(&s) - e0);
    }

    #[test]
    fn virtual_model_structure() {
        let p = params();
        let (a, b) = virtual_model(&p);
        // Double integrator: A^2 = 0.
        assert_eq!(a * a, Matrix6::zeros());
        // Lower-left block 1/m I for the Table mass.
        assert_abs_diff_eq!(b[(3, 0)], 1.0 / 1.02, epsilon = 1e-15);
        assert_abs_diff_eq!(b[(4, 1)], 1.0 / 1.02, epsilon = 1e-15);
        assert_abs_diff_eq!(b[(5, 2)], 1.0 / 1.02, epsilon = 1e-15);
        // Hover input gives zero acceleration.
        let x = Vector6::zeros();
        let xdot = a * x + b * p.hover_input();
        assert_abs_diff_eq!(xdot, Vector6::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn zoh_phi_at_ts_0_1() {
        let dm = discretize_zoh(&params(), 0.1);
        let mut expected = Matrix6::identity();
        expected
            .fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&(Matrix3::identity() * 0.1));
        assert_abs_diff_eq!(dm.phi, expected, epsilon = 1e-15);
    }

    #[test]
    fn zoh_gamma_matches_g_form_for_mass_10_over_g() {
        // The g-form Gamma entries hold exactly when m = 10 / g.
        let g = 9.81;
        let p = PlantParams {
            mass: 10.0 / g,
            inertia: Matrix3::identity(),
            gravity: g,
            f_max: 28.51,
            tau_max: Vector3::new(1.66, 1.66, 0.21),
        };
        let dm = discretize_zoh(&p, 0.1);
        assert_abs_diff_eq!(dm.gamma[(0, 0)], g / 2000.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dm.gamma[(3, 0)], g / 100.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dm.gamma[(2, 3)], -g / 200.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dm.gamma[(5, 3)], -g / 10.0, epsilon = 1e-15);
    }

    #[test]
    fn zoh_matches_series_oracle() {
        let p = params();
        let (a, b) = virtual_model(&p);
        for &t_s in &[0.01, 0.1, 0.5] {
            let dm = discretize_zoh(&p, t_s);
            let (phi_oracle, gamma_oracle) = series_oracle(&a, &b, t_s);
            assert!((dm.phi - phi_oracle).norm() <= 1e-12);
            assert!((dm.gamma - gamma_oracle).norm() <= 1e-12);
        }
    }

    #[test]
    fn hover_input_is_discrete_equilibrium() {
        let p = params();
        let dm = discretize_zoh(&p, 0.1);
        let x = Vector6::zeros();
        let next = propagate(&x, &p.hover_input(), &dm);
        assert_abs_diff_eq!(next, Vector6::zeros(), epsilon = 1e-12);
        assert!((dm.gamma * p.hover_input()).norm() <= 1e-12);
    }

    #[test]
    fn zero_thrust_propagation_drops_by_g_times_half_ts_squared() {
        let p = params();
        let dm = discretize_zoh(&p, 0.1);
        let u = Vector4::new(0.0, 0.0, 0.0, 1.0);
        let next = propagate(&Vector6::zeros(), &u, &dm);
        assert_abs_diff_eq!(next[2], -p.gravity * 0.005, epsilon = 1e-12);
    }

    #[test]
    fn repeated_propagation_matches_continuous_solution() {
        let p = params();
        let dm = discretize_zoh(&p, 0.1);
        let u = Vector4::new(1.0, -0.5, 12.0, 1.0);
        let mut x = Vector6::zeros();
        let n = 20;
        for _ in 0..n {
            x = propagate(&x, &u, &dm);
        }
        // Constant-input double integrator: x(t) = 1/2 a t^2, v(t) = a t.
        let t = n as f64 * dm.t_s;
        let accel = Vector3::new(u[0], u[1], u[2]) / p.mass - Vector3::new(0.0, 0.0, p.gravity);
        let expected_pos = 0.5 * accel * t * t;
        let expected_vel = accel * t;
        assert!((x.fixed_rows::<3>(0) - expected_pos).norm() <= 1e-9);
        assert!((x.fixed_rows::<3>(3) - expected_vel).norm() <= 1e-9);
    }

    #[test]
    fn discrete_model_matches_rk4_on_virtual_plant() {
        let p = params();
        let (a, b) = virtual_model(&p);
        let dm = discretize_zoh(&p, 0.1);
        let u = Vector4::new(0.3, 2.0, 9.0, 1.0);
        let x0 = Vector6::new(1.0, 0.0, -0.5, 0.2, -0.1, 0.4);
        // RK4 on the linear system with constant input is exact for the
        // quadratic-in-time double integrator.
        let f = |x: &Vector6<f64>| a * x + b * u;
        let mut x = x0;
        let steps = 10;
        let h = dm.t_s / steps as f64;
        for _ in 0..steps {
            let k1 = f(&x);
            let k2 = f(&(x + k1 * (h / 2.0)));
            let k3 = f(&(x + k2 * (h / 2.0)));
            let k4 = f(&(x + k3 * h));
            x += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
        }
        let discrete = propagate(&x0, &u, &dm);
        assert!((x - discrete).norm() <= 1e-9);
    }

    #[test]
    fn saturation_examples() {
        let p = params();
        let ok = ControlCommand {
            thrust: 10.0,
            moment: Vector3::new(0.5, -0.5, 0.1),
        };
        let (out, ev) = saturate_command(&ok, &p);
        assert_eq!(out, ok);
        assert!(!ev.any());

        let neg = ControlCommand {
            thrust: -1.0,
            moment: Vector3::zeros(),
        };
        let (out, ev) = saturate_command(&neg, &p);
        assert_eq!(out.thrust, 0.0);
        assert!(ev.thrust);

        let big_roll = ControlCommand {
            thrust: 10.0,
            moment: Vector3::new(5.0, 0.0, 0.0),
        };
        let (out, ev) = saturate_command(&big_roll, &p);
        assert_abs_diff_eq!(out.moment.x, 1.66, epsilon = 1e-15);
        assert!(ev.moment[0]);
    }

    proptest! {
        #[test]
        fn saturation_is_idempotent(
            thrust in -50.0f64..50.0,
            m in prop::array::uniform3(-5.0f64..5.0),
        ) {
            let p = params();
            let c = ControlCommand { thrust, moment: Vector3::from_row_slice(&m) };
            let (once, _) = saturate_command(&c, &p);
            let (twice, ev) = saturate_command(&once, &p);
            prop_assert_eq!(once, twice);
            prop_assert!(!ev.any());
        }
    }
}
