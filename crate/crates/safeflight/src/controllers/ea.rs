//! Euler-Angle cascade: position PD with feed-forward, thrust-alignment
//! attitude construction and the attitude PID.

use nalgebra::Vector3;

use super::ControllerError;
use crate::dynamics::{PlantParams, PlantState};
use crate::scenario::ReferencePoint;
use crate::so3::{attitude_error, Rotation};

/// Position and attitude gains of the Euler-Angle cascade.
#[derive(Debug, Clone)]
pub struct EaGains {
    pub k: Vector3<f64>,
    pub k_v: Vector3<f64>,
    pub k_p: Vector3<f64>,
    pub k_i: Vector3<f64>,
    pub k_d: Vector3<f64>,
}

/// PD position law with acceleration and gravity feed-forward:
/// `f_des = k o (x_des - x) + k_v o (v_des - v) + m a_des + m g e3`.
pub fn ea_position(
    s: &PlantState,
    r: &ReferencePoint,
    g: &EaGains,
    p: &PlantParams,
) -> Vector3<f64> {
    let e_x = r.position - s.position;
    let e_v = r.velocity - s.velocity;
    g.k.component_mul(&e_x)
        + g.k_v.component_mul(&e_v)
        + p.mass * r.acceleration
        + p.mass * p.gravity * Vector3::z()
}

/// Attitude whose body z-axis carries `f_des` and whose heading matches
/// `yaw_des` (thrust-alignment construction).
pub fn desired_attitude(f_des: &Vector3<f64>, yaw_des: f64) -> Result<Rotation, ControllerError> {
    let norm = f_des.norm();
    if norm <= 1e-9 {
        return Err(ControllerError::DegenerateThrust(norm));
    }
    let b3 = f_des / norm;
    let heading = Vector3::new(yaw_des.cos(), yaw_des.sin(), 0.0);
    let b2_raw = b3.cross(&heading);
    let b2_norm = b2_raw.norm();
    if b2_norm <= 1e-9 {
        // Thrust parallel to the heading: no unique horizontal frame.
        return Err(ControllerError::DegenerateThrust(b2_norm));
    }
    let b2 = b2_raw / b2_norm;
    let b1 = b2.cross(&b3);
    Ok(Rotation::from_matrix_unchecked(
        nalgebra::Matrix3::from_columns(&[b1, b2, b3]),
    ))
}

/// Scalar thrust actually produced along the current body z-axis,
/// `f_c = f_des . (R e3)`.
pub fn thrust_projection(f_des: &Vector3<f64>, r: &Rotation) -> f64 {
    f_des.dot(&r.body_z())
}

/// Integral state of the attitude PID, accumulated trapezoidally.
#[derive(Debug, Clone, Default)]
pub struct PidState {
    pub integral: Vector3<f64>,
    last_error: Option<Vector3<f64>>,
}

/// Attitude PID on the rotation-matrix error: the proportional error is
/// `vee(1/2 (R^T R_c - R_c^T R))`, which points along the torque that turns
/// the body toward `r_c`.
pub fn ea_attitude_pid(
    s: &PlantState,
    r_c: &Rotation,
    omega_des: &Vector3<f64>,
    g: &EaGains,
    pid: &mut PidState,
    dt: f64,
) -> Vector3<f64> {
    debug_assert!(dt > 0.0);
    let e = attitude_error(r_c, &s.rotation);
    let prev = pid.last_error.unwrap_or(e);
    pid.integral += 0.5 * dt * (e + prev);
    pid.last_error = Some(e);
    g.k_p.component_mul(&e)
        + g.k_i.component_mul(&pid.integral)
        + g.k_d.component_mul(&(omega_des - s.omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn setup() -> (PlantParams, EaGains) {
        let cfg = Config::default();
        (cfg.plant_params(), cfg.ea_gains())
    }

    #[test]
    fn hover_feedforward_only() {
        let (p, g) = setup();
        let s = PlantState::at_rest(Vector3::zeros());
        let r = ReferencePoint::hover_at(Vector3::zeros());
        let f = ea_position(&s, &r, &g, &p);
        assert_abs_diff_eq!(
            f,
            Vector3::new(0.0, 0.0, p.mass * p.gravity),
            epsilon = 1e-12
        );
    }

    #[test]
    fn unit_position_error_scales_by_gain() {
        let (p, g) = setup();
        let s = PlantState::at_rest(-Vector3::x());
        let r = ReferencePoint::hover_at(Vector3::zeros());
        let f = ea_position(&s, &r, &g, &p);
        assert_abs_diff_eq!(
            f,
            Vector3::new(4.0, 0.0, p.mass * p.gravity),
            epsilon = 1e-12
        );
    }

    #[test]
    fn proportional_term_doubles_with_gain() {
        let (p, mut g) = setup();
        let s = PlantState::at_rest(Vector3::new(-0.3, 0.7, 0.1));
        let r = ReferencePoint::hover_at(Vector3::zeros());
        let f1 = ea_position(&s, &r, &g, &p) - Vector3::new(0.0, 0.0, p.mass * p.gravity);
        g.k *= 2.0;
        let f2 = ea_position(&s, &r, &g, &p) - Vector3::new(0.0, 0.0, p.mass * p.gravity);
        assert_abs_diff_eq!(f2, 2.0 * f1, epsilon = 1e-12);
    }

    #[test]
    fn superposition_of_errors() {
        let (p, g) = setup();
        let r = ReferencePoint::hover_at(Vector3::zeros());
        let mut s1 = PlantState::at_rest(Vector3::new(0.2, -0.4, 0.6));
        let mut s2 = PlantState::at_rest(Vector3::zeros());
        s1.velocity = Vector3::zeros();
        s2.velocity = Vector3::new(-1.0, 0.5, 0.2);
        let gravity = Vector3::new(0.0, 0.0, p.mass * p.gravity);
        let f1 = ea_position(&s1, &r, &g, &p) - gravity;
        let f2 = ea_position(&s2, &r, &g, &p) - gravity;
        let mut s12 = s1;
        s12.velocity = s2.velocity;
        let f12 = ea_position(&s12, &r, &g, &p) - gravity;
        assert!((f12 - (f1 + f2)).norm() <= 1e-12);
    }

    #[test]
    fn desired_attitude_hover_is_identity() {
        let (p, _) = setup();
        let r = desired_attitude(&Vector3::new(0.0, 0.0, p.mass * p.gravity), 0.0).unwrap();
        assert_abs_diff_eq!(*r.matrix(), nalgebra::Matrix3::identity(), epsilon = 1e-12);
    }

    #[test]
    fn desired_attitude_aligns_body_z() {
        let f = Vector3::new(3.0, -1.0, 9.0);
        let r = desired_attitude(&f, 0.7).unwrap();
        assert!((r.body_z() - f.normalize()).norm() <= 1e-12);
        assert!(r.orthogonality_error() <= 1e-12);
        // Heading: body y stays perpendicular to the commanded heading
        // vector, which pins the yaw degree of freedom.
        let heading = Vector3::new(0.7f64.cos(), 0.7f64.sin(), 0.0);
        let b2 = r.rotate(&Vector3::y());
        assert_abs_diff_eq!(b2.dot(&heading), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn desired_attitude_rejects_zero_thrust() {
        assert!(matches!(
            desired_attitude(&Vector3::zeros(), 0.0),
            Err(ControllerError::DegenerateThrust(_))
        ));
    }

    #[test]
    fn thrust_projection_examples() {
        let f = Vector3::new(0.0, 0.0, 10.0);
        assert_abs_diff_eq!(thrust_projection(&f, &Rotation::identity()), 10.0);
        let tilted = Rotation::roll(std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(thrust_projection(&f, &tilted), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pid_zero_errors_zero_torque() {
        let (_, g) = setup();
        let s = PlantState::at_rest(Vector3::zeros());
        let mut pid = PidState::default();
        let tau = ea_attitude_pid(&s, &Rotation::identity(), &Vector3::zeros(), &g, &mut pid, 0.002);
        assert_abs_diff_eq!(tau, Vector3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn integral_term_stays_zero_with_zero_gain() {
        let (_, g) = setup();
        assert_eq!(g.k_i, Vector3::zeros());
        let mut s = PlantState::at_rest(Vector3::zeros());
        s.rotation = Rotation::roll(0.3);
        let mut pid = PidState::default();
        for _ in 0..100 {
            ea_attitude_pid(&s, &Rotation::identity(), &Vector3::zeros(), &g, &mut pid, 0.002);
        }
        // The accumulator runs, but contributes nothing at k_i = 0.
        assert!(pid.integral.norm() > 0.0);
        let tau = ea_attitude_pid(&s, &Rotation::identity(), &Vector3::zeros(), &g, &mut pid, 0.002);
        let expected = g.k_p.component_mul(&attitude_error(&Rotation::identity(), &s.rotation));
        assert_abs_diff_eq!(tau, expected, epsilon = 1e-12);
    }

    #[test]
    fn pure_yaw_error_yields_yaw_torque() {
        let (_, g) = setup();
        let theta = 0.4f64;
        let s = PlantState::at_rest(Vector3::zeros());
        let r_c = Rotation::yaw(theta);
        let mut pid = PidState::default();
        let tau = ea_attitude_pid(&s, &r_c, &Vector3::zeros(), &g, &mut pid, 0.002);
        assert_abs_diff_eq!(
            tau,
            Vector3::new(0.0, 0.0, 0.17 * theta.sin()),
            epsilon = 1e-12
        );
    }

    proptest! {
        #[test]
        fn thrust_projection_bounded_by_norm(
            f in prop::array::uniform3(-20.0f64..20.0),
            rpy in prop::array::uniform3(-1.4f64..1.4),
        ) {
            let f = Vector3::from_row_slice(&f);
            let r = crate::so3::euler_to_rotation(&crate::so3::EulerZyx::new(rpy[0], rpy[1], rpy[2]));
            prop_assert!(thrust_projection(&f, &r) <= f.norm() + 1e-12);
        }
    }
}
