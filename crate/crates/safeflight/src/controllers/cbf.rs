//! SE(3) control barrier function for sphere obstacles: the constraint value
//! `h_hat`, its decomposition, and the affine expansion of `h_hat_dot` in the
//! attitude command `(f_c, tau_c)`.

use nalgebra::Vector3;

use crate::dynamics::{PlantParams, PlantState};

/// Gains and shape parameters of the SE(3) barrier.
#[derive(Debug, Clone)]
pub struct AttitudeCbfParams {
    /// Barrier gain of both the `gamma * g` term and the growth bound.
    pub gamma: f64,
    /// Scale of the unexplained `- beta * b_dot` coupling; `b` is constant
    /// in every scenario here, so the term only fixes the sigma bound.
    pub beta: f64,
    pub b: f64,
    /// Orientation-shaping function scale and slope, with
    /// `sigma(s) = sigma0 (1 - tanh(k_sigma s))`.
    pub sigma0: f64,
    pub k_sigma: f64,
}

impl AttitudeCbfParams {
    pub fn sigma(&self, s: f64) -> f64 {
        self.sigma0 * (1.0 - (self.k_sigma * s).tanh())
    }

    /// First derivative, strictly negative everywhere.
    pub fn sigma_d1(&self, s: f64) -> f64 {
        let sech = 1.0 / (self.k_sigma * s).cosh();
        -self.sigma0 * self.k_sigma * sech * sech
    }

    pub fn sigma_d2(&self, s: f64) -> f64 {
        let ks = self.k_sigma * s;
        let sech = 1.0 / ks.cosh();
        2.0 * self.sigma0 * self.k_sigma * self.k_sigma * sech * sech * ks.tanh()
    }

    /// Configuration-time check that `sigma(0) < (beta - 1) b` so the
    /// bounded-shape ordering holds.
    pub fn sigma_bound_ok(&self) -> bool {
        self.sigma(0.0) < (self.beta - 1.0) * self.b
    }
}

/// Barrier value and its components for one obstacle.
#[derive(Debug, Clone, Copy)]
pub struct Se3CbfValue {
    /// `h_hat = gamma * g_hat + g_hat_dot`.
    pub h: f64,
    /// `g_hat = |x - x_o|^2 - r_tilde^2`.
    pub g: f64,
    /// `g_hat_dot = 2 (v - v_o) . (x - x_o) - sigma'(s) s_dot` (b constant).
    pub g_dot: f64,
    /// Body-z projection `s = (x - x_o) . (R e3)`.
    pub s: f64,
    pub s_dot: f64,
    /// Center offset and relative velocity.
    pub d: Vector3<f64>,
    pub d_dot: Vector3<f64>,
}

/// Evaluates the barrier at the current state against one obstacle.
pub fn se3_cbf_h(
    state: &PlantState,
    obstacle_pos: &Vector3<f64>,
    obstacle_vel: &Vector3<f64>,
    r_tilde: f64,
    params: &AttitudeCbfParams,
) -> Se3CbfValue {
    debug_assert!(r_tilde > 0.0);
    let d = state.position - obstacle_pos;
    let d_dot = state.velocity - obstacle_vel;
    let r_e3 = state.rotation.body_z();
    let s = d.dot(&r_e3);
    // s_dot with the sign convention of the shaping term's source:
    // (v - v_o) . R e3 + (x_o - x) . R (omega x e3).
    let s_dot = d_dot.dot(&r_e3) + (-d).dot(&(state.rotation.matrix() * state.omega.cross(&Vector3::z())));
    let g = d.dot(&d) - r_tilde * r_tilde;
    let g_dot = 2.0 * d_dot.dot(&d) - params.sigma_d1(s) * s_dot;
    Se3CbfValue {
        h: params.gamma * g + g_dot,
        g,
        g_dot,
        s,
        s_dot,
        d,
        d_dot,
    }
}

/// Affine expansion `h_hat_dot = drift + f_coeff * f_c + tau_coeff . tau_c`.
#[derive(Debug, Clone, Copy)]
pub struct Se3CbfRow {
    pub value: Se3CbfValue,
    pub drift: f64,
    pub f_coeff: f64,
    pub tau_coeff: Vector3<f64>,
}

/// Differentiates [`se3_cbf_h`] along the controlled dynamics. The command
/// enters through `x_ddot = f_c R e3 / m - g e3` and
/// `omega_dot = J^-1 (tau - omega x J omega)`.
pub fn se3_cbf_hdot(
    state: &PlantState,
    obstacle_pos: &Vector3<f64>,
    obstacle_vel: &Vector3<f64>,
    r_tilde: f64,
    params: &AttitudeCbfParams,
    p: &PlantParams,
) -> Se3CbfRow {
    let value = se3_cbf_h(state, obstacle_pos, obstacle_vel, r_tilde, params);
    let r = state.rotation.matrix();
    let r_e3 = state.rotation.body_z();
    let e3 = Vector3::z();
    let omega = state.omega;
    let j_inv = p.inertia.try_inverse().expect("inertia must be invertible");
    let gyro = omega.cross(&(p.inertia * omega));

    let sig1 = params.sigma_d1(value.s);
    let sig2 = params.sigma_d2(value.s);

    // d_ddot = (R e3 / m) f_c + d_ddot_drift
    let d_ddot_drift = -p.gravity * e3;

    // s_ddot = d_ddot . R e3 - d . R (omega x (omega x e3)) + d . R hat(e3) omega_dot
    let centripetal = value.d.dot(&(r * omega.cross(&omega.cross(&e3))));
    let lever = (r.transpose() * value.d).cross(&e3); // (d' R hat(e3))^T
    let s_dd_drift = d_ddot_drift.dot(&r_e3) - centripetal - lever.dot(&(j_inv * gyro));
    let s_dd_f = 1.0 / p.mass;
    let s_dd_tau = j_inv.transpose() * lever;

    // Chain rule on sigma'(s) uses the kinematic derivative of s itself,
    // which differs in sign of the rotation term from the shaping
    // convention stored in `value.s_dot`.
    let s_dot_true =
        value.d_dot.dot(&r_e3) + value.d.dot(&(r * omega.cross(&e3)));

    // h_dot = 2 gamma d_dot . d + 2 (|d_dot|^2 + d . d_ddot)
    //         - sigma''(s) s_dot_true s_dot - sigma'(s) s_ddot
    let drift = 2.0 * params.gamma * value.d_dot.dot(&value.d)
        + 2.0 * (value.d_dot.dot(&value.d_dot) + value.d.dot(&d_ddot_drift))
        - sig2 * s_dot_true * value.s_dot
        - sig1 * s_dd_drift;
    let f_coeff = 2.0 * value.d.dot(&r_e3) / p.mass - sig1 * s_dd_f;
    let tau_coeff = -sig1 * s_dd_tau;

    Se3CbfRow {
        value,
        drift,
        f_coeff,
        tau_coeff,
    }
}

/// Membership rule for the active obstacle set: within the augmented radius
/// plus one second of relative motion plus a 2 m band.
pub fn obstacle_active(
    robot_pos: &Vector3<f64>,
    robot_vel: &Vector3<f64>,
    obstacle_pos: &Vector3<f64>,
    obstacle_vel: &Vector3<f64>,
    r_tilde: f64,
) -> bool {
    let dist = (robot_pos - obstacle_pos).norm();
    let v_rel = (robot_vel - obstacle_vel).norm();
    dist <= r_tilde + v_rel + 2.0
}
