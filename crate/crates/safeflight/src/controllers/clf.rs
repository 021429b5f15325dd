//! Control Lyapunov Function candidates for position and attitude, the
//! min-norm position QP built on the first one, and the affine-in-torque
//! decomposition of `Vdot_R` used by the attitude QP.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::ea::{ea_position, EaGains};
use crate::dynamics::{PlantParams, PlantState};
use crate::qp::{QpProblem, QpSolver, QpStatus};
use crate::scenario::ReferencePoint;
use crate::so3::{hat, vee_unchecked, Rotation};

/// Parameters of the position CLF `V_x` and its QP.
#[derive(Debug, Clone)]
pub struct PositionClfParams {
    pub k_x: f64,
    pub eps_x: f64,
    pub q_x: Matrix3<f64>,
    pub c_x: Vector3<f64>,
    pub eta_x: f64,
}

impl PositionClfParams {
    /// The per-axis quadratic form `[[k_x/2, eps_x/2], [eps_x/2, m/2]]` must
    /// be positive definite for `V_x` to bound the error norm.
    pub fn is_positive_definite(&self, mass: f64) -> bool {
        self.k_x > 0.0 && self.k_x * mass > self.eps_x * self.eps_x
    }
}

/// A CLF value with its gradient pieces.
#[derive(Debug, Clone, Copy)]
pub struct ClfValue {
    pub value: f64,
    pub grad_e_x: Vector3<f64>,
    pub grad_e_v: Vector3<f64>,
}

/// `V_x = 1/2 k_x |e_x|^2 + 1/2 m |e_v|^2 + eps_x e_x . e_v` with its
/// gradients in the two error vectors.
pub fn clf_vx(
    e_x: &Vector3<f64>,
    e_v: &Vector3<f64>,
    params: &PositionClfParams,
    mass: f64,
) -> ClfValue {
    let value = 0.5 * params.k_x * e_x.dot(e_x)
        + 0.5 * mass * e_v.dot(e_v)
        + params.eps_x * e_x.dot(e_v);
    ClfValue {
        value,
        grad_e_x: params.k_x * e_x + params.eps_x * e_v,
        grad_e_v: mass * e_v + params.eps_x * e_x,
    }
}

pub fn clf_vx_state(
    s: &PlantState,
    r: &ReferencePoint,
    params: &PositionClfParams,
    p: &PlantParams,
) -> ClfValue {
    clf_vx(
        &(s.position - r.position),
        &(s.velocity - r.velocity),
        params,
        p.mass,
    )
}

#[derive(Debug, Clone)]
pub struct ClfPositionOutput {
    pub f_des: Vector3<f64>,
    /// True when the QP was infeasible and the Euler-Angle law was used.
    pub fell_back: bool,
}

/// Min-norm position QP: minimize `1/2 f' Q_x f + c_x' f` subject to the
/// decrease condition `Vdot_x(f) + eta_x V_x <= 0` under the virtual
/// dynamics `e_v_dot = f/m - g e3 - a_des`.
pub fn clf_position_qp(
    s: &PlantState,
    r: &ReferencePoint,
    params: &PositionClfParams,
    ea_fallback: &EaGains,
    p: &PlantParams,
    solver: &QpSolver,
) -> ClfPositionOutput {
    let clf = clf_vx_state(s, r, params, p);
    // Vdot = grad_e_x . e_v + grad_e_v . (f/m - g e3 - a_des)
    let e_v = s.velocity - r.velocity;
    let drift = clf.grad_e_x.dot(&e_v)
        - clf.grad_e_v.dot(&(p.gravity * Vector3::z() + r.acceleration));
    let coeff = clf.grad_e_v / p.mass;
    let rhs = -params.eta_x * clf.value - drift;

    let mut problem = QpProblem::unconstrained(
        DMatrix::from_fn(3, 3, |i, j| params.q_x[(i, j)]),
        DVector::from_column_slice(params.c_x.as_slice()),
    );
    // Actuation-envelope rows (componentwise, like the linearized bound of
    // the predictive controller): |f_x|, |f_y| <= f_max, 0 <= f_z <= f_max.
    // They make the decrease row genuinely infeasible when the platform
    // cannot deliver it, which is what arms the fallback below.
    let mut rows = vec![
        (DVector::from_vec(vec![1.0, 0.0, 0.0]), p.f_max),
        (DVector::from_vec(vec![-1.0, 0.0, 0.0]), p.f_max),
        (DVector::from_vec(vec![0.0, 1.0, 0.0]), p.f_max),
        (DVector::from_vec(vec![0.0, -1.0, 0.0]), p.f_max),
        (DVector::from_vec(vec![0.0, 0.0, 1.0]), p.f_max),
        (DVector::from_vec(vec![0.0, 0.0, -1.0]), 0.0),
    ];
    if coeff.norm() > 1e-12 {
        rows.push((DVector::from_column_slice(coeff.as_slice()), rhs));
    } else if rhs < 0.0 {
        // No thrust can satisfy the row.
        return ClfPositionOutput {
            f_des: ea_position(s, r, ea_fallback, p),
            fell_back: true,
        };
    }
    let mut a = DMatrix::zeros(rows.len(), 3);
    let mut b = DVector::zeros(rows.len());
    for (i, (row, rhs)) in rows.iter().enumerate() {
        a.row_mut(i).copy_from(&row.transpose());
        b[i] = *rhs;
    }
    problem.a = a;
    problem.b = b;
    let sol = solver.solve(&problem).expect("well-formed 3-variable QP");
    if sol.status == QpStatus::Infeasible {
        return ClfPositionOutput {
            f_des: ea_position(s, r, ea_fallback, p),
            fell_back: true,
        };
    }
    ClfPositionOutput {
        f_des: Vector3::new(sol.x[0], sol.x[1], sol.x[2]),
        fell_back: false,
    }
}

/// Parameters of the attitude CLF `V_R` and its QP weights
/// `q_r = (q_R1 .. q_R5)` on `(f_c, tau, delta)`.
#[derive(Debug, Clone)]
pub struct AttitudeClfParams {
    pub k_j: Matrix3<f64>,
    pub c_r: Matrix3<f64>,
    pub e_r: Matrix3<f64>,
    pub q_r: [f64; 5],
    pub eta_r: f64,
}

/// Attitude error pair: `e_R = vee(1/2 (R_c' R - R' R_c))` and
/// `e_phi = omega - R' R_c omega_des`.
#[derive(Debug, Clone, Copy)]
pub struct AttitudeErrors {
    pub e_r: Vector3<f64>,
    pub e_phi: Vector3<f64>,
}

pub fn attitude_errors(
    r: &Rotation,
    omega: &Vector3<f64>,
    r_c: &Rotation,
    omega_des: &Vector3<f64>,
) -> AttitudeErrors {
    let c = r_c.matrix().transpose() * r.matrix();
    let e_r = vee_unchecked(&(0.5 * (c - c.transpose())));
    let e_phi = omega - c.transpose() * omega_des;
    AttitudeErrors { e_r, e_phi }
}

/// Attitude CLF value with gradients in `(e_R, e_phi)`.
#[derive(Debug, Clone, Copy)]
pub struct ClfRValue {
    pub value: f64,
    pub grad_e_r: Vector3<f64>,
    pub grad_e_phi: Vector3<f64>,
}

/// `V_R = 1/(2 min lam(J)) e_phi' K_J J e_phi + 1/2 e_R' C_R e_R
///        + (E_R e_R)' e_phi`.
pub fn clf_vr(errors: &AttitudeErrors, params: &AttitudeClfParams, p: &PlantParams) -> ClfRValue {
    let lambda_min = min_eigenvalue(&p.inertia);
    let m = params.k_j * p.inertia / (2.0 * lambda_min);
    let m_sym = m + m.transpose();
    let value = errors.e_phi.dot(&(m * errors.e_phi))
        + 0.5 * errors.e_r.dot(&(params.c_r * errors.e_r))
        + (params.e_r * errors.e_r).dot(&errors.e_phi);
    ClfRValue {
        value,
        grad_e_r: 0.5 * (params.c_r + params.c_r.transpose()) * errors.e_r
            + params.e_r.transpose() * errors.e_phi,
        grad_e_phi: m_sym * errors.e_phi + params.e_r * errors.e_r,
    }
}

/// `Vdot_R` split into a drift term and the coefficient of `tau_c`:
/// `Vdot_R(tau) = drift + tau_coeff . tau`.
#[derive(Debug, Clone, Copy)]
pub struct VdotR {
    pub drift: f64,
    pub tau_coeff: Vector3<f64>,
    pub clf: ClfRValue,
}

/// Assembles `Vdot_R` from the error kinematics. With `C = R_c' R`:
/// `Cdot = -hat(omega_des) C + C hat(omega)`, `e_R_dot` is the vee of its
/// skew part, and `e_phi_dot = J^-1 (tau - omega x J omega) - Cdot' omega_des`.
pub fn vdot_r(
    s: &PlantState,
    r_c: &Rotation,
    omega_des: &Vector3<f64>,
    params: &AttitudeClfParams,
    p: &PlantParams,
) -> VdotR {
    let errors = attitude_errors(&s.rotation, &s.omega, r_c, omega_des);
    let clf = clf_vr(&errors, params, p);
    let c = r_c.matrix().transpose() * s.rotation.matrix();
    let c_dot = -hat(omega_des) * c + c * hat(&s.omega);
    let e_r_dot = vee_unchecked(&(0.5 * (c_dot - c_dot.transpose())));
    let j_inv = p.inertia.try_inverse().expect("inertia must be invertible");
    let gyro = s.omega.cross(&(p.inertia * s.omega));
    let e_phi_dot_drift = j_inv * (-gyro) - c_dot.transpose() * omega_des;
    VdotR {
        drift: clf.grad_e_r.dot(&e_r_dot) + clf.grad_e_phi.dot(&e_phi_dot_drift),
        tau_coeff: j_inv.transpose() * clf.grad_e_phi,
        clf,
    }
}

fn min_eigenvalue(j: &Matrix3<f64>) -> f64 {
    j.symmetric_eigenvalues().min()
}
