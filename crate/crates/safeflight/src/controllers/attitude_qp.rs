//! CLF-CBF attitude QP: minimum-effort `(f_c, tau_c)` subject to a softened
//! attitude-CLF decrease row and hard barrier rows for every active sphere.

use nalgebra::{DMatrix, DVector, Vector3};

use super::cbf::{se3_cbf_hdot, AttitudeCbfParams};
use super::clf::{vdot_r, AttitudeClfParams};
use super::ea::thrust_projection;
use super::{solve_with_dropping, CbfRow, ControllerError};
use crate::dynamics::{PlantParams, PlantState};
use crate::qp::{QpProblem, QpSolver, QpStatus};
use crate::so3::Rotation;

/// An obstacle as seen by the attitude QP at one instant.
#[derive(Debug, Clone, Copy)]
pub struct ObstacleSnapshot {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub r_tilde: f64,
}

#[derive(Debug, Clone)]
pub struct AttitudeQpOutput {
    pub thrust: f64,
    pub moment: Vector3<f64>,
    pub delta: f64,
    pub status: QpStatus,
    /// Obstacle indices whose rows were dropped to regain feasibility.
    pub dropped_obstacles: Vec<usize>,
}

/// Decision vector `(f_c, tau_x, tau_y, tau_z, delta)`; objective
/// `1/2 q1 (f_c - f_proj)^2 + 1/2 tau' QR* tau + 1/2 q5 delta^2`;
/// constraints `Vdot_R + eta_R V_R <= delta` and, per active obstacle,
/// `h_dot + gamma h^3 >= 0` in its h-form.
#[allow(clippy::too_many_arguments)]
pub fn clf_cbf_attitude_qp(
    s: &PlantState,
    f_des: &Vector3<f64>,
    r_c: &Rotation,
    omega_des: &Vector3<f64>,
    obstacles: &[ObstacleSnapshot],
    clf: &AttitudeClfParams,
    cbf: &AttitudeCbfParams,
    p: &PlantParams,
    solver: &QpSolver,
) -> Result<AttitudeQpOutput, ControllerError> {
    let f_proj = thrust_projection(f_des, &s.rotation);

    let mut q = DMatrix::zeros(5, 5);
    for (i, w) in clf.q_r.iter().enumerate() {
        q[(i, i)] = *w;
    }
    let mut lin = DVector::zeros(5);
    lin[0] = -clf.q_r[0] * f_proj;
    let mut base = QpProblem::unconstrained(q, lin);

    // Softened CLF row: tau_coeff . tau - delta <= -eta V - drift, plus the
    // actuation envelope 0 <= f_c <= f_max, |tau_i| <= tau_max_i. The
    // envelope is what lets barrier rows turn infeasible (and be dropped)
    // when no deliverable command can satisfy them.
    let vd = vdot_r(s, r_c, omega_des, clf, p);
    let mut clf_row = DVector::zeros(5);
    clf_row[1] = vd.tau_coeff[0];
    clf_row[2] = vd.tau_coeff[1];
    clf_row[3] = vd.tau_coeff[2];
    clf_row[4] = -1.0;
    let mut base_rows: Vec<(DVector<f64>, f64)> =
        vec![(clf_row, -clf.eta_r * vd.clf.value - vd.drift)];
    let mut bound = |idx: usize, sign: f64, rhs: f64| {
        let mut row = DVector::zeros(5);
        row[idx] = sign;
        base_rows.push((row, rhs));
    };
    bound(0, 1.0, p.f_max);
    bound(0, -1.0, 0.0);
    for i in 0..3 {
        bound(1 + i, 1.0, p.tau_max[i]);
        bound(1 + i, -1.0, p.tau_max[i]);
    }
    let mut a = DMatrix::zeros(base_rows.len(), 5);
    let mut b = DVector::zeros(base_rows.len());
    for (i, (row, rhs)) in base_rows.iter().enumerate() {
        a.row_mut(i).copy_from(&row.transpose());
        b[i] = *rhs;
    }
    base.a = a;
    base.b = b;

    // Hard barrier rows: -(f_coeff f_c + tau_coeff . tau) <= gamma h^3 + drift.
    let mut rows = Vec::with_capacity(obstacles.len());
    let mut nearest: Option<(usize, f64)> = None;
    for (idx, o) in obstacles.iter().enumerate() {
        let row = se3_cbf_hdot(s, &o.position, &o.velocity, o.r_tilde, cbf, p);
        let mut coeffs = DVector::zeros(5);
        coeffs[0] = -row.f_coeff;
        coeffs[1] = -row.tau_coeff[0];
        coeffs[2] = -row.tau_coeff[1];
        coeffs[3] = -row.tau_coeff[2];
        rows.push(CbfRow {
            coeffs,
            rhs: cbf.gamma * row.value.h.powi(3) + row.drift,
            obstacle: idx,
            step: 0,
        });
        let dist = (s.position - o.position).norm();
        if nearest.map_or(true, |(_, best)| dist < best) {
            nearest = Some((idx, dist));
        }
    }

    let outcome = solve_with_dropping(solver, &base, &rows, nearest.map(|(i, _)| i), None)?;
    let x = &outcome.solution.x;
    Ok(AttitudeQpOutput {
        thrust: x[0],
        moment: Vector3::new(x[1], x[2], x[3]),
        delta: x[4],
        status: outcome.solution.status,
        dropped_obstacles: outcome.dropped.iter().map(|&i| rows[i].obstacle).collect(),
    })
}
