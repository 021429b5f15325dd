//! Non-predictive controllers: Euler-Angle PD/PID cascade, the CLF position
//! QP and the CLF-CBF attitude QP, plus the infeasibility fallback policy
//! shared with the predictive controller.

pub mod attitude_qp;
pub mod cbf;
pub mod clf;
pub mod ea;

pub use attitude_qp::{clf_cbf_attitude_qp, AttitudeQpOutput};
pub use cbf::{obstacle_active, se3_cbf_h, AttitudeCbfParams, Se3CbfValue};
pub use clf::{
    clf_position_qp, clf_vr, clf_vx, AttitudeClfParams, ClfPositionOutput, PositionClfParams,
};
pub use ea::{desired_attitude, ea_attitude_pid, ea_position, thrust_projection, EaGains, PidState};

use nalgebra::DVector;
use thiserror::Error;

use crate::qp::{QpProblem, QpSolution, QpSolver, QpStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error("desired thrust vector is degenerate (norm {0:.3e})")]
    DegenerateThrust(f64),
    #[error("QP stayed infeasible after dropping all barrier rows")]
    HardInfeasible,
}

/// One barrier inequality `coeffs . x <= rhs`, tagged with the obstacle it
/// protects and the horizon step it applies to.
#[derive(Debug, Clone)]
pub struct CbfRow {
    pub coeffs: DVector<f64>,
    pub rhs: f64,
    pub obstacle: usize,
    pub step: usize,
}

/// Outcome of a solve that may have dropped barrier rows to regain
/// feasibility. Dropped rows are virtual-collision risk and get logged.
#[derive(Debug, Clone)]
pub struct DroppingOutcome {
    pub solution: QpSolution,
    /// Indices into the row list passed in, in drop order.
    pub dropped: Vec<usize>,
}

/// Solves `base` plus all `rows`. On infeasibility, removes barrier rows one
/// at a time, most-violated first, re-solving after each removal; rows of
/// `nearest_obstacle` are kept until last so the closest sphere is protected
/// longest. Violations are measured at the solution of the barrier-free
/// problem, which keeps the drop order deterministic.
pub fn solve_with_dropping(
    solver: &QpSolver,
    base: &QpProblem,
    rows: &[CbfRow],
    nearest_obstacle: Option<usize>,
    warm: Option<&DVector<f64>>,
) -> Result<DroppingOutcome, ControllerError> {
    let assemble = |active: &[usize]| -> QpProblem {
        let mut p = base.clone();
        let extra = active.len();
        if extra == 0 {
            return p;
        }
        let n = p.n();
        let m0 = p.a.nrows();
        let mut a = nalgebra::DMatrix::zeros(m0 + extra, n);
        a.view_mut((0, 0), (m0, n)).copy_from(&p.a);
        let mut b = DVector::zeros(m0 + extra);
        b.rows_mut(0, m0).copy_from(&p.b);
        for (slot, &idx) in active.iter().enumerate() {
            a.row_mut(m0 + slot).copy_from(&rows[idx].coeffs.transpose());
            b[m0 + slot] = rows[idx].rhs;
        }
        p.a = a;
        p.b = b;
        p
    };

    // A solve is usable when it converged, or at least its best iterate
    // satisfies the KKT system loosely; anything else degrades the same way
    // an infeasible solve does.
    let usable = |sol: &QpSolution| {
        sol.status == QpStatus::Optimal
            || (sol.status == QpStatus::MaxIterations && sol.kkt_residual <= 1e-3)
    };

    let mut active: Vec<usize> = (0..rows.len()).collect();
    let solution = solver
        .solve_warm(&assemble(&active), warm)
        .expect("assembled QP dimensions are consistent");
    if usable(&solution) {
        return Ok(DroppingOutcome { solution, dropped: Vec::new() });
    }
    if let Ok(dir) = std::env::var("SAFEFLIGHT_QP_DUMP_DIR") {
        let n = std::fs::read_dir(&dir).map(|d| d.count()).unwrap_or(0);
        if n < 5 {
            let _ = std::fs::write(
                format!("{dir}/unusable_{n}.txt"),
                crate::qp::dump_problem(&assemble(&active)),
            );
        }
    }

    // Violation of each row at the barrier-free solution fixes the order.
    let relaxed = solver
        .solve_warm(base, warm)
        .expect("base QP dimensions are consistent");
    if relaxed.status == QpStatus::Infeasible {
        return Err(ControllerError::HardInfeasible);
    }
    let violation =
        |idx: usize| -> f64 { rows[idx].coeffs.dot(&relaxed.x) - rows[idx].rhs };
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&i, &j| {
        let i_last = Some(rows[i].obstacle) == nearest_obstacle;
        let j_last = Some(rows[j].obstacle) == nearest_obstacle;
        i_last
            .cmp(&j_last)
            .then(violation(j).partial_cmp(&violation(i)).unwrap_or(std::cmp::Ordering::Equal))
    });

    let mut dropped = Vec::new();
    for idx in order {
        active.retain(|&i| i != idx);
        dropped.push(idx);
        let solution = solver
            .solve_warm(&assemble(&active), warm)
            .expect("assembled QP dimensions are consistent");
        if usable(&solution) {
            return Ok(DroppingOutcome { solution, dropped });
        }
    }
    // All barrier rows are gone; accept the relaxed solution if it is usable.
    if usable(&relaxed) {
        return Ok(DroppingOutcome { solution: relaxed, dropped });
    }
    Err(ControllerError::HardInfeasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn feasible_problem_drops_nothing() {
        let base = QpProblem::unconstrained(DMatrix::identity(1, 1), DVector::zeros(1));
        let rows = vec![CbfRow {
            coeffs: DVector::from_vec(vec![1.0]),
            rhs: 1.0,
            obstacle: 0,
            step: 0,
        }];
        let out = solve_with_dropping(&QpSolver::default(), &base, &rows, Some(0), None).unwrap();
        assert!(out.dropped.is_empty());
        assert!(out.solution.is_optimal());
    }

    #[test]
    fn impossible_row_is_the_one_dropped() {
        // min 1/2 x^2 with rows x <= 5 (satisfiable) and x <= -2 paired with
        // -x <= -3 is not constructable as one row, so force conflict between
        // two barrier rows instead: x <= -1 (obstacle 0) and -x <= -2
        // (obstacle 1) conflict; -x <= -2 is more violated at x* = 0.
        let base = QpProblem::unconstrained(DMatrix::identity(1, 1), DVector::zeros(1));
        let rows = vec![
            CbfRow {
                coeffs: DVector::from_vec(vec![1.0]),
                rhs: -1.0,
                obstacle: 0,
                step: 0,
            },
            CbfRow {
                coeffs: DVector::from_vec(vec![-1.0]),
                rhs: -2.0,
                obstacle: 1,
                step: 0,
            },
        ];
        // Obstacle 0 is nearest: its row must be kept, so row 1 goes first
        // and the solve succeeds with exactly one drop.
        let out = solve_with_dropping(&QpSolver::default(), &base, &rows, Some(0), None).unwrap();
        assert_eq!(out.dropped, vec![1]);
        assert!(out.solution.is_optimal());
        assert!(out.solution.x[0] <= -1.0 + 1e-6);
    }

    #[test]
    fn hard_infeasible_when_base_cannot_be_satisfied() {
        let mut base = QpProblem::unconstrained(DMatrix::identity(1, 1), DVector::zeros(1));
        base.a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        base.b = DVector::from_vec(vec![-1.0, -1.0]);
        let err = solve_with_dropping(&QpSolver::default(), &base, &[], None, None);
        assert!(matches!(err, Err(ControllerError::HardInfeasible)));
    }
}
