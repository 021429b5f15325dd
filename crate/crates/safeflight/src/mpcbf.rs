//! Predictive position controller: every position-loop tick it condenses the
//! virtual model over the horizon and solves one convex QP combining tracking
//! cost, input and input-rate cost, softened CLF decrease rows and hard CBF
//! obstacle rows, linearized about the shifted previous solution.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, Matrix6, Vector3, Vector4, Vector6};

use crate::controllers::{solve_with_dropping, CbfRow, ControllerError, PositionClfParams};
use crate::dynamics::{discretize_zoh, DiscreteModel, PlantParams};
use crate::qp::{QpProblem, QpSolver, QpStatus};
use crate::scenario::{
    augmented_radius, BoxBounds, Obstacle, ReferenceKind, SafetyGeometry,
};

/// Horizon lengths, weights and constraint gains of the predictive
/// controller.
#[derive(Debug, Clone)]
pub struct MpcbfConfig {
    pub t_s: f64,
    /// Prediction horizon (steps).
    pub n: usize,
    /// Control horizon; inputs are held constant beyond it.
    pub n_c: usize,
    pub q_diag: [f64; 6],
    pub q_final_diag: [f64; 6],
    pub r_diag: [f64; 4],
    pub r_delta_diag: [f64; 4],
    pub q_slack: f64,
    pub eta_x: f64,
    pub gamma: f64,
    /// Optional state box; position rows are added when present.
    pub bounds: Option<BoxBounds>,
    pub f_max: f64,
}

impl MpcbfConfig {
    pub fn decision_dim(&self) -> usize {
        4 * (self.n_c + 1) + (self.n + 1)
    }

    fn input_dim(&self) -> usize {
        4 * (self.n_c + 1)
    }
}

/// References sampled along the trajectory for k = 0..N+1 as stacked
/// (position, velocity) states.
#[derive(Debug, Clone)]
pub struct HorizonReference(pub Vec<Vector6<f64>>);

pub fn build_horizon_reference(
    reference: &ReferenceKind,
    t: f64,
    cfg: &MpcbfConfig,
) -> HorizonReference {
    let mut refs = Vec::with_capacity(cfg.n + 2);
    for k in 0..=(cfg.n + 1) {
        let r = reference.sample(t + k as f64 * cfg.t_s);
        let mut x = Vector6::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&r.position);
        x.fixed_rows_mut::<3>(3).copy_from(&r.velocity);
        refs.push(x);
    }
    HorizonReference(refs)
}

/// Constant-velocity extrapolation of one obstacle over the horizon.
#[derive(Debug, Clone)]
pub struct ObstaclePrediction {
    /// Index into the scenario obstacle list (for logging).
    pub obstacle: usize,
    pub r_tilde: f64,
    /// Positions at k = 0..N+1.
    pub positions: Vec<Vector3<f64>>,
    pub velocity: Vector3<f64>,
}

/// Extrapolates every active obstacle with its instantaneous velocity:
/// `x_o[k] = x_o(t) + v k T_s`.
pub fn predict_obstacles(
    obstacles: &[Obstacle],
    sg: &SafetyGeometry,
    t: f64,
    cfg: &MpcbfConfig,
) -> Vec<ObstaclePrediction> {
    let mut out = Vec::new();
    for (index, o) in obstacles.iter().enumerate() {
        let Some((pos, vel)) = o.state(t) else { continue };
        let positions = (0..=(cfg.n + 1))
            .map(|k| pos + vel * (k as f64 * cfg.t_s))
            .collect();
        out.push(ObstaclePrediction {
            obstacle: index,
            r_tilde: augmented_radius(o, sg),
            positions,
            velocity: vel,
        });
    }
    out
}

/// Relative-degree-one barrier on the stacked state:
/// `h = gamma (|d|^2 - r_tilde^2) + 2 d_dot . d` and its state gradient.
pub fn discrete_cbf_h(
    x: &Vector6<f64>,
    obstacle_pos: &Vector3<f64>,
    obstacle_vel: &Vector3<f64>,
    r_tilde: f64,
    gamma: f64,
) -> (f64, Vector6<f64>) {
    debug_assert!(r_tilde > 0.0);
    let d = x.fixed_rows::<3>(0) - obstacle_pos;
    let d_dot = x.fixed_rows::<3>(3) - obstacle_vel;
    let h = gamma * (d.dot(&d) - r_tilde * r_tilde) + 2.0 * d_dot.dot(&d);
    let mut grad = Vector6::zeros();
    grad.fixed_rows_mut::<3>(0)
        .copy_from(&(2.0 * gamma * d + 2.0 * d_dot));
    grad.fixed_rows_mut::<3>(3).copy_from(&(2.0 * d));
    (h, grad)
}

/// Per-solve record for the debug stream.
#[derive(Debug, Clone, Default)]
pub struct MpcbfDebug {
    pub decision_dim: usize,
    pub input_rows: usize,
    pub clf_rows: usize,
    pub cbf_rows: usize,
    pub box_rows: usize,
    pub equality_rows: usize,
    pub iterations: usize,
    pub solve_time: Duration,
    pub dropped_rows: usize,
}

/// Result of one tick.
#[derive(Debug, Clone)]
pub struct MpcbfSolution {
    /// Inputs for k = 0..N with the hold constraint applied.
    pub inputs: Vec<Vector4<f64>>,
    /// Predicted states for k = 1..N+1.
    pub predicted: Vec<Vector6<f64>>,
    pub slacks: Vec<f64>,
    pub status: QpStatus,
    pub hard_infeasible: bool,
    pub debug: MpcbfDebug,
}

/// The assembled QP: quadratic base (objective, input bounds, CLF rows, box
/// rows, hold-and-gravity equalities) plus the droppable barrier rows.
pub struct AssembledQp {
    pub problem: QpProblem,
    pub cbf_rows: Vec<CbfRow>,
    /// Decision-independent part of the full cost.
    pub constant: f64,
    pub nearest_obstacle: Option<usize>,
    pub debug_rows: (usize, usize, usize, usize),
}

pub struct MpcbfController {
    cfg: MpcbfConfig,
    plant: PlantParams,
    clf: PositionClfParams,
    dm: DiscreteModel,
    /// Condensing maps `x_k = m_mats[k] z_u + Phi^k x0`, k = 0..N+1.
    m_mats: Vec<DMatrix<f64>>,
    warm_inputs: Vec<Vector4<f64>>,
    warm_slacks: Vec<f64>,
    prev_f_des: Vector3<f64>,
    solver: QpSolver,
}

impl MpcbfController {
    pub fn new(cfg: MpcbfConfig, clf: PositionClfParams, plant: PlantParams) -> Self {
        let dm = discretize_zoh(&plant, cfg.t_s);
        let nu = cfg.input_dim();
        // M_{k+1} = Phi M_k with Gamma added into the block of u_min(k, N_c).
        let mut m_mats = Vec::with_capacity(cfg.n + 2);
        m_mats.push(DMatrix::zeros(6, nu));
        for k in 0..=cfg.n {
            let prev = m_mats.last().unwrap();
            let mut next = DMatrix::zeros(6, nu);
            // Phi * prev
            let phi = dm.phi;
            for c in 0..nu {
                let col = prev.column(c);
                let col6 = Vector6::from_iterator(col.iter().copied());
                next.column_mut(c).copy_from(&(phi * col6));
            }
            let block = 4 * k.min(cfg.n_c);
            for r in 0..6 {
                for c in 0..4 {
                    next[(r, block + c)] += dm.gamma[(r, c)];
                }
            }
            m_mats.push(next);
        }
        let hover = plant.hover_input();
        let warm_inputs = vec![hover; cfg.n_c + 1];
        let warm_slacks = vec![0.0; cfg.n + 1];
        let prev_f_des = Vector3::new(0.0, 0.0, plant.hover_thrust());
        Self {
            cfg,
            plant,
            clf,
            dm,
            m_mats,
            warm_inputs,
            warm_slacks,
            prev_f_des,
            solver: QpSolver::default(),
        }
    }

    pub fn config(&self) -> &MpcbfConfig {
        &self.cfg
    }

    pub fn discrete_model(&self) -> &DiscreteModel {
        &self.dm
    }

    /// Current warm-start input blocks (diagnostics).
    pub fn warm_inputs_for_debug(&self) -> Vec<Vector4<f64>> {
        self.warm_inputs.clone()
    }

    /// Resets the warm start to hover (used when a scenario restarts).
    pub fn reset(&mut self) {
        let hover = self.plant.hover_input();
        self.warm_inputs = vec![hover; self.cfg.n_c + 1];
        self.warm_slacks = vec![0.0; self.cfg.n + 1];
        self.prev_f_des = Vector3::new(0.0, 0.0, self.plant.hover_thrust());
    }

    fn expand_hold(&self, blocks: &[Vector4<f64>]) -> Vec<Vector4<f64>> {
        (0..=self.cfg.n)
            .map(|k| blocks[k.min(self.cfg.n_c)])
            .collect()
    }

    /// Exact nominal trajectory under the held input sequence.
    fn rollout(&self, x0: &Vector6<f64>, blocks: &[Vector4<f64>]) -> Vec<Vector6<f64>> {
        let mut states = Vec::with_capacity(self.cfg.n + 2);
        states.push(*x0);
        for k in 0..=self.cfg.n {
            let u = blocks[k.min(self.cfg.n_c)];
            let next = self.dm.phi * states[k] + self.dm.gamma * u;
            states.push(next);
        }
        states
    }

    /// Builds the QP about the given nominal input sequence.
    pub fn assemble_qp(
        &self,
        x0: &Vector6<f64>,
        refs: &HorizonReference,
        predictions: &[ObstaclePrediction],
        nominal_inputs: &[Vector4<f64>],
    ) -> AssembledQp {
        let cfg = &self.cfg;
        let nu = cfg.input_dim();
        let nd = cfg.n + 1;
        let dim = nu + nd;
        let n = cfg.n;
        let mass = self.plant.mass;
        let gravity = self.plant.gravity;
        let u_hover = self.plant.hover_input();

        let q_stage = Matrix6::from_diagonal(&Vector6::from_row_slice(&cfg.q_diag));
        let q_final = Matrix6::from_diagonal(&Vector6::from_row_slice(&cfg.q_final_diag));

        let nominal_states = self.rollout(x0, nominal_inputs);

        let mut h = DMatrix::zeros(dim, dim);
        let mut c = DVector::zeros(dim);
        let mut constant = 0.0;

        // Tracking cost; k = 0 is the measured state and contributes only a
        // constant.
        let err0 = x0 - refs.0[0];
        constant += err0.dot(&(q_stage * err0));
        for k in 1..=(n + 1) {
            let w = if k == n + 1 { &q_final } else { &q_stage };
            let m_k = &self.m_mats[k];
            // m-part: Phi^k x0 = nominal_states[k] - M_k z_u_nominal; cheaper
            // to carry the affine offset directly.
            let const_part = affine_offset(&nominal_states[k], m_k, nominal_inputs, cfg);
            let e_const = const_part - refs.0[k];
            // H += 2 M' W M, c += 2 M' W e_const, const += e_const' W e_const
            let wm = w_times(m_k, w);
            let mtwm = m_k.transpose() * &wm;
            h.view_mut((0, 0), (nu, nu)).zip_apply(&(2.0 * mtwm), |a, b| *a += b);
            let cv = m_k.transpose() * (w * e_const) * 2.0;
            for i in 0..nu {
                c[i] += cv[i];
            }
            constant += e_const.dot(&(w * e_const));
        }

        // Input cost about hover, with the hold multiplicity on the last
        // block.
        for j in 0..=cfg.n_c {
            let count = if j == cfg.n_c { (n - cfg.n_c + 1) as f64 } else { 1.0 };
            for i in 0..4 {
                let w = cfg.r_diag[i] * count;
                h[(4 * j + i, 4 * j + i)] += 2.0 * w;
                c[4 * j + i] += -2.0 * w * u_hover[i];
                constant += w * u_hover[i] * u_hover[i];
            }
        }

        // Rate-of-change cost over the control horizon.
        for j in 0..cfg.n_c {
            for i in 0..4 {
                let w = 2.0 * cfg.r_delta_diag[i];
                h[(4 * j + i, 4 * j + i)] += w;
                h[(4 * (j + 1) + i, 4 * (j + 1) + i)] += w;
                h[(4 * j + i, 4 * (j + 1) + i)] -= w;
                h[(4 * (j + 1) + i, 4 * j + i)] -= w;
            }
        }

        // Slack cost.
        for k in 0..nd {
            h[(nu + k, nu + k)] += 2.0 * cfg.q_slack;
        }

        let mut problem = QpProblem::unconstrained(h, c);

        // Gravity-component equalities u_j^(4) = 1.
        let mut a_eq = DMatrix::zeros(cfg.n_c + 1, dim);
        for j in 0..=cfg.n_c {
            a_eq[(j, 4 * j + 3)] = 1.0;
        }
        problem.a_eq = a_eq;
        problem.b_eq = DVector::from_element(cfg.n_c + 1, 1.0);

        // Linearized input bounds per decision block.
        let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
        for j in 0..=cfg.n_c {
            for axis in 0..2 {
                let mut r = DVector::zeros(dim);
                r[4 * j + axis] = 1.0;
                rows.push((r.clone(), cfg.f_max));
                let mut rn = DVector::zeros(dim);
                rn[4 * j + axis] = -1.0;
                rows.push((rn, cfg.f_max));
            }
            let mut up = DVector::zeros(dim);
            up[4 * j + 2] = 1.0;
            rows.push((up, cfg.f_max));
            let mut low = DVector::zeros(dim);
            low[4 * j + 2] = -1.0;
            rows.push((low, 0.0));
        }
        let input_rows = rows.len();

        // Softened CLF decrease rows, linearized about the nominal.
        let eta = cfg.eta_x;
        for k in 0..=n {
            let m_next = &self.m_mats[k + 1];
            let x_next = nominal_states[k + 1];
            let u_k = nominal_inputs[k.min(cfg.n_c)];
            let e_x = x_next.fixed_rows::<3>(0) - refs.0[k + 1].fixed_rows::<3>(0);
            let e_v = x_next.fixed_rows::<3>(3) - refs.0[k + 1].fixed_rows::<3>(3);
            let accel = Vector3::new(u_k[0], u_k[1], u_k[2]) / mass
                - Vector3::new(0.0, 0.0, gravity);
            let gx = self.clf.k_x * e_x + self.clf.eps_x * e_v;
            let gv = mass * e_v + self.clf.eps_x * e_x;
            let value = 0.5 * self.clf.k_x * e_x.dot(&e_x)
                + 0.5 * mass * e_v.dot(&e_v)
                + self.clf.eps_x * e_x.dot(&e_v);
            let phi_bar = gx.dot(&e_v) + gv.dot(&accel) + eta * value;

            let mut dphi_dx = Vector6::zeros();
            dphi_dx
                .fixed_rows_mut::<3>(0)
                .copy_from(&(self.clf.k_x * e_v + self.clf.eps_x * accel + eta * gx));
            dphi_dx.fixed_rows_mut::<3>(3).copy_from(
                &(self.clf.k_x * e_x + 2.0 * self.clf.eps_x * e_v + mass * accel + eta * gv),
            );

            let mut grad = DVector::zeros(dim);
            let gu_state = m_next.transpose() * dphi_dx;
            for i in 0..nu {
                grad[i] = gu_state[i];
            }
            let block = 4 * k.min(cfg.n_c);
            for i in 0..3 {
                grad[block + i] += gv[i] / mass;
            }
            grad[nu + k] = -1.0;
            // phi(z) <= delta_k linearized:
            // grad . z <= grad . z_bar - phi_bar (delta enters exactly).
            let mut z_bar_dot = 0.0;
            for j in 0..=cfg.n_c {
                for i in 0..4 {
                    z_bar_dot += grad[4 * j + i] * nominal_inputs[j][i];
                }
            }
            rows.push((grad, z_bar_dot - phi_bar));
        }
        let clf_rows = rows.len() - input_rows;

        // Optional position box rows. Skipped when the measured state is
        // already outside the box: the past cannot be optimized and the rows
        // would poison feasibility.
        let mut box_rows = 0;
        if let Some(bounds) = &cfg.bounds {
            let inside = (0..3).all(|i| {
                x0[i] >= bounds.min[i] - 1e-6 && x0[i] <= bounds.max[i] + 1e-6
            });
            if inside {
                for k in 1..=(n + 1) {
                    let m_k = &self.m_mats[k];
                    let offset = affine_offset(&nominal_states[k], m_k, nominal_inputs, cfg);
                    for axis in 0..3 {
                        let mut up = DVector::zeros(dim);
                        let mut low = DVector::zeros(dim);
                        for i in 0..nu {
                            up[i] = m_k[(axis, i)];
                            low[i] = -m_k[(axis, i)];
                        }
                        rows.push((up, bounds.max[axis] - offset[axis]));
                        rows.push((low, offset[axis] - bounds.min[axis]));
                        box_rows += 2;
                    }
                }
            }
        }

        let m_total = rows.len();
        let mut a = DMatrix::zeros(m_total, dim);
        let mut b = DVector::zeros(m_total);
        for (i, (row, rhs)) in rows.iter().enumerate() {
            a.row_mut(i).copy_from(&row.transpose());
            b[i] = *rhs;
        }
        problem.a = a;
        problem.b = b;

        // Hard barrier rows: forward difference of h over consecutive
        // predicted states plus gamma h^3, linearized about the nominal.
        let mut cbf_rows = Vec::new();
        let mut nearest: Option<(usize, f64)> = None;
        let x0_pos = x0.fixed_rows::<3>(0).into_owned();
                for pred in predictions {
            let dist = (x0_pos - pred.positions[0]).norm();
            if nearest.map_or(true, |(_, best)| dist < best) {
                nearest = Some((pred.obstacle, dist));
            }
            for k in 0..=n {
                // Per-step culling against the nominal prediction.
                let xbar_k = nominal_states[k];
                if !crate::controllers::obstacle_active(
                    &xbar_k.fixed_rows::<3>(0).into_owned(),
                    &xbar_k.fixed_rows::<3>(3).into_owned(),
                    &pred.positions[k],
                    &pred.velocity,
                    pred.r_tilde,
                ) {
                    continue;
                }
                let (h_k, grad_k) = discrete_cbf_h(
                    &nominal_states[k],
                    &pred.positions[k],
                    &pred.velocity,
                    pred.r_tilde,
                    cfg.gamma,
                );
                let (h_k1, grad_k1) = discrete_cbf_h(
                    &nominal_states[k + 1],
                    &pred.positions[k + 1],
                    &pred.velocity,
                    pred.r_tilde,
                    cfg.gamma,
                );
                let psi_bar = (h_k1 - h_k) / cfg.t_s + cfg.gamma * h_k.powi(3);
                let m_k = &self.m_mats[k];
                let m_k1 = &self.m_mats[k + 1];
                let gk = m_k.transpose() * grad_k;
                let gk1 = m_k1.transpose() * grad_k1;
                let scale_k = 3.0 * cfg.gamma * h_k * h_k - 1.0 / cfg.t_s;
                let mut grad = DVector::zeros(dim);
                for i in 0..nu {
                    grad[i] = gk1[i] / cfg.t_s + scale_k * gk[i];
                }
                let mut z_bar_dot = 0.0;
                for j in 0..=cfg.n_c {
                    for i in 0..4 {
                        z_bar_dot += grad[4 * j + i] * nominal_inputs[j][i];
                    }
                }
                // psi(z) >= 0 linearized: -grad . z <= psi_bar - grad . z_bar
                cbf_rows.push(CbfRow {
                    coeffs: -grad,
                    rhs: psi_bar - z_bar_dot,
                    obstacle: pred.obstacle,
                    step: k,
                });
            }
        }

        AssembledQp {
            problem,
            cbf_rows,
            constant,
            nearest_obstacle: nearest.map(|(i, _)| i),
            debug_rows: (input_rows, clf_rows, 0, box_rows),
        }
    }

    /// One position-loop tick: predict, assemble, solve (dropping barrier
    /// rows on infeasibility), shift the warm start and return the thrust.
    pub fn step(
        &mut self,
        x0: &Vector6<f64>,
        t: f64,
        reference: &ReferenceKind,
        obstacles: &[Obstacle],
        sg: &SafetyGeometry,
    ) -> (Vector3<f64>, MpcbfSolution) {
        let start = Instant::now();
        let refs = build_horizon_reference(reference, t, &self.cfg);
        let predictions = predict_obstacles(obstacles, sg, t, &self.cfg);
        let nominal = self.warm_inputs.clone();
        let assembled = self.assemble_qp(x0, &refs, &predictions, &nominal);

        let nu = self.cfg.input_dim();
        let dim = self.cfg.decision_dim();
        let mut warm = DVector::zeros(dim);
        for (j, u) in nominal.iter().enumerate() {
            for i in 0..4 {
                warm[4 * j + i] = u[i];
            }
        }
        for (k, d) in self.warm_slacks.iter().enumerate() {
            warm[nu + k] = *d;
        }

        let n_cbf = assembled.cbf_rows.len();
        let outcome = solve_with_dropping(
            &self.solver,
            &assembled.problem,
            &assembled.cbf_rows,
            assembled.nearest_obstacle,
            Some(&warm),
        );

        let (inputs, slacks, status, hard, iterations, dropped) = match outcome {
            Ok(out) if out.solution.status == QpStatus::Optimal
                || out.solution.kkt_residual <= 1e-3 =>
            {
                let x = &out.solution.x;
                let blocks: Vec<Vector4<f64>> = (0..=self.cfg.n_c)
                    .map(|j| Vector4::new(x[4 * j], x[4 * j + 1], x[4 * j + 2], x[4 * j + 3]))
                    .collect();
                let slacks: Vec<f64> = (0..=self.cfg.n).map(|k| x[nu + k]).collect();
                (
                    blocks,
                    slacks,
                    out.solution.status,
                    false,
                    out.solution.iterations,
                    out.dropped.len(),
                )
            }
            Ok(out) => {
                // Unconverged iterate: hold the previous plan rather than
                // actuate on garbage.
                (
                    self.warm_inputs.clone(),
                    self.warm_slacks.clone(),
                    out.solution.status,
                    true,
                    out.solution.iterations,
                    out.dropped.len(),
                )
            }
            Err(ControllerError::HardInfeasible) => (
                self.warm_inputs.clone(),
                self.warm_slacks.clone(),
                QpStatus::Infeasible,
                true,
                0,
                n_cbf,
            ),
            Err(_) => unreachable!("dropping only fails with HardInfeasible"),
        };

        let predicted_full = self.rollout(x0, &inputs);
        let solution = MpcbfSolution {
            inputs: self.expand_hold(&inputs),
            predicted: predicted_full[1..].to_vec(),
            slacks: slacks.clone(),
            status,
            hard_infeasible: hard,
            debug: MpcbfDebug {
                decision_dim: dim,
                input_rows: assembled.debug_rows.0,
                clf_rows: assembled.debug_rows.1,
                cbf_rows: n_cbf,
                box_rows: assembled.debug_rows.3,
                equality_rows: self.cfg.n_c + 1,
                iterations,
                solve_time: start.elapsed(),
                dropped_rows: dropped,
            },
        };

        let f_des = if hard {
            self.prev_f_des
        } else {
            Vector3::new(inputs[0][0], inputs[0][1], inputs[0][2])
        };

        // Shift-by-one warm start with the last block duplicated.
        if !hard {
            let mut shifted = Vec::with_capacity(self.cfg.n_c + 1);
            for j in 0..=self.cfg.n_c {
                shifted.push(inputs[(j + 1).min(self.cfg.n_c)]);
            }
            self.warm_inputs = shifted;
            let mut slack_shift: Vec<f64> = slacks[1..].to_vec();
            slack_shift.push(*slacks.last().unwrap());
            self.warm_slacks = slack_shift;
            self.prev_f_des = f_des;
        }

        (f_des, solution)
    }
}

/// Affine offset `Phi^k x0` recovered as `x_bar_k - M_k z_bar_u`.
fn affine_offset(
    nominal_state: &Vector6<f64>,
    m_k: &DMatrix<f64>,
    nominal_inputs: &[Vector4<f64>],
    cfg: &MpcbfConfig,
) -> Vector6<f64> {
    let mut mz = Vector6::zeros();
    for j in 0..=cfg.n_c {
        for i in 0..4 {
            let col = 4 * j + i;
            for r in 0..6 {
                mz[r] += m_k[(r, col)] * nominal_inputs[j][i];
            }
        }
    }
    nominal_state - mz
}

fn w_times(m: &DMatrix<f64>, w: &Matrix6<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(6, m.ncols());
    for c in 0..m.ncols() {
        let col = Vector6::from_iterator(m.column(c).iter().copied());
        out.column_mut(c).copy_from(&(w * col));
    }
    out
}
