//! Dense convex quadratic-program solver in the canonical form
//!
//! ```text
//!     minimize    1/2 x' Q x + f' x
//!     subject to  A x <= b
//!                 A_eq x == b_eq
//! ```
//!
//! Primal-dual interior point with Mehrotra predictor-corrector. Equality
//! constraints are kept in the KKT system so they hold to solver precision;
//! inequality rows are equilibrated internally and multipliers mapped back.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Q is not symmetric (asymmetry {0:.3e})")]
    NonSymmetricQ(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

/// Canonical convex QP data.
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub q: DMatrix<f64>,
    pub f: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
}

impl QpProblem {
    /// Unconstrained problem; add rows via the public fields.
    pub fn unconstrained(q: DMatrix<f64>, f: DVector<f64>) -> Self {
        let n = f.len();
        Self {
            q,
            f,
            a: DMatrix::zeros(0, n),
            b: DVector::zeros(0),
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
        }
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn validate(&self) -> Result<(), QpError> {
        let n = self.n();
        if self.q.nrows() != n || self.q.ncols() != n {
            return Err(QpError::DimensionMismatch(format!(
                "Q is {}x{}, expected {}x{}",
                self.q.nrows(),
                self.q.ncols(),
                n,
                n
            )));
        }
        if self.a.nrows() != self.b.len() || (self.a.nrows() > 0 && self.a.ncols() != n) {
            return Err(QpError::DimensionMismatch(format!(
                "A is {}x{} with b of length {}",
                self.a.nrows(),
                self.a.ncols(),
                self.b.len()
            )));
        }
        if self.a_eq.nrows() != self.b_eq.len() || (self.a_eq.nrows() > 0 && self.a_eq.ncols() != n)
        {
            return Err(QpError::DimensionMismatch(format!(
                "A_eq is {}x{} with b_eq of length {}",
                self.a_eq.nrows(),
                self.a_eq.ncols(),
                self.b_eq.len()
            )));
        }
        let asym = (&self.q - self.q.transpose()).amax();
        if asym > 1e-10 {
            return Err(QpError::NonSymmetricQ(asym));
        }
        Ok(())
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.f.dot(x)
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    pub kkt_residual: f64,
    /// Multipliers of `A x <= b` (nonnegative at an optimum).
    pub ineq_multipliers: DVector<f64>,
    /// Multipliers of `A_eq x == b_eq`.
    pub eq_multipliers: DVector<f64>,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }
}

/// Worst KKT violation of `(x, multipliers)` for `p`: max of stationarity,
/// primal feasibility (both kinds), complementarity and multiplier sign.
pub fn kkt_residual(
    p: &QpProblem,
    x: &DVector<f64>,
    ineq_multipliers: &DVector<f64>,
    eq_multipliers: &DVector<f64>,
) -> f64 {
    let mut stationarity = &p.q * x + &p.f;
    if p.a.nrows() > 0 {
        stationarity += p.a.transpose() * ineq_multipliers;
    }
    if p.a_eq.nrows() > 0 {
        stationarity += p.a_eq.transpose() * eq_multipliers;
    }
    let mut worst: f64 = stationarity.amax();
    if p.a.nrows() > 0 {
        let slack = &p.b - &p.a * x;
        for i in 0..slack.len() {
            worst = worst.max(-slack[i]); // primal violation
            worst = worst.max(-ineq_multipliers[i]); // sign violation
            worst = worst.max((ineq_multipliers[i] * slack[i]).abs()); // complementarity
        }
    }
    if p.a_eq.nrows() > 0 {
        worst = worst.max((&p.a_eq * x - &p.b_eq).amax());
    }
    worst
}

/// Plain-text dump of a problem (row-major, full precision) for offline
/// cross-checking.
pub fn dump_problem(p: &QpProblem) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let mut matrix = |name: &str, m: &DMatrix<f64>| {
        writeln!(out, "{} {} {}", name, m.nrows(), m.ncols()).unwrap();
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.17e}", m[(i, j)])).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
    };
    matrix("Q", &p.q);
    matrix("A", &p.a);
    matrix("A_eq", &p.a_eq);
    let mut vector = |name: &str, v: &DVector<f64>| {
        writeln!(out, "{} {}", name, v.len()).unwrap();
        let row: Vec<String> = v.iter().map(|x| format!("{:.17e}", x)).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    };
    vector("f", &p.f);
    vector("b", &p.b);
    vector("b_eq", &p.b_eq);
    out
}

/// Interior-point solver settings. One instance may be shared; each solve
/// allocates its own workspace.
#[derive(Debug, Clone)]
pub struct QpSolver {
    pub max_iterations: usize,
    pub gap_tolerance: f64,
    pub residual_tolerance: f64,
    /// Tikhonov term added to Q so semidefinite blocks stay factorizable.
    pub regularization: f64,
}

impl Default for QpSolver {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            gap_tolerance: 1e-8,
            residual_tolerance: 1e-9,
            regularization: 1e-9,
        }
    }
}

impl QpSolver {
    pub fn solve(&self, p: &QpProblem) -> Result<QpSolution, QpError> {
        self.solve_warm(p, None)
    }

    /// Solve with an optional primal warm start (e.g. the previous MPC
    /// solution, shifted).
    pub fn solve_warm(
        &self,
        p: &QpProblem,
        warm: Option<&DVector<f64>>,
    ) -> Result<QpSolution, QpError> {
        p.validate()?;
        if let Some(w) = warm {
            if w.len() != p.n() {
                return Err(QpError::DimensionMismatch(format!(
                    "warm start has length {}, expected {}",
                    w.len(),
                    p.n()
                )));
            }
        }

        let n = p.n();
        let m = p.a.nrows();
        let meq = p.a_eq.nrows();

        // Normalize the objective so tolerances (and therefore the argmin)
        // are invariant under positive rescaling of (Q, f).
        let obj_scale = {
            let s = p.q.amax().max(p.f.amax_or_zero());
            if s > 1e-300 { s } else { 1.0 }
        };
        let q_raw = 0.5 * (&p.q + p.q.transpose()) / obj_scale;
        let q = {
            let mut q = q_raw.clone();
            for i in 0..n {
                q[(i, i)] += self.regularization;
            }
            q
        };
        let f = &p.f / obj_scale;

        // Row equilibration of the inequalities; multipliers are mapped back
        // at the end via z = z_scaled / c.
        let mut row_scale = DVector::from_element(m, 1.0);
        let mut a = p.a.clone();
        let mut b = p.b.clone();
        for i in 0..m {
            let norm = p.a.row(i).amax();
            if norm > 0.0 {
                row_scale[i] = norm;
                for j in 0..n {
                    a[(i, j)] /= norm;
                }
                b[i] /= norm;
            } else if b[i] < -1e-12 {
                // 0 <= b with b < 0 can never hold.
                return Ok(QpSolution {
                    x: warm.cloned().unwrap_or_else(|| DVector::zeros(n)),
                    status: QpStatus::Infeasible,
                    iterations: 0,
                    kkt_residual: f64::INFINITY,
                    ineq_multipliers: DVector::zeros(m),
                    eq_multipliers: DVector::zeros(meq),
                });
            }
        }
        let mut eq_scale = DVector::from_element(meq, 1.0);
        let mut a_eq = p.a_eq.clone();
        let mut b_eq = p.b_eq.clone();
        for i in 0..meq {
            let norm = p.a_eq.row(i).amax();
            if norm > 0.0 {
                eq_scale[i] = norm;
                for j in 0..n {
                    a_eq[(i, j)] /= norm;
                }
                b_eq[i] /= norm;
            }
        }

        // Starting point.
        let mut x = match warm {
            Some(w) => w.clone(),
            None => initial_point(&q, &f, &a_eq, &b_eq),
        };
        if !x.iter().all(|v| v.is_finite()) {
            x = DVector::zeros(n);
        }
        let mut nu = DVector::zeros(meq);
        let (mut s, mut z) = if m > 0 {
            // Shifted slack start: deep violations enter as honest primal
            // infeasibility instead of being clamped away.
            let resid = &b - &a * &x;
            let floor = if warm.is_some() { 1e-2 } else { 1.0 };
            let min_resid = resid.iter().cloned().fold(f64::INFINITY, f64::min);
            let shift = (-1.5 * min_resid).max(0.0) + floor;
            let mut s = DVector::zeros(m);
            let mut z = DVector::zeros(m);
            for i in 0..m {
                s[i] = resid[i] + shift;
                z[i] = 1.0;
            }
            (s, z)
        } else {
            (DVector::zeros(0), DVector::zeros(0))
        };

        let b_scale = 1.0 + b.amax_or_zero();
        let beq_scale = 1.0 + b_eq.amax_or_zero();
        let f_scale = 1.0 + f.amax_or_zero();

        let mut iterations = 0;
        let mut status = QpStatus::MaxIterations;
        let mut first_primal_residual = f64::INFINITY;

        // Pure equality / unconstrained problems need a single KKT solve.
        if m == 0 {
            let sol = solve_kkt_once(&q, &f, &a_eq, &b_eq);
            x = sol.0;
            nu = sol.1;
            let eq_resid = if meq > 0 { (&a_eq * &x - &b_eq).amax() } else { 0.0 };
            status = if eq_resid <= self.residual_tolerance.max(1e-9) * beq_scale {
                QpStatus::Optimal
            } else {
                QpStatus::Infeasible
            };
            iterations = 1;
        } else {
            // Best iterate seen so far (by worst scaled KKT measure), used
            // when later iterations degrade numerically.
            let mut best_score = f64::INFINITY;
            let mut best = (x.clone(), s.clone(), z.clone(), nu.clone());
            let mut last_improvement = 0usize;
            for iter in 0..self.max_iterations {
                iterations = iter + 1;
                let qx = &q * &x;
                let atz = a.transpose() * &z;
                let aeqnu = a_eq.transpose() * &nu;
                let r_d = &qx + &f + &atz + &aeqnu;
                let r_p = &a * &x + &s - &b;
                let r_e = if meq > 0 { &a_eq * &x - &b_eq } else { DVector::zeros(0) };
                let mu = s.dot(&z) / m as f64;

                let primal_resid = r_p.amax_or_zero().max(r_e.amax_or_zero());
                if iter == 0 {
                    first_primal_residual = primal_resid;
                }

                if std::env::var("SAFEFLIGHT_QP_TRACE").is_ok() {
                    eprintln!(
                        "iter {iter:>2}: mu={mu:.3e} rd={:.3e} rp={:.3e} re={:.3e}",
                        r_d.amax(),
                        r_p.amax_or_zero(),
                        r_e.amax_or_zero()
                    );
                }
                let dual_scale =
                    1.0 + f_scale + qx.amax_or_zero() + atz.amax_or_zero() + aeqnu.amax_or_zero();
                let gap_scale = 1.0 + (0.5 * x.dot(&qx) + f.dot(&x)).abs();
                let score = (r_d.amax() / dual_scale)
                    .max(r_p.amax_or_zero() / b_scale)
                    .max(r_e.amax_or_zero() / beq_scale)
                    .max(mu / gap_scale);
                if score < 0.9 * best_score {
                    last_improvement = iter;
                }
                if iter - last_improvement > 12 {
                    // Stagnation: blocked affine steps keep the centering
                    // parameter at one and nothing improves; the polish below
                    // resolves the final vertex exactly.
                    break;
                }
                if score < best_score {
                    best_score = score;
                    best = (x.clone(), s.clone(), z.clone(), nu.clone());
                } else if iter > 5 && score > 1e4 * best_score.max(1e-12) {
                    // Degenerate-complementarity cycling: the iterate has
                    // collapsed far from the best one seen; stop and let the
                    // polish below recover it.
                    break;
                }

                if r_d.amax() <= self.residual_tolerance * dual_scale * 10.0
                    && r_p.amax_or_zero() <= self.residual_tolerance * b_scale
                    && r_e.amax_or_zero() <= self.residual_tolerance * beq_scale
                    && mu <= self.gap_tolerance * gap_scale
                {
                    status = QpStatus::Optimal;
                    break;
                }

                // Barrier floor: once mu is this small nothing improves, and
                // the scaling matrix degenerates.
                if mu <= 1e-16 * gap_scale {
                    break;
                }

                if self.farkas_certificate(&a, &b, &a_eq, &b_eq, &z, &nu) {
                    status = QpStatus::Infeasible;
                    break;
                }

                // Reduced KKT matrix, shared by predictor and corrector.
                // The scaling ratios are clamped so late-stage degenerate
                // rows cannot destroy the factorization.
                let w = DVector::from_fn(m, |i, _| (z[i] / s[i]).clamp(1e-12, 1e12));
                let mut kkt = DMatrix::zeros(n + meq, n + meq);
                let mut awa = q.clone();
                for i in 0..m {
                    let row = a.row(i);
                    let wi = w[i];
                    for c1 in 0..n {
                        let awc1 = wi * row[c1];
                        if awc1 == 0.0 {
                            continue;
                        }
                        for c2 in 0..n {
                            awa[(c1, c2)] += awc1 * row[c2];
                        }
                    }
                }
                kkt.view_mut((0, 0), (n, n)).copy_from(&awa);
                if meq > 0 {
                    kkt.view_mut((0, n), (n, meq)).copy_from(&a_eq.transpose());
                    kkt.view_mut((n, 0), (meq, n)).copy_from(&a_eq);
                    for i in 0..meq {
                        kkt[(n + i, n + i)] = -1e-12;
                    }
                }
                let lu = kkt.lu();

                let solve_direction = |r_c: &DVector<f64>| -> Option<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> {
                    let mut rhs = DVector::zeros(n + meq);
                    let mut top = -&r_d;
                    // + A' ((r_c - z .* r_p) ./ s)
                    let mut coeff = DVector::zeros(m);
                    for i in 0..m {
                        coeff[i] = (r_c[i] - z[i] * r_p[i]) / s[i];
                    }
                    top += a.transpose() * coeff;
                    rhs.rows_mut(0, n).copy_from(&top);
                    if meq > 0 {
                        rhs.rows_mut(n, meq).copy_from(&(-&r_e));
                    }
                    let sol = lu.solve(&rhs)?;
                    let dx = sol.rows(0, n).into_owned();
                    let dnu = if meq > 0 { sol.rows(n, meq).into_owned() } else { DVector::zeros(0) };
                    let ds = -&r_p - &a * &dx;
                    let mut dz = DVector::zeros(m);
                    for i in 0..m {
                        dz[i] = -(r_c[i] + z[i] * ds[i]) / s[i];
                    }
                    Some((dx, dnu, ds, dz))
                };

                // Predictor (affine scaling) direction.
                let r_c_aff = DVector::from_fn(m, |i, _| s[i] * z[i]);
                let Some((_dx_a, _dnu_a, ds_a, dz_a)) = solve_direction(&r_c_aff) else {
                    break;
                };
                let alpha_aff = step_length(&s, &ds_a).min(step_length(&z, &dz_a));
                let mu_aff = {
                    let mut acc = 0.0;
                    for i in 0..m {
                        acc += (s[i] + alpha_aff * ds_a[i]) * (z[i] + alpha_aff * dz_a[i]);
                    }
                    acc / m as f64
                };
                let sigma = if mu > 0.0 { (mu_aff / mu).powi(3).clamp(0.0, 1.0) } else { 0.0 };

                // Corrector.
                let r_c = DVector::from_fn(m, |i, _| s[i] * z[i] + ds_a[i] * dz_a[i] - sigma * mu);
                let Some((dx, dnu, ds, dz)) = solve_direction(&r_c) else {
                    break;
                };
                let mut alpha = 0.995 * step_length(&s, &ds).min(step_length(&z, &dz));
                alpha = alpha.min(1.0);
                // Never let one step inflate the barrier by orders of
                // magnitude (corrector overshoot on badly scaled rows).
                if mu > 0.0 {
                    for _ in 0..6 {
                        let mut mu_new = 0.0;
                        for i in 0..m {
                            mu_new += (s[i] + alpha * ds[i]) * (z[i] + alpha * dz[i]);
                        }
                        mu_new /= m as f64;
                        if mu_new <= 10.0 * mu {
                            break;
                        }
                        alpha *= 0.5;
                    }
                }

                x += alpha * &dx;
                nu += alpha * &dnu;
                s += alpha * &ds;
                z += alpha * &dz;
                for i in 0..m {
                    s[i] = s[i].max(1e-300);
                    z[i] = z[i].max(1e-300);
                }
            }

            if status != QpStatus::Infeasible {
                let (bx, bs, bz, bnu) = best;
                x = bx;
                s = bs;
                z = bz;
                nu = bnu;
                // Active-set polish from the best iterate: weakly active rows
                // leave both s and z at sqrt(mu), and their classification is
                // ambiguous, so the initial guess is refined like a tiny
                // active-set method: negative multipliers leave the set,
                // violated rows join it.
                let mut active: Vec<usize> = (0..m).filter(|&i| z[i] > s[i]).collect();
                for _round in 0..8 {
                    let Some((px, pz_act, pnu)) =
                        polish(&q_raw, &f, &a, &b, &a_eq, &b_eq, &active)
                    else {
                        break;
                    };
                    let negatives: Vec<usize> = active
                        .iter()
                        .enumerate()
                        .filter(|(slot, _)| pz_act[*slot] < -1e-9)
                        .map(|(_, &i)| i)
                        .collect();
                    let resid = &a * &px - &b;
                    let violated: Vec<usize> = (0..m)
                        .filter(|i| !active.contains(i))
                        .filter(|&i| resid[i] > 1e-8 * (1.0 + b[i].abs()))
                        .collect();
                    if negatives.is_empty() && violated.is_empty() {
                        x = px;
                        nu = pnu;
                        z.fill(0.0);
                        for (slot, &i) in active.iter().enumerate() {
                            z[i] = pz_act[slot].max(0.0);
                        }
                        s = &b - &a * &x;
                        for i in 0..m {
                            s[i] = s[i].max(0.0);
                        }
                        break;
                    }
                    active.retain(|i| !negatives.contains(i));
                    active.extend(violated);
                    active.sort_unstable();
                }
                // Classify by the final KKT residual in original units; the
                // polish step usually lands well below the threshold even
                // when the barrier iteration стalled on a weakly active set.
                if status == QpStatus::MaxIterations {
                    let mut trial_z = DVector::zeros(m);
                    for i in 0..m {
                        trial_z[i] = z[i] * obj_scale / row_scale[i];
                    }
                    let mut trial_nu = DVector::zeros(meq);
                    for i in 0..meq {
                        trial_nu[i] = nu[i] * obj_scale / eq_scale[i];
                    }
                    let resid = kkt_residual(p, &x, &trial_z, &trial_nu);
                    let scale = 1.0
                        + p.f.amax_or_zero()
                        + p.b.amax_or_zero()
                        + p.b_eq.amax_or_zero();
                    if resid <= 1e-6 * scale {
                        status = QpStatus::Optimal;
                    }
                }
            }

            if status == QpStatus::MaxIterations {
                // Iterations exhausted: classify as infeasible when the primal
                // residual never came down (or grew) while the barrier shrank.
                let r_p = &a * &x + &s - &b;
                let r_e = if meq > 0 { &a_eq * &x - &b_eq } else { DVector::zeros(0) };
                let primal_resid = r_p.amax_or_zero().max(r_e.amax_or_zero());
                let tol = self.residual_tolerance * b_scale.max(beq_scale);
                if primal_resid > 1e3 * tol && primal_resid > 0.5 * first_primal_residual {
                    status = QpStatus::Infeasible;
                }
                if self.farkas_certificate(&a, &b, &a_eq, &b_eq, &z, &nu) {
                    status = QpStatus::Infeasible;
                }
            }
        }

        // Map multipliers back to the unscaled rows.
        let mut ineq_multipliers = DVector::zeros(m);
        for i in 0..m {
            ineq_multipliers[i] = z[i] * obj_scale / row_scale[i];
        }
        let mut eq_multipliers = DVector::zeros(meq);
        for i in 0..meq {
            eq_multipliers[i] = nu[i] * obj_scale / eq_scale[i];
        }
        let kkt = kkt_residual(p, &x, &ineq_multipliers, &eq_multipliers);
        Ok(QpSolution {
            x,
            status,
            iterations,
            kkt_residual: kkt,
            ineq_multipliers,
            eq_multipliers,
        })
    }

    /// Farkas-style certificate of primal infeasibility built from the
    /// (normalized) current dual iterate.
    fn farkas_certificate(
        &self,
        a: &DMatrix<f64>,
        b: &DVector<f64>,
        a_eq: &DMatrix<f64>,
        b_eq: &DVector<f64>,
        z: &DVector<f64>,
        nu: &DVector<f64>,
    ) -> bool {
        let norm = z.iter().map(|v| v.abs()).sum::<f64>()
            + nu.iter().map(|v| v.abs()).sum::<f64>();
        if norm < 1e2 {
            return false;
        }
        let zh = z / norm;
        let nuh = nu / norm;
        let stat = (a.transpose() * &zh + a_eq.transpose() * &nuh).amax();
        let gain = b.dot(&zh) + b_eq.dot(&nuh);
        stat <= 1e-7 && gain <= -1e-9
    }
}

/// Largest alpha in (0, 1] with `v + alpha dv >= 0`.
fn step_length(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    let mut alpha = 1.0f64;
    for i in 0..v.len() {
        if dv[i] < 0.0 {
            alpha = alpha.min(-v[i] / dv[i]);
        }
    }
    alpha
}

fn initial_point(
    q: &DMatrix<f64>,
    f: &DVector<f64>,
    a_eq: &DMatrix<f64>,
    b_eq: &DVector<f64>,
) -> DVector<f64> {
    solve_kkt_once(q, f, a_eq, b_eq).0
}

/// Equality-KKT solve treating `active` inequality rows as equalities.
/// Returns `(x, z_active, nu)` or `None` when the system is singular.
#[allow(clippy::too_many_arguments)]
fn polish(
    q: &DMatrix<f64>,
    f: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    a_eq: &DMatrix<f64>,
    b_eq: &DVector<f64>,
    active: &[usize],
) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    let n = f.len();
    let ma = active.len();
    let meq = a_eq.nrows();
    let dim = n + ma + meq;
    let mut kkt = DMatrix::zeros(dim, dim);
    kkt.view_mut((0, 0), (n, n)).copy_from(q);
    for (slot, &i) in active.iter().enumerate() {
        for c in 0..n {
            kkt[(c, n + slot)] = a[(i, c)];
            kkt[(n + slot, c)] = a[(i, c)];
        }
    }
    if meq > 0 {
        kkt.view_mut((0, n + ma), (n, meq)).copy_from(&a_eq.transpose());
        kkt.view_mut((n + ma, 0), (meq, n)).copy_from(a_eq);
    }
    let mut rhs = DVector::zeros(dim);
    rhs.rows_mut(0, n).copy_from(&(-f));
    for (slot, &i) in active.iter().enumerate() {
        rhs[n + slot] = b[i];
    }
    if meq > 0 {
        rhs.rows_mut(n + ma, meq).copy_from(b_eq);
    }
    let sol = kkt.lu().solve(&rhs)?;
    if !sol.iter().all(|v| v.is_finite()) {
        return None;
    }
    Some((
        sol.rows(0, n).into_owned(),
        sol.rows(n, ma).into_owned(),
        if meq > 0 { sol.rows(n + ma, meq).into_owned() } else { DVector::zeros(0) },
    ))
}

fn solve_kkt_once(
    q: &DMatrix<f64>,
    f: &DVector<f64>,
    a_eq: &DMatrix<f64>,
    b_eq: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let n = f.len();
    let meq = a_eq.nrows();
    let mut kkt = DMatrix::zeros(n + meq, n + meq);
    kkt.view_mut((0, 0), (n, n)).copy_from(q);
    if meq > 0 {
        kkt.view_mut((0, n), (n, meq)).copy_from(&a_eq.transpose());
        kkt.view_mut((n, 0), (meq, n)).copy_from(a_eq);
    }
    let mut rhs = DVector::zeros(n + meq);
    rhs.rows_mut(0, n).copy_from(&(-f));
    if meq > 0 {
        rhs.rows_mut(n, meq).copy_from(b_eq);
    }
    match kkt.lu().solve(&rhs) {
        Some(sol) => (
            sol.rows(0, n).into_owned(),
            if meq > 0 { sol.rows(n, meq).into_owned() } else { DVector::zeros(0) },
        ),
        None => (DVector::zeros(n), DVector::zeros(meq)),
    }
}

trait AmaxOrZero {
    fn amax_or_zero(&self) -> f64;
}

impl AmaxOrZero for DVector<f64> {
    fn amax_or_zero(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.amax()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn solver() -> QpSolver {
        QpSolver::default()
    }

    #[test]
    fn unconstrained_scalar_minimum() {
        // min 1/2 x^2 - x  ->  x* = 1
        let p = QpProblem::unconstrained(DMatrix::identity(1, 1), DVector::from_vec(vec![-1.0]));
        let sol = solver().solve(&p).unwrap();
        assert!(sol.is_optimal());
        assert_abs_diff_eq!(sol.x[0], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn active_inequality() {
        // min 1/2 x^2 - x  s.t. x <= 0.5  ->  x* = 0.5
        let mut p =
            QpProblem::unconstrained(DMatrix::identity(1, 1), DVector::from_vec(vec![-1.0]));
        p.a = DMatrix::from_row_slice(1, 1, &[1.0]);
        p.b = DVector::from_vec(vec![0.5]);
        let sol = solver().solve(&p).unwrap();
        assert!(sol.is_optimal());
        assert_abs_diff_eq!(sol.x[0], 0.5, epsilon = 1e-7);
        assert!(sol.kkt_residual <= 1e-6);
    }

    #[test]
    fn symmetric_equality_split() {
        // min 1/2 |x|^2  s.t. x1 + x2 = 2  ->  (1, 1)
        let mut p = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::zeros(2));
        p.a_eq = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        p.b_eq = DVector::from_vec(vec![2.0]);
        let sol = solver().solve(&p).unwrap();
        assert!(sol.is_optimal());
        assert_abs_diff_eq!(sol.x[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.x[1], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn empty_feasible_set_is_infeasible() {
        // x <= -1 and -x <= -1 cannot both hold.
        let mut p = QpProblem::unconstrained(DMatrix::identity(1, 1), DVector::zeros(1));
        p.a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        p.b = DVector::from_vec(vec![-1.0, -1.0]);
        let sol = solver().solve(&p).unwrap();
        assert_eq!(sol.status, QpStatus::Infeasible);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut p = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::zeros(2));
        p.a = DMatrix::from_row_slice(1, 1, &[1.0]);
        p.b = DVector::from_vec(vec![0.0]);
        assert!(matches!(
            solver().solve(&p),
            Err(QpError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn non_symmetric_q_is_rejected() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let p = QpProblem::unconstrained(q, DVector::zeros(2));
        assert!(matches!(solver().solve(&p), Err(QpError::NonSymmetricQ(_))));
    }

    #[test]
    fn kkt_residual_on_equality_only_analytic_optimum() {
        // min 1/2 |x|^2 s.t. x1 + x2 = 2: x* = (1,1), nu* = -1.
        let mut p = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::zeros(2));
        p.a_eq = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        p.b_eq = DVector::from_vec(vec![2.0]);
        let x = DVector::from_vec(vec![1.0, 1.0]);
        let nu = DVector::from_vec(vec![-1.0]);
        let resid = kkt_residual(&p, &x, &DVector::zeros(0), &nu);
        assert!(resid <= 1e-12);

        let perturbed = DVector::from_vec(vec![1.1, 1.1]);
        assert!(kkt_residual(&p, &perturbed, &DVector::zeros(0), &nu) > 1e-3);
    }

    #[test]
    fn kkt_residual_zero_problem() {
        let p = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::zeros(2));
        let resid = kkt_residual(&p, &DVector::zeros(2), &DVector::zeros(0), &DVector::zeros(0));
        assert_eq!(resid, 0.0);
    }

    #[test]
    fn determinism_bit_identical() {
        let mut p = QpProblem::unconstrained(
            DMatrix::from_row_slice(3, 3, &[2.0, 0.1, 0.0, 0.1, 1.5, 0.2, 0.0, 0.2, 3.0]),
            DVector::from_vec(vec![-1.0, 0.5, 2.0]),
        );
        p.a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, -1.0, 2.0, 1.0]);
        p.b = DVector::from_vec(vec![0.7, 1.2]);
        let s1 = solver().solve(&p).unwrap();
        let s2 = solver().solve(&p).unwrap();
        assert_eq!(s1.x.as_slice(), s2.x.as_slice());
        assert_eq!(s1.iterations, s2.iterations);
    }

    #[test]
    fn objective_scaling_leaves_argmin_unchanged() {
        let mut p = QpProblem::unconstrained(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
            DVector::from_vec(vec![-1.0, 0.4]),
        );
        p.a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        p.b = DVector::from_vec(vec![0.3, 10.0]);
        let base = solver().solve(&p).unwrap();
        for &c in &[1e-3, 10.0, 1e4] {
            let scaled = QpProblem {
                q: &p.q * c,
                f: &p.f * c,
                ..p.clone()
            };
            let sol = solver().solve(&scaled).unwrap();
            assert!(sol.is_optimal());
            assert!((sol.x.clone() - base.x.clone()).amax() <= 1e-8, "c = {}", c);
        }
    }

    #[test]
    fn dump_contains_full_precision_rows() {
        let p = QpProblem::unconstrained(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![0.1, -0.25]),
        );
        let text = dump_problem(&p);
        assert!(text.contains("Q 2 2"));
        assert!(text.contains("f 2"));
        assert!(text.contains(&format!("{:.17e}", 0.1)));
    }
}
