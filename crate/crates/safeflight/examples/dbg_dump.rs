use nalgebra::{Vector3, Vector6};
use safeflight::config::Config;
use safeflight::mpcbf::{build_horizon_reference, predict_obstacles, MpcbfController};
use safeflight::qp::dump_problem;
use safeflight::scenario::{Obstacle, ReferenceKind, SafetyGeometry};

fn main() {
    let cfg = Config::default();
    let plant = cfg.plant_params();
    let mut ctrl = MpcbfController::new(cfg.mpcbf_config(), cfg.position_clf(), plant.clone());
    let reference = ReferenceKind::Setpoint { point: Vector3::zeros() };
    let sg = SafetyGeometry { r_robot: 0.265, r_safety: 0.0 };
    let obstacle = Obstacle::moving(Vector3::new(4.0, 0.0, 0.0), Vector3::new(-2.0, 0.0, 0.0), 0.5);
    let mut x = Vector6::zeros();
    for tick in 0..5 {
        let t = tick as f64 * 0.1;
        if tick == 4 {
            // Reassemble the same QP the failing tick sees and dump it with
            // all CBF rows appended.
            let refs = build_horizon_reference(&reference, t, ctrl.config());
            let preds = predict_obstacles(&[obstacle.clone()], &sg, t, ctrl.config());
            let warm = ctrl.warm_inputs_for_debug();
            let assembled = ctrl.assemble_qp(&x, &refs, &preds, &warm);
            let mut p = assembled.problem.clone();
            let n = p.n();
            let m0 = p.a.nrows();
            let extra = assembled.cbf_rows.len();
            let mut a = nalgebra::DMatrix::zeros(m0 + extra, n);
            a.view_mut((0, 0), (m0, n)).copy_from(&p.a);
            let mut b = nalgebra::DVector::zeros(m0 + extra);
            b.rows_mut(0, m0).copy_from(&p.b);
            for (i, row) in assembled.cbf_rows.iter().enumerate() {
                a.row_mut(m0 + i).copy_from(&row.coeffs.transpose());
                b[m0 + i] = row.rhs;
            }
            p.a = a;
            p.b = b;
            std::fs::write("/tmp/qp_dump.txt", dump_problem(&p)).unwrap();
            println!("dumped n={} m={} meq={}", p.n(), p.a.nrows(), p.a_eq.nrows());
        }
        let (_, sol) = ctrl.step(&x, t, &reference, &[obstacle.clone()], &sg);
        println!("t={t:.1} status {:?} iters {}", sol.status, sol.debug.iterations);
        let u = sol.inputs[0];
        x = ctrl.discrete_model().phi * x + ctrl.discrete_model().gamma * u;
    }
}
