use nalgebra::Vector3;
use safeflight::config::Config;
use safeflight::controllers::attitude_qp::ObstacleSnapshot;
use safeflight::controllers::clf_cbf_attitude_qp;
use safeflight::dynamics::{integrate_step, saturate_command, ControlCommand, PlantState};
use safeflight::qp::QpSolver;
use safeflight::scenario::{Obstacle, ReferenceKind, SafetyGeometry};
use safeflight::controllers::{clf_position_qp, desired_attitude, obstacle_active};

fn main() {
    let cfg = Config::default();
    let p = cfg.plant_params();
    let set_clf = cfg.position_clf();
    let aclf = cfg.attitude_clf();
    let acbf = cfg.attitude_cbf();
    let ea = cfg.ea_gains();
    let solver = QpSolver::default();
    let reference = ReferenceKind::Setpoint { point: Vector3::zeros() };
    let sg = SafetyGeometry { r_robot: 0.265, r_safety: 0.0 };
    let obstacle = Obstacle::moving(Vector3::new(4.0, 0.0, 0.0), Vector3::new(-2.0, 0.0, 0.0), 0.5);
    let r_tilde = 0.265 + 0.5;

    let mut s = PlantState::at_rest(Vector3::zeros());
    let mut f_des = Vector3::new(0.0, 0.0, p.hover_thrust());
    let mut r_c = s.rotation;
    let dt = 0.002;
    let mut bad = 0;
    for tick in 0..3000 {
        let t = tick as f64 * dt;
        if tick % 50 == 0 {
            let r = reference.sample(t);
            f_des = clf_position_qp(&s, &r, &set_clf, &ea, &p, &solver).f_des;
        }
        r_c = desired_attitude(&f_des, 0.0).unwrap_or(r_c);
        let mut snaps = Vec::new();
        if let Some((pos, vel)) = obstacle.state(t) {
            if obstacle_active(&s.position, &s.velocity, &pos, &vel, r_tilde) {
                snaps.push(ObstacleSnapshot { position: pos, velocity: vel, r_tilde });
            }
        }
        let out = clf_cbf_attitude_qp(&s, &f_des, &r_c, &Vector3::zeros(), &snaps, &aclf, &acbf, &p, &solver);
        let cmd = match out {
            Ok(o) => {
                if o.status != safeflight::qp::QpStatus::Optimal && bad < 8 {
                    bad += 1;
                    println!("t={t:.3} status={:?} thrust={:.2} mom=[{:.3},{:.3},{:.3}] delta={:.2e} drops={:?}",
                        o.status, o.thrust, o.moment.x, o.moment.y, o.moment.z, o.delta, o.dropped_obstacles);
                }
                ControlCommand { thrust: o.thrust, moment: o.moment }
            }
            Err(_) => {
                if bad == 0 {
                    bad += 1;
                    println!("t={t:.3} HARD  state: pos=[{:.4},{:.4},{:.4}] vel=[{:.4},{:.4},{:.4}] omega=[{:.4},{:.4},{:.4}]",
                        s.position.x, s.position.y, s.position.z,
                        s.velocity.x, s.velocity.y, s.velocity.z,
                        s.omega.x, s.omega.y, s.omega.z);
                    println!("  f_des=[{:.4},{:.4},{:.4}]", f_des.x, f_des.y, f_des.z);
                    println!("  R = {:?}", s.rotation.matrix().as_slice());
                    // re-solve with trace
                    std::env::set_var("SAFEFLIGHT_QP_TRACE", "1");
                    let _ = clf_cbf_attitude_qp(&s, &f_des, &r_c, &Vector3::zeros(), &[], &aclf, &acbf, &p, &solver);
                    std::env::remove_var("SAFEFLIGHT_QP_TRACE");
                }
                ControlCommand { thrust: 0.0, moment: Vector3::zeros() }
            }
        };
        let (cmd, _) = saturate_command(&cmd, &p);
        s = integrate_step(&s, &cmd, &p, dt).unwrap();
    }
    println!("final pos = [{:.2},{:.2},{:.2}] bad={bad}", s.position.x, s.position.y, s.position.z);
}
