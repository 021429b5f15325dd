use nalgebra::{Matrix3, Vector3};
use safeflight::config::Config;
use safeflight::controllers::attitude_qp::ObstacleSnapshot;
use safeflight::controllers::{clf_cbf_attitude_qp, desired_attitude};
use safeflight::dynamics::PlantState;
use safeflight::qp::QpSolver;
use safeflight::so3::Rotation;

fn main() {
    let cfg = Config::default();
    let p = cfg.plant_params();
    let aclf = cfg.attitude_clf();
    let acbf = cfg.attitude_cbf();
    let solver = QpSolver::default();
    let mut s = PlantState::at_rest(Vector3::new(0.0063, 0.0, -0.1808));
    s.velocity = Vector3::new(0.1056, 0.0, -0.8810);
    s.omega = Vector3::new(0.0, 0.3567, 0.0);
    s.rotation = Rotation::from_matrix_unchecked(Matrix3::new(
        0.9836167158412418, 0.0, -0.1802724502459812,
        0.0, 1.0, 0.0,
        0.1802724502459812, 0.0, 0.9836167158412418,
    ));
    let f_des = Vector3::new(-6.4143, 0.0, 13.4283);
    let r_c = desired_attitude(&f_des, 0.0).unwrap();
    // obstacle at t=1.5: 4 - 2*1.5 = 1.0
    let snaps = [ObstacleSnapshot {
        position: Vector3::new(1.0, 0.0, 0.0),
        velocity: Vector3::new(-2.0, 0.0, 0.0),
        r_tilde: 0.765,
    }];
    for (label, obs) in [("with obstacle", &snaps[..]), ("without", &[][..])] {
        let out = clf_cbf_attitude_qp(&s, &f_des, &r_c, &Vector3::zeros(), obs, &aclf, &acbf, &p, &solver);
        match out {
            Ok(o) => println!("{label}: status {:?} thrust {:.3} mom [{:.3},{:.3},{:.3}] delta {:.3e}", o.status, o.thrust, o.moment.x, o.moment.y, o.moment.z, o.delta),
            Err(e) => println!("{label}: {e}"),
        }
    }
    std::env::set_var("SAFEFLIGHT_QP_TRACE", "1");
    let out = clf_cbf_attitude_qp(&s, &f_des, &r_c, &Vector3::zeros(), &snaps, &aclf, &acbf, &p, &solver);
    println!("traced: {:?}", out.map(|o| o.status));
}
