use nalgebra::{Vector3, Vector6};
use safeflight::config::Config;
use safeflight::mpcbf::MpcbfController;
use safeflight::scenario::{Obstacle, ReferenceKind, SafetyGeometry};

fn main() {
    let cfg = Config::default();
    let plant = cfg.plant_params();
    let mut ctrl = MpcbfController::new(cfg.mpcbf_config(), cfg.position_clf(), plant.clone());
    let reference = ReferenceKind::Setpoint { point: Vector3::zeros() };
    let sg = SafetyGeometry { r_robot: 0.265, r_safety: 0.0 };
    let obstacle = Obstacle::moving(Vector3::new(4.0, 0.0, 0.0), Vector3::new(-2.0, 0.0, 0.0), 0.5);
    let dm = cfg.mpcbf_config();
    let _ = dm;
    // closed loop against the *virtual* plant so we isolate the controller
    let mut x = Vector6::zeros();
    for tick in 0..40 {
        let t = tick as f64 * 0.1;
        let (f_des, sol) = ctrl.step(&x, t, &reference, &[std::clone::Clone::clone(&obstacle)], &sg);
        if tick < 14 || tick % 5 == 0 {
            println!(
                "t={:4.1} pos=[{:7.3},{:7.3},{:7.3}] f=[{:7.2},{:7.2},{:7.2}] st={:?} cbf={} drop={} it={}",
                t, x[0], x[1], x[2], f_des[0], f_des[1], f_des[2], sol.status,
                sol.debug.cbf_rows, sol.debug.dropped_rows, sol.debug.iterations
            );
        }
        // virtual plant propagation with the applied input
        let u = sol.inputs[0];
        x = ctrl.discrete_model().phi * x + ctrl.discrete_model().gamma * u;
    }
}
