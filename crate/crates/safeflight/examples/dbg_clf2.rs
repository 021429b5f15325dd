use nalgebra::Vector3;
use safeflight::config::Config;
use safeflight::controllers::{clf_position_qp, ea_position};
use safeflight::dynamics::PlantState;
use safeflight::qp::QpSolver;
use safeflight::scenario::ReferenceKind;

fn main() {
    let cfg = Config::default();
    let p = cfg.plant_params();
    let clf = cfg.position_clf();
    let ea = cfg.ea_gains();
    let solver = QpSolver::default();
    let reference = ReferenceKind::Circle { r_c: 1.5, period: 8.0, center: Vector3::zeros() };

    // Ideal-attitude virtual plant at 10 Hz: a = f/m - g e3 realized exactly.
    let r0 = reference.sample(0.0);
    let mut s = PlantState::at_rest(r0.position);
    s.velocity = r0.velocity;
    let dt = 0.1;
    let mut err_sum = 0.0;
    let mut n = 0;
    let mut fallbacks = 0;
    for tick in 0..600 {
        let t = tick as f64 * dt;
        let r = reference.sample(t);
        let out = clf_position_qp(&s, &r, &clf, &ea, &p, &solver);
        if out.fell_back { fallbacks += 1; }
        let a = out.f_des / p.mass - Vector3::new(0.0, 0.0, p.gravity);
        s.position += s.velocity * dt + 0.5 * a * dt * dt;
        s.velocity += a * dt;
        err_sum += (s.position - r.position).norm();
        n += 1;
        if tick % 40 == 0 {
            println!("t={:5.1} pos=[{:6.2},{:6.2},{:6.2}] ref=[{:6.2},{:6.2},{:6.2}] f=[{:7.2},{:7.2},{:7.2}] fb={}",
                t, s.position.x, s.position.y, s.position.z, r.position.x, r.position.y, r.position.z,
                out.f_des.x, out.f_des.y, out.f_des.z, out.fell_back);
        }
    }
    println!("virtual-plant e_mean = {:.4}  fallbacks = {}", err_sum / n as f64, fallbacks);

    // Same loop at 500 Hz for comparison.
    let mut s = PlantState::at_rest(r0.position);
    s.velocity = r0.velocity;
    let dt = 0.002;
    let mut err_sum = 0.0;
    for tick in 0..30000 {
        let t = tick as f64 * dt;
        let r = reference.sample(t);
        let out = clf_position_qp(&s, &r, &clf, &ea, &p, &solver);
        let a = out.f_des / p.mass - Vector3::new(0.0, 0.0, p.gravity);
        s.position += s.velocity * dt + 0.5 * a * dt * dt;
        s.velocity += a * dt;
        err_sum += (s.position - r.position).norm();
    }
    println!("500 Hz virtual-plant e_mean = {:.4}", err_sum / 30000.0);
}
