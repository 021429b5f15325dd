use safeflight::config::apply_overrides;
use safeflight::sim::{run_simulation, ControllerId};

fn main() {
    let doc = "[scenario]\nkind = \"circle\"\nr_c = 1.5\nperiod = 8.0\nduration = 20.0\n";
    let cfg = apply_overrides(doc, &[]).unwrap();
    let spec = cfg.scenario_spec().unwrap();
    let sim = cfg.sim_config(&spec, ControllerId::ClfCbfQp);
    let out = run_simulation(&spec, &sim, &cfg.controller_set());
    for r in out.trace.iter().step_by(250) {
        println!(
            "t={:5.2} pos=[{:7.3},{:7.3},{:7.3}] ref=[{:6.2},{:6.2},{:6.2}] fdes=[{:7.2},{:7.2},{:7.2}] f_c={:6.2} tau=[{:6.3},{:6.3},{:6.3}] delta={:8.2e} fb={:?}",
            r.t, r.state.position.x, r.state.position.y, r.state.position.z,
            r.reference.position.x, r.reference.position.y, r.reference.position.z,
            r.f_des.x, r.f_des.y, r.f_des.z, r.command.thrust,
            r.command.moment.x, r.command.moment.y, r.command.moment.z,
            r.delta, r.position_status
        );
    }
}
