use safeflight::config::apply_overrides;
use safeflight::sim::{run_simulation, ControllerId};

fn run(name: &str, doc: &str, controllers: &[ControllerId]) {
    for &c in controllers {
        let cfg = apply_overrides(doc, &[]).unwrap();
        let spec = cfg.scenario_spec().unwrap();
        let sim = cfg.sim_config(&spec, c);
        let t0 = std::time::Instant::now();
        let out = run_simulation(&spec, &sim, &cfg.controller_set());
        let m = &out.metrics;
        println!(
            "{name:<18} {:<10} e_mean={:>8.4} clear={:>8.3} coll={} infeas={} drop={} hard={} blow={} energy={:>10.1} settle=[{:.2},{:.2},{:.2}] wall={:.1}s",
            c.as_str(), m.e_mean,
            m.min_clearance.unwrap_or(f64::NAN),
            m.collision_count, m.infeasible_solves, m.dropped_rows,
            m.hard_infeasible_ticks, m.blowup, m.energy_proxy,
            m.settling_times[0], m.settling_times[1], m.settling_times[2],
            t0.elapsed().as_secs_f64(),
        );
    }
}

fn main() {
    let all = [ControllerId::Mpcbf, ControllerId::ClfCbfQp, ControllerId::Ea];
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str()).unwrap_or("all");

    if which == "all" || which == "circle8" {
        run("circle T=8", "[scenario]\nkind = \"circle\"\nr_c = 1.5\nperiod = 8.0\nduration = 60.0\n", &all);
    }
    if which == "all" || which == "circle4" {
        run("circle T=4", "[scenario]\nkind = \"circle\"\nr_c = 1.5\nperiod = 4.0\nduration = 60.0\n", &all);
    }
    if which == "all" || which == "closeby" {
        run("closeby", "[scenario]\nkind = \"hover\"\nduration = 6.0\n[[scenario.obstacles]]\nposition = [1.28, 0.0, -5.0]\nvelocity = [0.0, 0.0, 2.0]\nradius = 1.0\n", &all[..2]);
    }
    if which == "all" || which == "headon2" {
        run("headon 2 m/s", "[scenario]\nkind = \"hover\"\nduration = 6.0\n[[scenario.obstacles]]\nposition = [4.0, 0.0, 0.0]\nvelocity = [-2.0, 0.0, 0.0]\nradius = 0.5\n", &all[..2]);
    }
    if which == "all" || which == "headon5" {
        run("headon 5 m/s", "[scenario]\nkind = \"hover\"\nduration = 4.0\n[[scenario.obstacles]]\nposition = [5.0, 0.0, 0.0]\nvelocity = [-5.0, 0.0, 0.0]\nradius = 0.75\n", &all[..2]);
    }
    if which == "all" || which == "att30" {
        run("attitude 30deg", "[scenario]\nkind = \"hover\"\nduration = 12.0\ninitial_euler_deg = [30.0, 30.0, 30.0]\n", &[ControllerId::Ea, ControllerId::ClfCbfQp]);
    }
    if which == "all" || which == "cluttered" {
        run("cluttered n=40", "[scenario]\nkind = \"circle\"\nr_c = 1.5\nperiod = 12.0\nduration = 60.0\nseed = 1\nbox_min = [-4.0, -4.0, -2.0]\nbox_max = [4.0, 4.0, 2.0]\n[scenario.clutter]\ncount = 40\n", &all[..2]);
    }
    if which == "all" || which == "flightspace" {
        run("flightspace", "[scenario]\nkind = \"circle\"\nr_c = 1.0\nperiod = 30.0\ncenter = [0.0, 0.0, 1.0]\nduration = 120.0\nbox_min = [-2.0, -2.5, 0.0]\nbox_max = [1.0, 2.5, 6.0]\n[[scenario.obstacles]]\nposition = [0.87, 0.5, 1.0]\nvelocity = [0.0, 0.0, 0.0]\nradius = 0.25\n", &all[..1]);
    }
    if which == "all" || which == "att179" {
        run("attitude 179deg", "[scenario]\nkind = \"hover\"\nduration = 60.0\ninitial_euler_deg = [-179.0, 0.0, 179.0]\n", &[ControllerId::Ea, ControllerId::ClfCbfQp]);
    }
}
// appended scenarios
