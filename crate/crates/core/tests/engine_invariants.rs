use std::collections::HashSet;
use std::path::Path;

use femtosched::channel::{noise_dbm, path_loss_db, CqiTable};
use femtosched::engine::{Simulation, EVENT_LOG_HEADER};
use femtosched::output;
use femtosched::scenario::{build_topology, CellKind, CellNode, Point, Topology, MACRO_CELL};
use femtosched::traffic::FlowClass;
use femtosched::ScenarioConfig;

fn cfg(overrides: &[&str]) -> ScenarioConfig {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    ScenarioConfig::from_toml("", &o).unwrap()
}

/// Two outdoor UEs on a single cell, no fading, no shadowing, no random
/// phases: every CQI follows from path loss alone.
fn golden_cfg() -> ScenarioConfig {
    let mut c = cfg(&[
        "n_ues=2",
        "duration_s=0.01",
        "warmup_s=0",
        "propagation.fading=false",
        "propagation.shadowing_sigma_db=0",
        "traffic.randomize_phase=false",
        "traffic.be_rate_bps=200000",
    ]);
    c.ue_positions = vec![[300.0, 0.0], [0.0, 1200.0]];
    c
}

#[test]
fn golden_event_log() {
    let c = golden_cfg();
    let mut sim = Simulation::new(&c, 7).unwrap();
    sim.enable_event_log();
    sim.run_to_end().unwrap();

    // independent link budget: 43 dBm over 25 RBs, noise over one RB
    let table = CqiTable::default();
    let noise = noise_dbm(180e3, -174.0, 9.0);
    let expected_cqi: Vec<u8> = [0.3, 1.2]
        .iter()
        .map(|&d| table.sinr_to_cqi(43.0 - 10.0 * 25f64.log10() - path_loss_db(d).unwrap() - noise))
        .collect();
    assert_eq!(expected_cqi, vec![15, 11]);
    for e in sim.events() {
        let ue = e.flow / 3;
        assert_eq!(e.cell, MACRO_CELL);
        assert_eq!(e.cqi, expected_cqi[ue]);
        assert!(e.bits <= u64::from(table.rb_capacity_bits(e.cqi)));
        assert!(e.bits > 0);
    }

    let mut log = Vec::new();
    sim.write_event_log(&mut log).unwrap();
    let log = String::from_utf8(log).unwrap();
    assert!(log.starts_with(EVENT_LOG_HEADER));
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/event_log_10tti.txt");
    if std::env::var_os("FEMTOSCHED_BLESS").is_some() {
        std::fs::write(&path, &log).unwrap();
    }
    let golden = std::fs::read_to_string(&path).expect("golden file present");
    assert_eq!(log, golden);
}

fn check_rb_disjointness(sim: &Simulation) {
    let mut seen = HashSet::new();
    for a in sim.last_allocations() {
        assert!(seen.insert(a.cell), "two allocations for cell {}", a.cell);
        assert_eq!(a.n_rbs(), sim.grid().n_rbs);
        for (_, flow) in a.grants() {
            assert_eq!(sim.flows()[flow].cell, a.cell, "flow {flow} served by a foreign cell");
        }
    }
}

#[test]
fn conservation_and_disjointness_every_tti() {
    for femto in ["false", "true"] {
        let c = cfg(&["n_ues=10", "duration_s=10", &format!("femto={femto}")]);
        let mut sim = Simulation::new(&c, 3).unwrap();
        sim.enable_event_log();
        while !sim.is_finished() {
            sim.step().unwrap();
            sim.check_conservation().unwrap();
            check_rb_disjointness(&sim);
        }
        let mut grants = HashSet::new();
        for e in sim.events() {
            assert!(grants.insert((e.tti, e.cell, e.rb)), "rb granted twice: {e:?}");
        }
        let delivered: u64 = sim.flows().iter().map(|f| f.queue.delivered_bits).sum();
        assert_eq!(delivered, sim.events().iter().map(|e| e.bits).sum::<u64>());
    }
}

fn run_digest(c: &ScenarioConfig, seed: u64) -> (u64, Vec<u8>, Vec<u8>) {
    let mut sim = Simulation::new(c, seed).unwrap();
    sim.run_to_end().unwrap();
    let dir = tempfile::tempdir().unwrap();
    output::write_run(dir.path(), &sim.report()).unwrap();
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    (sim.state_digest(), read("metrics.csv"), read("summary.csv"))
}

#[test]
fn runs_are_deterministic() {
    for sched in ["pf", "fls", "logrule"] {
        let c = cfg(&["n_ues=8", "duration_s=3", "femto=true", &format!("sched={sched}")]);
        let a = run_digest(&c, 5);
        let b = run_digest(&c, 5);
        assert_eq!(a, b, "{sched}");
        let other = run_digest(&c, 6);
        assert_ne!(a.0, other.0, "{sched}: seeds 5 and 6 collide");
        assert_ne!(a.1, other.1);
    }
}

#[test]
fn empty_topology_steps() {
    let c = cfg(&["duration_s=1.5"]);
    let topology = Topology {
        cells: vec![CellNode {
            id: MACRO_CELL,
            kind: CellKind::Macro,
            position: Point::new(0.0, 0.0),
            tx_dbm: 43.0,
        }],
        buildings: Vec::new(),
        ues: Vec::new(),
        links: Vec::new(),
        flows: Vec::new(),
    };
    let mut sim = Simulation::from_topology(&c, 1, topology).unwrap();
    sim.run_to_end().unwrap();
    assert_eq!(sim.tti(), 1500);
    let r = sim.report();
    assert_eq!(r.n_ues, 0);
    assert!(r.flows.is_empty());
    assert_eq!(r.spectral_efficiency, Some(0.0));
    assert!(r.classes.iter().all(|k| k.n_flows == 0 && k.fairness.is_none()));
    assert!(ScenarioConfig::from_toml("", &["n_ues=0".to_string()]).is_err());
}

#[test]
fn zero_length_window_has_absent_metrics() {
    let c = cfg(&["n_ues=3", "duration_s=0.2", "warmup_s=0.2"]);
    let r = femtosched::run(&c, 1).unwrap();
    assert_eq!(r.measured_duration_s, 0.0);
    assert_eq!(r.spectral_efficiency, None);
    assert!(r.flows.iter().all(|f| f.throughput_bps.is_none() && f.plr.is_none()));
    assert!(r.classes.iter().all(|k| k.plr.is_none() && k.fairness.is_none()));
}

#[test]
fn lone_close_ue_loses_nothing() {
    let mut c = cfg(&["n_ues=1", "duration_s=5", "traffic.be_rate_bps=100000"]);
    c.ue_positions = vec![[150.0, 0.0]];
    for sched in ["pf", "fls", "logrule"] {
        c.sched = sched.parse().unwrap();
        let r = femtosched::run(&c, 2).unwrap();
        for class in FlowClass::ALL {
            assert_eq!(r.class(class).plr, Some(0.0), "{sched} {class}");
        }
    }
}

#[test]
fn topology_shape() {
    for femto in [false, true] {
        let mut c = cfg(&["n_ues=12"]);
        c.femto = femto;
        let t = build_topology(&c, 4).unwrap();
        assert_eq!(t.flows.len(), 36);
        assert_eq!(t.cells.len(), if femto { 57 } else { 1 });
        assert_eq!(t.buildings.len(), 56);
        for (i, f) in t.flows.iter().enumerate() {
            assert_eq!((f.id, f.ue, f.class), (i, i / 3, FlowClass::ALL[i % 3]));
        }
        if !femto {
            assert!(t.ues.iter().all(|u| u.serving == MACRO_CELL));
        }
        for u in &t.ues {
            assert!(u.position.norm() <= c.cells.macro_radius_m);
            if femto {
                // closed access: indoor UEs attach to their own building's HeNB
                let want = u.building.map_or(MACRO_CELL, |b| b + 1);
                assert_eq!(u.serving, want);
            }
        }
    }
}

#[test]
fn femto_mode_keeps_the_ue_population() {
    let off = build_topology(&cfg(&["n_ues=20"]), 9).unwrap();
    let on = build_topology(&cfg(&["n_ues=20", "femto=true"]), 9).unwrap();
    let pos = |t: &Topology| t.ues.iter().map(|u| (u.position, u.building)).collect::<Vec<_>>();
    assert_eq!(pos(&off), pos(&on));
}

#[test]
fn scenario_file_matches_defaults() {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/default.scenario");
    assert_eq!(ScenarioConfig::load(&p, &[]).unwrap(), ScenarioConfig::default());
}
