use std::collections::BTreeMap;

use vpn0_core::clock::SimTime;
use vpn0_core::crypto::SecurityLabel;
use vpn0_core::dht::{LookupStatus, NodeAddr, NodeId};
use vpn0_core::sim::{
    audit_session, bench_lookup, pick_endpoints, run_scenario, run_simulation, LatencyModel, LookupBenchConfig, Metric,
    Providers, SessionOptions, SimConfig, World,
};
use vpn0_core::tunnel::{InterruptReason, Phase};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn fixed50() -> LatencyModel {
    LatencyModel::Fixed(SimTime::from_millis(50))
}

#[test]
fn lookups_match_a_global_scan() {
    let config = LookupBenchConfig { nodes: 64, queries: 200, domains: 200, seed: 11, ..Default::default() };
    let bench = bench_lookup(config).unwrap();
    let bound = (64f64).log2().ceil() as u32 + 3;
    for s in &bench.samples {
        assert!(s.correct(), "{s:?}");
        assert!(s.rounds <= bound, "{s:?}");
        assert_eq!(s.status, Some(LookupStatus::Converged));
    }
}

#[test]
fn fixed_latency_is_hops_times_delay() {
    let config = LookupBenchConfig { nodes: 64, queries: 100, domains: 50, seed: 12, latency: fixed50(), ..Default::default() };
    let bench = bench_lookup(config).unwrap();
    for s in &bench.samples {
        assert_eq!(s.duration_ms, Some(f64::from(s.hops) * 50.0), "{s:?}");
    }
}

#[test]
fn uniform_latency_stays_in_hop_bounds() {
    let latency = LatencyModel::Uniform { lo: SimTime::from_millis(10), hi: SimTime::from_millis(200) };
    let config = LookupBenchConfig { nodes: 64, queries: 150, domains: 50, seed: 13, latency, ..Default::default() };
    let bench = bench_lookup(config).unwrap();
    for s in &bench.samples {
        let d = s.duration_ms.unwrap();
        let h = f64::from(s.hops);
        assert!(d >= h * 10.0 && d <= h * 200.0, "{s:?}");
    }
}

#[test]
fn identical_builds_have_identical_tables() {
    let config = SimConfig { n_nodes: 64, seed: 21, group: SecurityLabel::Toy, ..SimConfig::default() };
    let a = World::build(config.clone()).unwrap();
    let b = World::build(config).unwrap();
    for i in 0..64 {
        let ta: Vec<_> = a.node(NodeAddr(i)).unwrap().table().contacts().map(|c| c.peer).collect();
        let tb: Vec<_> = b.node(NodeAddr(i)).unwrap().table().contacts().map(|c| c.peer).collect();
        assert_eq!(ta, tb);
    }
}

#[test]
fn every_announced_entry_is_stored() {
    let mut whitelist = BTreeMap::new();
    for i in 0..40u32 {
        whitelist.insert(format!("svc{i}.test"), Providers::One(i % 32));
    }
    let config = SimConfig { n_nodes: 32, seed: 22, group: SecurityLabel::Toy, whitelist, ..SimConfig::default() };
    let world = World::build(config).unwrap();
    for d in world.destinations() {
        assert_eq!(world.holders(&NodeId::for_domain(&d.domain)).len(), 3, "{}", d.domain);
    }
}

fn std_world(seed: u64) -> World {
    let mut whitelist = BTreeMap::new();
    whitelist.insert("shop.example".to_string(), Providers::One(9));
    whitelist.insert("mail.example".to_string(), Providers::Many(vec![4, 17]));
    World::build(SimConfig { n_nodes: 24, seed, whitelist, ..SimConfig::default() }).unwrap()
}

#[test]
fn honest_scenarios_leak_nothing() {
    for seed in 0..4 {
        let mut world = std_world(seed);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for domain in ["shop.example", "mail.example"] {
            let (client, relay) = pick_endpoints(&world, domain, &mut rng).unwrap();
            let report = run_scenario(&mut world, client, relay, domain, SessionOptions::default(), "t").unwrap();
            assert!(report.authorized(), "{report:?}");
            assert_eq!(audit_session(&world, &report), vec![]);
        }
    }
}

#[test]
fn misbehaving_clients_are_stopped() {
    use vpn0_core::sim::ClientBehavior::*;
    let cases = [
        (WrongSniKey, InterruptReason::ProofFailed),
        (TamperedProof, InterruptReason::ProofRejected),
        (UnnotifiedRelay, InterruptReason::UntrustedRelay),
    ];
    for (behavior, reason) in cases {
        let mut world = std_world(30);
        let options = SessionOptions { behavior, ..SessionOptions::default() };
        let report = run_scenario(&mut world, NodeAddr(1), NodeAddr(2), "shop.example", options, "t").unwrap();
        assert_eq!(report.phase, Phase::Interrupted, "{behavior:?}");
        assert_eq!(report.interrupt_reason, Some(reason), "{behavior:?}");
        // nothing held at the exit ever reaches the destination
        let spliced = report.marks.value_at_relay.unwrap();
        let via_exit = report.marks.app_delivered.iter().filter(|(_, t)| *t > spliced + SimTime::from_millis(400)).count();
        assert_eq!(via_exit, 0, "{behavior:?}");
        assert_eq!(report.marks.forwarded_after_interrupt, 0);
    }
}

#[test]
fn refused_exit_open_is_retried_once() {
    let mut world = std_world(31);
    let once = SessionOptions { exit_refusals: 1, ..SessionOptions::default() };
    let report = run_scenario(&mut world, NodeAddr(1), NodeAddr(2), "shop.example", once, "t").unwrap();
    assert!(report.authorized());
    assert_eq!(report.marks.exit_open_requests, 2);

    let twice = SessionOptions { exit_refusals: 2, ..SessionOptions::default() };
    let report = run_scenario(&mut world, NodeAddr(3), NodeAddr(5), "shop.example", twice, "t").unwrap();
    assert_eq!(report.interrupt_reason, Some(InterruptReason::ExitUnavailable));
}

#[test]
fn late_proof_loses_the_window() {
    let mut whitelist = BTreeMap::new();
    whitelist.insert("slow.example".to_string(), Providers::One(6));
    let config = SimConfig { n_nodes: 16, seed: 40, window_secs: 5, group: SecurityLabel::Toy, whitelist, ..SimConfig::default() };
    let mut world = World::build(config).unwrap();
    let options = SessionOptions { prove_delay: SimTime::from_secs(8), ..SessionOptions::default() };
    let report = run_scenario(&mut world, NodeAddr(0), NodeAddr(1), "slow.example", options, "t").unwrap();
    assert_eq!(report.interrupt_reason, Some(InterruptReason::WindowExpired));
    let deadline = report.started + SimTime::from_secs(5);
    assert!(report.marks.app_delivered.iter().all(|(_, t)| *t <= deadline + SimTime::from_millis(100)));
    assert!(report.marks.proof_sent.is_none());
    assert_eq!(report.marks.forwarded_after_interrupt, 0);
}

#[test]
fn sim_run_writes_deterministic_outputs() {
    let mut whitelist = BTreeMap::new();
    whitelist.insert("a.example".to_string(), Providers::One(2));
    whitelist.insert("b.example".to_string(), Providers::One(3));
    let config = SimConfig { n_nodes: 16, seed: 50, group: SecurityLabel::Toy, whitelist, ..SimConfig::default() };
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        run_simulation(config.clone()).unwrap().write_outputs(dir.path()).unwrap();
    }
    let read = |i: usize, f: &str| std::fs::read(dirs[i].path().join(f)).unwrap();
    assert_eq!(read(0, "events.log"), read(1, "events.log"));
    let log = String::from_utf8(read(0, "events.log")).unwrap();
    assert!(log.starts_with("time,node,direction,event_kind,session_id,payload_digest\n"));
    let records = vpn0_core::sim::metrics::read_csv(&dirs[0].path().join("metrics.csv")).unwrap();
    assert_eq!(records.iter().filter(|r| r.metric == Metric::E2eSetup).count(), 2);
}
