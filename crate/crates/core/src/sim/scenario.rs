//! One client connection through the whole flow, and `sim run` over a
//! configured network.

use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::audit::{audit_session, Finding};
use super::config::SimConfig;
use super::log::write_log_file;
use super::metrics::{cdf_summary, write_csv, Metric, MetricsRecord};
use super::world::{LookupTrace, SessionMarks, SessionOptions, SimError, World};
use crate::clock::SimTime;
use crate::dht::NodeAddr;
use crate::par::item_seed;
use crate::tunnel::{InterruptReason, Phase};

#[derive(Clone, Debug)]
pub struct ScenarioReport {
    pub run_id: String,
    pub session: u64,
    pub domain: String,
    pub client: NodeAddr,
    pub relay: NodeAddr,
    pub exit: Option<NodeAddr>,
    pub phase: Phase,
    pub interrupt_reason: Option<InterruptReason>,
    pub started: SimTime,
    pub finished: SimTime,
    /// Indices of the observations made while the session ran.
    pub observed: Range<usize>,
    pub lookup: Option<LookupTrace>,
    pub marks: SessionMarks,
    pub records: Vec<MetricsRecord>,
}

fn ms_between(from: SimTime, to: SimTime) -> f64 {
    to.saturating_sub(from).as_millis_f64()
}

impl ScenarioReport {
    pub fn authorized(&self) -> bool {
        self.phase == Phase::Authorized
    }

    /// Session start until the relay holds the lookup result.
    pub fn lookup_ms(&self) -> Option<f64> {
        Some(ms_between(self.started, self.marks.value_at_relay?))
    }

    /// Lookup result at the relay until the client sees the reset.
    pub fn splice_ms(&self) -> Option<f64> {
        Some(ms_between(self.marks.value_at_relay?, self.marks.rst_at_client?))
    }

    /// Reset at the client until the gate result is back at the client.
    pub fn proof_round_trip_ms(&self) -> Option<f64> {
        Some(ms_between(self.marks.rst_at_client?, self.marks.gate_result_at_client?))
    }

    pub fn e2e_ms(&self) -> Option<f64> {
        if !self.authorized() {
            return None;
        }
        Some(ms_between(self.started, self.marks.gate_result_at_client?))
    }
}

/// Picks a client and a relay for `domain`, distinct from each other and
/// from the domain's providers whenever the network is large enough.
pub fn pick_endpoints(world: &World, domain: &str, rng: &mut ChaCha20Rng) -> Result<(NodeAddr, NodeAddr), SimError> {
    let dest = world.destination(domain).ok_or_else(|| SimError::UnknownDomain(domain.to_string()))?;
    let all: Vec<NodeAddr> = (0..world.node_count() as u32).map(NodeAddr).collect();
    let mut pool: Vec<NodeAddr> = all.iter().copied().filter(|a| !dest.providers.contains(a)).collect();
    if pool.len() < 2 {
        pool = all;
    }
    let picked: Vec<NodeAddr> = pool.choose_multiple(rng, 2).copied().collect();
    match picked[..] {
        [client, relay] => Ok((client, relay)),
        _ => Err(SimError::TooFewNodes(world.node_count())),
    }
}

/// Runs one session to completion and collects its metrics. A session
/// that ends interrupted is a normal outcome, reported in `phase`.
pub fn run_scenario(
    world: &mut World,
    client: NodeAddr,
    relay: NodeAddr,
    domain: &str,
    options: SessionOptions,
    run_id: &str,
) -> Result<ScenarioReport, SimError> {
    let first = world.observations().len();
    let id = world.start_session(client, relay, domain, options)?;
    world.run_until_idle();
    let session = world.session(id).expect("session just started");
    let mut report = ScenarioReport {
        run_id: run_id.to_string(),
        session: id,
        domain: session.domain.clone(),
        client,
        relay,
        exit: session.chain.exit,
        phase: session.chain.phase(),
        interrupt_reason: session.chain.interrupt_reason,
        started: session.marks.start,
        finished: world.now(),
        observed: first..world.observations().len(),
        lookup: world.trace(id).cloned(),
        marks: session.marks.clone(),
        records: Vec::new(),
    };
    report.records = scenario_records(&report, world.params().label().as_str());
    Ok(report)
}

fn scenario_records(r: &ScenarioReport, group: &str) -> Vec<MetricsRecord> {
    let mut out = Vec::new();
    let id = r.run_id.as_str();
    if let (Some(ms), Some(trace)) = (r.lookup_ms(), &r.lookup) {
        let detail = format!("hops={};rounds={}", trace.hops().unwrap_or(0), trace.rounds.unwrap_or(0));
        out.push(MetricsRecord::new(id, Metric::LookupDuration, ms, detail));
    }
    if let (Some(ms), Some(exit)) = (r.splice_ms(), r.exit) {
        out.push(MetricsRecord::new(id, Metric::SpliceDuration, ms, format!("exit={exit}")));
    }
    if let Some(ms) = r.marks.prove_ms {
        out.push(MetricsRecord::new(id, Metric::ProveTime, ms, format!("group={group}")));
    }
    if let Some(ms) = r.marks.verify_ms {
        out.push(MetricsRecord::new(id, Metric::VerifyTime, ms, format!("group={group}")));
    }
    if let (Some(ms), Some(l), Some(s), Some(p)) = (r.e2e_ms(), r.lookup_ms(), r.splice_ms(), r.proof_round_trip_ms()) {
        let detail = format!("lookup={l:.3};splice={s:.3};proof_rtt={p:.3}");
        out.push(MetricsRecord::new(id, Metric::E2eSetup, ms, detail));
    }
    out
}

/// Everything one `sim run` produced.
#[derive(Debug)]
pub struct SimRun {
    pub world: World,
    pub scenarios: Vec<ScenarioReport>,
    pub findings: Vec<Finding>,
}

impl SimRun {
    pub fn records(&self) -> Vec<MetricsRecord> {
        self.scenarios.iter().flat_map(|s| s.records.iter().cloned()).collect()
    }

    /// Outcome per scenario, audit result and percentile tables per metric.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let c = self.world.config();
        let _ = writeln!(out, "nodes={} seed={} latency={} loss_rate={} group={}", c.n_nodes, c.seed, c.latency, c.loss_rate, c.group);
        for s in &self.scenarios {
            let reason = s.interrupt_reason.map(|r| format!(" ({r:?})")).unwrap_or_default();
            let exit = s.exit.map(|e| e.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "run {} domain={} client={} relay={} exit={} -> {}{}",
                s.run_id, s.domain, s.client, s.relay, exit, s.phase, reason
            );
        }
        let _ = writeln!(out, "privacy findings: {}", self.findings.len());
        for f in &self.findings {
            let _ = writeln!(out, "  {f}");
        }
        let records = self.records();
        for metric in Metric::ALL {
            let samples: Vec<f64> = records.iter().filter(|r| r.metric == metric).map(|r| r.value_ms).collect();
            if let Some(summary) = cdf_summary(&samples) {
                let _ = writeln!(out, "{}: {summary}", metric.as_str());
            }
        }
        out
    }

    /// Writes `events.log`, `metrics.csv` and `summary.txt` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        write_log_file(self.world.log(), &dir.join("events.log"))?;
        write_csv(&self.records(), &dir.join("metrics.csv")).map_err(std::io::Error::other)?;
        fs::write(dir.join("summary.txt"), self.summary())
    }
}

/// Builds the network and runs one honest session per whitelisted domain,
/// in name order, with client and relay drawn from the seed.
pub fn run_simulation(config: SimConfig) -> Result<SimRun, SimError> {
    let seed = config.seed;
    let domains: Vec<String> = config.whitelist.keys().cloned().collect();
    let mut world = World::build(config)?;
    let mut rng = ChaCha20Rng::seed_from_u64(item_seed(seed, 2));
    let mut scenarios = Vec::new();
    let mut findings = Vec::new();
    for (i, domain) in domains.iter().enumerate() {
        let (client, relay) = pick_endpoints(&world, domain, &mut rng)?;
        let report = run_scenario(&mut world, client, relay, domain, SessionOptions::default(), &format!("{seed}:{i}"))?;
        findings.extend(audit_session(&world, &report));
        scenarios.push(report);
    }
    Ok(SimRun { world, scenarios, findings })
}
