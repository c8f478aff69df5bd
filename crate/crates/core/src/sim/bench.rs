//! Measurement runs behind `bench zkp` and `bench lookup`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::config::{Providers, SimConfig};
use super::metrics::{cdf_summary, Metric, MetricsRecord};
use super::net::LatencyModel;
use super::world::{SimError, World};
use crate::attest::{honest_instance, prove, verify, Instance};
use crate::crypto::{group_setup, SecurityLabel};
use crate::dht::{LookupStatus, NodeAddr, NodeId};
use crate::par::{item_seed, map_indexed, Execution};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZkpSample {
    pub prove_ms: f64,
    pub verify_ms: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug)]
pub struct ZkpBench {
    pub group: SecurityLabel,
    pub samples: Vec<ZkpSample>,
}

/// Proves and verifies `iters` fresh honest instances. Instance `i` is
/// drawn from its own seed, so results other than timings do not depend
/// on `exec`.
pub fn bench_zkp(group: SecurityLabel, iters: usize, seed: u64, exec: Execution) -> ZkpBench {
    let params = group_setup(group);
    let samples = map_indexed(exec, iters, |i| {
        let mut rng = ChaCha20Rng::seed_from_u64(item_seed(seed, i));
        let Instance { statement, witness, .. } = honest_instance(&params, &mut rng);
        let started = Instant::now();
        let proof = prove(&statement, &witness, &mut rng).expect("honest witness");
        let prove_ms = started.elapsed().as_secs_f64() * 1e3;
        let started = Instant::now();
        let accepted = verify(&statement, &proof);
        let verify_ms = started.elapsed().as_secs_f64() * 1e3;
        ZkpSample { prove_ms, verify_ms, accepted }
    });
    ZkpBench { group, samples }
}

impl ZkpBench {
    pub fn prove_ms(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.prove_ms).collect()
    }

    pub fn verify_ms(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.verify_ms).collect()
    }

    pub fn records(&self) -> Vec<MetricsRecord> {
        let detail = format!("group={}", self.group);
        self.samples
            .iter()
            .enumerate()
            .flat_map(|(i, s)| {
                let id = format!("zkp:{i}");
                [
                    MetricsRecord::new(&id, Metric::ProveTime, s.prove_ms, &detail),
                    MetricsRecord::new(&id, Metric::VerifyTime, s.verify_ms, &detail),
                ]
            })
            .collect()
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        let accepted = self.samples.iter().filter(|s| s.accepted).count();
        let _ = writeln!(out, "group={} iters={} accepted={accepted}", self.group, self.samples.len());
        for (name, samples) in [("prove_ms", self.prove_ms()), ("verify_ms", self.verify_ms())] {
            if let Some(s) = cdf_summary(&samples) {
                let _ = writeln!(
                    out,
                    "{name}: mean={:.3} p50={:.3} p95={:.3} max={:.3}",
                    s.mean,
                    s.get(50).unwrap_or(f64::NAN),
                    s.get(95).unwrap_or(f64::NAN),
                    s.max
                );
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct LookupBenchConfig {
    pub nodes: u32,
    pub queries: usize,
    /// Domains announced before the queries start.
    pub domains: usize,
    pub latency: LatencyModel,
    pub seed: u64,
    pub group: SecurityLabel,
}

impl Default for LookupBenchConfig {
    fn default() -> Self {
        LookupBenchConfig {
            nodes: 64,
            queries: 200,
            domains: 200,
            latency: LatencyModel::Fixed(crate::clock::SimTime::from_millis(50)),
            seed: 0,
            group: SecurityLabel::Std256,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LookupSample {
    pub domain: String,
    pub initiator: NodeAddr,
    pub reply_to: NodeAddr,
    pub rounds: u32,
    pub hops: u32,
    pub status: Option<LookupStatus>,
    pub duration_ms: Option<f64>,
    pub provider: Option<NodeAddr>,
    /// Providers of the domain according to the configuration.
    pub expected: Vec<NodeAddr>,
}

impl LookupSample {
    pub fn correct(&self) -> bool {
        self.provider.is_some_and(|p| self.expected.contains(&p))
    }
}

#[derive(Debug)]
pub struct LookupBench {
    pub config: LookupBenchConfig,
    pub samples: Vec<LookupSample>,
}

/// Builds a network with `domains` generated domains, each announced by
/// one random node, then runs `queries` lookups one at a time for random
/// domains, from a random initiator, answered to a random other node.
pub fn bench_lookup(config: LookupBenchConfig) -> Result<LookupBench, SimError> {
    let mut rng = ChaCha20Rng::seed_from_u64(item_seed(config.seed, 3));
    let mut whitelist = BTreeMap::new();
    for i in 0..config.domains.max(1) {
        whitelist.insert(format!("domain-{i}.test"), Providers::One(rng.gen_range(0..config.nodes.max(1))));
    }
    let sim = SimConfig {
        n_nodes: config.nodes,
        seed: config.seed,
        latency: config.latency,
        group: config.group,
        whitelist: whitelist.clone(),
        ..SimConfig::default()
    };
    let mut world = World::build(sim)?;
    let domains: Vec<&String> = whitelist.keys().collect();
    let n = config.nodes;
    let mut samples = Vec::with_capacity(config.queries);
    for _ in 0..config.queries {
        let domain = domains[rng.gen_range(0..domains.len())];
        let initiator = NodeAddr(rng.gen_range(0..n));
        let reply_to = if n == 1 { initiator } else { NodeAddr((initiator.0 + rng.gen_range(1..n)) % n) };
        let token = world.start_lookup(initiator, NodeId::for_domain(domain), reply_to)?;
        world.run_until_idle();
        let trace = world.trace(token).expect("lookup just started");
        samples.push(LookupSample {
            domain: domain.clone(),
            initiator,
            reply_to,
            rounds: trace.rounds.unwrap_or(0),
            hops: trace.hops().unwrap_or(0),
            status: trace.status,
            duration_ms: trace.duration().map(|d| d.as_millis_f64()),
            provider: trace.provider,
            expected: whitelist[domain].addrs(),
        });
    }
    Ok(LookupBench { config, samples })
}

impl LookupBench {
    pub fn durations(&self) -> Vec<f64> {
        self.samples.iter().filter_map(|s| s.duration_ms).collect()
    }

    pub fn records(&self) -> Vec<MetricsRecord> {
        self.samples
            .iter()
            .enumerate()
            .filter_map(|(i, s)| {
                let detail = format!("hops={};rounds={}", s.hops, s.rounds);
                Some(MetricsRecord::new(format!("lookup:{i}"), Metric::LookupDuration, s.duration_ms?, detail))
            })
            .collect()
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let correct = self.samples.iter().filter(|s| s.correct()).count();
        let max_rounds = self.samples.iter().map(|s| s.rounds).max().unwrap_or(0);
        let _ = writeln!(
            out,
            "nodes={} queries={} domains={} latency={} correct={correct} max_rounds={max_rounds}",
            c.nodes,
            self.samples.len(),
            c.domains,
            c.latency
        );
        if let Some(s) = cdf_summary(&self.durations()) {
            let _ = writeln!(out, "lookup_duration_ms: {s}");
        }
        let hops: Vec<f64> = self.samples.iter().map(|s| f64::from(s.hops)).collect();
        if let Some(s) = cdf_summary(&hops) {
            let _ = writeln!(out, "hops: {s}");
        }
        out
    }
}
