//! The simulated network: DHT nodes, destination servers, the message
//! queue, and the client (S), relay (X) and exit (A) roles of a session.
//!
//! Destination servers are not DHT nodes. They get the addresses after the
//! last node, one per whitelisted domain in name order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use super::config::{ConfigError, SimConfig};
use super::engine::EventQueue;
use super::log::{digest, Direction, LogEntry, Observation};
use super::net::Link;
use crate::attest::{
    attest_sni_under, domain_decrypt_sni_check, encrypt_sni, normalize_domain, AttestError, AttestationBundle,
    SniCiphertext,
};
use crate::clock::SimTime;
use crate::crypto::{
    elgamal_decrypt, group_setup, schnorr_sign, ElGamalCiphertext, ElGamalKeypair, Element, GroupParams, SigKeypair,
    Signature,
};
use crate::dht::{DhtNode, LookupStatus, Message, NodeAddr, NodeId, NotifyA, Output, Peer, Purpose, ValueResponse};
use crate::par::item_seed;
use crate::tunnel::{
    gate, start_session, ChainState, ClientHello, GateOutcome, HandshakeEvent, HandshakeKind, InterruptReason,
    NotifiedKeys, Phase, TunnelError, TunnelMsg, WindowDecision,
};

/// How long an exit waits for a relay notification before judging an
/// attestation whose relay key it has not been told about.
pub const NOTIFY_GRACE: SimTime = SimTime(1_000_000);

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Tunnel(#[from] TunnelError),
    #[error(transparent)]
    Attest(#[from] AttestError),
    #[error("no destination serves `{0}`")]
    UnknownDomain(String),
    #[error("{0} is not a node")]
    UnknownNode(NodeAddr),
    #[error("a session needs two distinct nodes, the network has {0}")]
    TooFewNodes(usize),
}

/// Deliberate client misbehavior, for testing the exit's gate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ClientBehavior {
    #[default]
    Honest,
    /// Encrypts the re-sent SNI under a key other than the looked-up one.
    WrongSniKey,
    /// Sends a valid proof with one response altered.
    TamperedProof,
    /// Re-signs the looked-up ciphertext with a relay key nobody announced.
    UnnotifiedRelay,
}

#[derive(Clone, Debug)]
pub struct SessionOptions {
    /// Spacing of the client's application records.
    pub app_interval: SimTime,
    /// Records the client still sends once it knows it is authorized.
    pub tail_records: u32,
    /// Simulated time the client spends proving.
    pub prove_delay: SimTime,
    /// Exit-open requests the exit refuses before accepting.
    pub exit_refusals: u32,
    pub behavior: ClientBehavior,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            app_interval: SimTime::from_millis(200),
            tail_records: 3,
            prove_delay: SimTime::ZERO,
            exit_refusals: 0,
            behavior: ClientBehavior::Honest,
        }
    }
}

/// Timestamps and counters collected while a session runs.
#[derive(Clone, Debug, Default)]
pub struct SessionMarks {
    pub start: SimTime,
    pub value_at_relay: Option<SimTime>,
    pub rst_at_client: Option<SimTime>,
    pub proof_sent: Option<SimTime>,
    pub gate_at_exit: Option<SimTime>,
    pub gate_result_at_client: Option<SimTime>,
    pub prove_ms: Option<f64>,
    pub verify_ms: Option<f64>,
    pub exit_open_requests: u32,
    /// Application records by sequence number, as sent by S and as received by D.
    pub app_sent: Vec<(u64, SimTime)>,
    pub app_delivered: Vec<(u64, SimTime)>,
    pub dropped_at_relay: u32,
    pub discarded_at_exit: u32,
    /// Application records forwarded toward D after the session was interrupted.
    pub forwarded_after_interrupt: u32,
    /// Each new transport endpoint D saw for the session.
    pub endpoints: Vec<(SimTime, NodeAddr)>,
    pub resets: u32,
    pub server_hellos: u32,
    pub sni_matched: Option<String>,
    /// Every encrypted SNI the client put on the wire.
    pub c_sni: Vec<SniCiphertext>,
}

#[derive(Clone, Debug)]
struct LookedUp {
    c_pkd: ElGamalCiphertext,
    sig_r: Signature,
    pk_r: Element,
}

#[derive(Debug)]
struct ClientSide {
    ephemeral: ElGamalKeypair,
    looked_up: Option<LookedUp>,
    reset_seen: bool,
    proving: bool,
    sending: bool,
    next_seq: u64,
    tail_left: u32,
}

#[derive(Debug, Default)]
struct RelaySide {
    destination: Option<NodeAddr>,
    spliced: bool,
    closed: bool,
}

#[derive(Debug, Default)]
struct ExitSide {
    destination: Option<NodeAddr>,
    open: bool,
    refusals_left: u32,
    held: Vec<HandshakeEvent>,
    parked: Option<(ClientHello, AttestationBundle)>,
    waited: bool,
}

#[derive(Debug)]
pub struct Session {
    pub chain: ChainState,
    pub domain: String,
    pub options: SessionOptions,
    pub marks: SessionMarks,
    client: ClientSide,
    relay: RelaySide,
    exit: ExitSide,
    logged_phases: usize,
}

/// Progress of one value lookup, keyed by its token.
#[derive(Clone, Debug)]
pub struct LookupTrace {
    pub token: u64,
    pub initiator: NodeAddr,
    pub reply_to: NodeAddr,
    pub key: NodeId,
    pub start: SimTime,
    pub rounds: Option<u32>,
    pub status: Option<LookupStatus>,
    pub value_peer: Option<Peer>,
    pub answered_at: Option<SimTime>,
    pub provider: Option<NodeAddr>,
    pub not_found: bool,
}

impl LookupTrace {
    /// One-way message hops on the critical path: a request and a reply per
    /// round, then the value request and the answer to `reply_to`, minus
    /// any leg that stays on one node.
    pub fn hops(&self) -> Option<u32> {
        let rounds = self.rounds?;
        let peer = self.value_peer?;
        Some(2 * rounds + u32::from(peer.addr != self.initiator) + u32::from(peer.addr != self.reply_to))
    }

    pub fn duration(&self) -> Option<SimTime> {
        Some(self.answered_at?.saturating_sub(self.start))
    }
}

#[derive(Debug)]
pub struct Destination {
    pub domain: String,
    pub addr: NodeAddr,
    pub keys: ElGamalKeypair,
    pub providers: Vec<NodeAddr>,
    endpoints: HashMap<u64, BTreeSet<NodeAddr>>,
}

#[derive(Debug)]
struct SimNode {
    dht: DhtNode,
    notified: NotifiedKeys,
}

#[derive(Debug)]
enum Event {
    Deliver { from: NodeAddr, to: NodeAddr, bytes: Vec<u8>, session: Option<u64> },
    Round { node: NodeAddr, lookup: u64, round: u32 },
    Republish { node: NodeAddr },
    AppTick { session: u64 },
    WindowCheck { session: u64 },
    GateRetry { session: u64 },
    Proved { session: u64, event: HandshakeEvent },
}

#[derive(Debug)]
pub struct World {
    config: SimConfig,
    params: Arc<GroupParams>,
    nodes: Vec<SimNode>,
    destinations: Vec<Destination>,
    queue: EventQueue<Event>,
    link: Link,
    rng: ChaCha20Rng,
    log: Vec<LogEntry>,
    observations: Vec<Observation>,
    sessions: BTreeMap<u64, Session>,
    traces: BTreeMap<u64, LookupTrace>,
    lookup_tokens: HashMap<(NodeAddr, u64), u64>,
    next_token: u64,
}

impl World {
    /// Creates the nodes, joins them one by one through node 0, runs a
    /// self and bucket refresh on every node and publishes the whitelist. Returns once the network
    /// is quiet.
    pub fn build(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let params = group_setup(config.group);
        let mut rng = ChaCha20Rng::seed_from_u64(item_seed(config.seed, 0));
        let link = Link::new(config.latency, config.loss_rate, ChaCha20Rng::seed_from_u64(item_seed(config.seed, 1)));
        let dht_config = config.dht_config();
        let nodes = (0..config.n_nodes)
            .map(|i| {
                let addr = NodeAddr(i);
                let id = NodeId::for_node(addr, rng.gen());
                let signer = SigKeypair::generate(&params, &mut rng);
                SimNode { dht: DhtNode::new(id, addr, dht_config, params.clone(), signer), notified: NotifiedKeys::default() }
            })
            .collect();
        let mut destinations = Vec::new();
        for (j, (domain, providers)) in config.whitelist.iter().enumerate() {
            destinations.push(Destination {
                domain: normalize_domain(domain)?,
                addr: NodeAddr(config.n_nodes + j as u32),
                keys: ElGamalKeypair::generate(&params, &mut rng),
                providers: providers.addrs(),
                endpoints: HashMap::new(),
            });
        }
        let mut world = World {
            config,
            params,
            nodes,
            destinations,
            queue: EventQueue::default(),
            link,
            rng,
            log: Vec::new(),
            observations: Vec::new(),
            sessions: BTreeMap::new(),
            traces: BTreeMap::new(),
            lookup_tokens: HashMap::new(),
            next_token: 1,
        };
        world.bootstrap();
        Ok(world)
    }

    fn bootstrap(&mut self) {
        let first = self.nodes[0].dht.peer();
        for i in 1..self.nodes.len() {
            let now = self.now();
            let out = self.nodes[i].dht.join(Some(first), now);
            self.apply(NodeAddr(i as u32), out);
            self.run_until_idle();
        }
        let now = self.now();
        for i in 0..self.nodes.len() {
            let mut out = self.nodes[i].dht.refresh(now);
            out.extend(self.nodes[i].dht.refresh_buckets(now, &mut self.rng));
            self.apply(NodeAddr(i as u32), out);
        }
        self.run_until_idle();

        let mut per_provider: BTreeMap<NodeAddr, Vec<(NodeId, Element)>> = BTreeMap::new();
        for d in &self.destinations {
            for p in &d.providers {
                per_provider.entry(*p).or_default().push((NodeId::for_domain(&d.domain), d.keys.pk.clone()));
            }
        }
        let now = self.now();
        for (provider, whitelist) in per_provider {
            let out = self.nodes[provider.0 as usize].dht.announce(whitelist, now);
            self.apply(provider, out);
        }
        self.run_until_idle();
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn params(&self) -> &Arc<GroupParams> {
        &self.params
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, addr: NodeAddr) -> Option<&DhtNode> {
        self.nodes.get(addr.0 as usize).map(|n| &n.dht)
    }

    pub fn destinations(&self) -> &[Destination] {
        &self.destinations
    }

    pub fn destination(&self, domain: &str) -> Option<&Destination> {
        let name = normalize_domain(domain).ok()?;
        self.destinations.iter().find(|d| d.domain == name)
    }

    pub fn session(&self, id: u64) -> Option<&Session> {
        self.sessions.get(&id)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &Session> {
        self.sessions.values()
    }

    pub fn trace(&self, token: u64) -> Option<&LookupTrace> {
        self.traces.get(&token)
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    /// Nodes currently holding a live entry for `key`, found by scanning
    /// every store.
    pub fn holders(&self, key: &NodeId) -> Vec<NodeAddr> {
        let now = self.now();
        self.nodes.iter().filter(|n| n.dht.store().live(key, now).next().is_some()).map(|n| n.dht.addr()).collect()
    }

    /// Removes every stored entry for `domain` from the network, as if it
    /// had never been announced. The provider still republishes it later.
    pub fn withdraw(&mut self, domain: &str) -> usize {
        let key = NodeId::for_domain(domain);
        self.nodes.iter_mut().map(|n| n.dht.store_mut().remove_key(&key)).sum()
    }

    /// Starts a bare value lookup for `key` from `initiator`, answered to
    /// `reply_to`. Returns the token that names it.
    pub fn start_lookup(&mut self, initiator: NodeAddr, key: NodeId, reply_to: NodeAddr) -> Result<u64, SimError> {
        for a in [initiator, reply_to] {
            if a.0 as usize >= self.nodes.len() {
                return Err(SimError::UnknownNode(a));
            }
        }
        let token = self.next_token;
        self.next_token += 1;
        let ephemeral = ElGamalKeypair::generate(&self.params, &mut self.rng);
        self.begin_value_lookup(token, initiator, key, reply_to, ephemeral.pk);
        Ok(token)
    }

    fn begin_value_lookup(&mut self, token: u64, initiator: NodeAddr, key: NodeId, reply_to: NodeAddr, pk_eg: Element) {
        let now = self.now();
        self.traces.insert(
            token,
            LookupTrace {
                token,
                initiator,
                reply_to,
                key,
                start: now,
                rounds: None,
                status: None,
                value_peer: None,
                answered_at: None,
                provider: None,
                not_found: false,
            },
        );
        let (lookup, out) = self.nodes[initiator.0 as usize].dht.lookup_value(&key, reply_to, pk_eg, token, now);
        self.lookup_tokens.insert((initiator, lookup), token);
        self.apply(initiator, out);
    }

    /// Client `client` opens a session to `domain` through relay `relay`.
    pub fn start_session(
        &mut self,
        client: NodeAddr,
        relay: NodeAddr,
        domain: &str,
        options: SessionOptions,
    ) -> Result<u64, SimError> {
        if client.0 as usize >= self.nodes.len() {
            return Err(SimError::UnknownNode(client));
        }
        let dest = self.destination(domain).ok_or_else(|| SimError::UnknownDomain(domain.to_string()))?;
        let (dest_addr, pk_d, domain) = (dest.addr, dest.keys.pk.clone(), dest.domain.clone());
        let now = self.now();
        let token = self.next_token;
        let reachable = (relay.0 as usize) < self.nodes.len() && relay != client;
        let mut chain = start_session(token, client, relay, dest_addr, reachable, now, self.config.window())?;
        self.next_token += 1;

        let params = self.params.clone();
        let ephemeral = ElGamalKeypair::generate(&params, &mut self.rng);
        let first = encrypt_sni(&params, &domain, &pk_d, &mut self.rng)?;
        let hello = ClientHello { c_sni: first.ciphertext, bundle: None };
        chain.transition(Phase::LookupPending, now)?;
        let deadline = chain.window_deadline.expect("open session has a deadline");
        let session = Session {
            chain,
            domain: domain.clone(),
            marks: SessionMarks { start: now, c_sni: vec![hello.c_sni.clone()], ..SessionMarks::default() },
            client: ClientSide {
                ephemeral: ephemeral.clone(),
                looked_up: None,
                reset_seen: false,
                proving: false,
                sending: true,
                next_seq: 0,
                tail_left: options.tail_records,
            },
            relay: RelaySide::default(),
            exit: ExitSide { refusals_left: options.exit_refusals, ..ExitSide::default() },
            options,
            logged_phases: 0,
        };
        let interval = session.options.app_interval;
        self.sessions.insert(token, session);
        self.with_session(token, client, |_, _| {});

        self.send_tunnel(client, relay, TunnelMsg::Open { session: token, destination: dest_addr });
        let event = HandshakeEvent::client_hello(&params, &hello);
        self.send_tunnel(client, relay, TunnelMsg::Data { session: token, event });
        self.begin_value_lookup(token, client, NodeId::for_domain(&domain), relay, ephemeral.pk);
        self.schedule(now + interval, Event::AppTick { session: token });
        self.schedule(deadline, Event::WindowCheck { session: token });
        Ok(token)
    }

    /// Processes events until none is left that could still change state.
    /// Periodic republication and timers of finished work do not count.
    pub fn run_until_idle(&mut self) {
        while self.queue.iter().any(|e| self.is_live(e)) {
            self.step();
        }
    }

    /// Processes every event scheduled at or before `until`.
    pub fn run_until(&mut self, until: SimTime) {
        while self.queue.peek_time().is_some_and(|t| t <= until) {
            self.step();
        }
    }

    fn is_live(&self, event: &Event) -> bool {
        let session = |id: &u64| self.sessions.get(id);
        match event {
            Event::Deliver { .. } | Event::Proved { .. } => true,
            Event::Round { node, lookup, .. } => self.nodes[node.0 as usize].dht.has_lookup(*lookup),
            Event::Republish { .. } => false,
            Event::AppTick { session: id } => session(id).is_some_and(|s| s.client.sending),
            Event::WindowCheck { session: id } => session(id).is_some_and(|s| !s.chain.phase().is_terminal()),
            Event::GateRetry { session: id } => session(id).is_some_and(|s| s.exit.parked.is_some()),
        }
    }

    fn schedule(&mut self, at: SimTime, event: Event) {
        self.queue.schedule(at, event);
    }

    fn step(&mut self) {
        let Some((now, event)) = self.queue.pop() else { return };
        match event {
            Event::Deliver { from, to, bytes, session } => self.deliver(from, to, bytes, session),
            Event::Round { node, lookup, round } => {
                let out = self.nodes[node.0 as usize].dht.on_round_timer(lookup, round, now);
                self.apply(node, out);
            }
            Event::Republish { node } => {
                let out = self.nodes[node.0 as usize].dht.republish(now);
                self.apply(node, out);
            }
            Event::AppTick { session } => self.app_tick(session),
            Event::WindowCheck { session } => self.window_check(session),
            Event::GateRetry { session } => {
                let Some(exit) = self.sessions.get(&session).and_then(|s| s.chain.exit) else { return };
                self.with_session(session, exit, |w, s| {
                    if let Some((hello, bundle)) = s.exit.parked.take() {
                        w.decide_gate(s, exit, hello, bundle);
                    }
                });
            }
            Event::Proved { session, event } => {
                let Some(client) = self.sessions.get(&session).map(|s| s.chain.client) else { return };
                self.with_session(session, client, |w, s| {
                    if s.chain.phase() != Phase::Interrupted {
                        s.marks.proof_sent = Some(w.now());
                        w.send_tunnel(client, s.chain.relay, TunnelMsg::Data { session, event });
                    }
                });
            }
        }
    }

    fn record(&mut self, node: NodeAddr, direction: Direction, kind: String, session: Option<u64>, payload: Option<&[u8]>) {
        self.log.push(LogEntry { time: self.now(), node, direction, kind, session, digest: payload.map(digest) });
    }

    fn send(&mut self, from: NodeAddr, to: NodeAddr, kind: String, bytes: Vec<u8>, session: Option<u64>) {
        self.record(from, Direction::Out, kind.clone(), session, Some(&bytes));
        let delay = if from == to { Some(SimTime::ZERO) } else { self.link.transmit() };
        match delay {
            Some(d) => {
                let at = self.now() + d;
                self.schedule(at, Event::Deliver { from, to, bytes, session });
            }
            None => self.record(from, Direction::Lost, kind, session, Some(&bytes)),
        }
    }

    fn send_tunnel(&mut self, from: NodeAddr, to: NodeAddr, msg: TunnelMsg) {
        let bytes = msg.encode(&self.params);
        self.send(from, to, tunnel_kind(&msg), bytes, Some(msg.session()));
    }

    fn deliver(&mut self, from: NodeAddr, to: NodeAddr, bytes: Vec<u8>, session: Option<u64>) {
        let is_dht = bytes.first().is_some_and(|t| *t < 0x20);
        let is_node = (to.0 as usize) < self.nodes.len();
        if is_dht && is_node {
            match Message::decode(&self.params, &bytes) {
                Ok(msg) => {
                    self.received(from, to, msg.kind().to_string(), session, bytes);
                    let now = self.now();
                    let out = self.nodes[to.0 as usize].dht.handle(from, msg, now, &mut self.rng);
                    self.apply(to, out);
                }
                Err(_) => self.record(to, Direction::Drop, "MALFORMED".into(), session, Some(&bytes)),
            }
            return;
        }
        match TunnelMsg::decode(&self.params, &bytes) {
            Ok(msg) => {
                self.received(from, to, tunnel_kind(&msg), session, bytes);
                if is_node {
                    self.on_tunnel(to, from, msg);
                } else {
                    self.at_destination(to, from, msg);
                }
            }
            Err(_) => self.record(to, Direction::Drop, "MALFORMED".into(), session, Some(&bytes)),
        }
    }

    fn received(&mut self, from: NodeAddr, to: NodeAddr, kind: String, session: Option<u64>, payload: Vec<u8>) {
        self.record(to, Direction::In, kind, session, Some(&payload));
        self.observations.push(Observation { time: self.now(), node: to, from, payload });
    }

    fn apply(&mut self, at: NodeAddr, outputs: Vec<Output>) {
        let now = self.now();
        for output in outputs {
            match output {
                Output::Send { to, msg } => {
                    let session = self.dht_session(at, to, &msg);
                    let bytes = msg.encode(&self.params);
                    self.send(at, to, msg.kind().to_string(), bytes, session);
                }
                Output::RoundTimer { lookup, round, after } => {
                    self.schedule(now + after, Event::Round { node: at, lookup, round })
                }
                Output::RepublishTimer { after } => self.schedule(now + after, Event::Republish { node: at }),
                Output::LookupDone(report) => {
                    if let Purpose::Value { token, .. } = report.purpose {
                        if let Some(t) = self.traces.get_mut(&token) {
                            t.rounds = Some(report.rounds);
                            t.status = Some(report.status);
                            t.value_peer = report.value_peer;
                        }
                    }
                    self.lookup_tokens.remove(&(at, report.lookup));
                }
                Output::Value(response) => self.on_value(at, response),
                Output::NotFound { token } => {
                    if let Some(t) = self.traces.get_mut(&token) {
                        t.answered_at.get_or_insert(now);
                        t.not_found = true;
                    }
                }
                Output::Notified(notify) => self.on_notified(at, notify),
            }
        }
    }

    /// The token a DHT message belongs to, for the event log.
    fn dht_session(&self, at: NodeAddr, to: NodeAddr, msg: &Message) -> Option<u64> {
        match msg {
            Message::FindNode { lookup, .. } => self.lookup_tokens.get(&(at, *lookup)).copied(),
            Message::Nodes { lookup, .. } => self.lookup_tokens.get(&(to, *lookup)).copied(),
            Message::FindValue { token, .. } | Message::NotFound { token } => Some(*token),
            Message::ValueResponse(r) => Some(r.token),
            _ => None,
        }
    }

    /// Runs `f` on a session taken out of the map, then logs the phases it
    /// entered as seen by `at`.
    fn with_session(&mut self, id: u64, at: NodeAddr, f: impl FnOnce(&mut World, &mut Session)) {
        let Some(mut s) = self.sessions.remove(&id) else { return };
        f(self, &mut s);
        let fresh: Vec<_> = s.chain.history()[s.logged_phases..].to_vec();
        s.logged_phases += fresh.len();
        for (time, phase) in fresh {
            self.log.push(LogEntry {
                time,
                node: at,
                direction: Direction::State,
                kind: phase.to_string(),
                session: Some(id),
                digest: None,
            });
        }
        self.sessions.insert(id, s);
    }

    fn on_tunnel(&mut self, at: NodeAddr, from: NodeAddr, msg: TunnelMsg) {
        let id = msg.session();
        if !self.sessions.contains_key(&id) {
            self.record(at, Direction::Drop, tunnel_kind(&msg), Some(id), None);
            return;
        }
        self.with_session(id, at, |w, s| {
            if at == s.chain.client {
                w.client_on(s, msg);
            } else if at == s.chain.relay {
                w.relay_on(s, from, msg);
            } else if Some(at) == s.chain.exit {
                w.exit_on(s, at, from, msg);
            } else {
                w.record(at, Direction::Drop, tunnel_kind(&msg), Some(id), None);
            }
        });
    }

    fn client_on(&mut self, s: &mut Session, msg: TunnelMsg) {
        let now = self.now();
        match msg {
            TunnelMsg::Data { event, .. } => match event.kind {
                HandshakeKind::ServerHello => s.marks.server_hellos += 1,
                HandshakeKind::TcpRst if !s.client.reset_seen => {
                    s.client.reset_seen = true;
                    s.marks.rst_at_client = Some(now);
                    if s.chain.phase() == Phase::Splicing {
                        let _ = s.chain.transition(Phase::AwaitingProof, now);
                    }
                    self.maybe_prove(s);
                }
                _ => {}
            },
            TunnelMsg::LookupInfo { c_pkd, sig_r, pk_r, .. } => {
                s.client.looked_up = Some(LookedUp { c_pkd, sig_r, pk_r });
                self.maybe_prove(s);
            }
            TunnelMsg::GateResult { authorized, .. } => {
                s.marks.gate_result_at_client.get_or_insert(now);
                if !authorized {
                    s.client.sending = false;
                }
            }
            TunnelMsg::Teardown { .. } => s.client.sending = false,
            _ => {}
        }
    }

    /// Once the reset and the lookup result are both in, builds the
    /// attestation and queues the new ClientHello.
    fn maybe_prove(&mut self, s: &mut Session) {
        if s.client.proving || !s.client.reset_seen {
            return;
        }
        let Some(LookedUp { c_pkd, mut sig_r, mut pk_r }) = s.client.looked_up.clone() else { return };
        s.client.proving = true;
        let params = self.params.clone();
        let rng = &mut self.rng;
        if s.options.behavior == ClientBehavior::UnnotifiedRelay {
            let rogue = SigKeypair::generate(&params, rng);
            sig_r = schnorr_sign(&params, &c_pkd.encode(&params), &rogue, rng);
            pk_r = rogue.pk;
        }
        let pk_sni = match s.options.behavior {
            ClientBehavior::WrongSniKey => params.g_pow(&params.random_nonzero_scalar(rng)),
            _ => elgamal_decrypt(&params, &c_pkd, &s.client.ephemeral.sk),
        };
        let started = Instant::now();
        let result = attest_sni_under(&params, &s.domain, &pk_sni, &s.client.ephemeral, &c_pkd, &sig_r, &pk_r, rng);
        s.marks.prove_ms = Some(started.elapsed().as_secs_f64() * 1e3);
        match result {
            Ok((mut bundle, _)) => {
                if s.options.behavior == ClientBehavior::TamperedProof {
                    let z = &mut bundle.proof.responses.m;
                    *z = params.s_add(z, &params.scalar_from_u64(1));
                }
                let hello = ClientHello { c_sni: bundle.statement.c_sni().clone(), bundle: Some(bundle.clone()) };
                s.marks.c_sni.push(hello.c_sni.clone());
                s.chain.attestation = Some(bundle);
                let event = HandshakeEvent::client_hello(&params, &hello);
                let at = self.now() + s.options.prove_delay;
                self.schedule(at, Event::Proved { session: s.chain.session_id, event });
            }
            Err(_) => {
                let _ = s.chain.interrupt(InterruptReason::ProofFailed, self.now());
                s.client.sending = false;
                self.send_tunnel(s.chain.client, s.chain.relay, TunnelMsg::Teardown { session: s.chain.session_id });
            }
        }
    }

    fn relay_on(&mut self, s: &mut Session, from: NodeAddr, msg: TunnelMsg) {
        let now = self.now();
        let (id, client, relay) = (s.chain.session_id, s.chain.client, s.chain.relay);
        let from_exit = s.relay.spliced && Some(from) == s.chain.exit;
        match msg {
            TunnelMsg::Open { destination, .. } if from == client => s.relay.destination = Some(destination),
            TunnelMsg::Data { event, .. } if from == client => {
                if s.relay.closed {
                    self.record(relay, Direction::Drop, event.kind.as_str().into(), Some(id), Some(&event.payload));
                    return;
                }
                match s.chain.enforce_window(now) {
                    WindowDecision::Drop => {
                        if event.kind == HandshakeKind::AppData {
                            s.marks.dropped_at_relay += 1;
                        }
                        self.record(relay, Direction::Drop, event.kind.as_str().into(), Some(id), Some(&event.payload));
                        self.relay_teardown(s);
                    }
                    WindowDecision::Forward => {
                        if s.relay.spliced {
                            let exit = s.chain.exit.expect("spliced session has an exit");
                            self.send_tunnel(relay, exit, TunnelMsg::Data { session: id, event });
                        } else if let Some(d) = s.relay.destination {
                            self.forward_to_destination(s, relay, d, event);
                        }
                    }
                }
            }
            TunnelMsg::Data { event, .. } if from_exit => {
                if !s.relay.closed {
                    self.send_tunnel(relay, client, TunnelMsg::Data { session: id, event });
                }
            }
            TunnelMsg::Flow { event, .. } if Some(from) == s.relay.destination => {
                if !s.relay.closed {
                    self.send_tunnel(relay, client, TunnelMsg::Data { session: id, event });
                }
            }
            TunnelMsg::ExitReply { accepted, .. } if Some(from) == s.chain.exit => {
                if s.relay.closed {
                    return;
                }
                if accepted {
                    s.relay.spliced = true;
                    let probe = HandshakeEvent { kind: HandshakeKind::AppData, payload: Vec::new() };
                    self.send_tunnel(relay, from, TunnelMsg::Data { session: id, event: probe });
                } else if s.marks.exit_open_requests < 2 {
                    s.marks.exit_open_requests += 1;
                    let destination = s.chain.destination;
                    self.send_tunnel(relay, from, TunnelMsg::ExitOpen { session: id, destination });
                } else {
                    let _ = s.chain.interrupt(InterruptReason::ExitUnavailable, now);
                    self.relay_teardown(s);
                }
            }
            TunnelMsg::GateResult { authorized, .. } if from_exit => {
                self.send_tunnel(relay, client, TunnelMsg::GateResult { session: id, authorized });
                if !authorized {
                    s.relay.closed = true;
                }
            }
            TunnelMsg::Teardown { .. } if from == client => self.relay_teardown(s),
            other => self.record(relay, Direction::Drop, tunnel_kind(&other), Some(id), None),
        }
    }

    fn relay_teardown(&mut self, s: &mut Session) {
        if s.relay.closed {
            return;
        }
        s.relay.closed = true;
        let (id, relay) = (s.chain.session_id, s.chain.relay);
        self.send_tunnel(relay, s.chain.client, TunnelMsg::Teardown { session: id });
        if let Some(exit) = s.chain.exit {
            self.send_tunnel(relay, exit, TunnelMsg::Teardown { session: id });
        }
    }

    fn forward_to_destination(&mut self, s: &mut Session, at: NodeAddr, dest: NodeAddr, event: HandshakeEvent) {
        if event.kind == HandshakeKind::AppData && !event.payload.is_empty() && s.chain.phase() == Phase::Interrupted {
            s.marks.forwarded_after_interrupt += 1;
        }
        self.send_tunnel(at, dest, TunnelMsg::Flow { session: s.chain.session_id, event });
    }

    fn on_value(&mut self, at: NodeAddr, response: ValueResponse) {
        let now = self.now();
        let token = response.token;
        if let Some(t) = self.traces.get_mut(&token) {
            if t.answered_at.is_none() {
                t.answered_at = Some(now);
                t.provider = Some(response.provider);
            }
        }
        if !self.sessions.get(&token).is_some_and(|s| s.chain.relay == at) {
            return;
        }
        self.with_session(token, at, |w, s| {
            if s.marks.value_at_relay.is_some() {
                return;
            }
            s.marks.value_at_relay = Some(now);
            if s.relay.closed || s.chain.splice(response.provider, now).is_err() {
                return;
            }
            let ValueResponse { provider, c_pkd, sig_r, pk_r, .. } = response;
            w.send_tunnel(at, s.chain.client, TunnelMsg::LookupInfo { session: token, provider, c_pkd, sig_r, pk_r });
            s.marks.exit_open_requests = 1;
            let destination = s.chain.destination;
            w.send_tunnel(at, provider, TunnelMsg::ExitOpen { session: token, destination });
        });
    }

    fn on_notified(&mut self, at: NodeAddr, notify: NotifyA) {
        let now = self.now();
        let node = &mut self.nodes[at.0 as usize];
        node.notified.add(&notify);
        let ready: Vec<u64> = self
            .sessions
            .values()
            .filter(|s| s.chain.exit == Some(at))
            .filter(|s| s.exit.parked.as_ref().is_some_and(|(_, b)| node.notified.is_trusted(b.statement.pk_r(), now)))
            .map(|s| s.chain.session_id)
            .collect();
        for id in ready {
            self.with_session(id, at, |w, s| {
                if let Some((hello, bundle)) = s.exit.parked.take() {
                    w.decide_gate(s, at, hello, bundle);
                }
            });
        }
    }

    fn exit_on(&mut self, s: &mut Session, at: NodeAddr, from: NodeAddr, msg: TunnelMsg) {
        let id = s.chain.session_id;
        let relay = s.chain.relay;
        match msg {
            TunnelMsg::ExitOpen { destination, .. } if from == relay => {
                let accepted = s.exit.refusals_left == 0;
                if accepted {
                    s.exit.open = true;
                    s.exit.destination = Some(destination);
                } else {
                    s.exit.refusals_left -= 1;
                }
                self.send_tunnel(at, relay, TunnelMsg::ExitReply { session: id, accepted });
            }
            TunnelMsg::Data { event, .. } if from == relay => {
                if !s.exit.open {
                    self.record(at, Direction::Drop, event.kind.as_str().into(), Some(id), Some(&event.payload));
                    return;
                }
                let authorized = s.chain.phase() == Phase::Authorized;
                match event.kind {
                    HandshakeKind::ClientHello => match ClientHello::decode(&self.params, &event.payload) {
                        Ok(ClientHello { c_sni, bundle: Some(bundle) }) => {
                            let hello = ClientHello { c_sni, bundle: None };
                            let trusted = self.nodes[at.0 as usize].notified.is_trusted(bundle.statement.pk_r(), self.now());
                            if trusted || s.exit.waited {
                                self.decide_gate(s, at, hello, bundle);
                            } else {
                                s.exit.waited = true;
                                s.exit.parked = Some((hello, bundle));
                                let retry = self.now() + NOTIFY_GRACE;
                                self.schedule(retry, Event::GateRetry { session: id });
                            }
                        }
                        Ok(_) if authorized => self.exit_forward(s, at, event),
                        Ok(_) => self.record(at, Direction::Drop, event.kind.as_str().into(), Some(id), Some(&event.payload)),
                        Err(_) => self.refuse(s, at, InterruptReason::Malformed),
                    },
                    HandshakeKind::AppData if authorized || event.payload.is_empty() => self.exit_forward(s, at, event),
                    HandshakeKind::AppData => s.exit.held.push(event),
                    _ if authorized => self.exit_forward(s, at, event),
                    _ => self.record(at, Direction::Drop, event.kind.as_str().into(), Some(id), Some(&event.payload)),
                }
            }
            TunnelMsg::Flow { event, .. } if Some(from) == s.exit.destination => {
                if s.exit.open {
                    self.send_tunnel(at, relay, TunnelMsg::Data { session: id, event });
                }
            }
            TunnelMsg::Teardown { .. } if from == relay => {
                s.exit.open = false;
                s.exit.parked = None;
                s.marks.discarded_at_exit += s.exit.held.len() as u32;
                s.exit.held.clear();
            }
            other => self.record(at, Direction::Drop, tunnel_kind(&other), Some(id), None),
        }
    }

    fn exit_forward(&mut self, s: &mut Session, at: NodeAddr, event: HandshakeEvent) {
        if let Some(d) = s.exit.destination {
            self.forward_to_destination(s, at, d, event);
        }
    }

    fn decide_gate(&mut self, s: &mut Session, at: NodeAddr, hello: ClientHello, bundle: AttestationBundle) {
        if !s.exit.open {
            return;
        }
        let now = self.now();
        let started = Instant::now();
        let outcome = if hello.c_sni != *bundle.statement.c_sni() {
            GateOutcome::Interrupted(InterruptReason::Malformed)
        } else {
            gate(&bundle, &self.nodes[at.0 as usize].notified, now)
        };
        s.marks.verify_ms = Some(started.elapsed().as_secs_f64() * 1e3);
        s.marks.gate_at_exit = Some(now);
        match outcome {
            GateOutcome::Authorized if s.chain.transition(Phase::Authorized, now).is_ok() => {
                let event = HandshakeEvent::client_hello(&self.params, &hello);
                self.exit_forward(s, at, event);
                for held in std::mem::take(&mut s.exit.held) {
                    self.exit_forward(s, at, held);
                }
                let id = s.chain.session_id;
                self.send_tunnel(at, s.chain.relay, TunnelMsg::GateResult { session: id, authorized: true });
            }
            GateOutcome::Authorized => self.refuse(s, at, InterruptReason::WindowExpired),
            GateOutcome::Interrupted(reason) => self.refuse(s, at, reason),
        }
    }

    fn refuse(&mut self, s: &mut Session, at: NodeAddr, reason: InterruptReason) {
        let now = self.now();
        if s.chain.phase() != Phase::Interrupted {
            let _ = s.chain.interrupt(reason, now);
        }
        s.exit.open = false;
        s.marks.discarded_at_exit += s.exit.held.len() as u32;
        s.exit.held.clear();
        let id = s.chain.session_id;
        self.send_tunnel(at, s.chain.relay, TunnelMsg::GateResult { session: id, authorized: false });
    }

    fn at_destination(&mut self, at: NodeAddr, from: NodeAddr, msg: TunnelMsg) {
        let TunnelMsg::Flow { session: id, event } = msg else {
            self.record(at, Direction::Drop, tunnel_kind(&msg), Some(msg.session()), None);
            return;
        };
        let now = self.now();
        let idx = at.0 as usize - self.nodes.len();
        let dest = &mut self.destinations[idx];
        let seen = dest.endpoints.entry(id).or_default();
        let new_endpoint = seen.insert(from);
        let moved = new_endpoint && seen.len() > 1;
        let mut matched = None;
        if event.kind == HandshakeKind::ClientHello {
            if let Ok(hello) = ClientHello::decode(&self.params, &event.payload) {
                matched = domain_decrypt_sni_check(&self.params, &hello.c_sni, &dest.keys.sk, [dest.domain.as_str()]);
            }
        }
        if moved {
            let rst = HandshakeEvent { kind: HandshakeKind::TcpRst, payload: Vec::new() };
            self.send_tunnel(at, from, TunnelMsg::Flow { session: id, event: rst });
        }
        if matched.is_some() {
            let hello = HandshakeEvent { kind: HandshakeKind::ServerHello, payload: id.to_be_bytes().to_vec() };
            self.send_tunnel(at, from, TunnelMsg::Flow { session: id, event: hello });
        }
        if let Some(s) = self.sessions.get_mut(&id) {
            if new_endpoint {
                s.marks.endpoints.push((now, from));
            }
            if moved {
                s.marks.resets += 1;
            }
            if matched.is_some() {
                s.marks.sni_matched = matched;
            }
            if event.kind == HandshakeKind::AppData && event.payload.len() >= 8 {
                let seq = u64::from_be_bytes(event.payload[..8].try_into().expect("eight bytes"));
                s.marks.app_delivered.push((seq, now));
            }
        }
    }

    fn app_tick(&mut self, id: u64) {
        let Some(client) = self.sessions.get(&id).map(|s| s.chain.client) else { return };
        self.with_session(id, client, |w, s| {
            let now = w.now();
            let deadline = s.chain.window_deadline.unwrap_or(now);
            if s.chain.phase() == Phase::Interrupted || now > deadline + w.config.window() {
                s.client.sending = false;
            }
            if s.marks.gate_result_at_client.is_some() {
                if s.client.tail_left == 0 {
                    s.client.sending = false;
                } else {
                    s.client.tail_left -= 1;
                }
            }
            if !s.client.sending {
                return;
            }
            let seq = s.client.next_seq;
            s.client.next_seq += 1;
            let mut payload = seq.to_be_bytes().to_vec();
            payload.extend(w.rng.gen::<[u8; 8]>());
            s.marks.app_sent.push((seq, now));
            let event = HandshakeEvent { kind: HandshakeKind::AppData, payload };
            w.send_tunnel(client, s.chain.relay, TunnelMsg::Data { session: id, event });
            w.schedule(now + s.options.app_interval, Event::AppTick { session: id });
        });
    }

    fn window_check(&mut self, id: u64) {
        let Some(relay) = self.sessions.get(&id).map(|s| s.chain.relay) else { return };
        self.with_session(id, relay, |w, s| {
            if s.chain.phase().is_terminal() {
                return;
            }
            if s.chain.enforce_window(w.now()) == WindowDecision::Drop {
                w.relay_teardown(s);
            }
        });
    }
}

fn tunnel_kind(msg: &TunnelMsg) -> String {
    match msg {
        TunnelMsg::Data { event, .. } | TunnelMsg::Flow { event, .. } => format!("{}:{}", msg.kind(), event.kind.as_str()),
        _ => msg.kind().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::Providers;

    fn small(seed: u64) -> SimConfig {
        let mut config = SimConfig { n_nodes: 24, seed, group: crate::crypto::SecurityLabel::Toy, ..SimConfig::default() };
        config.whitelist.insert("example.org".into(), Providers::One(5));
        config
    }

    #[test]
    fn whitelist_lands_on_nearest_nodes() {
        let world = World::build(small(1)).unwrap();
        let key = NodeId::for_domain("example.org");
        let mut by_distance: Vec<_> = (0..24).map(|i| world.node(NodeAddr(i)).unwrap().peer()).collect();
        by_distance.sort_by_key(|p| p.id.distance(&key));
        let expected: BTreeSet<_> = by_distance[..3].iter().map(|p| p.addr).collect();
        let holders: BTreeSet<_> = world.holders(&key).into_iter().collect();
        assert_eq!(holders, expected);
    }

    #[test]
    fn honest_session_is_authorized() {
        let mut world = World::build(small(2)).unwrap();
        let id = world.start_session(NodeAddr(0), NodeAddr(1), "example.org", SessionOptions::default()).unwrap();
        world.run_until_idle();
        let s = world.session(id).unwrap();
        assert_eq!(s.chain.phase(), Phase::Authorized, "{:?}", s.chain.history());
        assert_eq!(s.chain.exit, Some(NodeAddr(5)));
        assert_eq!(s.marks.sni_matched.as_deref(), Some("example.org"));
        assert_eq!(s.marks.resets, 1);
        let sent: Vec<u64> = s.marks.app_sent.iter().map(|(q, _)| *q).collect();
        let got: Vec<u64> = s.marks.app_delivered.iter().map(|(q, _)| *q).collect();
        assert_eq!(sent, got);
    }

    #[test]
    fn same_seed_same_log() {
        let run = |seed| {
            let mut world = World::build(small(seed)).unwrap();
            world.start_session(NodeAddr(2), NodeAddr(3), "example.org", SessionOptions::default()).unwrap();
            world.run_until_idle();
            world.log().iter().map(LogEntry::line).collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn unreachable_relay_leaves_no_trace() {
        let mut world = World::build(small(3)).unwrap();
        let before = world.log().len();
        let err = world.start_session(NodeAddr(0), NodeAddr(99), "example.org", SessionOptions::default());
        assert!(matches!(err, Err(SimError::Tunnel(TunnelError::Unreachable(NodeAddr(99))))));
        assert_eq!(world.log().len(), before);
        assert_eq!(world.sessions().count(), 0);
    }
}
