use std::collections::HashMap;
use std::sync::Arc;

use rand::{CryptoRng, RngCore};

use super::id::{KeyRegion, NodeAddr, NodeId};
use super::lookup::{Lookup, LookupStatus};
use super::message::{Message, NotifyA, ValueResponse};
use super::routing::{Peer, RoutingTable};
use super::store::{respond_value, Store, WhitelistEntry};
use super::DhtConfig;
use crate::clock::SimTime;
use crate::crypto::{Element, GroupParams, SigKeypair};

/// Why a lookup runs, and what happens once it converges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Purpose {
    /// Self-lookup that fills routing tables on both sides.
    Join,
    /// Store an entry on the `r_rep` nodes nearest its key.
    Announce { key: NodeId, pk_d: Element },
    /// Ask the nearest node for the entry in `region`, answer to `reply_to`.
    Value { region: KeyRegion, reply_to: NodeAddr, pk_eg: Element, token: u64 },
}

#[derive(Clone, Debug)]
pub struct LookupReport {
    pub lookup: u64,
    pub purpose: Purpose,
    pub status: LookupStatus,
    pub rounds: u32,
    pub closest: Vec<Peer>,
    /// The node a value request went to.
    pub value_peer: Option<Peer>,
}

/// Side effects of handling one input, for the event loop to carry out.
#[derive(Clone, Debug)]
pub enum Output {
    Send { to: NodeAddr, msg: Message },
    RoundTimer { lookup: u64, round: u32, after: SimTime },
    RepublishTimer { after: SimTime },
    LookupDone(LookupReport),
    /// A value response addressed to this node.
    Value(ValueResponse),
    NotFound { token: u64 },
    Notified(NotifyA),
}

/// One DHT participant. Mutated only through its handlers.
#[derive(Debug)]
pub struct DhtNode {
    peer: Peer,
    config: DhtConfig,
    params: Arc<GroupParams>,
    signer: SigKeypair,
    table: RoutingTable,
    store: Store,
    whitelist: Vec<(NodeId, Element)>,
    lookups: HashMap<u64, (Lookup, Purpose)>,
    next_lookup: u64,
}

impl DhtNode {
    pub fn new(id: NodeId, addr: NodeAddr, config: DhtConfig, params: Arc<GroupParams>, signer: SigKeypair) -> Self {
        DhtNode {
            peer: Peer { id, addr },
            table: RoutingTable::new(id, config.k),
            config,
            params,
            signer,
            store: Store::default(),
            whitelist: Vec::new(),
            lookups: HashMap::new(),
            next_lookup: 0,
        }
    }

    pub fn id(&self) -> NodeId {
        self.peer.id
    }

    pub fn addr(&self) -> NodeAddr {
        self.peer.addr
    }

    pub fn peer(&self) -> Peer {
        self.peer
    }

    pub fn table(&self) -> &RoutingTable {
        &self.table
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut Store {
        &mut self.store
    }

    pub fn signer(&self) -> &SigKeypair {
        &self.signer
    }

    pub fn config(&self) -> &DhtConfig {
        &self.config
    }

    pub fn active_lookups(&self) -> usize {
        self.lookups.len()
    }

    pub fn has_lookup(&self, lookup: u64) -> bool {
        self.lookups.contains_key(&lookup)
    }

    /// Learns the bootstrap contact and looks up its own identifier.
    pub fn join(&mut self, bootstrap: Option<Peer>, now: SimTime) -> Vec<Output> {
        if let Some(b) = bootstrap {
            self.table.update(b, now);
        }
        self.refresh(now)
    }

    /// Self-lookup, run after joining to pick up later arrivals.
    pub fn refresh(&mut self, now: SimTime) -> Vec<Output> {
        self.start_lookup(self.peer.id, Purpose::Join, None, now).1
    }

    /// Looks up a random id in every bucket from the one holding the
    /// nearest known contact outward, so that far buckets get filled too.
    pub fn refresh_buckets<R: RngCore>(&mut self, now: SimTime, rng: &mut R) -> Vec<Output> {
        let own = self.peer.id;
        let Some(nearest) = self.table.closest(&own, 1).first().and_then(|p| own.bucket_index(&p.id)) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for bucket in nearest..256 {
            let target = own.random_in_bucket(bucket, rng);
            out.extend(self.start_lookup(target, Purpose::Join, None, now).1);
        }
        out
    }

    /// Publishes `whitelist` (domain key, domain public key) and schedules
    /// the next re-publication at half the TTL.
    pub fn announce(&mut self, whitelist: Vec<(NodeId, Element)>, now: SimTime) -> Vec<Output> {
        self.whitelist = whitelist;
        self.republish(now)
    }

    pub fn republish(&mut self, now: SimTime) -> Vec<Output> {
        let mut out = Vec::new();
        for (key, pk_d) in self.whitelist.clone() {
            out.extend(self.start_lookup(key, Purpose::Announce { key, pk_d }, None, now).1);
        }
        if !self.whitelist.is_empty() {
            out.push(Output::RepublishTimer { after: SimTime(self.config.ttl.as_micros() / 2) });
        }
        out
    }

    /// Looks up the entry for `key` on behalf of a client. Only the leading
    /// region of the key is ever sent; the answer goes to `reply_to`, which
    /// also takes no part in the lookup itself.
    pub fn lookup_value(&mut self, key: &NodeId, reply_to: NodeAddr, pk_eg: Element, token: u64, now: SimTime) -> (u64, Vec<Output>) {
        let region = key.region();
        let purpose = Purpose::Value { region, reply_to, pk_eg, token };
        self.start_lookup(region.target(), purpose, Some(reply_to), now)
    }

    pub fn start_lookup(&mut self, target: NodeId, purpose: Purpose, exclude: Option<NodeAddr>, now: SimTime) -> (u64, Vec<Output>) {
        let id = self.next_lookup;
        self.next_lookup += 1;
        let include_self = !matches!(purpose, Purpose::Join);
        let seeds = self.table.closest(&target, self.config.k);
        let lookup =
            Lookup::new(target, self.peer, include_self, seeds, exclude, self.config.k, self.config.alpha, self.config.max_rounds);
        self.lookups.insert(id, (lookup, purpose));
        (id, self.advance(id, now))
    }

    fn advance(&mut self, id: u64, now: SimTime) -> Vec<Output> {
        let Some((lookup, _)) = self.lookups.get_mut(&id) else { return Vec::new() };
        if let Some(batch) = lookup.next_round() {
            let target = lookup.target();
            let round = lookup.rounds();
            let mut out: Vec<Output> = batch
                .into_iter()
                .map(|p| Output::Send { to: p.addr, msg: Message::FindNode { sender: self.peer.id, lookup: id, target } })
                .collect();
            out.push(Output::RoundTimer { lookup: id, round, after: self.config.round_timeout });
            return out;
        }
        let (lookup, purpose) = self.lookups.remove(&id).expect("lookup present");
        self.finish(id, lookup, purpose, now)
    }

    fn finish(&mut self, id: u64, lookup: Lookup, purpose: Purpose, now: SimTime) -> Vec<Output> {
        let mut out = Vec::new();
        let mut value_peer = None;
        match &purpose {
            Purpose::Join => {}
            Purpose::Announce { key, pk_d } => {
                let entry = WhitelistEntry { key: *key, provider: self.peer.addr, pk_d: pk_d.clone(), expires_at: now + self.config.ttl };
                for p in lookup.closest_responded(self.config.r_rep) {
                    if p.id == self.peer.id {
                        let _ = self.store.handle_store(entry.clone(), now);
                    } else {
                        out.push(Output::Send {
                            to: p.addr,
                            msg: Message::Store {
                                sender: self.peer.id,
                                key: entry.key,
                                provider: entry.provider,
                                pk_d: entry.pk_d.clone(),
                                expires_at: entry.expires_at,
                            },
                        });
                    }
                }
            }
            Purpose::Value { region, reply_to, pk_eg, token } => match lookup.closest_responded(1).first() {
                Some(p) => {
                    value_peer = Some(*p);
                    out.push(Output::Send {
                        to: p.addr,
                        msg: Message::FindValue { region: *region, reply_to: *reply_to, pk_eg: pk_eg.clone(), token: *token },
                    });
                }
                None => out.push(Output::Send { to: *reply_to, msg: Message::NotFound { token: *token } }),
            },
        }
        out.push(Output::LookupDone(LookupReport {
            lookup: id,
            status: lookup.status(),
            rounds: lookup.rounds(),
            closest: lookup.closest_responded(self.config.k),
            value_peer,
            purpose,
        }));
        out
    }

    pub fn on_round_timer(&mut self, lookup: u64, round: u32, now: SimTime) -> Vec<Output> {
        let Some((l, _)) = self.lookups.get_mut(&lookup) else { return Vec::new() };
        if l.rounds() != round || !l.on_timeout() {
            return Vec::new();
        }
        self.advance(lookup, now)
    }

    pub fn handle<R: RngCore + CryptoRng>(&mut self, from: NodeAddr, msg: Message, now: SimTime, rng: &mut R) -> Vec<Output> {
        match msg {
            Message::Ping { sender } => {
                self.table.update(Peer { id: sender, addr: from }, now);
                vec![Output::Send { to: from, msg: Message::Pong { sender: self.peer.id } }]
            }
            Message::Pong { sender } => {
                self.table.update(Peer { id: sender, addr: from }, now);
                Vec::new()
            }
            Message::Store { sender, key, provider, pk_d, expires_at } => {
                self.table.update(Peer { id: sender, addr: from }, now);
                let _ = self.store.handle_store(WhitelistEntry { key, provider, pk_d, expires_at }, now);
                Vec::new()
            }
            Message::FindNode { sender, lookup, target } => {
                self.table.update(Peer { id: sender, addr: from }, now);
                let peers = self.table.closest(&target, self.config.k);
                vec![Output::Send { to: from, msg: Message::Nodes { sender: self.peer.id, lookup, peers } }]
            }
            Message::Nodes { sender, lookup, peers } => {
                self.table.update(Peer { id: sender, addr: from }, now);
                let Some((l, _)) = self.lookups.get_mut(&lookup) else { return Vec::new() };
                if l.on_response(&sender, peers) {
                    self.advance(lookup, now)
                } else {
                    Vec::new()
                }
            }
            Message::FindValue { region, reply_to, pk_eg, token } => {
                self.store.expire_entries(now);
                let reply = respond_value(
                    &self.params,
                    &self.store,
                    &region,
                    &pk_eg,
                    token,
                    &self.signer,
                    now,
                    self.config.notify_window,
                    rng,
                );
                match reply {
                    Some(reply) => vec![
                        Output::Send { to: reply.provider, msg: Message::NotifyA(reply.notify) },
                        Output::Send { to: reply_to, msg: Message::ValueResponse(reply.response) },
                    ],
                    None => vec![Output::Send { to: reply_to, msg: Message::NotFound { token } }],
                }
            }
            Message::ValueResponse(r) => vec![Output::Value(r)],
            Message::NotFound { token } => vec![Output::NotFound { token }],
            Message::NotifyA(n) => vec![Output::Notified(n)],
        }
    }
}
