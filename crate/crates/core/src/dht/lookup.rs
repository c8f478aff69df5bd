//! Round-synchronous iterative lookup.
//!
//! Each round queries up to `alpha` of the nearest not-yet-queried
//! candidates and ends when all of them answered or the round timer fired.
//! A round that brings nothing closer switches to a sweep of every
//! unqueried candidate among the nearest `k`. The lookup converges once the
//! nearest `k` live candidates have all answered.

use std::collections::{BTreeMap, HashSet};

use super::id::{Distance, NodeAddr, NodeId};
use super::routing::Peer;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CandidateState {
    Fresh,
    Pending,
    Responded,
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LookupStatus {
    Running,
    Converged,
    /// Gave up after the round limit, or ran out of candidates to ask.
    Exhausted,
}

#[derive(Clone, Debug)]
pub struct Lookup {
    target: NodeId,
    k: usize,
    alpha: usize,
    max_rounds: u32,
    own: NodeId,
    excluded: HashSet<NodeAddr>,
    candidates: BTreeMap<Distance, (Peer, CandidateState)>,
    round: u32,
    best_before_round: Option<Distance>,
    sweep: bool,
    status: LookupStatus,
}

impl Lookup {
    /// `own` joins the candidate set as already answered when `include_self`
    /// is set; it is never queried. Peers at `excluded` addresses are ignored.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        target: NodeId,
        own: Peer,
        include_self: bool,
        seeds: impl IntoIterator<Item = Peer>,
        excluded: impl IntoIterator<Item = NodeAddr>,
        k: usize,
        alpha: usize,
        max_rounds: u32,
    ) -> Self {
        let mut lookup = Lookup {
            target,
            k,
            alpha,
            max_rounds,
            own: own.id,
            excluded: excluded.into_iter().collect(),
            candidates: BTreeMap::new(),
            round: 0,
            best_before_round: None,
            sweep: false,
            status: LookupStatus::Running,
        };
        if include_self {
            lookup.candidates.insert(own.id.distance(&target), (own, CandidateState::Responded));
        }
        lookup.add_peers(seeds);
        lookup
    }

    pub fn target(&self) -> NodeId {
        self.target
    }

    pub fn rounds(&self) -> u32 {
        self.round
    }

    pub fn status(&self) -> LookupStatus {
        self.status
    }

    fn add_peers(&mut self, peers: impl IntoIterator<Item = Peer>) {
        for p in peers {
            if p.id == self.own || self.excluded.contains(&p.addr) {
                continue;
            }
            self.candidates.entry(p.id.distance(&self.target)).or_insert((p, CandidateState::Fresh));
        }
    }

    fn nearest_live(&self) -> impl Iterator<Item = &(Peer, CandidateState)> {
        self.candidates.values().filter(|(_, s)| *s != CandidateState::Failed).take(self.k)
    }

    fn best(&self) -> Option<Distance> {
        self.candidates.iter().find(|(_, (_, s))| *s != CandidateState::Failed).map(|(d, _)| *d)
    }

    /// Starts the next round and returns the peers to query, or `None` when
    /// the lookup is over.
    pub fn next_round(&mut self) -> Option<Vec<Peer>> {
        if self.status != LookupStatus::Running {
            return None;
        }
        debug_assert!(self.round_complete());
        if self.nearest_live().all(|(_, s)| *s == CandidateState::Responded) {
            self.status = if self.nearest_live().next().is_some() { LookupStatus::Converged } else { LookupStatus::Exhausted };
            return None;
        }
        if self.round >= self.max_rounds {
            self.status = LookupStatus::Exhausted;
            return None;
        }
        let limit = if self.sweep { self.k } else { self.alpha };
        let batch: Vec<Peer> = self
            .nearest_live()
            .filter(|(_, s)| *s == CandidateState::Fresh)
            .take(limit)
            .map(|(p, _)| *p)
            .collect();
        for p in &batch {
            self.set_state(&p.id, CandidateState::Pending);
        }
        self.best_before_round = self.best();
        self.round += 1;
        Some(batch)
    }

    fn set_state(&mut self, id: &NodeId, state: CandidateState) {
        if let Some(entry) = self.candidates.get_mut(&id.distance(&self.target)) {
            entry.1 = state;
        }
    }

    fn state_of(&self, id: &NodeId) -> Option<CandidateState> {
        self.candidates.get(&id.distance(&self.target)).map(|(_, s)| *s)
    }

    /// Records a reply. Returns true if it completed the current round.
    pub fn on_response(&mut self, from: &NodeId, peers: impl IntoIterator<Item = Peer>) -> bool {
        if self.state_of(from) != Some(CandidateState::Pending) {
            return false;
        }
        self.set_state(from, CandidateState::Responded);
        self.add_peers(peers);
        self.finish_round_if_done()
    }

    /// The round timer fired: every query still pending counts as failed.
    pub fn on_timeout(&mut self) -> bool {
        let pending: Vec<NodeId> = self
            .candidates
            .values()
            .filter(|(_, s)| *s == CandidateState::Pending)
            .map(|(p, _)| p.id)
            .collect();
        if pending.is_empty() {
            return false;
        }
        for id in pending {
            self.set_state(&id, CandidateState::Failed);
        }
        self.finish_round_if_done()
    }

    fn finish_round_if_done(&mut self) -> bool {
        if !self.round_complete() {
            return false;
        }
        let improved = match (self.best(), self.best_before_round) {
            (Some(now), Some(before)) => now < before,
            (Some(_), None) => true,
            _ => false,
        };
        self.sweep = !improved;
        true
    }

    pub fn round_complete(&self) -> bool {
        self.candidates.values().all(|(_, s)| *s != CandidateState::Pending)
    }

    /// Up to `n` answered candidates, nearest first. Includes this node when
    /// it was added as a candidate.
    pub fn closest_responded(&self, n: usize) -> Vec<Peer> {
        self.candidates.values().filter(|(_, s)| *s == CandidateState::Responded).take(n).map(|(p, _)| *p).collect()
    }
}
