use std::collections::VecDeque;

use super::id::{NodeAddr, NodeId};
use crate::clock::SimTime;

/// A peer as carried in lookup replies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Peer {
    pub id: NodeId,
    pub addr: NodeAddr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Contact {
    pub peer: Peer,
    pub last_seen: SimTime,
}

/// 256 k-buckets, most recently seen contact at the front of each.
#[derive(Clone, Debug)]
pub struct RoutingTable {
    own: NodeId,
    k: usize,
    buckets: Vec<VecDeque<Contact>>,
}

impl RoutingTable {
    pub fn new(own: NodeId, k: usize) -> Self {
        RoutingTable { own, k, buckets: vec![VecDeque::new(); 256] }
    }

    pub fn own_id(&self) -> NodeId {
        self.own
    }

    /// Inserts or refreshes `peer`. A full bucket drops its stalest contact.
    pub fn update(&mut self, peer: Peer, now: SimTime) {
        let Some(index) = self.own.bucket_index(&peer.id) else { return };
        let bucket = &mut self.buckets[index];
        if let Some(pos) = bucket.iter().position(|c| c.peer.id == peer.id) {
            bucket.remove(pos);
        } else if bucket.len() >= self.k {
            bucket.pop_back();
        }
        bucket.push_front(Contact { peer, last_seen: now });
    }

    pub fn remove(&mut self, id: &NodeId) {
        if let Some(index) = self.own.bucket_index(id) {
            self.buckets[index].retain(|c| c.peer.id != *id);
        }
    }

    pub fn get(&self, id: &NodeId) -> Option<&Contact> {
        let index = self.own.bucket_index(id)?;
        self.buckets[index].iter().find(|c| c.peer.id == *id)
    }

    pub fn len(&self) -> usize {
        self.buckets.iter().map(VecDeque::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.iter().all(VecDeque::is_empty)
    }

    pub fn bucket(&self, index: usize) -> &VecDeque<Contact> {
        &self.buckets[index]
    }

    pub fn contacts(&self) -> impl Iterator<Item = &Contact> {
        self.buckets.iter().flatten()
    }

    /// Up to `n` known peers, nearest to `target` first.
    pub fn closest(&self, target: &NodeId, n: usize) -> Vec<Peer> {
        let mut peers: Vec<Peer> = self.contacts().map(|c| c.peer).collect();
        peers.sort_by_key(|p| p.id.distance(target));
        peers.truncate(n);
        peers
    }
}
