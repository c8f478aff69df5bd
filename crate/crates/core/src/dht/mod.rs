//! Kademlia DHT holding whitelist entries keyed by hashed domain name.
//!
//! Nodes are passive state machines: every handler returns the messages
//! and timers it wants, and the simulator's event loop delivers them.

pub mod id;
pub mod lookup;
pub mod message;
pub mod node;
pub mod routing;
pub mod store;

use crate::clock::SimTime;

pub use id::{Distance, KeyRegion, NodeAddr, NodeId};
pub use lookup::{Lookup, LookupStatus};
pub use message::{Message, NotifyA, ValueResponse};
pub use node::{DhtNode, LookupReport, Output, Purpose};
pub use routing::{Contact, Peer, RoutingTable};
pub use store::{respond_value, Store, StoreError, ValueReply, WhitelistEntry};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DhtConfig {
    /// Bucket capacity and lookup width.
    pub k: usize,
    /// Queries per lookup round.
    pub alpha: usize,
    /// Replicas per stored entry.
    pub r_rep: usize,
    pub ttl: SimTime,
    pub max_rounds: u32,
    /// How long a provider trusts a notified relay key.
    pub notify_window: SimTime,
    /// How long a lookup round waits for its replies.
    pub round_timeout: SimTime,
}

impl Default for DhtConfig {
    fn default() -> Self {
        DhtConfig {
            k: 8,
            alpha: 3,
            r_rep: 3,
            ttl: SimTime::from_secs(1800),
            max_rounds: 32,
            notify_window: SimTime::from_secs(120),
            round_timeout: SimTime::from_secs(1),
        }
    }
}
