//! Session chain S→X→A: temporary tunnel, lookup, splice, forced
//! re-handshake and the exit's gate on the attestation.

pub mod event;
pub mod gate;
pub mod state;
pub mod wire;

use thiserror::Error;

use crate::dht::NodeAddr;

pub use event::{ClientHello, HandshakeEvent, HandshakeKind};
pub use gate::{gate, gate_bytes, GateOutcome, NotifiedKeys};
pub use state::{start_session, ChainState, InterruptReason, Phase, WindowDecision};
pub use wire::TunnelMsg;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TunnelError {
    #[error("relay {0} is unreachable")]
    Unreachable(NodeAddr),
    #[error("illegal transition {from} -> {to}")]
    IllegalTransition { from: Phase, to: Phase },
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
}
