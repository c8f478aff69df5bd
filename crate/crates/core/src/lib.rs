//! Whitelist-gated decentralized VPN.
//!
//! Exit nodes announce the domains they are willing to carry into a Kademlia
//! DHT. A client locates an exit without telling its relay the destination,
//! and proves in zero knowledge that the TLS handshake it tunnels targets a
//! domain the exit has whitelisted. The whole flow runs inside a
//! deterministic discrete-event network simulator.
//!
//! Modules, bottom-up:
//! - [`crypto`]: prime-order group, ElGamal, Schnorr, Pedersen, hashing.
//! - [`attest`]: encrypted-SNI ciphertexts and the attestation proof.
//! - [`dht`]: routing tables, whitelist records, iterative lookup.
//! - [`tunnel`]: per-session chain state machine and gating.
//! - [`sim`]: event loop, network builder, scenarios, metrics and benchmarks.

pub mod attest;
pub mod clock;
pub mod crypto;
pub mod dht;
pub mod par;
pub mod sim;
pub mod tunnel;
