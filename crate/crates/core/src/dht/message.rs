//! DHT wire messages.

use super::id::{KeyRegion, NodeAddr, NodeId, REGION_LEN};
use super::routing::Peer;
use crate::clock::SimTime;
use crate::crypto::encoding::{Decoder, Encoder};
use crate::crypto::{CryptoError, ElGamalCiphertext, Element, GroupParams, Signature};

pub mod tags {
    pub const PING: u8 = 0x01;
    pub const STORE: u8 = 0x02;
    pub const FIND_NODE: u8 = 0x03;
    pub const FIND_VALUE: u8 = 0x04;
    pub const VALUE_RESPONSE: u8 = 0x05;
    pub const NOTIFY_A: u8 = 0x06;
    pub const NODES: u8 = 0x07;
    pub const NOT_FOUND: u8 = 0x08;
    pub const PONG: u8 = 0x09;
}

/// Reply to a value request, delivered to the request's `reply_to`. It
/// carries neither the key nor the plaintext domain key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueResponse {
    pub token: u64,
    pub provider: NodeAddr,
    pub c_pkd: ElGamalCiphertext,
    pub sig_r: Signature,
    pub pk_r: Element,
}

/// Tells a provider which relay key to expect in attestations, and until when.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NotifyA {
    pub pk_r: Element,
    pub valid_until: SimTime,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Ping { sender: NodeId },
    Pong { sender: NodeId },
    Store { sender: NodeId, key: NodeId, provider: NodeAddr, pk_d: Element, expires_at: SimTime },
    FindNode { sender: NodeId, lookup: u64, target: NodeId },
    Nodes { sender: NodeId, lookup: u64, peers: Vec<Peer> },
    /// Terminal lookup request. Names the relay as `reply_to` and carries
    /// no identifier or address of the requester.
    FindValue { region: KeyRegion, reply_to: NodeAddr, pk_eg: Element, token: u64 },
    ValueResponse(ValueResponse),
    NotFound { token: u64 },
    NotifyA(NotifyA),
}

fn peer_bytes(p: &Peer) -> [u8; 36] {
    let mut out = [0u8; 36];
    out[..32].copy_from_slice(p.id.as_bytes());
    out[32..].copy_from_slice(&p.addr.0.to_be_bytes());
    out
}

fn node_id(d: &mut Decoder<'_>) -> Result<NodeId, CryptoError> {
    let b = d.bytes()?;
    NodeId::from_slice(b).ok_or(CryptoError::BadLength { expected: 32, found: b.len() })
}

impl Message {
    pub fn tag(&self) -> u8 {
        match self {
            Message::Ping { .. } => tags::PING,
            Message::Pong { .. } => tags::PONG,
            Message::Store { .. } => tags::STORE,
            Message::FindNode { .. } => tags::FIND_NODE,
            Message::Nodes { .. } => tags::NODES,
            Message::FindValue { .. } => tags::FIND_VALUE,
            Message::ValueResponse(_) => tags::VALUE_RESPONSE,
            Message::NotFound { .. } => tags::NOT_FOUND,
            Message::NotifyA(_) => tags::NOTIFY_A,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Message::Ping { .. } => "PING",
            Message::Pong { .. } => "PONG",
            Message::Store { .. } => "STORE",
            Message::FindNode { .. } => "FIND_NODE",
            Message::Nodes { .. } => "NODES",
            Message::FindValue { .. } => "FIND_VALUE",
            Message::ValueResponse(_) => "VALUE_RESPONSE",
            Message::NotFound { .. } => "NOT_FOUND",
            Message::NotifyA(_) => "NOTIFY_A",
        }
    }

    pub fn encode(&self, params: &GroupParams) -> Vec<u8> {
        let enc = Encoder::new(self.tag());
        match self {
            Message::Ping { sender } | Message::Pong { sender } => enc.bytes(sender.as_bytes()),
            Message::Store { sender, key, provider, pk_d, expires_at } => enc
                .bytes(sender.as_bytes())
                .bytes(key.as_bytes())
                .u32(provider.0)
                .element(params, pk_d)
                .u64(expires_at.as_micros()),
            Message::FindNode { sender, lookup, target } => {
                enc.bytes(sender.as_bytes()).u64(*lookup).bytes(target.as_bytes())
            }
            Message::Nodes { sender, lookup, peers } => {
                peers.iter().fold(enc.bytes(sender.as_bytes()).u64(*lookup), |enc, p| enc.bytes(&peer_bytes(p)))
            }
            Message::FindValue { region, reply_to, pk_eg, token } => {
                enc.bytes(&region.0).u32(reply_to.0).element(params, pk_eg).u64(*token)
            }
            Message::ValueResponse(r) => enc
                .u64(r.token)
                .u32(r.provider.0)
                .bytes(&r.c_pkd.encode(params))
                .bytes(&r.sig_r.encode(params))
                .element(params, &r.pk_r),
            Message::NotFound { token } => enc.u64(*token),
            Message::NotifyA(n) => enc.element(params, &n.pk_r).u64(n.valid_until.as_micros()),
        }
        .finish()
    }

    pub fn decode(params: &GroupParams, bytes: &[u8]) -> Result<Self, CryptoError> {
        let tag = Decoder::tag_of(bytes)?;
        let mut d = Decoder::new(bytes, tag)?;
        let msg = match tag {
            tags::PING => Message::Ping { sender: node_id(&mut d)? },
            tags::PONG => Message::Pong { sender: node_id(&mut d)? },
            tags::STORE => Message::Store {
                sender: node_id(&mut d)?,
                key: node_id(&mut d)?,
                provider: NodeAddr(d.u32()?),
                pk_d: d.element(params)?,
                expires_at: SimTime(d.u64()?),
            },
            tags::FIND_NODE => Message::FindNode { sender: node_id(&mut d)?, lookup: d.u64()?, target: node_id(&mut d)? },
            tags::NODES => {
                let sender = node_id(&mut d)?;
                let lookup = d.u64()?;
                let mut peers = Vec::new();
                while !d.is_empty() {
                    let b = d.bytes()?;
                    if b.len() != 36 {
                        return Err(CryptoError::BadLength { expected: 36, found: b.len() });
                    }
                    peers.push(Peer {
                        id: NodeId::from_slice(&b[..32]).expect("32 bytes"),
                        addr: NodeAddr(u32::from_be_bytes(b[32..].try_into().expect("4 bytes"))),
                    });
                }
                return Ok(Message::Nodes { sender, lookup, peers });
            }
            tags::FIND_VALUE => {
                let r = d.bytes()?;
                let region: [u8; REGION_LEN] =
                    r.try_into().map_err(|_| CryptoError::BadLength { expected: REGION_LEN, found: r.len() })?;
                Message::FindValue {
                    region: KeyRegion(region),
                    reply_to: NodeAddr(d.u32()?),
                    pk_eg: d.element(params)?,
                    token: d.u64()?,
                }
            }
            tags::VALUE_RESPONSE => Message::ValueResponse(ValueResponse {
                token: d.u64()?,
                provider: NodeAddr(d.u32()?),
                c_pkd: ElGamalCiphertext::decode(params, d.bytes()?)?,
                sig_r: Signature::decode(params, d.bytes()?)?,
                pk_r: d.element(params)?,
            }),
            tags::NOT_FOUND => Message::NotFound { token: d.u64()? },
            tags::NOTIFY_A => Message::NotifyA(NotifyA { pk_r: d.element(params)?, valid_until: SimTime(d.u64()?) }),
            other => return Err(CryptoError::UnknownTag(other)),
        };
        d.finish()?;
        Ok(msg)
    }
}
