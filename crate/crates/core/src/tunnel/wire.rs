//! Tunnel-level wire messages between client, relay, exit and destination.

use super::event::{HandshakeEvent, HandshakeKind};
use crate::crypto::encoding::{Decoder, Encoder};
use crate::crypto::{CryptoError, ElGamalCiphertext, Element, GroupParams, Signature};
use crate::dht::NodeAddr;

pub mod tags {
    /// Client traffic on a tunnel leg (S↔X, X↔A).
    pub const TUNNEL_DATA: u8 = 0x20;
    /// Connection traffic between an exit point and the destination.
    pub const FLOW: u8 = 0x21;
    pub const LOOKUP_INFO: u8 = 0x22;
    pub const EXIT_OPEN: u8 = 0x23;
    pub const EXIT_REPLY: u8 = 0x24;
    pub const GATE_RESULT: u8 = 0x25;
    pub const TEARDOWN: u8 = 0x26;
    pub const TUNNEL_OPEN: u8 = 0x27;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TunnelMsg {
    /// Client opens the temporary tunnel; the relay learns where to send traffic.
    Open { session: u64, destination: NodeAddr },
    Data { session: u64, event: HandshakeEvent },
    Flow { session: u64, event: HandshakeEvent },
    /// What the relay learned from the lookup, passed to the client.
    LookupInfo { session: u64, provider: NodeAddr, c_pkd: ElGamalCiphertext, sig_r: Signature, pk_r: Element },
    ExitOpen { session: u64, destination: NodeAddr },
    ExitReply { session: u64, accepted: bool },
    GateResult { session: u64, authorized: bool },
    Teardown { session: u64 },
}

fn event_fields(enc: Encoder, e: &HandshakeEvent) -> Encoder {
    enc.u32(e.kind.code()).bytes(&e.payload)
}

fn read_event(d: &mut Decoder<'_>) -> Result<HandshakeEvent, CryptoError> {
    let kind = HandshakeKind::from_code(d.u32()?)?;
    Ok(HandshakeEvent { kind, payload: d.bytes()?.to_vec() })
}

fn read_bool(d: &mut Decoder<'_>) -> Result<bool, CryptoError> {
    match d.u32()? {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(CryptoError::OutOfRange),
    }
}

impl TunnelMsg {
    pub fn session(&self) -> u64 {
        match self {
            TunnelMsg::Open { session, .. }
            | TunnelMsg::Data { session, .. }
            | TunnelMsg::Flow { session, .. }
            | TunnelMsg::LookupInfo { session, .. }
            | TunnelMsg::ExitOpen { session, .. }
            | TunnelMsg::ExitReply { session, .. }
            | TunnelMsg::GateResult { session, .. }
            | TunnelMsg::Teardown { session } => *session,
        }
    }

    pub fn tag(&self) -> u8 {
        match self {
            TunnelMsg::Open { .. } => tags::TUNNEL_OPEN,
            TunnelMsg::Data { .. } => tags::TUNNEL_DATA,
            TunnelMsg::Flow { .. } => tags::FLOW,
            TunnelMsg::LookupInfo { .. } => tags::LOOKUP_INFO,
            TunnelMsg::ExitOpen { .. } => tags::EXIT_OPEN,
            TunnelMsg::ExitReply { .. } => tags::EXIT_REPLY,
            TunnelMsg::GateResult { .. } => tags::GATE_RESULT,
            TunnelMsg::Teardown { .. } => tags::TEARDOWN,
        }
    }

    /// Event-log label: the handshake kind for traffic, the message name otherwise.
    pub fn kind(&self) -> &'static str {
        match self {
            TunnelMsg::Data { event, .. } | TunnelMsg::Flow { event, .. } => event.kind.as_str(),
            TunnelMsg::Open { .. } => "TUNNEL_OPEN",
            TunnelMsg::LookupInfo { .. } => "LOOKUP_INFO",
            TunnelMsg::ExitOpen { .. } => "EXIT_OPEN",
            TunnelMsg::ExitReply { .. } => "EXIT_REPLY",
            TunnelMsg::GateResult { .. } => "GATE_RESULT",
            TunnelMsg::Teardown { .. } => "TEARDOWN",
        }
    }

    pub fn encode(&self, params: &GroupParams) -> Vec<u8> {
        let enc = Encoder::new(self.tag()).u64(self.session());
        match self {
            TunnelMsg::Data { event, .. } | TunnelMsg::Flow { event, .. } => event_fields(enc, event),
            TunnelMsg::LookupInfo { provider, c_pkd, sig_r, pk_r, .. } => enc
                .u32(provider.0)
                .bytes(&c_pkd.encode(params))
                .bytes(&sig_r.encode(params))
                .element(params, pk_r),
            TunnelMsg::Open { destination, .. } | TunnelMsg::ExitOpen { destination, .. } => enc.u32(destination.0),
            TunnelMsg::ExitReply { accepted: flag, .. } | TunnelMsg::GateResult { authorized: flag, .. } => {
                enc.u32(u32::from(*flag))
            }
            TunnelMsg::Teardown { .. } => enc,
        }
        .finish()
    }

    pub fn decode(params: &GroupParams, bytes: &[u8]) -> Result<Self, CryptoError> {
        let tag = Decoder::tag_of(bytes)?;
        let mut d = Decoder::new(bytes, tag)?;
        let session = d.u64()?;
        let msg = match tag {
            tags::TUNNEL_DATA => TunnelMsg::Data { session, event: read_event(&mut d)? },
            tags::FLOW => TunnelMsg::Flow { session, event: read_event(&mut d)? },
            tags::LOOKUP_INFO => TunnelMsg::LookupInfo {
                session,
                provider: NodeAddr(d.u32()?),
                c_pkd: ElGamalCiphertext::decode(params, d.bytes()?)?,
                sig_r: Signature::decode(params, d.bytes()?)?,
                pk_r: d.element(params)?,
            },
            tags::TUNNEL_OPEN => TunnelMsg::Open { session, destination: NodeAddr(d.u32()?) },
            tags::EXIT_OPEN => TunnelMsg::ExitOpen { session, destination: NodeAddr(d.u32()?) },
            tags::EXIT_REPLY => TunnelMsg::ExitReply { session, accepted: read_bool(&mut d)? },
            tags::GATE_RESULT => TunnelMsg::GateResult { session, authorized: read_bool(&mut d)? },
            tags::TEARDOWN => TunnelMsg::Teardown { session },
            other => return Err(CryptoError::UnknownTag(other)),
        };
        d.finish()?;
        Ok(msg)
    }
}
