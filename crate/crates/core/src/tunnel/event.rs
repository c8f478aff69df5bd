use crate::attest::{AttestError, AttestationBundle, SniCiphertext};
use crate::crypto::encoding::{Decoder, Encoder};
use crate::crypto::{CryptoError, GroupParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HandshakeKind {
    ClientHello,
    ServerHello,
    TcpRst,
    AppData,
}

impl HandshakeKind {
    pub fn code(self) -> u32 {
        match self {
            HandshakeKind::ClientHello => 1,
            HandshakeKind::ServerHello => 2,
            HandshakeKind::TcpRst => 3,
            HandshakeKind::AppData => 4,
        }
    }

    pub fn from_code(code: u32) -> Result<Self, CryptoError> {
        Ok(match code {
            1 => HandshakeKind::ClientHello,
            2 => HandshakeKind::ServerHello,
            3 => HandshakeKind::TcpRst,
            4 => HandshakeKind::AppData,
            _ => return Err(CryptoError::OutOfRange),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HandshakeKind::ClientHello => "ClientHello",
            HandshakeKind::ServerHello => "ServerHello",
            HandshakeKind::TcpRst => "TcpRst",
            HandshakeKind::AppData => "AppData",
        }
    }
}

/// One TLS/TCP-level event of the client's connection. The payload is
/// opaque to relays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HandshakeEvent {
    pub kind: HandshakeKind,
    pub payload: Vec<u8>,
}

pub const CLIENT_HELLO_TAG: u8 = 0x2f;

/// ClientHello contents: the encrypted SNI and, after the splice, the
/// attestation. There is no plaintext server name field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClientHello {
    pub c_sni: SniCiphertext,
    pub bundle: Option<AttestationBundle>,
}

impl ClientHello {
    pub fn encode(&self, params: &GroupParams) -> Vec<u8> {
        let enc = Encoder::new(CLIENT_HELLO_TAG).bytes(&self.c_sni.encode(params));
        match &self.bundle {
            Some(b) => enc.bytes(&b.encode()),
            None => enc,
        }
        .finish()
    }

    pub fn decode(params: &GroupParams, bytes: &[u8]) -> Result<Self, AttestError> {
        let mut d = Decoder::new(bytes, CLIENT_HELLO_TAG)?;
        let c_sni = SniCiphertext::decode(params, d.bytes()?)?;
        let bundle = if d.is_empty() { None } else { Some(AttestationBundle::decode(d.bytes()?)?) };
        d.finish()?;
        Ok(ClientHello { c_sni, bundle })
    }

    /// The same hello without the attestation, as the exit forwards it.
    pub fn stripped(&self) -> ClientHello {
        ClientHello { c_sni: self.c_sni.clone(), bundle: None }
    }
}

impl HandshakeEvent {
    pub fn client_hello(params: &GroupParams, hello: &ClientHello) -> Self {
        HandshakeEvent { kind: HandshakeKind::ClientHello, payload: hello.encode(params) }
    }
}
