use std::sync::Arc;

use super::sni::SniCiphertext;
use super::AttestError;
use crate::crypto::encoding::{encode_group, tags, Decoder, Encoder};
use crate::crypto::{
    group_setup, schnorr_verify, CryptoError, Element, ElGamalCiphertext, GroupParams, PedersenCommitment, Scalar,
    SecurityLabel, Signature,
};

/// Public inputs of an attestation, as received by the exit node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StatementInputs {
    pub pk_eg: Element,
    pub c_pkd: ElGamalCiphertext,
    pub sig_r: Signature,
    pub pk_r: Element,
    pub c_sni: SniCiphertext,
    pub com_e: PedersenCommitment,
    pub com_r: PedersenCommitment,
    pub com_t: PedersenCommitment,
}

/// The public statement of the attestation proof.
///
/// It holds no field that could carry the destination key, the SNI or the
/// client's ephemeral secret. A value of this type always carries a
/// signature `sig_r` that verifies over the canonical encoding of `c_pkd`
/// under `pk_r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttestationStatement {
    params: Arc<GroupParams>,
    inputs: StatementInputs,
}

/// Checks the relay signature and assembles the statement.
pub fn build_statement(params: Arc<GroupParams>, inputs: StatementInputs) -> Result<AttestationStatement, AttestError> {
    let signed = inputs.c_pkd.encode(&params);
    if !schnorr_verify(&params, &signed, &inputs.sig_r, &inputs.pk_r) {
        return Err(AttestError::SignatureInvalid);
    }
    Ok(AttestationStatement { params, inputs })
}

/// Maps an encoded group description back to one of the known parameter sets.
pub fn params_from_encoding(bytes: &[u8]) -> Result<Arc<GroupParams>, CryptoError> {
    [SecurityLabel::Toy, SecurityLabel::Std256]
        .into_iter()
        .map(group_setup)
        .find(|p| encode_group(p) == bytes)
        .ok_or(CryptoError::UnknownGroup)
}

impl AttestationStatement {
    pub fn params(&self) -> &Arc<GroupParams> {
        &self.params
    }

    pub fn inputs(&self) -> &StatementInputs {
        &self.inputs
    }

    pub fn pk_eg(&self) -> &Element {
        &self.inputs.pk_eg
    }

    pub fn c_pkd(&self) -> &ElGamalCiphertext {
        &self.inputs.c_pkd
    }

    pub fn sig_r(&self) -> &Signature {
        &self.inputs.sig_r
    }

    pub fn pk_r(&self) -> &Element {
        &self.inputs.pk_r
    }

    pub fn c_sni(&self) -> &SniCiphertext {
        &self.inputs.c_sni
    }

    pub fn com_e(&self) -> &Element {
        self.inputs.com_e.element()
    }

    pub fn com_r(&self) -> &Element {
        self.inputs.com_r.element()
    }

    pub fn com_t(&self) -> &Element {
        self.inputs.com_t.element()
    }

    /// Every group element the statement carries.
    pub fn elements(&self) -> [&Element; 9] {
        let i = &self.inputs;
        [&i.pk_eg, &i.c_pkd.c1, &i.c_pkd.c2, &i.pk_r, &i.c_sni.u, &i.c_sni.w, self.com_e(), self.com_r(), self.com_t()]
    }

    pub fn scalars(&self) -> [&Scalar; 2] {
        [&self.inputs.sig_r.challenge, &self.inputs.sig_r.response]
    }

    pub fn encode(&self) -> Vec<u8> {
        let p = &*self.params;
        let i = &self.inputs;
        Encoder::new(tags::STATEMENT)
            .bytes(&encode_group(p))
            .element(p, &i.pk_eg)
            .bytes(&i.c_pkd.encode(p))
            .bytes(&i.sig_r.encode(p))
            .element(p, &i.pk_r)
            .bytes(&i.c_sni.encode(p))
            .element(p, i.com_e.element())
            .element(p, i.com_r.element())
            .element(p, i.com_t.element())
            .finish()
    }

    /// Decodes a statement from the front of `bytes`, returning the rest.
    pub fn decode_prefix(bytes: &[u8]) -> Result<(Self, &[u8]), AttestError> {
        let mut d = Decoder::new(bytes, tags::STATEMENT)?;
        let params = params_from_encoding(d.bytes()?)?;
        let p = &*params;
        let inputs = StatementInputs {
            pk_eg: d.element(p)?,
            c_pkd: ElGamalCiphertext::decode(p, d.bytes()?)?,
            sig_r: Signature::decode(p, d.bytes()?)?,
            pk_r: d.element(p)?,
            c_sni: SniCiphertext::decode(p, d.bytes()?)?,
            com_e: PedersenCommitment(d.element(p)?),
            com_r: PedersenCommitment(d.element(p)?),
            com_t: PedersenCommitment(d.element(p)?),
        };
        let rest = d.remaining();
        Ok((build_statement(params, inputs)?, rest))
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, AttestError> {
        let (statement, rest) = Self::decode_prefix(bytes)?;
        if !rest.is_empty() {
            return Err(CryptoError::TrailingBytes(rest.len()).into());
        }
        Ok(statement)
    }
}
