//! Encrypted SNI as exponential ElGamal under the destination's key:
//! `u = g^r`, `w = g^m · pk_D^r` with `m = H_SNI(name)`.

use rand::{CryptoRng, RngCore};

use super::AttestError;
use crate::crypto::encoding::{tags, Decoder, Encoder};
use crate::crypto::hash::SNI_ENCODE;
use crate::crypto::{hash_to_scalar, CryptoError, Element, GroupParams, Scalar};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SniCiphertext {
    pub u: Element,
    pub w: Element,
}

impl SniCiphertext {
    pub fn encode(&self, params: &GroupParams) -> Vec<u8> {
        Encoder::new(tags::SNI_CIPHERTEXT).element(params, &self.u).element(params, &self.w).finish()
    }

    pub fn decode(params: &GroupParams, bytes: &[u8]) -> Result<Self, CryptoError> {
        let mut d = Decoder::new(bytes, tags::SNI_CIPHERTEXT)?;
        let ct = SniCiphertext { u: d.element(params)?, w: d.element(params)? };
        d.finish()?;
        Ok(ct)
    }
}

/// A ciphertext together with the secrets the prover needs later.
#[derive(Clone, Debug)]
pub struct SniEncryption {
    pub ciphertext: SniCiphertext,
    pub r: Scalar,
    pub m: Scalar,
}

/// Trims and lowercases a domain name; rejects empty names.
pub fn normalize_domain(name: &str) -> Result<String, AttestError> {
    let name = name.trim().trim_end_matches('.').to_ascii_lowercase();
    if name.is_empty() {
        return Err(AttestError::EmptyName);
    }
    Ok(name)
}

/// The exponent carried by an SNI ciphertext for `name` (already normalized).
pub fn encode_sni(params: &GroupParams, name: &str) -> Scalar {
    hash_to_scalar(params, SNI_ENCODE, name.as_bytes())
}

pub fn encrypt_sni<R: RngCore + CryptoRng>(
    params: &GroupParams,
    name: &str,
    pk_d: &Element,
    rng: &mut R,
) -> Result<SniEncryption, AttestError> {
    let name = normalize_domain(name)?;
    let m = encode_sni(params, &name);
    let r = params.random_nonzero_scalar(rng);
    let ciphertext = encrypt_sni_with(params, &m, pk_d, &r);
    Ok(SniEncryption { ciphertext, r, m })
}

pub fn encrypt_sni_with(params: &GroupParams, m: &Scalar, pk_d: &Element, r: &Scalar) -> SniCiphertext {
    SniCiphertext { u: params.g_pow(r), w: params.mul(&params.g_pow(m), &params.pow(pk_d, r)) }
}

/// Destination-side check: recovers `g^m = w · u^(-sk_D)` and returns the
/// candidate whose encoding matches, if any.
pub fn domain_decrypt_sni_check<'a, I>(params: &GroupParams, ct: &SniCiphertext, sk_d: &Scalar, candidates: I) -> Option<String>
where
    I: IntoIterator<Item = &'a str>,
{
    let g_m = params.mul(&ct.w, &params.pow(&ct.u, &params.s_neg(sk_d)));
    candidates.into_iter().find_map(|candidate| {
        let name = normalize_domain(candidate).ok()?;
        (params.g_pow(&encode_sni(params, &name)) == g_m).then_some(name)
    })
}
