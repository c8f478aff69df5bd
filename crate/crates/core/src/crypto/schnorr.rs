//! Schnorr signatures over the same group, in (challenge, response) form.
//!
//! `sign`: `R = g^k`, `c = H(group ‖ pk ‖ R ‖ msg)`, `s = k + c·sk`.
//! `verify`: recompute `R' = g^s · pk^(-c)` and accept iff `H(group ‖ pk ‖ R' ‖ msg) = c`.

use rand::{CryptoRng, RngCore};

use super::encoding::{encode_group, tags, Decoder, Encoder};
use super::group::{Element, GroupParams, Scalar};
use super::hash::{hash_to_scalar, SCHNORR_SIG};
use super::CryptoError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigKeypair {
    pub sk: Scalar,
    pub pk: Element,
}

impl SigKeypair {
    pub fn generate<R: RngCore + CryptoRng>(params: &GroupParams, rng: &mut R) -> Self {
        Self::from_secret(params, params.random_nonzero_scalar(rng))
    }

    pub fn from_secret(params: &GroupParams, sk: Scalar) -> Self {
        let pk = params.g_pow(&sk);
        SigKeypair { sk, pk }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    pub challenge: Scalar,
    pub response: Scalar,
}

impl Signature {
    pub fn encode(&self, params: &GroupParams) -> Vec<u8> {
        Encoder::new(tags::SIGNATURE).scalar(params, &self.challenge).scalar(params, &self.response).finish()
    }

    pub fn decode(params: &GroupParams, bytes: &[u8]) -> Result<Self, CryptoError> {
        let mut d = Decoder::new(bytes, tags::SIGNATURE)?;
        let sig = Signature { challenge: d.scalar(params)?, response: d.scalar(params)? };
        d.finish()?;
        Ok(sig)
    }
}

fn challenge(params: &GroupParams, pk: &Element, nonce_commitment: &Element, msg: &[u8]) -> Scalar {
    let transcript = Encoder::new(tags::SCHNORR_TRANSCRIPT)
        .bytes(&encode_group(params))
        .element(params, pk)
        .element(params, nonce_commitment)
        .bytes(msg)
        .finish();
    hash_to_scalar(params, SCHNORR_SIG, &transcript)
}

pub fn schnorr_sign<R: RngCore + CryptoRng>(
    params: &GroupParams,
    msg: &[u8],
    keys: &SigKeypair,
    rng: &mut R,
) -> Signature {
    let k = params.random_nonzero_scalar(rng);
    schnorr_sign_with_nonce(params, msg, keys, &k)
}

/// Deterministic variant for test vectors. Reusing `k` across messages leaks the key.
pub fn schnorr_sign_with_nonce(params: &GroupParams, msg: &[u8], keys: &SigKeypair, k: &Scalar) -> Signature {
    let r = params.g_pow(k);
    let c = challenge(params, &keys.pk, &r, msg);
    let response = params.s_add(k, &params.s_mul(&c, &keys.sk));
    Signature { challenge: c, response }
}

pub fn schnorr_verify(params: &GroupParams, msg: &[u8], sig: &Signature, pk: &Element) -> bool {
    let r = params.mul(&params.g_pow(&sig.response), &params.pow(pk, &params.s_neg(&sig.challenge)));
    challenge(params, pk, &r, msg) == sig.challenge
}
