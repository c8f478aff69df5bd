use std::sync::Arc;

use rand::{CryptoRng, RngCore};

use super::proof::{prove, verify, AttestationWitness, Proof};
use super::sni::encrypt_sni;
use super::statement::{build_statement, AttestationStatement, StatementInputs};
use super::AttestError;
use crate::crypto::{elgamal_decrypt, pedersen_commit, ElGamalCiphertext, ElGamalKeypair, Element, GroupParams, Signature};

/// Statement and proof as carried in a re-handshake ClientHello.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttestationBundle {
    pub statement: AttestationStatement,
    pub proof: Proof,
}

impl AttestationBundle {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.statement.encode();
        out.extend(self.proof.encode(self.statement.params()));
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, AttestError> {
        let (statement, rest) = AttestationStatement::decode_prefix(bytes)?;
        let proof = Proof::decode(statement.params(), rest)?;
        Ok(AttestationBundle { statement, proof })
    }

    pub fn verify(&self) -> bool {
        verify(&self.statement, &self.proof)
    }
}

/// Client side of the attestation: recovers the destination key from the
/// relay's ciphertext, encrypts `sni` under it with fresh randomness,
/// commits to the exponents and proves the statement. Returns the witness
/// alongside the bundle.
pub fn attest_sni<R: RngCore + CryptoRng>(
    params: &Arc<GroupParams>,
    sni: &str,
    ephemeral: &ElGamalKeypair,
    c_pkd: &ElGamalCiphertext,
    sig_r: &Signature,
    pk_r: &Element,
    rng: &mut R,
) -> Result<(AttestationBundle, AttestationWitness), AttestError> {
    let pk_d = elgamal_decrypt(params, c_pkd, &ephemeral.sk);
    attest_sni_under(params, sni, &pk_d, ephemeral, c_pkd, sig_r, pk_r, rng)
}

/// As [`attest_sni`], with the SNI encrypted under `pk_sni` instead of the
/// key inside `c_pkd`. Proving fails unless the two keys agree.
#[allow(clippy::too_many_arguments)]
pub fn attest_sni_under<R: RngCore + CryptoRng>(
    params: &Arc<GroupParams>,
    sni: &str,
    pk_sni: &Element,
    ephemeral: &ElGamalKeypair,
    c_pkd: &ElGamalCiphertext,
    sig_r: &Signature,
    pk_r: &Element,
    rng: &mut R,
) -> Result<(AttestationBundle, AttestationWitness), AttestError> {
    let enc = encrypt_sni(params, sni, pk_sni, rng)?;
    let witness = AttestationWitness {
        e: ephemeral.sk.clone(),
        r: enc.r,
        m: enc.m,
        alpha: params.random_scalar(rng),
        beta: params.random_scalar(rng),
        gamma: params.random_scalar(rng),
    };
    let t = params.s_mul(&witness.e, &witness.r);
    let inputs = StatementInputs {
        pk_eg: ephemeral.pk.clone(),
        c_pkd: c_pkd.clone(),
        sig_r: sig_r.clone(),
        pk_r: pk_r.clone(),
        c_sni: enc.ciphertext,
        com_e: pedersen_commit(params, &witness.e, &witness.alpha),
        com_r: pedersen_commit(params, &witness.r, &witness.beta),
        com_t: pedersen_commit(params, &t, &witness.gamma),
    };
    let statement = build_statement(params.clone(), inputs)?;
    let proof = prove(&statement, &witness, rng)?;
    Ok((AttestationBundle { statement, proof }, witness))
}
