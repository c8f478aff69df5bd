//! Honest random attestation instances, for tests and benchmarks.

use std::sync::Arc;

use rand::{CryptoRng, Rng, RngCore};

use super::bundle::{attest_sni, AttestationBundle};
use super::proof::AttestationWitness;
use super::statement::AttestationStatement;
use crate::crypto::{elgamal_encrypt, schnorr_sign, ElGamalKeypair, GroupParams, SigKeypair};

/// Every party's keys for one lookup-and-attest exchange.
#[derive(Clone, Debug)]
pub struct Instance {
    pub sni: String,
    pub destination: ElGamalKeypair,
    pub ephemeral: ElGamalKeypair,
    pub relay: SigKeypair,
    pub statement: AttestationStatement,
    pub witness: AttestationWitness,
    pub bundle: AttestationBundle,
}

pub fn honest_instance<R: RngCore + CryptoRng>(params: &Arc<GroupParams>, rng: &mut R) -> Instance {
    let sni = format!("site{:08x}.example", rng.gen::<u32>());
    let destination = ElGamalKeypair::generate(params, rng);
    let ephemeral = ElGamalKeypair::generate(params, rng);
    let relay = SigKeypair::generate(params, rng);
    let (c_pkd, _) = elgamal_encrypt(params, &destination.pk, &ephemeral.pk, rng);
    let sig_r = schnorr_sign(params, &c_pkd.encode(params), &relay, rng);
    let (bundle, witness) =
        attest_sni(params, &sni, &ephemeral, &c_pkd, &sig_r, &relay.pk, rng).expect("honest instance attests");
    Instance { sni, destination, ephemeral, relay, statement: bundle.statement.clone(), witness, bundle }
}
