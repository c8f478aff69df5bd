//! Everything a client needs to produce an attestation, in one encodable
//! record. This is what `attest prove` reads.

use std::sync::Arc;

use rand::{CryptoRng, Rng, RngCore};

use super::bundle::{attest_sni, AttestationBundle};
use super::statement::params_from_encoding;
use super::AttestError;
use crate::crypto::encoding::{encode_group, tags, Decoder, Encoder};
use crate::crypto::{
    elgamal_encrypt, schnorr_sign, ElGamalCiphertext, ElGamalKeypair, Element, GroupParams, SigKeypair, Signature,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProverInput {
    pub params: Arc<GroupParams>,
    pub sni: String,
    pub ephemeral: ElGamalKeypair,
    pub c_pkd: ElGamalCiphertext,
    pub sig_r: Signature,
    pub pk_r: Element,
}

impl ProverInput {
    /// A consistent input with freshly generated destination and relay
    /// keys, as a relay would hand it to a client for `sni`. Returns the
    /// destination key pair too.
    pub fn sample<R: RngCore + CryptoRng>(params: &Arc<GroupParams>, sni: Option<&str>, rng: &mut R) -> (Self, ElGamalKeypair) {
        let sni = sni.map(str::to_string).unwrap_or_else(|| format!("site{:08x}.example", rng.gen::<u32>()));
        let destination = ElGamalKeypair::generate(params, rng);
        let ephemeral = ElGamalKeypair::generate(params, rng);
        let relay = SigKeypair::generate(params, rng);
        let (c_pkd, _) = elgamal_encrypt(params, &destination.pk, &ephemeral.pk, rng);
        let sig_r = schnorr_sign(params, &c_pkd.encode(params), &relay, rng);
        let input = ProverInput { params: params.clone(), sni, ephemeral, c_pkd, sig_r, pk_r: relay.pk };
        (input, destination)
    }

    pub fn attest<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Result<AttestationBundle, AttestError> {
        let (bundle, _) = attest_sni(&self.params, &self.sni, &self.ephemeral, &self.c_pkd, &self.sig_r, &self.pk_r, rng)?;
        Ok(bundle)
    }

    pub fn encode(&self) -> Vec<u8> {
        let p = &*self.params;
        Encoder::new(tags::PROVER_INPUT)
            .bytes(&encode_group(p))
            .str(&self.sni)
            .scalar(p, &self.ephemeral.sk)
            .bytes(&self.c_pkd.encode(p))
            .bytes(&self.sig_r.encode(p))
            .element(p, &self.pk_r)
            .finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, AttestError> {
        let mut d = Decoder::new(bytes, tags::PROVER_INPUT)?;
        let params = params_from_encoding(d.bytes()?)?;
        let p = &*params;
        let sni = d.string()?;
        let ephemeral = ElGamalKeypair::from_secret(p, d.scalar(p)?);
        let c_pkd = ElGamalCiphertext::decode(p, d.bytes()?)?;
        let sig_r = Signature::decode(p, d.bytes()?)?;
        let pk_r = d.element(p)?;
        d.finish()?;
        Ok(ProverInput { params, sni, ephemeral, c_pkd, sig_r, pk_r })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{group_setup, SecurityLabel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn roundtrip_then_attest() {
        for label in [SecurityLabel::Toy, SecurityLabel::Std256] {
            let params = group_setup(label);
            let mut rng = ChaCha20Rng::seed_from_u64(3);
            let (input, _) = ProverInput::sample(&params, Some("shop.example"), &mut rng);
            let back = ProverInput::decode(&input.encode()).unwrap();
            assert_eq!(back, input);
            assert!(back.attest(&mut rng).unwrap().verify());
        }
    }

    #[test]
    fn forged_relay_signature_is_refused() {
        let params = group_setup(SecurityLabel::Std256);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let (mut input, _) = ProverInput::sample(&params, None, &mut rng);
        input.pk_r = params.random_element(&mut rng);
        assert_eq!(input.attest(&mut rng), Err(AttestError::SignatureInvalid));
    }
}
