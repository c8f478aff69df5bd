use rand::{CryptoRng, RngCore};

use super::encoding::{tags, Decoder, Encoder};
use super::group::{Element, GroupParams, Scalar};
use super::CryptoError;

/// ElGamal key pair, `pk = g^sk`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElGamalKeypair {
    pub sk: Scalar,
    pub pk: Element,
}

impl ElGamalKeypair {
    /// Fresh key pair with `sk` uniform in `[1, q)`.
    pub fn generate<R: RngCore + CryptoRng>(params: &GroupParams, rng: &mut R) -> Self {
        Self::from_secret(params, params.random_nonzero_scalar(rng))
    }

    pub fn from_secret(params: &GroupParams, sk: Scalar) -> Self {
        let pk = params.g_pow(&sk);
        ElGamalKeypair { sk, pk }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ElGamalCiphertext {
    pub c1: Element,
    pub c2: Element,
}

impl ElGamalCiphertext {
    /// Componentwise product; decrypts to the product of the plaintexts.
    pub fn combine(&self, params: &GroupParams, other: &Self) -> Self {
        ElGamalCiphertext { c1: params.mul(&self.c1, &other.c1), c2: params.mul(&self.c2, &other.c2) }
    }

    pub fn encode(&self, params: &GroupParams) -> Vec<u8> {
        Encoder::new(tags::ELGAMAL_CIPHERTEXT).element(params, &self.c1).element(params, &self.c2).finish()
    }

    pub fn decode(params: &GroupParams, bytes: &[u8]) -> Result<Self, CryptoError> {
        let mut d = Decoder::new(bytes, tags::ELGAMAL_CIPHERTEXT)?;
        let ct = ElGamalCiphertext { c1: d.element(params)?, c2: d.element(params)? };
        d.finish()?;
        Ok(ct)
    }
}

/// Encrypts `m` under `pk`, returning the randomness as well for callers
/// that need it as a witness.
pub fn elgamal_encrypt<R: RngCore + CryptoRng>(
    params: &GroupParams,
    m: &Element,
    pk: &Element,
    rng: &mut R,
) -> (ElGamalCiphertext, Scalar) {
    let s = params.random_nonzero_scalar(rng);
    (elgamal_encrypt_with(params, m, pk, &s), s)
}

/// `(g^s, m · pk^s)` for caller-chosen `s`.
pub fn elgamal_encrypt_with(params: &GroupParams, m: &Element, pk: &Element, s: &Scalar) -> ElGamalCiphertext {
    ElGamalCiphertext { c1: params.g_pow(s), c2: params.mul(m, &params.pow(pk, s)) }
}

/// `c2 · c1^(-sk)`.
pub fn elgamal_decrypt(params: &GroupParams, ct: &ElGamalCiphertext, sk: &Scalar) -> Element {
    params.mul(&ct.c2, &params.pow(&ct.c1, &params.s_neg(sk)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::group::{group_setup, SecurityLabel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn toy_vectors() {
        let params = group_setup(SecurityLabel::Toy);
        let kp = ElGamalKeypair::from_secret(&params, params.scalar_from_u64(3));
        assert_eq!(kp.pk.value(), &8u32.into());

        let m = params.element(4u32.into()).unwrap();
        let ct = elgamal_encrypt_with(&params, &m, &kp.pk, &params.scalar_from_u64(2));
        // (2^2, 4 · 8^2) mod 23 = (4, 3)
        assert_eq!(ct.c1.value(), &4u32.into());
        assert_eq!(ct.c2.value(), &3u32.into());
        assert_eq!(elgamal_decrypt(&params, &ct, &kp.sk), m);
    }

    #[test]
    fn zero_randomness_leaves_message_in_the_clear() {
        let params = group_setup(SecurityLabel::Toy);
        let m = params.element(9u32.into()).unwrap();
        let ct = elgamal_encrypt_with(&params, &m, &params.element(8u32.into()).unwrap(), &params.scalar_from_u64(0));
        assert!(ct.c1.is_identity());
        assert_eq!(ct.c2, m);
        for sk in 0..11 {
            assert_eq!(elgamal_decrypt(&params, &ct, &params.scalar_from_u64(sk)), m);
        }
    }

    #[test]
    fn keygen_is_in_subgroup_and_nonzero() {
        let params = group_setup(SecurityLabel::Toy);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..200 {
            let kp = ElGamalKeypair::generate(&params, &mut rng);
            assert!(!kp.sk.is_zero());
            assert!(params.is_member(kp.pk.value()));
        }
    }

    #[test]
    fn std256_secrets_do_not_repeat() {
        let params = group_setup(SecurityLabel::Std256);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..1000 {
            assert!(seen.insert(params.random_nonzero_scalar(&mut rng)));
        }
    }

    #[test]
    fn homomorphism() {
        let params = group_setup(SecurityLabel::Std256);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let kp = ElGamalKeypair::generate(&params, &mut rng);
        let m1 = params.random_element(&mut rng);
        let m2 = params.random_element(&mut rng);
        let (c1, _) = elgamal_encrypt(&params, &m1, &kp.pk, &mut rng);
        let (c2, _) = elgamal_encrypt(&params, &m2, &kp.pk, &mut rng);
        let product = c1.combine(&params, &c2);
        assert_eq!(elgamal_decrypt(&params, &product, &kp.sk), params.mul(&m1, &m2));
    }

    #[test]
    fn ciphertext_encoding_roundtrip() {
        let params = group_setup(SecurityLabel::Std256);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let kp = ElGamalKeypair::generate(&params, &mut rng);
        let (ct, _) = elgamal_encrypt(&params, &params.random_element(&mut rng), &kp.pk, &mut rng);
        let bytes = ct.encode(&params);
        assert_eq!(bytes.len(), 1 + 2 * (4 + 256));
        assert_eq!(ElGamalCiphertext::decode(&params, &bytes).unwrap(), ct);
    }
}
