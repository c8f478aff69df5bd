//! AND-composed sigma protocol for the attestation statement, made
//! non-interactive with a Fiat–Shamir challenge.
//!
//! Relations proven, for public `(pk_EG, C_pkD = (c1, c2), C_SNI = (u, w),
//! Com_e, Com_r, Com_t)`:
//!
//! ```text
//! A1: g^e = pk_EG
//! A2: g^r = u
//! A3: g^m · c2^r · c1^(-t) = w
//! A4: g^e · h^α = Com_e
//! A5: g^r · h^β = Com_r
//! A6: g^t · h^γ = Com_t
//! A7: Com_r^e · h^δ = Com_t
//! ```
//!
//! A5..A7 force `t = e·r`, which turns A3 into `w = g^m · (c2 · c1^(-e))^r`.

use rand::{CryptoRng, RngCore};

use super::statement::AttestationStatement;
use super::AttestError;
use crate::crypto::encoding::{tags, Decoder, Encoder};
use crate::crypto::hash::FS_CHALLENGE;
use crate::crypto::{hash_to_scalar, CryptoError, Element, GroupParams, Scalar};

/// Secrets behind a statement: the client's ephemeral ElGamal key `e`, the
/// SNI randomness `r`, the encoded SNI `m` and the commitment blindings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttestationWitness {
    pub e: Scalar,
    pub r: Scalar,
    pub m: Scalar,
    pub alpha: Scalar,
    pub beta: Scalar,
    pub gamma: Scalar,
}

/// One scalar per exponent of the protocol. Used for the extended witness,
/// the nonces and the responses alike.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exponents {
    pub e: Scalar,
    pub r: Scalar,
    pub m: Scalar,
    pub t: Scalar,
    pub alpha: Scalar,
    pub beta: Scalar,
    pub gamma: Scalar,
    pub delta: Scalar,
}

impl Exponents {
    pub fn random<R: RngCore + CryptoRng>(params: &GroupParams, rng: &mut R) -> Self {
        let mut next = || params.random_scalar(rng);
        Exponents {
            e: next(),
            r: next(),
            m: next(),
            t: next(),
            alpha: next(),
            beta: next(),
            gamma: next(),
            delta: next(),
        }
    }

    pub fn to_array(&self) -> [&Scalar; 8] {
        [&self.e, &self.r, &self.m, &self.t, &self.alpha, &self.beta, &self.gamma, &self.delta]
    }

    fn from_array([e, r, m, t, alpha, beta, gamma, delta]: [Scalar; 8]) -> Self {
        Exponents { e, r, m, t, alpha, beta, gamma, delta }
    }
}

impl AttestationWitness {
    /// Adds the derived exponents `t = e·r` and `δ = γ − e·β`.
    pub fn extend(&self, params: &GroupParams) -> Exponents {
        let t = params.s_mul(&self.e, &self.r);
        let delta = params.s_sub(&self.gamma, &params.s_mul(&self.e, &self.beta));
        Exponents {
            e: self.e.clone(),
            r: self.r.clone(),
            m: self.m.clone(),
            t,
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            gamma: self.gamma.clone(),
            delta,
        }
    }
}

pub type Announcements = [Element; 7];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Proof {
    pub announcements: Announcements,
    pub responses: Exponents,
}

impl Proof {
    pub fn encode(&self, params: &GroupParams) -> Vec<u8> {
        let enc = self.announcements.iter().fold(Encoder::new(tags::PROOF), |enc, a| enc.element(params, a));
        self.responses.to_array().into_iter().fold(enc, |enc, z| enc.scalar(params, z)).finish()
    }

    pub fn decode(params: &GroupParams, bytes: &[u8]) -> Result<Self, CryptoError> {
        let mut d = Decoder::new(bytes, tags::PROOF)?;
        let mut announcements = Vec::with_capacity(7);
        for _ in 0..7 {
            announcements.push(d.element(params)?);
        }
        let mut responses = Vec::with_capacity(8);
        for _ in 0..8 {
            responses.push(d.scalar(params)?);
        }
        d.finish()?;
        Ok(Proof {
            announcements: announcements.try_into().expect("seven announcements"),
            responses: Exponents::from_array(responses.try_into().expect("eight responses")),
        })
    }
}

/// The seven bases each relation is checked against, in announcement order,
/// as `(lhs terms, public value)`.
fn relations<'a>(st: &'a AttestationStatement, z: &'a Exponents, neg_zt: &'a Scalar) -> [(Vec<(&'a Element, &'a Scalar)>, &'a Element); 7] {
    let p = st.params();
    let (g, h) = (p.generator(), p.second_generator());
    let c_pkd = st.c_pkd();
    let c_sni = st.c_sni();
    [
        (vec![(g, &z.e)], st.pk_eg()),
        (vec![(g, &z.r)], &c_sni.u),
        (vec![(g, &z.m), (&c_pkd.c2, &z.r), (&c_pkd.c1, neg_zt)], &c_sni.w),
        (vec![(g, &z.e), (h, &z.alpha)], st.com_e()),
        (vec![(g, &z.r), (h, &z.beta)], st.com_r()),
        (vec![(g, &z.t), (h, &z.gamma)], st.com_t()),
        (vec![(st.com_r(), &z.e), (h, &z.delta)], st.com_t()),
    ]
}

/// First move: announcements for the given nonces.
pub fn commit(statement: &AttestationStatement, nonces: &Exponents) -> Announcements {
    let p = statement.params();
    let neg = p.s_neg(&nonces.t);
    relations(statement, nonces, &neg).map(|(terms, _)| p.product_of_powers(&terms))
}

/// Fiat–Shamir challenge over the statement encoding and the announcements.
pub fn challenge(statement: &AttestationStatement, announcements: &Announcements) -> Scalar {
    let p = statement.params();
    let transcript = announcements
        .iter()
        .fold(Encoder::new(tags::CHALLENGE_TRANSCRIPT).bytes(&statement.encode()), |enc, a| enc.element(p, a))
        .finish();
    hash_to_scalar(p, FS_CHALLENGE, &transcript)
}

/// Third move: `z_x = k_x + c·x` for every exponent.
pub fn respond(params: &GroupParams, nonces: &Exponents, witness: &Exponents, c: &Scalar) -> Exponents {
    let z = |k: &Scalar, x: &Scalar| params.s_add(k, &params.s_mul(c, x));
    Exponents {
        e: z(&nonces.e, &witness.e),
        r: z(&nonces.r, &witness.r),
        m: z(&nonces.m, &witness.m),
        t: z(&nonces.t, &witness.t),
        alpha: z(&nonces.alpha, &witness.alpha),
        beta: z(&nonces.beta, &witness.beta),
        gamma: z(&nonces.gamma, &witness.gamma),
        delta: z(&nonces.delta, &witness.delta),
    }
}

/// Checks the seven verification equations for an explicit challenge.
pub fn check_transcript(statement: &AttestationStatement, announcements: &Announcements, c: &Scalar, z: &Exponents) -> bool {
    let p = statement.params();
    let neg = p.s_neg(&z.t);
    relations(statement, z, &neg)
        .iter()
        .zip(announcements)
        .all(|((terms, public), a)| p.product_of_powers(terms) == p.mul(a, &p.pow(public, c)))
}

pub fn prove<R: RngCore + CryptoRng>(
    statement: &AttestationStatement,
    witness: &AttestationWitness,
    rng: &mut R,
) -> Result<Proof, AttestError> {
    let nonces = Exponents::random(statement.params(), rng);
    prove_with_nonces(statement, witness, &nonces)
}

/// Deterministic prover for fixed nonces. Fails if the witness does not
/// satisfy the statement.
pub fn prove_with_nonces(
    statement: &AttestationStatement,
    witness: &AttestationWitness,
    nonces: &Exponents,
) -> Result<Proof, AttestError> {
    let p = statement.params();
    let announcements = commit(statement, nonces);
    let c = challenge(statement, &announcements);
    let responses = respond(p, nonces, &witness.extend(p), &c);
    if !check_transcript(statement, &announcements, &c, &responses) {
        return Err(AttestError::InconsistentWitness);
    }
    Ok(Proof { announcements, responses })
}

pub fn verify(statement: &AttestationStatement, proof: &Proof) -> bool {
    let p = statement.params();
    let members = statement.elements().into_iter().chain(&proof.announcements).all(|e| p.is_member(e.value()));
    let in_range = statement
        .scalars()
        .into_iter()
        .chain(proof.responses.to_array())
        .all(|s| s.value() < p.order());
    if !(members && in_range) {
        return false;
    }
    let c = challenge(statement, &proof.announcements);
    check_transcript(statement, &proof.announcements, &c, &proof.responses)
}

/// Standard simulator: uniform responses, announcements solved from the
/// verification equations for the given challenge.
pub fn simulate<R: RngCore + CryptoRng>(statement: &AttestationStatement, c: &Scalar, rng: &mut R) -> Proof {
    let p = statement.params();
    let responses = Exponents::random(p, rng);
    let neg_zt = p.s_neg(&responses.t);
    let neg_c = p.s_neg(c);
    let announcements = relations(statement, &responses, &neg_zt).map(|(mut terms, public)| {
        terms.push((public, &neg_c));
        p.product_of_powers(&terms)
    });
    Proof { announcements, responses }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attest::instance::{honest_instance, Instance};
    use crate::crypto::{group_setup, SecurityLabel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn honest_proofs_verify_in_both_groups() {
        for (label, n) in [(SecurityLabel::Toy, 200), (SecurityLabel::Std256, 10)] {
            let params = group_setup(label);
            let mut rng = ChaCha20Rng::seed_from_u64(31);
            for _ in 0..n {
                let Instance { statement, witness, .. } = honest_instance(&params, &mut rng);
                let proof = prove(&statement, &witness, &mut rng).unwrap();
                assert!(verify(&statement, &proof));
            }
        }
    }

    #[test]
    fn wrong_ephemeral_key_is_inconsistent() {
        let params = group_setup(SecurityLabel::Std256);
        let mut rng = ChaCha20Rng::seed_from_u64(32);
        let Instance { statement, mut witness, .. } = honest_instance(&params, &mut rng);
        witness.e = params.s_add(&witness.e, &params.scalar_from_u64(1));
        assert_eq!(prove(&statement, &witness, &mut rng), Err(AttestError::InconsistentWitness));
    }

    #[test]
    fn simulated_transcripts_check() {
        let params = group_setup(SecurityLabel::Std256);
        let mut rng = ChaCha20Rng::seed_from_u64(33);
        let Instance { statement, witness, .. } = honest_instance(&params, &mut rng);
        let c = params.random_scalar(&mut rng);
        let sim = simulate(&statement, &c, &mut rng);
        assert!(check_transcript(&statement, &sim.announcements, &c, &sim.responses));
        assert!(sim.announcements.iter().all(|a| params.is_member(a.value())));
        let real = prove(&statement, &witness, &mut rng).unwrap();
        assert_eq!(real.encode(&params).len(), sim.encode(&params).len());
    }

    #[test]
    fn proof_encoding_roundtrips() {
        let params = group_setup(SecurityLabel::Std256);
        let mut rng = ChaCha20Rng::seed_from_u64(34);
        let Instance { statement, witness, .. } = honest_instance(&params, &mut rng);
        let proof = prove(&statement, &witness, &mut rng).unwrap();
        let bytes = proof.encode(&params);
        assert_eq!(Proof::decode(&params, &bytes).unwrap(), proof);
        assert!(Proof::decode(&params, &bytes[..bytes.len() - 1]).is_err());
    }
}
