//! Frozen toy-group vectors. The expected bytes come from
//! `tests/oracles/toy_vectors.py`, which recomputes them from the encoding
//! rules without touching this crate.

use vpn0_core::attest::{
    build_statement, challenge, prove_with_nonces, verify, AttestationWitness, Exponents, SniCiphertext, StatementInputs,
};
use vpn0_core::crypto::{
    elgamal_encrypt_with, group_setup, pedersen_commit, schnorr_sign_with_nonce, schnorr_verify, GroupParams,
    SecurityLabel, SigKeypair,
};

const SCHNORR: &str = "4200000001080000000107";
const STATEMENT: &str = "4400000015400000000117000000010b0000000102000000011200000001080000000b410000000104000000010c0000000b4200000001000000000105000000010d0000000b4300000001040000000104000000010600000001080000000104";
const PROOF: &str = "45000000010200000001040000000110000000010600000001090000000104000000010d0000000105000000010100000001060000000101000000010a000000010500000001000000000104";

fn s(params: &GroupParams, x: u64) -> vpn0_core::crypto::Scalar {
    params.scalar_from_u64(x)
}

#[test]
fn toy_second_generator() {
    let params = group_setup(SecurityLabel::Toy);
    assert_eq!(params.second_generator().value(), &18u32.into());
    let c = pedersen_commit(&params, &s(&params, 2), &s(&params, 1));
    assert_eq!(c.element().value(), &3u32.into());
}

#[test]
fn toy_schnorr_signature() {
    let params = group_setup(SecurityLabel::Toy);
    let keys = SigKeypair::from_secret(&params, s(&params, 3));
    let sig = schnorr_sign_with_nonce(&params, b"vpn0 toy vector", &keys, &s(&params, 5));
    assert_eq!(hex::encode(sig.encode(&params)), SCHNORR);
    assert!(schnorr_verify(&params, b"vpn0 toy vector", &sig, &keys.pk));
}

#[test]
fn toy_statement_and_proof() {
    let params = group_setup(SecurityLabel::Toy);
    let p = &*params;
    let (e, r, m) = (s(p, 3), s(p, 2), s(p, 5));
    let (alpha, beta, gamma) = (s(p, 1), s(p, 2), s(p, 3));
    let pk_d = p.g_pow(&s(p, 4));
    let pk_eg = p.g_pow(&e);
    let c_pkd = elgamal_encrypt_with(p, &pk_d, &pk_eg, &s(p, 2));
    let relay = SigKeypair::from_secret(p, s(p, 7));
    let sig_r = schnorr_sign_with_nonce(p, &c_pkd.encode(p), &relay, &s(p, 5));
    let c_sni = SniCiphertext { u: p.g_pow(&r), w: p.mul(&p.g_pow(&m), &p.pow(&pk_d, &r)) };
    let inputs = StatementInputs {
        pk_eg,
        c_pkd,
        sig_r,
        pk_r: relay.pk.clone(),
        c_sni,
        com_e: pedersen_commit(p, &e, &alpha),
        com_r: pedersen_commit(p, &r, &beta),
        com_t: pedersen_commit(p, &p.s_mul(&e, &r), &gamma),
    };
    let statement = build_statement(params.clone(), inputs).unwrap();
    assert_eq!(hex::encode(statement.encode()), STATEMENT);

    let witness = AttestationWitness { e, r, m, alpha, beta, gamma };
    let nonces = Exponents {
        e: s(p, 1),
        r: s(p, 2),
        m: s(p, 3),
        t: s(p, 4),
        alpha: s(p, 5),
        beta: s(p, 6),
        gamma: s(p, 7),
        delta: s(p, 8),
    };
    let proof = prove_with_nonces(&statement, &witness, &nonces).unwrap();
    assert_eq!(challenge(&statement, &proof.announcements), s(p, 5));
    assert_eq!(hex::encode(proof.encode(p)), PROOF);
    assert!(verify(&statement, &proof));
}

// Miller-Rabin with fixed random bases; an independent check on the frozen
// std256 constants, which `tests/oracles/std256_params.py` re-derives.
fn probably_prime(n: &num_bigint::BigUint, rounds: usize) -> bool {
    use num_bigint::{BigUint, RandBigInt};
    use rand::SeedableRng;
    let one = BigUint::from(1u32);
    let two = BigUint::from(2u32);
    let n_1 = n - &one;
    let s = n_1.trailing_zeros().unwrap_or(0);
    let d = &n_1 >> s;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0x5eed);
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_1);
        let mut x = a.modpow(&d, n);
        if x == one || x == n_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[test]
fn std256_moduli_are_prime() {
    let params = group_setup(SecurityLabel::Std256);
    assert!(probably_prime(params.order(), 40));
    assert!(probably_prime(params.modulus(), 16));
    let g = params.generator().value();
    assert_eq!(g.modpow(params.order(), params.modulus()), num_bigint::BigUint::from(1u32));
}
