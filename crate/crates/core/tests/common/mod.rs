//! Batched property checks shared by the integration tests and the
//! acceptance run. Each returns counts so callers decide what passes.

#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use vpn0_core::attest::{
    build_statement, challenge, check_transcript, commit, encrypt_sni, honest_instance, prove, respond, simulate,
    verify, AttestationBundle, AttestationStatement, AttestationWitness, Exponents, Instance, Proof,
    StatementInputs,
};
use vpn0_core::crypto::encoding::{tags, Encoder};
use vpn0_core::crypto::hash::FS_CHALLENGE;
use vpn0_core::crypto::{
    elgamal_decrypt, elgamal_encrypt, group_setup, hash_to_scalar, pedersen_commit, schnorr_sign, schnorr_verify,
    ElGamalKeypair, GroupParams, Scalar, SecurityLabel, SigKeypair, Signature,
};
use vpn0_core::par::{item_seed, map_indexed, Execution};

pub fn rng(seed: u64, i: usize) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(item_seed(seed, i))
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct RoundTrips {
    pub elgamal_ok: usize,
    pub schnorr_ok: usize,
}

/// `n` random ElGamal decrypt(encrypt(m)) and Schnorr verify(sign(msg)) cases.
pub fn crypto_round_trips(label: SecurityLabel, n: usize, seed: u64, exec: Execution) -> RoundTrips {
    let params = group_setup(label);
    let per_case = map_indexed(exec, n, |i| {
        let mut rng = rng(seed, i);
        let keys = ElGamalKeypair::generate(&params, &mut rng);
        let m = params.random_element(&mut rng);
        let (ct, _) = elgamal_encrypt(&params, &m, &keys.pk, &mut rng);
        let elgamal = elgamal_decrypt(&params, &ct, &keys.sk) == m;

        let signer = SigKeypair::generate(&params, &mut rng);
        let msg: Vec<u8> = (0..rng.gen_range(0..64)).map(|_| rng.gen()).collect();
        let sig = schnorr_sign(&params, &msg, &signer, &mut rng);
        let schnorr = schnorr_verify(&params, &msg, &sig, &signer.pk);
        (elgamal, schnorr)
    });
    RoundTrips {
        elgamal_ok: per_case.iter().filter(|c| c.0).count(),
        schnorr_ok: per_case.iter().filter(|c| c.1).count(),
    }
}

/// Flips one byte of either the message or the encoded signature and counts
/// how many mutants still verify.
pub fn schnorr_mutants_accepted(label: SecurityLabel, n: usize, seed: u64, exec: Execution) -> usize {
    let params = group_setup(label);
    let accepted = map_indexed(exec, n, |i| {
        let mut rng = rng(seed, i);
        let signer = SigKeypair::generate(&params, &mut rng);
        let mut msg: Vec<u8> = (0..rng.gen_range(1..48)).map(|_| rng.gen()).collect();
        let mut sig_bytes = schnorr_sign(&params, &msg, &signer, &mut rng).encode(&params);
        let target = if rng.gen_bool(0.5) { &mut msg } else { &mut sig_bytes };
        let at = rng.gen_range(0..target.len());
        target[at] ^= rng.gen_range(1..=255u8);
        Signature::decode(&params, &sig_bytes).is_ok_and(|sig| schnorr_verify(&params, &msg, &sig, &signer.pk))
    });
    accepted.into_iter().filter(|&a| a).count()
}

/// Honest instances proven and verified; returns the number accepted.
pub fn completeness(label: SecurityLabel, n: usize, seed: u64, exec: Execution) -> usize {
    let params = group_setup(label);
    let accepted = map_indexed(exec, n, |i| {
        let mut rng = rng(seed, i);
        let Instance { statement, witness, .. } = honest_instance(&params, &mut rng);
        prove(&statement, &witness, &mut rng).is_ok_and(|proof| verify(&statement, &proof))
    });
    accepted.into_iter().filter(|&a| a).count()
}

/// Number of independently mutable fields of a bundle: 10 statement
/// elements and scalars, 7 announcements and 8 responses.
pub const BUNDLE_FIELDS: usize = 25;

pub fn field_name(field: usize) -> &'static str {
    const NAMES: [&str; BUNDLE_FIELDS] = [
        "pk_eg", "c_pkd.c1", "c_pkd.c2", "sig_r", "pk_r", "c_sni.u", "c_sni.w", "com_e", "com_r", "com_t", "A1", "A2",
        "A3", "A4", "A5", "A6", "A7", "z_e", "z_r", "z_m", "z_t", "z_alpha", "z_beta", "z_gamma", "z_delta",
    ];
    NAMES[field]
}

fn response_mut(z: &mut Exponents, i: usize) -> &mut Scalar {
    match i {
        0 => &mut z.e,
        1 => &mut z.r,
        2 => &mut z.m,
        3 => &mut z.t,
        4 => &mut z.alpha,
        5 => &mut z.beta,
        6 => &mut z.gamma,
        _ => &mut z.delta,
    }
}

/// Replaces `field` with a different random valid value. A mutated
/// statement goes back through `build_statement`, so a broken relay
/// signature counts as a rejection like any other.
pub fn mutate_and_verify(bundle: &AttestationBundle, field: usize, rng: &mut ChaCha20Rng) -> bool {
    let params = bundle.statement.params().clone();
    let p = &*params;
    let fresh_element = |rng: &mut ChaCha20Rng, old: &vpn0_core::crypto::Element| loop {
        let e = p.random_element(rng);
        if &e != old {
            return e;
        }
    };
    let fresh_scalar = |rng: &mut ChaCha20Rng, old: &Scalar| loop {
        let s = p.random_scalar(rng);
        if &s != old {
            return s;
        }
    };
    let mut inputs = bundle.statement.inputs().clone();
    let mut proof = bundle.proof.clone();
    match field {
        0 => inputs.pk_eg = fresh_element(rng, &inputs.pk_eg),
        1 => inputs.c_pkd.c1 = fresh_element(rng, &inputs.c_pkd.c1),
        2 => inputs.c_pkd.c2 = fresh_element(rng, &inputs.c_pkd.c2),
        3 => {
            if rng.gen_bool(0.5) {
                inputs.sig_r.challenge = fresh_scalar(rng, &inputs.sig_r.challenge);
            } else {
                inputs.sig_r.response = fresh_scalar(rng, &inputs.sig_r.response);
            }
        }
        4 => inputs.pk_r = fresh_element(rng, &inputs.pk_r),
        5 => inputs.c_sni.u = fresh_element(rng, &inputs.c_sni.u),
        6 => inputs.c_sni.w = fresh_element(rng, &inputs.c_sni.w),
        7 => inputs.com_e.0 = fresh_element(rng, &inputs.com_e.0),
        8 => inputs.com_r.0 = fresh_element(rng, &inputs.com_r.0),
        9 => inputs.com_t.0 = fresh_element(rng, &inputs.com_t.0),
        10..=16 => {
            let a = &mut proof.announcements[field - 10];
            *a = fresh_element(rng, a);
        }
        _ => {
            let z = response_mut(&mut proof.responses, field - 17);
            *z = fresh_scalar(rng, z);
        }
    }
    match build_statement(params, inputs) {
        Ok(statement) => verify(&statement, &proof),
        Err(_) => false,
    }
}

/// `n` single-field mutations spread over all fields, applied to
/// `n / per_bundle` honest bundles. Returns the mutants that verified.
pub fn mutants_accepted(label: SecurityLabel, n: usize, per_bundle: usize, seed: u64, exec: Execution) -> Vec<(usize, &'static str)> {
    let params = group_setup(label);
    let bundles = n.div_ceil(per_bundle);
    let accepted = map_indexed(exec, bundles, |b| {
        let mut rng = rng(seed, b);
        let bundle = honest_instance(&params, &mut rng).bundle;
        assert!(bundle.verify());
        let count = per_bundle.min(n - b * per_bundle);
        (0..count)
            .map(|j| (b * per_bundle + j) % BUNDLE_FIELDS)
            .filter(|&field| mutate_and_verify(&bundle, field, &mut rng))
            .map(|field| (b, field_name(field)))
            .collect::<Vec<_>>()
    });
    accepted.into_iter().flatten().collect()
}

/// A statement whose SNI ciphertext is under `pk_D'`, not the key inside
/// `C_pkD`, together with the cheating client's true exponents.
pub struct Mismatched {
    pub instance: Instance,
    pub statement: AttestationStatement,
    pub witness: AttestationWitness,
}

pub fn mismatched_instance(params: &Arc<GroupParams>, rng: &mut ChaCha20Rng) -> Mismatched {
    let instance = honest_instance(params, rng);
    let pk_other = loop {
        let pk = ElGamalKeypair::generate(params, rng).pk;
        if pk != instance.destination.pk {
            break pk;
        }
    };
    let enc = encrypt_sni(params, &instance.sni, &pk_other, rng).expect("valid name");
    let witness = AttestationWitness {
        e: instance.ephemeral.sk.clone(),
        r: enc.r,
        m: enc.m,
        alpha: params.random_scalar(rng),
        beta: params.random_scalar(rng),
        gamma: params.random_scalar(rng),
    };
    let t = params.s_mul(&witness.e, &witness.r);
    let honest = instance.statement.inputs();
    let inputs = StatementInputs {
        c_sni: enc.ciphertext,
        com_e: pedersen_commit(params, &witness.e, &witness.alpha),
        com_r: pedersen_commit(params, &witness.r, &witness.beta),
        com_t: pedersen_commit(params, &t, &witness.gamma),
        ..honest.clone()
    };
    let statement = build_statement(params.clone(), inputs).expect("relay signature untouched");
    Mismatched { instance, statement, witness }
}

/// Attack attempts against one mismatched instance; true if any verified.
/// The honest prover must refuse; forcing its transcript past the self
/// check, simulating with a random challenge and grafting the foreign
/// ciphertext into an honest bundle must all be rejected.
pub fn binding_attack_succeeds(params: &Arc<GroupParams>, rng: &mut ChaCha20Rng) -> bool {
    let Mismatched { instance, statement, witness } = mismatched_instance(params, rng);
    if prove(&statement, &witness, rng).is_ok() {
        return true;
    }
    let nonces = Exponents::random(params, rng);
    let announcements = commit(&statement, &nonces);
    let c = challenge(&statement, &announcements);
    let forced = Proof { announcements, responses: respond(params, &nonces, &witness.extend(params), &c) };
    let simulated = simulate(&statement, &params.random_scalar(rng), rng);
    let mut grafted_inputs = instance.statement.inputs().clone();
    grafted_inputs.c_sni = statement.c_sni().clone();
    let grafted = build_statement(params.clone(), grafted_inputs).expect("relay signature untouched");
    verify(&statement, &forced) || verify(&statement, &simulated) || verify(&grafted, &instance.bundle.proof)
}

pub fn binding_attacks_accepted(label: SecurityLabel, n: usize, seed: u64, exec: Execution) -> usize {
    let params = group_setup(label);
    map_indexed(exec, n, |i| binding_attack_succeeds(&params, &mut rng(seed, i))).into_iter().filter(|&a| a).count()
}

/// Two accepting transcripts sharing announcements, challenges `ca != cb`;
/// returns whether the extracted exponents satisfy the relation
/// `pk_EG = g^e`, `u = g^r`, `t = e·r`, `w = g^m · (c2 · c1^(-e))^r`.
pub fn extraction_holds(params: &Arc<GroupParams>, rng: &mut ChaCha20Rng) -> bool {
    let Instance { statement, witness, .. } = honest_instance(params, rng);
    let p = &**params;
    let nonces = Exponents::random(p, rng);
    let announcements = commit(&statement, &nonces);
    let ca = p.random_scalar(rng);
    let cb = loop {
        let c = p.random_scalar(rng);
        if c != ca {
            break c;
        }
    };
    let extended = witness.extend(p);
    let za = respond(p, &nonces, &extended, &ca);
    let zb = respond(p, &nonces, &extended, &cb);
    if !(check_transcript(&statement, &announcements, &ca, &za) && check_transcript(&statement, &announcements, &cb, &zb)) {
        return false;
    }
    let inv = p.s_inv(&p.s_sub(&ca, &cb)).expect("distinct challenges");
    let x = |a: &Scalar, b: &Scalar| p.s_mul(&p.s_sub(a, b), &inv);
    let (e, r, m, t) = (x(&za.e, &zb.e), x(&za.r, &zb.r), x(&za.m, &zb.m), x(&za.t, &zb.t));
    let c_pkd = statement.c_pkd();
    let sni = statement.c_sni();
    let unmasked = p.mul(&c_pkd.c2, &p.pow(&c_pkd.c1, &p.s_neg(&e)));
    t == p.s_mul(&e, &r)
        && &p.g_pow(&e) == statement.pk_eg()
        && p.g_pow(&r) == sni.u
        && p.mul(&p.g_pow(&m), &p.pow(&unmasked, &r)) == sni.w
}

pub fn extractions_holding(n: usize, seed: u64) -> usize {
    let params = group_setup(SecurityLabel::Toy);
    (0..n).filter(|&i| extraction_holds(&params, &mut rng(seed, i))).count()
}

/// The Fiat–Shamir challenge recomputed over raw statement bytes.
pub fn challenge_over_bytes(params: &GroupParams, statement_bytes: &[u8], proof: &Proof) -> Scalar {
    let transcript = proof
        .announcements
        .iter()
        .fold(Encoder::new(tags::CHALLENGE_TRANSCRIPT).bytes(statement_bytes), |enc, a| enc.element(params, a))
        .finish();
    hash_to_scalar(params, FS_CHALLENGE, &transcript)
}

/// Random single-byte edits of one statement encoding; counts edits that
/// leave the challenge unchanged.
pub fn challenge_collisions(edits: usize, seed: u64) -> usize {
    let params = group_setup(SecurityLabel::Std256);
    let mut rng = rng(seed, 0);
    let bundle = honest_instance(&params, &mut rng).bundle;
    let bytes = bundle.statement.encode();
    let c = challenge_over_bytes(&params, &bytes, &bundle.proof);
    assert_eq!(c, challenge(&bundle.statement, &bundle.proof.announcements));
    (0..edits)
        .filter(|_| {
            let mut edited = bytes.clone();
            let at = rng.gen_range(0..edited.len());
            edited[at] ^= rng.gen_range(1..=255u8);
            challenge_over_bytes(&params, &edited, &bundle.proof) == c
        })
        .count()
}
