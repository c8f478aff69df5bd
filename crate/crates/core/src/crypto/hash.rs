//! SHA-256 based hashing into the scalar field.

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

use super::group::{GroupParams, Scalar};

/// Domain separator for Fiat–Shamir challenges.
pub const FS_CHALLENGE: &[u8] = b"FS-CHALLENGE";
/// Domain separator for mapping domain names to exponents.
pub const SNI_ENCODE: &[u8] = b"SNI-ENCODE";
/// Domain separator for Schnorr signature challenges.
pub const SCHNORR_SIG: &[u8] = b"SCHNORR-SIG";

pub fn sha256(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}

/// Deterministic map to a scalar in `[0, q)`.
///
/// Candidate `i` is `SHA-256(len(sep) ‖ sep ‖ transcript ‖ i)` truncated to
/// the bit length of q; candidates `>= q` are rejected, so the output carries
/// no modulo bias.
pub fn hash_to_scalar(params: &GroupParams, separator: &[u8], transcript: &[u8]) -> Scalar {
    let q = params.order();
    let q_bits = q.bits() as usize;
    assert!(q_bits <= 256, "scalar field wider than the hash");
    let mut prefix = Sha256::new();
    prefix.update((separator.len() as u32).to_be_bytes());
    prefix.update(separator);
    prefix.update(transcript);
    for counter in 0u32.. {
        let mut hasher = prefix.clone();
        hasher.update(counter.to_be_bytes());
        let digest: [u8; 32] = hasher.finalize().into();
        let mut candidate = BigUint::from_bytes_be(&digest);
        candidate >>= 256 - q_bits;
        if &candidate < q {
            return params.scalar_checked(candidate).expect("candidate below q");
        }
    }
    unreachable!("rejection sampling exhausted the counter")
}
