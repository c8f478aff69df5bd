//! Group arithmetic, ElGamal, Schnorr signatures, Pedersen commitments and
//! hashing. SHA-256 is the only hash function used anywhere in the crate.

pub mod elgamal;
pub mod encoding;
pub mod group;
pub mod hash;
pub mod pedersen;
pub mod schnorr;

use thiserror::Error;

pub use elgamal::{elgamal_decrypt, elgamal_encrypt, elgamal_encrypt_with, ElGamalCiphertext, ElGamalKeypair};
pub use group::{group_setup, group_setup_named, Element, GroupParams, Scalar, SecurityLabel};
pub use hash::{hash_to_scalar, sha256};
pub use pedersen::{pedersen_commit, PedersenCommitment};
pub use schnorr::{schnorr_sign, schnorr_sign_with_nonce, schnorr_verify, SigKeypair, Signature};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("unknown security label `{0}`")]
    UnknownLabel(String),
    #[error("value out of range")]
    OutOfRange,
    #[error("element is not in the prime-order subgroup")]
    NotInSubgroup,
    #[error("input truncated")]
    Truncated,
    #[error("unexpected tag {found:#04x}, expected {expected:#04x}")]
    UnexpectedTag { expected: u8, found: u8 },
    #[error("field has length {found}, expected {expected}")]
    BadLength { expected: usize, found: usize },
    #[error("unknown message tag {0:#04x}")]
    UnknownTag(u8),
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
    #[error("encoded group does not match a known parameter set")]
    UnknownGroup,
    #[error("invalid utf-8 in string field")]
    InvalidUtf8,
}
