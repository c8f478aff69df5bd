//! Encrypted SNI and the zero-knowledge attestation that it is encrypted
//! under the same destination key the relay encrypted for the client.

pub mod bundle;
pub mod input;
pub mod instance;
pub mod proof;
pub mod sni;
pub mod statement;

use thiserror::Error;

use crate::crypto::CryptoError;

pub use bundle::{attest_sni, attest_sni_under, AttestationBundle};
pub use input::ProverInput;
pub use instance::{honest_instance, Instance};
pub use proof::{
    challenge, check_transcript, commit, prove, prove_with_nonces, respond, simulate, verify, AttestationWitness,
    Exponents, Proof,
};
pub use sni::{domain_decrypt_sni_check, encode_sni, encrypt_sni, encrypt_sni_with, normalize_domain, SniCiphertext, SniEncryption};
pub use statement::{build_statement, AttestationStatement, StatementInputs};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AttestError {
    #[error("relay signature does not verify over the key ciphertext")]
    SignatureInvalid,
    #[error("empty domain name")]
    EmptyName,
    #[error("witness does not satisfy the statement")]
    InconsistentWitness,
    #[error("malformed encoding: {0}")]
    Malformed(#[from] CryptoError),
}
