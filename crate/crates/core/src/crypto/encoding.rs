//! Canonical byte encodings.
//!
//! A composite value is one tag byte followed by its fields in declared
//! order, each field prefixed by its length as a 4-byte big-endian integer.
//! Group elements are written as fixed-width big-endian integers of
//! `params.element_len()` bytes, scalars as `params.scalar_len()` bytes.
//! Everything that is hashed or signed goes through these encodings.

use num_bigint::BigUint;

use super::group::{Element, GroupParams, Scalar};
use super::CryptoError;

/// Tag bytes for crypto-level composites. Network messages use 0x01..0x3f.
pub mod tags {
    pub const GROUP_PARAMS: u8 = 0x40;
    pub const ELGAMAL_CIPHERTEXT: u8 = 0x41;
    pub const SIGNATURE: u8 = 0x42;
    pub const SNI_CIPHERTEXT: u8 = 0x43;
    pub const STATEMENT: u8 = 0x44;
    pub const PROOF: u8 = 0x45;
    pub const SCHNORR_TRANSCRIPT: u8 = 0x46;
    pub const CHALLENGE_TRANSCRIPT: u8 = 0x47;
    pub const PROVER_INPUT: u8 = 0x48;
}

fn fixed_width(value: &BigUint, width: usize) -> Vec<u8> {
    let raw = value.to_bytes_be();
    debug_assert!(raw.len() <= width);
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(&raw);
    out
}

pub fn element_bytes(params: &GroupParams, e: &Element) -> Vec<u8> {
    fixed_width(e.value(), params.element_len())
}

pub fn scalar_bytes(params: &GroupParams, s: &Scalar) -> Vec<u8> {
    fixed_width(s.value(), params.scalar_len())
}

/// Parses a fixed-width element, checking range and subgroup membership.
pub fn element_from_bytes(params: &GroupParams, bytes: &[u8]) -> Result<Element, CryptoError> {
    if bytes.len() != params.element_len() {
        return Err(CryptoError::BadLength { expected: params.element_len(), found: bytes.len() });
    }
    params.element(BigUint::from_bytes_be(bytes))
}

pub fn scalar_from_bytes(params: &GroupParams, bytes: &[u8]) -> Result<Scalar, CryptoError> {
    if bytes.len() != params.scalar_len() {
        return Err(CryptoError::BadLength { expected: params.scalar_len(), found: bytes.len() });
    }
    params.scalar_checked(BigUint::from_bytes_be(bytes))
}

/// Builder for one composite value.
#[derive(Debug)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new(tag: u8) -> Self {
        Encoder { buf: vec![tag] }
    }

    pub fn bytes(mut self, field: &[u8]) -> Self {
        let len = u32::try_from(field.len()).expect("field longer than 4 GiB");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(field);
        self
    }

    pub fn element(self, params: &GroupParams, e: &Element) -> Self {
        self.bytes(&element_bytes(params, e))
    }

    pub fn scalar(self, params: &GroupParams, s: &Scalar) -> Self {
        self.bytes(&scalar_bytes(params, s))
    }

    pub fn u64(self, v: u64) -> Self {
        self.bytes(&v.to_be_bytes())
    }

    pub fn u32(self, v: u32) -> Self {
        self.bytes(&v.to_be_bytes())
    }

    pub fn str(self, s: &str) -> Self {
        self.bytes(s.as_bytes())
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Reader for one composite value. Fields must be consumed in order.
#[derive(Debug)]
pub struct Decoder<'a> {
    rest: &'a [u8],
}

impl<'a> Decoder<'a> {
    pub fn new(input: &'a [u8], tag: u8) -> Result<Self, CryptoError> {
        match input.split_first() {
            None => Err(CryptoError::Truncated),
            Some((&found, rest)) if found == tag => Ok(Decoder { rest }),
            Some((&found, _)) => Err(CryptoError::UnexpectedTag { expected: tag, found }),
        }
    }

    /// Peeks at the tag of an encoded composite.
    pub fn tag_of(input: &[u8]) -> Result<u8, CryptoError> {
        input.first().copied().ok_or(CryptoError::Truncated)
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], CryptoError> {
        if self.rest.len() < 4 {
            return Err(CryptoError::Truncated);
        }
        let (len, rest) = self.rest.split_at(4);
        let len = u32::from_be_bytes(len.try_into().unwrap()) as usize;
        if rest.len() < len {
            return Err(CryptoError::Truncated);
        }
        let (field, rest) = rest.split_at(len);
        self.rest = rest;
        Ok(field)
    }

    pub fn element(&mut self, params: &GroupParams) -> Result<Element, CryptoError> {
        element_from_bytes(params, self.bytes()?)
    }

    pub fn scalar(&mut self, params: &GroupParams) -> Result<Scalar, CryptoError> {
        scalar_from_bytes(params, self.bytes()?)
    }

    pub fn u64(&mut self) -> Result<u64, CryptoError> {
        let b = self.bytes()?;
        let arr: [u8; 8] = b.try_into().map_err(|_| CryptoError::BadLength { expected: 8, found: b.len() })?;
        Ok(u64::from_be_bytes(arr))
    }

    pub fn u32(&mut self) -> Result<u32, CryptoError> {
        let b = self.bytes()?;
        let arr: [u8; 4] = b.try_into().map_err(|_| CryptoError::BadLength { expected: 4, found: b.len() })?;
        Ok(u32::from_be_bytes(arr))
    }

    pub fn string(&mut self) -> Result<String, CryptoError> {
        String::from_utf8(self.bytes()?.to_vec()).map_err(|_| CryptoError::InvalidUtf8)
    }

    /// True once every field has been consumed.
    pub fn is_empty(&self) -> bool {
        self.rest.is_empty()
    }

    /// Bytes following this composite.
    pub fn remaining(self) -> &'a [u8] {
        self.rest
    }

    /// Fails if anything follows the consumed fields.
    pub fn finish(self) -> Result<(), CryptoError> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            Err(CryptoError::TrailingBytes(self.rest.len()))
        }
    }
}

/// Canonical encoding of the group description, used to bind transcripts to a group.
pub fn encode_group(params: &GroupParams) -> Vec<u8> {
    Encoder::new(tags::GROUP_PARAMS)
        .bytes(&fixed_width(params.modulus(), params.element_len()))
        .bytes(&fixed_width(params.order(), params.scalar_len()))
        .element(params, params.generator())
        .element(params, params.second_generator())
        .finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::group::{group_setup, SecurityLabel};

    #[test]
    fn toy_widths() {
        let params = group_setup(SecurityLabel::Toy);
        let e = params.element(8u32.into()).unwrap();
        assert_eq!(element_bytes(&params, &e), vec![8]);
        assert_eq!(scalar_bytes(&params, &params.scalar_from_u64(3)), vec![3]);
        let enc = Encoder::new(0x41).element(&params, &e).scalar(&params, &params.scalar_from_u64(3)).finish();
        assert_eq!(enc, vec![0x41, 0, 0, 0, 1, 8, 0, 0, 0, 1, 3]);
    }

    #[test]
    fn std256_elements_are_left_padded() {
        let params = group_setup(SecurityLabel::Std256);
        let one = params.identity();
        let b = element_bytes(&params, &one);
        assert_eq!(b.len(), 256);
        assert_eq!(b[255], 1);
        assert!(b[..255].iter().all(|&x| x == 0));
        assert_eq!(element_from_bytes(&params, &b).unwrap(), one);
    }

    #[test]
    fn decoder_errors() {
        let params = group_setup(SecurityLabel::Toy);
        assert!(matches!(Decoder::new(&[], 1), Err(CryptoError::Truncated)));
        assert!(matches!(Decoder::new(&[2], 1), Err(CryptoError::UnexpectedTag { expected: 1, found: 2 })));
        let mut d = Decoder::new(&[1, 0, 0, 0, 5, 1], 1).unwrap();
        assert!(matches!(d.bytes(), Err(CryptoError::Truncated)));
        // 5 is not a quadratic residue mod 23
        let mut d = Decoder::new(&[1, 0, 0, 0, 1, 5], 1).unwrap();
        assert!(matches!(d.element(&params), Err(CryptoError::NotInSubgroup)));
        let mut d = Decoder::new(&[1, 0, 0, 0, 2, 0, 4], 1).unwrap();
        assert!(matches!(d.element(&params), Err(CryptoError::BadLength { .. })));
        let mut d = Decoder::new(&[1, 0, 0, 0, 1, 11], 1).unwrap();
        assert!(matches!(d.scalar(&params), Err(CryptoError::OutOfRange)));
        let d = Decoder::new(&[1, 9], 1).unwrap();
        assert!(matches!(d.finish(), Err(CryptoError::TrailingBytes(1))));
    }
}
