//! Prime-order subgroup of `Z_p^*`.
//!
//! Every element handed out by this module lies in the order-`q` subgroup:
//! the only ways to obtain an [`Element`] are checked constructors and group
//! operations on existing elements. Scalars are always reduced mod `q`.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CryptoError;

// q: first prime >= SHA-256("vpn0/std256/q") | 2^255.
// p: first prime k*q + 1 with k even and k >= floor((SHAKE-256("vpn0/std256/p", 256 bytes) | 2^2047) / q) rounded down to even.
// g: 2^((p-1)/q) mod p.
const STD256_P: &str = "d96cb9eade1f7a79b732957fb8ea0a177203fdc267f38e0e5d456c41e0cd58d10e3143d6acc21fec628730014e74f6ab64a3d1f330818fe38aa6330141a8be87fa6182a9716dab986de1cd33148aff10dfbff701990baf887b6b0c25f4eccfbd9dd8d4bffeed7836f44a5cf34d7c53e94edd430691b3dc7c6029ca309905d76cfebb83cb8f1a28909c15ba18ecb41aa89a9ff828d80c9ab8fb02e8f70e10fb92207721df3131777b081e0083cb82ab496cc1f91f50f698e81f57de86de1b89b725176e2fbde7a72f7a88010ac5a8a38351c8e344b929041c7f39a536b8b5583b2e0b6f4e8906fd2dc1798d358d660ae6dcadd18afd446393f9236ad6042d891b";
const STD256_Q: &str = "efb17b559ca2d3940d5bd35ac057814d5c9754247ac4ad2304eb36f8d771ec95";
const STD256_G: &str = "cda690bf593d87a50fbe32efb9a0348f3070794f552a6f71e5920cd0f08b1671281180aa4d251318531942963d30c3317d89c6a3409b898ebd1a7d7a0810919a733008d473ea59df20c69d1516ee31ee01156dbda0152595c4060d44aa64b8d71a682a44d8884fed2447fcf22df7a8b598597a2bfded9eb9b95219de0e61e4c7ee089346e50ae050fdc427b8f6fd4cb4293cf726f63872d553ffd49a8f622f3aec9c9fde503cad0abfa7301b2d36ad0e3bc528ded4f1e9854234013a02d40fdb1f60c5309f8a77c63857a2b249fdb8dc3652efc06de1462e2a2709fca25ccf30f22c88c3e02e70f9a41ae9d7706fb5745c2e1ef911e91873f0ba754bca849e87";

const H_GENERATOR_SEPARATOR: &[u8] = b"GROUP-GEN-H";

/// Named parameter sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SecurityLabel {
    /// p = 23, q = 11, g = 2. Small enough to enumerate; offers no security.
    Toy,
    /// 2048-bit p with a 256-bit prime-order subgroup.
    Std256,
}

impl SecurityLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SecurityLabel::Toy => "toy",
            SecurityLabel::Std256 => "std256",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            SecurityLabel::Toy => 1,
            SecurityLabel::Std256 => 2,
        }
    }
}

impl fmt::Display for SecurityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SecurityLabel {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "toy" => Ok(SecurityLabel::Toy),
            "std256" => Ok(SecurityLabel::Std256),
            other => Err(CryptoError::UnknownLabel(other.to_string())),
        }
    }
}

/// An exponent, reduced mod q.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scalar(BigUint);

impl Scalar {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({:x})", self.0)
    }
}

/// A member of the order-q subgroup.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element(BigUint);

impl Element {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_one()
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Element({:x})", self.0)
    }
}

/// Fixed-base exponentiation table with 4-bit windows:
/// `rows[i][d - 1] = base^(d * 16^i)` for digits `d` in 1..16.
struct FixedBase {
    rows: Vec<Vec<BigUint>>,
}

impl FixedBase {
    fn new(base: &BigUint, p: &BigUint, exponent_bits: u64) -> Self {
        let windows = exponent_bits.div_ceil(4) as usize;
        let mut rows = Vec::with_capacity(windows);
        let mut row_base = base.clone();
        for _ in 0..windows {
            let mut row = Vec::with_capacity(15);
            let mut acc = row_base.clone();
            row.push(acc.clone());
            for _ in 2..16 {
                acc = (&acc * &row_base) % p;
                row.push(acc.clone());
            }
            // row_base^16
            row_base = (&acc * &row_base) % p;
            rows.push(row);
        }
        FixedBase { rows }
    }

    fn pow(&self, exponent: &BigUint, p: &BigUint) -> BigUint {
        let mut acc = BigUint::one();
        let digits = exponent.to_radix_le(16);
        debug_assert!(digits.len() <= self.rows.len());
        for (row, &d) in self.rows.iter().zip(digits.iter()) {
            if d != 0 {
                acc = (&acc * &row[d as usize - 1]) % p;
            }
        }
        acc
    }
}

/// Parameters of the ambient group.
pub struct GroupParams {
    label: SecurityLabel,
    p: BigUint,
    q: BigUint,
    g: Element,
    h: Element,
    cofactor: BigUint,
    element_len: usize,
    scalar_len: usize,
    g_table: FixedBase,
    h_table: FixedBase,
}

impl fmt::Debug for GroupParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupParams")
            .field("label", &self.label)
            .field("p_bits", &self.p.bits())
            .field("q_bits", &self.q.bits())
            .finish()
    }
}

impl PartialEq for GroupParams {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.p == other.p && self.q == other.q && self.g == other.g && self.h == other.h
    }
}

impl Eq for GroupParams {}

/// Returns the fixed parameters for `label`.
///
/// Parameters are built once per process and shared; repeated calls return
/// the same instance.
pub fn group_setup(label: SecurityLabel) -> Arc<GroupParams> {
    static TOY: OnceLock<Arc<GroupParams>> = OnceLock::new();
    static STD256: OnceLock<Arc<GroupParams>> = OnceLock::new();
    match label {
        SecurityLabel::Toy => TOY
            .get_or_init(|| Arc::new(GroupParams::build(label, 23u32.into(), 11u32.into(), 2u32.into())))
            .clone(),
        SecurityLabel::Std256 => STD256
            .get_or_init(|| {
                let parse = |s: &str| BigUint::parse_bytes(s.as_bytes(), 16).expect("embedded constant");
                Arc::new(GroupParams::build(label, parse(STD256_P), parse(STD256_Q), parse(STD256_G)))
            })
            .clone(),
    }
}

/// Parses a label string and returns its parameters.
pub fn group_setup_named(label: &str) -> Result<Arc<GroupParams>, CryptoError> {
    Ok(group_setup(label.parse()?))
}

/// Derives the second generator by hashing counters to field elements and
/// raising them to the cofactor. Nobody learns `log_g h` along the way.
pub(crate) fn derive_h(label: SecurityLabel, p: &BigUint, q: &BigUint, g: &BigUint) -> BigUint {
    let cofactor = (p - 1u32) / q;
    let wide = (p.bits() as usize).div_ceil(8) + 16;
    for counter in 0u32.. {
        let mut bytes = Vec::with_capacity(wide + 32);
        for block in 0u32.. {
            if bytes.len() >= wide {
                break;
            }
            let mut hasher = Sha256::new();
            hasher.update((H_GENERATOR_SEPARATOR.len() as u32).to_be_bytes());
            hasher.update(H_GENERATOR_SEPARATOR);
            hasher.update([label.code()]);
            hasher.update(counter.to_be_bytes());
            hasher.update(block.to_be_bytes());
            bytes.extend_from_slice(&hasher.finalize());
        }
        bytes.truncate(wide);
        let x = BigUint::from_bytes_be(&bytes) % p;
        if x < BigUint::from(2u32) {
            continue;
        }
        let h = x.modpow(&cofactor, p);
        if !h.is_one() && &h != g {
            return h;
        }
    }
    unreachable!("counter space exhausted")
}

impl GroupParams {
    fn build(label: SecurityLabel, p: BigUint, q: BigUint, g: BigUint) -> Self {
        let h = derive_h(label, &p, &q, &g);
        let q_bits = q.bits();
        let g_table = FixedBase::new(&g, &p, q_bits);
        let h_table = FixedBase::new(&h, &p, q_bits);
        GroupParams {
            label,
            cofactor: (&p - 1u32) / &q,
            element_len: (p.bits() as usize).div_ceil(8),
            scalar_len: (q_bits as usize).div_ceil(8),
            g: Element(g),
            h: Element(h),
            p,
            q,
            g_table,
            h_table,
        }
    }

    pub fn label(&self) -> SecurityLabel {
        self.label
    }

    pub fn modulus(&self) -> &BigUint {
        &self.p
    }

    pub fn order(&self) -> &BigUint {
        &self.q
    }

    pub fn cofactor(&self) -> &BigUint {
        &self.cofactor
    }

    pub fn generator(&self) -> &Element {
        &self.g
    }

    /// The commitment generator `h`.
    pub fn second_generator(&self) -> &Element {
        &self.h
    }

    /// Fixed encoding width of an element, in bytes.
    pub fn element_len(&self) -> usize {
        self.element_len
    }

    /// Fixed encoding width of a scalar, in bytes.
    pub fn scalar_len(&self) -> usize {
        self.scalar_len
    }

    pub fn identity(&self) -> Element {
        Element(BigUint::one())
    }

    /// `x^q == 1` with `x` in `[1, p)`.
    pub fn is_member(&self, x: &BigUint) -> bool {
        !x.is_zero() && x < &self.p && x.modpow(&self.q, &self.p).is_one()
    }

    /// Checked element constructor.
    pub fn element(&self, x: BigUint) -> Result<Element, CryptoError> {
        if x.is_zero() || x >= self.p {
            return Err(CryptoError::OutOfRange);
        }
        if !x.modpow(&self.q, &self.p).is_one() {
            return Err(CryptoError::NotInSubgroup);
        }
        Ok(Element(x))
    }

    /// Reduces `x` mod q.
    pub fn scalar(&self, x: BigUint) -> Scalar {
        Scalar(x % &self.q)
    }

    pub fn scalar_from_u64(&self, x: u64) -> Scalar {
        self.scalar(BigUint::from(x))
    }

    /// Scalar constructor that rejects unreduced input.
    pub fn scalar_checked(&self, x: BigUint) -> Result<Scalar, CryptoError> {
        if x >= self.q {
            return Err(CryptoError::OutOfRange);
        }
        Ok(Scalar(x))
    }

    /// Uniform in `[0, q)`.
    pub fn random_scalar<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Scalar {
        Scalar(rng.gen_biguint_below(&self.q))
    }

    /// Uniform in `[1, q)`.
    pub fn random_nonzero_scalar<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Scalar {
        Scalar(rng.gen_biguint_range(&BigUint::one(), &self.q))
    }

    /// Uniform over the subgroup.
    pub fn random_element<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Element {
        let s = self.random_scalar(rng);
        self.g_pow(&s)
    }

    pub fn s_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &b.0) % &self.q)
    }

    pub fn s_sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &self.q - &b.0) % &self.q)
    }

    pub fn s_mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 * &b.0) % &self.q)
    }

    pub fn s_neg(&self, a: &Scalar) -> Scalar {
        Scalar((&self.q - &a.0) % &self.q)
    }

    /// Multiplicative inverse mod q, `None` for zero.
    pub fn s_inv(&self, a: &Scalar) -> Option<Scalar> {
        a.0.modinv(&self.q).map(Scalar)
    }

    pub fn mul(&self, a: &Element, b: &Element) -> Element {
        Element((&a.0 * &b.0) % &self.p)
    }

    pub fn inv(&self, a: &Element) -> Element {
        Element(a.0.modinv(&self.p).expect("subgroup elements are units"))
    }

    pub fn div(&self, a: &Element, b: &Element) -> Element {
        self.mul(a, &self.inv(b))
    }

    pub fn pow(&self, base: &Element, e: &Scalar) -> Element {
        Element(base.0.modpow(&e.0, &self.p))
    }

    /// `g^e` via the precomputed table.
    pub fn g_pow(&self, e: &Scalar) -> Element {
        Element(self.g_table.pow(&e.0, &self.p))
    }

    /// `h^e` via the precomputed table.
    pub fn h_pow(&self, e: &Scalar) -> Element {
        Element(self.h_table.pow(&e.0, &self.p))
    }

    /// `g^a · h^b`.
    pub fn gh_pow(&self, a: &Scalar, b: &Scalar) -> Element {
        self.mul(&self.g_pow(a), &self.h_pow(b))
    }

    /// Product of `base_i^e_i`.
    pub fn product_of_powers(&self, terms: &[(&Element, &Scalar)]) -> Element {
        terms.iter().fold(self.identity(), |acc, (b, e)| self.mul(&acc, &self.pow(b, e)))
    }
}
