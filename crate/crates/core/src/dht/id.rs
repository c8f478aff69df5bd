use std::fmt;

use rand::Rng;

use crate::crypto::sha256;

/// Simulated network address of a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeAddr(pub u32);

impl fmt::Display for NodeAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// 256-bit identifier shared by nodes and keys.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub [u8; 32]);

/// XOR distance, ordered as a big-endian integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Distance(pub [u8; 32]);

/// Length in bytes of the key prefix a value lookup reveals.
pub const REGION_LEN: usize = 8;

/// Leading bytes of a key. Value lookups carry a region instead of the key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct KeyRegion(pub [u8; REGION_LEN]);

impl NodeId {
    pub const ZERO: NodeId = NodeId([0; 32]);

    /// `SHA-256(addr ‖ nonce)`.
    pub fn for_node(addr: NodeAddr, nonce: u64) -> Self {
        let mut buf = [0u8; 12];
        buf[..4].copy_from_slice(&addr.0.to_be_bytes());
        buf[4..].copy_from_slice(&nonce.to_be_bytes());
        NodeId(sha256(&buf))
    }

    /// DHT key of a domain: SHA-256 of its lowercase name.
    pub fn for_domain(domain: &str) -> Self {
        NodeId(sha256(domain.trim().trim_end_matches('.').to_ascii_lowercase().as_bytes()))
    }

    pub fn random<R: Rng>(rng: &mut R) -> Self {
        NodeId(rng.gen())
    }

    /// A random id that falls in bucket `bucket` of this id's table.
    pub fn random_in_bucket<R: Rng>(&self, bucket: usize, rng: &mut R) -> Self {
        assert!(bucket < 256, "bucket index out of range");
        let mut d: [u8; 32] = rng.gen();
        let top = 255 - bucket;
        for bit in 0..top {
            d[bit / 8] &= !(0x80 >> (bit % 8));
        }
        d[top / 8] |= 0x80 >> (top % 8);
        let mut id = self.0;
        for (b, x) in id.iter_mut().zip(d) {
            *b ^= x;
        }
        NodeId(id)
    }

    pub fn distance(&self, other: &NodeId) -> Distance {
        let mut d = [0u8; 32];
        for (i, b) in d.iter_mut().enumerate() {
            *b = self.0[i] ^ other.0[i];
        }
        Distance(d)
    }

    /// Index of the k-bucket `other` falls in: the position of the highest
    /// differing bit, 255 for the top bit. `None` for `self`.
    pub fn bucket_index(&self, other: &NodeId) -> Option<usize> {
        let d = self.distance(other);
        let zeros = d.leading_zeros();
        (zeros < 256).then(|| 255 - zeros as usize)
    }

    pub fn region(&self) -> KeyRegion {
        let mut r = [0u8; REGION_LEN];
        r.copy_from_slice(&self.0[..REGION_LEN]);
        KeyRegion(r)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        bytes.try_into().ok().map(NodeId)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodeId({})", hex::encode(&self.0[..6]))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl Distance {
    pub fn leading_zeros(&self) -> u32 {
        let mut n = 0;
        for b in self.0 {
            if b == 0 {
                n += 8;
            } else {
                return n + b.leading_zeros();
            }
        }
        n
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 32]
    }
}

impl KeyRegion {
    pub fn contains(&self, key: &NodeId) -> bool {
        key.0[..REGION_LEN] == self.0
    }

    /// The lowest identifier in the region, used as a lookup target.
    pub fn target(&self) -> NodeId {
        let mut id = [0u8; 32];
        id[..REGION_LEN].copy_from_slice(&self.0);
        NodeId(id)
    }
}
