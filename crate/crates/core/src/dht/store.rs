use rand::seq::SliceRandom;
use rand::{CryptoRng, RngCore};
use thiserror::Error;

use super::id::{KeyRegion, NodeAddr, NodeId};
use super::message::{NotifyA, ValueResponse};
use crate::clock::SimTime;
use crate::crypto::{elgamal_encrypt, schnorr_sign, Element, GroupParams, SigKeypair};

/// One whitelist record: provider `provider` carries traffic for the domain
/// hashing to `key`, whose public key is `pk_d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WhitelistEntry {
    pub key: NodeId,
    pub provider: NodeAddr,
    pub pk_d: Element,
    pub expires_at: SimTime,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum StoreError {
    #[error("entry expired at {expires_at} (now {now})")]
    Expired { expires_at: SimTime, now: SimTime },
}

#[derive(Clone, Debug, Default)]
pub struct Store {
    entries: Vec<WhitelistEntry>,
}

impl Store {
    /// Stores `entry`, replacing any entry with the same key and provider.
    pub fn handle_store(&mut self, entry: WhitelistEntry, now: SimTime) -> Result<(), StoreError> {
        if entry.expires_at <= now {
            return Err(StoreError::Expired { expires_at: entry.expires_at, now });
        }
        match self.entries.iter_mut().find(|e| e.key == entry.key && e.provider == entry.provider) {
            Some(existing) => *existing = entry,
            None => self.entries.push(entry),
        }
        Ok(())
    }

    /// Drops every entry with `expires_at <= now`.
    pub fn expire_entries(&mut self, now: SimTime) -> usize {
        let before = self.entries.len();
        self.entries.retain(|e| e.expires_at > now);
        before - self.entries.len()
    }

    /// Drops every entry for `key`, whoever provided it.
    pub fn remove_key(&mut self, key: &NodeId) -> usize {
        let before = self.entries.len();
        self.entries.retain(|e| e.key != *key);
        before - self.entries.len()
    }

    pub fn live(&self, key: &NodeId, now: SimTime) -> impl Iterator<Item = &WhitelistEntry> {
        let key = *key;
        self.entries.iter().filter(move |e| e.key == key && e.expires_at > now)
    }

    pub fn live_in_region(&self, region: &KeyRegion, now: SimTime) -> Vec<&WhitelistEntry> {
        self.entries.iter().filter(|e| region.contains(&e.key) && e.expires_at > now).collect()
    }

    pub fn entries(&self) -> &[WhitelistEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// What the responsible node sends when it holds a matching entry: the
/// response for the relay and the notification for the provider.
#[derive(Clone, Debug)]
pub struct ValueReply {
    pub provider: NodeAddr,
    pub response: ValueResponse,
    pub notify: NotifyA,
}

/// Picks one live entry in `region` uniformly at random, encrypts its
/// domain key under `pk_eg` and signs the ciphertext.
#[allow(clippy::too_many_arguments)]
pub fn respond_value<R: RngCore + CryptoRng>(
    params: &GroupParams,
    store: &Store,
    region: &KeyRegion,
    pk_eg: &Element,
    token: u64,
    signer: &SigKeypair,
    now: SimTime,
    notify_window: SimTime,
    rng: &mut R,
) -> Option<ValueReply> {
    let live = store.live_in_region(region, now);
    let entry = live.choose(rng)?;
    let (c_pkd, _) = elgamal_encrypt(params, &entry.pk_d, pk_eg, rng);
    let sig_r = schnorr_sign(params, &c_pkd.encode(params), signer, rng);
    Some(ValueReply {
        provider: entry.provider,
        response: ValueResponse { token, provider: entry.provider, c_pkd, sig_r, pk_r: signer.pk.clone() },
        notify: NotifyA { pk_r: signer.pk.clone(), valid_until: now + notify_window },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{elgamal_decrypt, group_setup, schnorr_verify, ElGamalKeypair, SecurityLabel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn entry(params: &GroupParams, key: NodeId, provider: u32, expires: u64) -> WhitelistEntry {
        WhitelistEntry { key, provider: NodeAddr(provider), pk_d: params.g_pow(&params.scalar_from_u64(4)), expires_at: SimTime(expires) }
    }

    #[test]
    fn store_replace_and_reject() {
        let params = group_setup(SecurityLabel::Toy);
        let key = NodeId::for_domain("example.org");
        let mut s = Store::default();
        s.handle_store(entry(&params, key, 1, 100), SimTime(0)).unwrap();
        s.handle_store(entry(&params, key, 1, 200), SimTime(50)).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.entries()[0].expires_at, SimTime(200));
        assert!(s.handle_store(entry(&params, key, 2, 50), SimTime(50)).is_err());
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn expiry_boundary_is_inclusive() {
        let params = group_setup(SecurityLabel::Toy);
        let mut s = Store::default();
        assert_eq!(s.expire_entries(SimTime(0)), 0);
        s.handle_store(entry(&params, NodeId::for_domain("a.test"), 1, 100), SimTime(0)).unwrap();
        s.handle_store(entry(&params, NodeId::for_domain("b.test"), 1, 200), SimTime(0)).unwrap();
        assert_eq!(s.expire_entries(SimTime(99)), 0);
        assert_eq!(s.live(&NodeId::for_domain("a.test"), SimTime(100)).count(), 0);
        assert_eq!(s.expire_entries(SimTime(100)), 1);
        assert_eq!(s.expire_entries(SimTime(500)), 1);
        assert!(s.is_empty());
    }

    #[test]
    fn response_decrypts_to_domain_key_and_verifies() {
        let params = group_setup(SecurityLabel::Std256);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let key = NodeId::for_domain("example.org");
        let dest = ElGamalKeypair::generate(&params, &mut rng);
        let eph = ElGamalKeypair::generate(&params, &mut rng);
        let signer = SigKeypair::generate(&params, &mut rng);
        let mut s = Store::default();
        s.handle_store(WhitelistEntry { key, provider: NodeAddr(7), pk_d: dest.pk.clone(), expires_at: SimTime(10) }, SimTime(0))
            .unwrap();
        let reply =
            respond_value(&params, &s, &key.region(), &eph.pk, 9, &signer, SimTime(1), SimTime(5), &mut rng).unwrap();
        assert_eq!(reply.provider, NodeAddr(7));
        assert_eq!(reply.notify.valid_until, SimTime(6));
        let r = &reply.response;
        assert_eq!(elgamal_decrypt(&params, &r.c_pkd, &eph.sk), dest.pk);
        assert!(schnorr_verify(&params, &r.c_pkd.encode(&params), &r.sig_r, &r.pk_r));
        assert!(respond_value(&params, &s, &key.region(), &eph.pk, 9, &signer, SimTime(10), SimTime(5), &mut rng).is_none());
    }

    #[test]
    fn selection_is_uniform() {
        let params = group_setup(SecurityLabel::Toy);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let key = NodeId::for_domain("example.org");
        let signer = SigKeypair::generate(&params, &mut rng);
        let mut s = Store::default();
        for p in 0..5 {
            s.handle_store(entry(&params, key, p, 1000), SimTime(0)).unwrap();
        }
        let pk = params.g_pow(&params.scalar_from_u64(3));
        let mut counts = [0u32; 5];
        for _ in 0..10_000 {
            let reply =
                respond_value(&params, &s, &key.region(), &pk, 0, &signer, SimTime(0), SimTime(1), &mut rng).unwrap();
            counts[reply.provider.0 as usize] += 1;
        }
        for c in counts {
            assert!((1700..=2300).contains(&c), "{counts:?}");
        }
    }
}
