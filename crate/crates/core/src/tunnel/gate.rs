use super::state::InterruptReason;
use crate::attest::AttestationBundle;
use crate::clock::SimTime;
use crate::crypto::Element;
use crate::dht::NotifyA;

/// Relay keys a provider was told to expect, each with its expiry.
#[derive(Clone, Debug, Default)]
pub struct NotifiedKeys {
    keys: Vec<(Element, SimTime)>,
}

impl NotifiedKeys {
    pub fn add(&mut self, notify: &NotifyA) {
        match self.keys.iter_mut().find(|(pk, _)| *pk == notify.pk_r) {
            Some(entry) => entry.1 = entry.1.max(notify.valid_until),
            None => self.keys.push((notify.pk_r.clone(), notify.valid_until)),
        }
    }

    pub fn is_trusted(&self, pk_r: &Element, now: SimTime) -> bool {
        self.keys.iter().any(|(pk, until)| pk == pk_r && now < *until)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GateOutcome {
    Authorized,
    Interrupted(InterruptReason),
}

/// Exit-side decision on an attestation: the relay key must have been
/// notified and still be valid, and the proof must verify.
pub fn gate(bundle: &AttestationBundle, notified: &NotifiedKeys, now: SimTime) -> GateOutcome {
    if !notified.is_trusted(bundle.statement.pk_r(), now) {
        return GateOutcome::Interrupted(InterruptReason::UntrustedRelay);
    }
    if bundle.verify() {
        GateOutcome::Authorized
    } else {
        GateOutcome::Interrupted(InterruptReason::ProofRejected)
    }
}

/// As [`gate`], for a bundle still in wire form.
pub fn gate_bytes(bundle: &[u8], notified: &NotifiedKeys, now: SimTime) -> GateOutcome {
    match AttestationBundle::decode(bundle) {
        Ok(b) => gate(&b, notified, now),
        Err(_) => GateOutcome::Interrupted(InterruptReason::Malformed),
    }
}
