//! Privacy audit over what nodes received during a session.
//!
//! Everything a node other than the client and the destination received
//! while the session ran is scanned for the domain name, its DHT key, the
//! destination's public key and the SNI exponent. Value requests are also
//! checked for naming the client as the reply address. Secrets shorter
//! than eight bytes (toy-group values) would match by chance and are skipped.

use std::fmt;

use super::log::Observation;
use super::scenario::ScenarioReport;
use super::world::World;
use crate::attest::encode_sni;
use crate::clock::SimTime;
use crate::crypto::encoding::{element_bytes, scalar_bytes};
use crate::dht::{message::tags, Message, NodeAddr, NodeId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Finding {
    pub time: SimTime,
    pub node: NodeAddr,
    pub from: NodeAddr,
    pub what: &'static str,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {} from {} (t={}us)", self.what, self.node, self.from, self.time)
    }
}

const MIN_SECRET_LEN: usize = 8;

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    needle.len() >= MIN_SECRET_LEN && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Secrets of one domain, as the byte strings that would leak them.
pub fn domain_secrets(world: &World, domain: &str) -> Vec<(&'static str, Vec<u8>)> {
    let p = world.params();
    let mut out = vec![("domain name", domain.as_bytes().to_vec()), ("domain key", NodeId::for_domain(domain).0.to_vec())];
    if let Some(d) = world.destination(domain) {
        out.push(("destination public key", element_bytes(p, &d.keys.pk)));
        out.push(("SNI exponent", scalar_bytes(p, &encode_sni(p, &d.domain))));
    }
    out
}

/// Scans `observations` received by anyone but `exempt`.
pub fn scan(observations: &[Observation], secrets: &[(&'static str, Vec<u8>)], exempt: &[NodeAddr]) -> Vec<Finding> {
    observations
        .iter()
        .filter(|o| !exempt.contains(&o.node))
        .flat_map(|o| {
            secrets.iter().filter(|(_, s)| contains(&o.payload, s)).map(|(what, _)| Finding {
                time: o.time,
                node: o.node,
                from: o.from,
                what,
            })
        })
        .collect()
}

pub fn audit_session(world: &World, report: &ScenarioReport) -> Vec<Finding> {
    let Some(dest) = world.destination(&report.domain) else { return Vec::new() };
    let secrets = domain_secrets(world, &report.domain);
    let seen = &world.observations()[report.observed.clone()];
    let mut findings = scan(seen, &secrets, &[report.client, dest.addr]);
    for o in seen {
        if o.payload.first() != Some(&tags::FIND_VALUE) {
            continue;
        }
        if let Ok(Message::FindValue { reply_to, token, .. }) = Message::decode(world.params(), &o.payload) {
            if token == report.session && reply_to == report.client {
                findings.push(Finding { time: o.time, node: o.node, from: o.from, what: "value request names the client" });
            }
        }
    }
    findings
}
