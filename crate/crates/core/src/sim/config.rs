//! Simulation configuration, read from TOML.
//!
//! ```toml
//! n_nodes = 64            # DHT nodes, addresses 0..n_nodes
//! seed = 0                # drives every random choice of a run
//! latency = "fixed:50"    # per hop: "fixed:<ms>" or "uniform:<lo>:<hi>"
//! loss_rate = 0.0         # per-message loss probability, in [0, 1)
//! group = "std256"        # "toy" or "std256"
//! window_secs = 30        # attestation window T
//! ttl_secs = 1800         # lifetime of a stored whitelist entry
//! k = 8                   # bucket size and lookup width
//! alpha = 3               # queries per lookup round
//! r_rep = 3               # replicas per entry
//!
//! [whitelist]             # domain -> provider node(s)
//! "example.org" = 3
//! "news.test" = [5, 9]
//! ```
//!
//! Every field except `whitelist` has the default shown.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::net::LatencyModel;
use crate::clock::SimTime;
use crate::crypto::SecurityLabel;
use crate::dht::{DhtConfig, NodeAddr};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Providers {
    One(u32),
    Many(Vec<u32>),
}

impl Providers {
    pub fn addrs(&self) -> Vec<NodeAddr> {
        match self {
            Providers::One(a) => vec![NodeAddr(*a)],
            Providers::Many(v) => v.iter().map(|a| NodeAddr(*a)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub n_nodes: u32,
    pub seed: u64,
    pub latency: LatencyModel,
    pub loss_rate: f64,
    pub whitelist: BTreeMap<String, Providers>,
    pub group: SecurityLabel,
    pub window_secs: u64,
    pub ttl_secs: u64,
    pub k: usize,
    pub alpha: usize,
    pub r_rep: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_nodes: 64,
            seed: 0,
            latency: LatencyModel::Fixed(SimTime::from_millis(50)),
            loss_rate: 0.0,
            whitelist: BTreeMap::new(),
            group: SecurityLabel::Std256,
            window_secs: 30,
            ttl_secs: 1800,
            k: 8,
            alpha: 3,
            r_rep: 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: SimConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.n_nodes == 0 {
            return invalid("n_nodes must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.loss_rate) {
            return invalid(format!("loss_rate {} outside [0, 1)", self.loss_rate));
        }
        if self.k == 0 || self.alpha == 0 || self.r_rep == 0 {
            return invalid("k, alpha and r_rep must be positive".into());
        }
        if self.window_secs == 0 || self.ttl_secs == 0 {
            return invalid("window_secs and ttl_secs must be positive".into());
        }
        for (domain, providers) in &self.whitelist {
            if crate::attest::normalize_domain(domain).is_err() {
                return invalid("empty domain in whitelist".into());
            }
            let addrs = providers.addrs();
            if addrs.is_empty() {
                return invalid(format!("domain `{domain}` has no provider"));
            }
            if let Some(a) = addrs.iter().find(|a| a.0 >= self.n_nodes) {
                return invalid(format!("provider {} of `{domain}` is not a node", a.0));
            }
        }
        Ok(())
    }

    pub fn window(&self) -> SimTime {
        SimTime::from_secs(self.window_secs)
    }

    pub fn dht_config(&self) -> DhtConfig {
        DhtConfig {
            k: self.k,
            alpha: self.alpha,
            r_rep: self.r_rep,
            ttl: SimTime::from_secs(self.ttl_secs),
            round_timeout: SimTime(2 * self.latency.max().as_micros() + 1_000),
            ..DhtConfig::default()
        }
    }
}
