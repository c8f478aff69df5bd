use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::clock::SimTime;

/// One-way delay of a single network hop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatencyModel {
    Fixed(SimTime),
    /// Uniform over `[lo, hi]`, drawn per message at microsecond resolution.
    Uniform { lo: SimTime, hi: SimTime },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("bad latency model `{0}`: expected fixed:<ms> or uniform:<lo>:<hi>")]
pub struct LatencyParseError(pub String);

impl LatencyModel {
    pub fn sample(&self, rng: &mut ChaCha20Rng) -> SimTime {
        match *self {
            LatencyModel::Fixed(d) => d,
            LatencyModel::Uniform { lo, hi } => SimTime(rng.gen_range(lo.as_micros()..=hi.as_micros())),
        }
    }

    pub fn min(&self) -> SimTime {
        match *self {
            LatencyModel::Fixed(d) => d,
            LatencyModel::Uniform { lo, .. } => lo,
        }
    }

    pub fn max(&self) -> SimTime {
        match *self {
            LatencyModel::Fixed(d) => d,
            LatencyModel::Uniform { hi, .. } => hi,
        }
    }
}

impl FromStr for LatencyModel {
    type Err = LatencyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || LatencyParseError(s.to_string());
        let ms = |x: &str| x.trim().parse::<u64>().map(SimTime::from_millis).map_err(|_| err());
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["fixed", v] => Ok(LatencyModel::Fixed(ms(v)?)),
            ["uniform", lo, hi] => {
                let (lo, hi) = (ms(lo)?, ms(hi)?);
                if lo > hi {
                    return Err(err());
                }
                Ok(LatencyModel::Uniform { lo, hi })
            }
            _ => Err(err()),
        }
    }
}

impl fmt::Display for LatencyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatencyModel::Fixed(d) => write!(f, "fixed:{}", d.as_micros() / 1000),
            LatencyModel::Uniform { lo, hi } => write!(f, "uniform:{}:{}", lo.as_micros() / 1000, hi.as_micros() / 1000),
        }
    }
}

impl Serialize for LatencyModel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LatencyModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Latency and loss for every message, drawn from one seeded stream.
#[derive(Debug)]
pub struct Link {
    latency: LatencyModel,
    loss_rate: f64,
    rng: ChaCha20Rng,
}

impl Link {
    pub fn new(latency: LatencyModel, loss_rate: f64, rng: ChaCha20Rng) -> Self {
        Link { latency, loss_rate, rng }
    }

    pub fn latency(&self) -> LatencyModel {
        self.latency
    }

    /// Delay for one message, or `None` if it is lost.
    pub fn transmit(&mut self) -> Option<SimTime> {
        if self.loss_rate > 0.0 && self.rng.gen_bool(self.loss_rate) {
            return None;
        }
        Some(self.latency.sample(&mut self.rng))
    }
}
