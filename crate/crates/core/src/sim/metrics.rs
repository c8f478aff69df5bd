//! Measurement rows, CSV output and percentile summaries.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Sim time from the start of the lookup to the response at the relay.
    LookupDuration,
    /// Sim time from the response at the relay to the reset at the client.
    SpliceDuration,
    /// Wall-clock time to build an attestation.
    ProveTime,
    /// Wall-clock time to verify one.
    VerifyTime,
    /// Sim time from session start to the gate result at the client.
    E2eSetup,
}

impl Metric {
    pub const ALL: [Metric; 5] =
        [Metric::LookupDuration, Metric::SpliceDuration, Metric::ProveTime, Metric::VerifyTime, Metric::E2eSetup];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::LookupDuration => "lookup_duration",
            Metric::SpliceDuration => "splice_duration",
            Metric::ProveTime => "prove_time",
            Metric::VerifyTime => "verify_time",
            Metric::E2eSetup => "e2e_setup",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        [Metric::LookupDuration, Metric::SpliceDuration, Metric::ProveTime, Metric::VerifyTime, Metric::E2eSetup]
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub run_id: String,
    pub metric: Metric,
    pub value_ms: f64,
    pub detail: String,
}

impl MetricsRecord {
    pub fn new(run_id: impl Into<String>, metric: Metric, value_ms: f64, detail: impl Into<String>) -> Self {
        debug_assert!(value_ms >= 0.0);
        MetricsRecord { run_id: run_id.into(), metric, value_ms, detail: detail.into() }
    }
}

pub fn write_csv(records: &[MetricsRecord], path: &Path) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    if records.is_empty() {
        w.write_record(["run_id", "metric", "value_ms", "detail"])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<MetricsRecord>, csv::Error> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

pub const PERCENTILES: [u32; 7] = [10, 25, 50, 75, 90, 95, 99];

/// Nearest-rank percentile of unsorted samples: the smallest value with at
/// least `p`% of the samples at or below it.
pub fn percentile(samples: &[f64], p: u32) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p as f64 / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    Some(sorted[rank - 1])
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdfSummary {
    pub count: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// `(p, value)` for each of [`PERCENTILES`].
    pub percentiles: Vec<(u32, f64)>,
}

pub fn cdf_summary(samples: &[f64]) -> Option<CdfSummary> {
    if samples.is_empty() {
        return None;
    }
    Some(CdfSummary {
        count: samples.len(),
        min: samples.iter().copied().fold(f64::INFINITY, f64::min),
        mean: samples.iter().sum::<f64>() / samples.len() as f64,
        max: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        percentiles: PERCENTILES.iter().map(|&p| (p, percentile(samples, p).expect("nonempty"))).collect(),
    })
}

impl CdfSummary {
    pub fn get(&self, p: u32) -> Option<f64> {
        self.percentiles.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }
}

impl fmt::Display for CdfSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} min={:.3} mean={:.3} max={:.3}", self.count, self.min, self.mean, self.max)?;
        for (p, v) in &self.percentiles {
            write!(f, " p{p}={v:.3}")?;
        }
        Ok(())
    }
}
