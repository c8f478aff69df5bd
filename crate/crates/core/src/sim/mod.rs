//! Discrete-event simulation of the whole system: DHT nodes, destination
//! servers and session chains over a lossy, delayed network.

pub mod audit;
pub mod bench;
pub mod config;
pub mod engine;
pub mod log;
pub mod metrics;
pub mod net;
pub mod scenario;
pub mod world;

pub use config::{ConfigError, Providers, SimConfig};
pub use engine::EventQueue;
pub use log::{Direction, LogEntry, Observation};
pub use metrics::{cdf_summary, percentile, CdfSummary, Metric, MetricsRecord};
pub use net::{LatencyModel, Link};
pub use world::{ClientBehavior, Destination, LookupTrace, Session, SessionMarks, SessionOptions, SimError, World};
pub use audit::{audit_session, Finding};
pub use scenario::{pick_endpoints, run_scenario, run_simulation, ScenarioReport, SimRun};
pub use bench::{bench_lookup, bench_zkp, LookupBench, LookupBenchConfig, LookupSample, ZkpBench, ZkpSample};
