//! Downlink LTE simulator for comparing packet schedulers in a macro cell
//! with and without a closed-access femtocell overlay.

// `!(x > 0.0)` is used on purpose so validation also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod output;
pub mod rng;
pub mod scenario;
pub mod sched;
pub mod sweep;
pub mod traffic;
pub mod trends;

pub use config::ScenarioConfig;
pub use engine::{run, Simulation};
pub use error::{Error, Result};
pub use metrics::MetricsReport;
