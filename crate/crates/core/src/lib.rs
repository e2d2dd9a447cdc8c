//! Discrete-event simulator for LAR scheme 1 (Location-Aided Routing) over
//! Manhattan-grid vehicular mobility.
//!
//! The crate is layered bottom-up:
//!
//! * [`geometry`] — expected/request zones and membership tests.
//! * [`mobility`] and [`trace`] — Manhattan-grid vehicle movement and the
//!   plain-text trace interchange format.
//! * [`phy`] — unit-disk channel with an interval-overlap collision model.
//! * [`routing`] — the per-node LAR1 state machine.
//! * [`traffic`] — CBR flow generation.
//! * [`engine`] and [`metrics`] — the event loop, PDR / delay accounting and
//!   multi-seed aggregation.
//! * [`config`], [`report`], [`plot`], [`sweep`] — scenario files, CSV
//!   results, SVG charts and parameter sweeps used by the `larsim` binary.

// Validation writes `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod mobility;
pub mod packet;
pub mod phy;
pub mod plot;
pub mod report;
pub mod rng;
pub mod routing;
pub mod sweep;
pub mod trace;
pub mod traffic;

/// Index of a vehicle, `0..node_count`.
pub type NodeId = usize;

pub use config::{parse_config, RunConfig, ScenarioConfig, ScenarioId};
pub use engine::{run, run_with, RunOptions, RunOutcome};
pub use error::{Error, Result};
pub use geometry::{
    contains, distance, expected_zone, request_zone, ExpectedZone, LocationRecord, Position,
    RequestZone,
};
pub use metrics::{aggregate, avg_delay, pdr, MetricsAccumulator, RunReport, ScenarioSummary};
