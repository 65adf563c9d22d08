//! Discrete-round simulator of a clustered terahertz nanosensor network
//! powered by SWIPT.
//!
//! The crate is organized bottom-up: [`channel`] and [`energy`] hold the
//! physical models, [`swipt`] the per-cluster coefficient optimizer,
//! [`clustering`] the head elections, [`frame`] the TDMA schedule,
//! [`engine`] the round state machine, and [`metrics`] the evaluation
//! quantities computed from a trace.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod clustering;
pub mod config;
pub mod energy;
pub mod engine;
pub mod error;
pub mod frame;
pub mod geometry;
pub mod metrics;
pub mod swipt;

pub use channel::ChannelParams;
pub use clustering::{Cluster, ClusterPartition, ElectionParams};
pub use config::{Protocol, SimConfig};
pub use energy::{ConsumptionParams, HarvestParams};
pub use engine::{deploy, run_simulation, EnergyAudit, NodeState, SimTrace, Simulation};
pub use error::{Error, Result};
pub use geometry::Point;
pub use metrics::{RoundMetrics, Summary};
pub use swipt::{Mechanism, OptimizerOptions, RateMode, SwiptCoefficients};
