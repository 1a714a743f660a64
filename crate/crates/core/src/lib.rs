//! ccNUMA scheduling simulator.
//!
//! Each scheduling quantum the simulator observes pairwise cache-to-cache
//! transfer counts and per-node DRAM access counts, regroups threads so
//! heavy communicators share a socket, and places each group on the node
//! whose memory it uses most. Costs come from an additive latency model
//! with an optional cache-affinity penalty for threads that change node.
//!
//! - [`model`]: dimensions, latencies, count matrices, schedules
//! - [`c2c`]: max-partner and sorted-pairs grouping
//! - [`dram`]: global and per-node greedy group placement
//! - [`cost`]: per-quantum cycle costs
//! - [`workload`]: phase-structured synthetic traces
//! - [`sim`]: policy replay and latency sweeps
//! - [`oracle`]: exhaustive search for small instances
//! - [`report`], [`config`]: file formats and run settings

pub mod c2c;
pub mod config;
pub mod cost;
pub mod dram;
pub mod error;
pub mod model;
pub mod oracle;
pub mod report;
pub mod sim;
pub mod workload;

pub use error::{Error, Result};
pub use model::{
    identity_schedule, migrated_threads, validate_schedule, C2CMatrix, Count, Cycles, DramMatrix, Grouping,
    LatencyConfig, NodeAssignment, Schedule, SystemConfig, Violation,
};
pub use sim::{simulate, sweep, Policy, SimResult};
pub use workload::{gen_trace, Trace, Workload, WorkloadSpec};
