//! Quantum-by-quantum replay of a trace under a scheduling policy.
//!
//! Quantum 1 always runs under the identity schedule. The schedule for
//! quantum `q + 1` is computed from quantum `q`'s observed counts alone and
//! then charged against quantum `q + 1`'s counts. The baseline holds the
//! identity schedule for the whole run and never migrates.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::c2c::{group_by_max_partner, group_by_sorted_pairs};
use crate::cost::{improvement_pct, quantum_cost, CostBreakdown};
use crate::dram::{aggregate_group_dram, assign_global_greedy, assign_per_node_greedy};
use crate::error::{Error, Result};
use crate::model::{
    identity_schedule, migrated_threads, Cycles, LatencyConfig, NodeAssignment, Schedule, SystemConfig,
};
use crate::workload::{Quantum, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum C2cAlg {
    /// Max-partner grouping.
    MaxPartner,
    /// Sorted-pairs grouping.
    SortedPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DramAlg {
    /// Global greedy over all (group, node) entries.
    GlobalGreedy,
    /// Node-by-node greedy.
    PerNodeGreedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Policy {
    pub c2c: Option<C2cAlg>,
    pub dram: Option<DramAlg>,
    /// Charge the cache-affinity penalty for migrated threads.
    pub affinity: bool,
}

impl Policy {
    pub const BASELINE: Policy = Policy {
        c2c: None,
        dram: None,
        affinity: false,
    };

    pub fn new(c2c: Option<C2cAlg>, dram: Option<DramAlg>, affinity: bool) -> Self {
        Policy { c2c, dram, affinity }
    }

    pub fn with_affinity(self, affinity: bool) -> Self {
        Policy { affinity, ..self }
    }

    /// Policy name without the affinity flag, e.g. `c2c2+dram2`.
    pub fn name(&self) -> String {
        let parts: Vec<&str> = [
            self.c2c.map(|a| match a {
                C2cAlg::MaxPartner => "c2c1",
                C2cAlg::SortedPairs => "c2c2",
            }),
            self.dram.map(|a| match a {
                DramAlg::GlobalGreedy => "dram1",
                DramAlg::PerNodeGreedy => "dram2",
            }),
        ]
        .into_iter()
        .flatten()
        .collect();
        if parts.is_empty() {
            "none".to_owned()
        } else {
            parts.join("+")
        }
    }

    /// Next schedule from the previous one and the last observation.
    pub fn next_schedule(&self, config: &SystemConfig, prev: &Schedule, observed: &Quantum) -> Result<Schedule> {
        let grouping = match self.c2c {
            None => prev.grouping.clone(),
            Some(C2cAlg::MaxPartner) => group_by_max_partner(&observed.c2c, config)?,
            Some(C2cAlg::SortedPairs) => group_by_sorted_pairs(&observed.c2c, config)?,
        };
        let assignment = match self.dram {
            None => NodeAssignment::identity(config.n_nodes()),
            Some(alg) => {
                let gd = aggregate_group_dram(&grouping, &observed.dram)?;
                match alg {
                    DramAlg::GlobalGreedy => assign_global_greedy(&gd),
                    DramAlg::PerNodeGreedy => assign_per_node_greedy(&gd),
                }
            }
        };
        Ok(Schedule::new(grouping, assignment))
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    /// Parses `none` or a `+`-joined combination of at most one of
    /// `c2c1`/`c2c2` and one of `dram1`/`dram2`. Affinity is off.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "none" {
            return Ok(Policy::BASELINE);
        }
        let mut p = Policy::BASELINE;
        for tok in s.split('+') {
            match tok.trim() {
                "c2c1" if p.c2c.is_none() => p.c2c = Some(C2cAlg::MaxPartner),
                "c2c2" if p.c2c.is_none() => p.c2c = Some(C2cAlg::SortedPairs),
                "dram1" if p.dram.is_none() => p.dram = Some(DramAlg::GlobalGreedy),
                "dram2" if p.dram.is_none() => p.dram = Some(DramAlg::PerNodeGreedy),
                _ => return Err(Error::Policy(s.to_owned())),
            }
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub per_quantum: Vec<CostBreakdown>,
    pub baseline_per_quantum: Vec<CostBreakdown>,
    pub schedules: Vec<Schedule>,
    /// Threads charged a migration penalty in each quantum (empty with
    /// affinity off).
    pub migrated: Vec<BTreeSet<usize>>,
    pub baseline_total: Cycles,
    pub optimized_total: Cycles,
    pub improvement: f64,
}

pub fn simulate(trace: &Trace, policy: &Policy, lat: &LatencyConfig) -> Result<SimResult> {
    lat.validate()?;
    let config = trace.config();
    let identity = identity_schedule(config);
    let no_migration = BTreeSet::new();

    let mut per_quantum = Vec::with_capacity(config.n_quanta());
    let mut baseline_per_quantum = Vec::with_capacity(config.n_quanta());
    let mut schedules: Vec<Schedule> = Vec::with_capacity(config.n_quanta());
    let mut migrated = Vec::with_capacity(config.n_quanta());

    for (q, quantum) in trace.quanta().iter().enumerate() {
        let sched = match schedules.last() {
            None => identity.clone(),
            Some(prev) => policy.next_schedule(config, prev, &trace.quanta()[q - 1])?,
        };
        let moved = match schedules.last() {
            Some(prev) if policy.affinity => migrated_threads(prev, &sched)?,
            _ => BTreeSet::new(),
        };
        per_quantum.push(quantum_cost(&sched, &quantum.c2c, &quantum.dram, lat, &moved)?);
        baseline_per_quantum.push(quantum_cost(
            &identity,
            &quantum.c2c,
            &quantum.dram,
            lat,
            &no_migration,
        )?);
        schedules.push(sched);
        migrated.push(moved);
    }

    let optimized_total = per_quantum.iter().map(|c| c.total).sum();
    let baseline_total = baseline_per_quantum.iter().map(|c| c.total).sum();
    Ok(SimResult {
        improvement: improvement_pct(baseline_total, optimized_total)?,
        per_quantum,
        baseline_per_quantum,
        schedules,
        migrated,
        baseline_total,
        optimized_total,
    })
}

/// One `(policy, latency point)` cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub policy: Policy,
    pub lat: LatencyConfig,
    pub result: SimResult,
}

/// Every policy at every latency point, policy-major. Cells are independent
/// and evaluated in parallel; output order is fixed.
pub fn sweep(trace: &Trace, policies: &[Policy], lat_points: &[LatencyConfig]) -> Result<Vec<SweepCell>> {
    if policies.is_empty() || lat_points.is_empty() {
        return Err(Error::InvalidConfig(
            "sweep needs at least one policy and one latency point".into(),
        ));
    }
    let grid: Vec<(Policy, LatencyConfig)> = policies
        .iter()
        .flat_map(|p| lat_points.iter().map(move |l| (*p, *l)))
        .collect();
    grid.into_par_iter()
        .map(|(policy, lat)| simulate(trace, &policy, &lat).map(|result| SweepCell { policy, lat, result }))
        .collect()
}

/// [`sweep`] on a dedicated pool of at most `threads` workers.
pub fn sweep_with_threads(
    trace: &Trace,
    policies: &[Policy],
    lat_points: &[LatencyConfig],
    threads: usize,
) -> Result<Vec<SweepCell>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| sweep(trace, policies, lat_points))
}
