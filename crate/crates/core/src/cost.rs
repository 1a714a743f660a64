//! Additive cycle cost of running one quantum under a schedule.

use std::collections::BTreeSet;
use std::ops::AddAssign;

use crate::error::{Error, Result};
use crate::model::{C2CMatrix, Cycles, DramMatrix, Grouping, LatencyConfig, Schedule};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct CostBreakdown {
    pub c2c_local: Cycles,
    pub c2c_remote: Cycles,
    pub dram_local: Cycles,
    pub dram_remote: Cycles,
    pub migration: Cycles,
    pub total: Cycles,
}

impl CostBreakdown {
    pub fn c2c(&self) -> Cycles {
        self.c2c_local + self.c2c_remote
    }

    pub fn dram(&self) -> Cycles {
        self.dram_local + self.dram_remote
    }
}

impl AddAssign for CostBreakdown {
    fn add_assign(&mut self, rhs: Self) {
        self.c2c_local += rhs.c2c_local;
        self.c2c_remote += rhs.c2c_remote;
        self.dram_local += rhs.dram_local;
        self.dram_remote += rhs.dram_remote;
        self.migration += rhs.migration;
        self.total += rhs.total;
    }
}

fn check_dims(node_of: &[usize], c2c: &C2CMatrix, dram: &DramMatrix) -> Result<()> {
    let n = node_of.len();
    if c2c.n() != n || dram.n_threads() != n {
        return Err(Error::DimensionMismatch(format!(
            "schedule has {n} threads, c2c matrix {}, DRAM matrix {}",
            c2c.n(),
            dram.n_threads()
        )));
    }
    if let Some(&bad) = node_of.iter().find(|&&node| node >= dram.n_nodes()) {
        return Err(Error::DimensionMismatch(format!(
            "node {bad} outside DRAM matrix of {} nodes",
            dram.n_nodes()
        )));
    }
    Ok(())
}

/// Cost of one quantum. `migrated` threads each pay the affinity penalty.
pub fn quantum_cost(
    sched: &Schedule,
    c2c: &C2CMatrix,
    dram: &DramMatrix,
    lat: &LatencyConfig,
    migrated: &BTreeSet<usize>,
) -> Result<CostBreakdown> {
    let node_of = sched.node_of_threads(c2c.n());
    check_dims(&node_of, c2c, dram)?;
    let n = node_of.len();

    let mut out = CostBreakdown::default();
    for i in 0..n {
        for j in (i + 1)..n {
            let c = c2c.get(i, j);
            if node_of[i] == node_of[j] {
                out.c2c_local += c * lat.c2c_local;
            } else {
                out.c2c_remote += c * lat.c2c_remote;
            }
        }
        for (node, &c) in dram.row(i).iter().enumerate() {
            if node == node_of[i] {
                out.dram_local += c * lat.dram_local;
            } else {
                out.dram_remote += c * lat.dram_remote;
            }
        }
    }
    out.migration = migrated.len() as Cycles * lat.migration_penalty();
    out.total = out.c2c_local + out.c2c_remote + out.dram_local + out.dram_remote + out.migration;
    Ok(out)
}

/// Cache-to-cache component of placing each group on its own node. Which
/// node a group lands on does not matter here.
pub fn grouping_c2c_cost(grouping: &Grouping, c2c: &C2CMatrix, lat: &LatencyConfig) -> Cycles {
    let group_of = grouping.group_of_threads(c2c.n());
    let mut cost = 0;
    for i in 0..c2c.n() {
        for j in (i + 1)..c2c.n() {
            let same = group_of[i].is_some() && group_of[i] == group_of[j];
            cost += c2c.get(i, j) * if same { lat.c2c_local } else { lat.c2c_remote };
        }
    }
    cost
}

/// Percentage by which `optimized_total` undercuts `baseline_total`;
/// negative for regressions.
pub fn improvement_pct(baseline_total: Cycles, optimized_total: Cycles) -> Result<f64> {
    if baseline_total == 0 {
        return Err(Error::UndefinedImprovement);
    }
    let delta = baseline_total as f64 - optimized_total as f64;
    Ok(100.0 * delta / baseline_total as f64)
}
