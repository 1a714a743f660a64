//! System dimensions, latencies, count matrices and schedules.
//!
//! Threads, nodes and groups are 0-based everywhere. A schedule is a
//! partition of the `N` threads into `L` groups of `K` plus a bijection from
//! groups to nodes; only the resulting thread -> node map matters for cost.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Event count (cache-to-cache transfers or DRAM accesses).
pub type Count = u64;
/// Latency or accumulated cost in CPU cycles.
pub type Cycles = u64;

/// Machine and run dimensions: `N = L x K` threads, one per core.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemConfig {
    n_threads: usize,
    n_nodes: usize,
    cores_per_node: usize,
    n_quanta: usize,
}

impl SystemConfig {
    pub fn new(n_threads: usize, n_nodes: usize, cores_per_node: usize, n_quanta: usize) -> Result<Self> {
        if n_nodes < 1 || cores_per_node < 1 {
            return Err(Error::InvalidConfig(
                "nodes and cores per node must be at least 1".into(),
            ));
        }
        if n_threads < 2 {
            return Err(Error::InvalidConfig("at least 2 threads required".into()));
        }
        if n_quanta < 1 {
            return Err(Error::InvalidConfig("at least 1 quantum required".into()));
        }
        if n_nodes.checked_mul(cores_per_node) != Some(n_threads) {
            return Err(Error::InvalidConfig(format!(
                "threads ({n_threads}) must equal nodes ({n_nodes}) x cores per node ({cores_per_node})"
            )));
        }
        Ok(SystemConfig {
            n_threads,
            n_nodes,
            cores_per_node,
            n_quanta,
        })
    }

    /// `L` nodes of `K` cores, fully loaded.
    pub fn balanced(n_nodes: usize, cores_per_node: usize, n_quanta: usize) -> Result<Self> {
        Self::new(
            n_nodes.saturating_mul(cores_per_node),
            n_nodes,
            cores_per_node,
            n_quanta,
        )
    }

    pub fn n_threads(&self) -> usize {
        self.n_threads
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn cores_per_node(&self) -> usize {
        self.cores_per_node
    }

    pub fn n_quanta(&self) -> usize {
        self.n_quanta
    }

    pub fn with_quanta(self, n_quanta: usize) -> Result<Self> {
        Self::new(self.n_threads, self.n_nodes, self.cores_per_node, n_quanta)
    }
}

impl Default for SystemConfig {
    /// 4 sockets x 4 cores, 16 scheduling quanta.
    fn default() -> Self {
        SystemConfig {
            n_threads: 16,
            n_nodes: 4,
            cores_per_node: 4,
            n_quanta: 16,
        }
    }
}

impl fmt::Display for SystemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "N={} L={} K={} Q={}",
            self.n_threads, self.n_nodes, self.cores_per_node, self.n_quanta
        )
    }
}

/// Per-event latencies and the cache-affinity migration penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatencyConfig {
    pub c2c_local: Cycles,
    pub c2c_remote: Cycles,
    pub dram_local: Cycles,
    pub dram_remote: Cycles,
    /// Cache lines of useful data a thread forfeits when it changes node.
    pub affinity_lines: u64,
    /// Cycles to re-fetch one forfeited line.
    pub affinity_line_latency: Cycles,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        LatencyConfig {
            c2c_local: 50,
            c2c_remote: 100,
            dram_local: 125,
            dram_remote: 250,
            // 64 KB of retained data in 64-byte lines.
            affinity_lines: 1024,
            affinity_line_latency: 250,
        }
    }
}

impl LatencyConfig {
    /// Default latencies with the remote cache-to-cache and remote DRAM
    /// latencies replaced.
    pub fn with_remote(c2c_remote: Cycles, dram_remote: Cycles) -> Self {
        LatencyConfig {
            c2c_remote,
            dram_remote,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c2c_remote < self.c2c_local {
            return Err(Error::InvalidConfig(format!(
                "remote c2c latency {} below local {}",
                self.c2c_remote, self.c2c_local
            )));
        }
        if self.dram_remote < self.dram_local {
            return Err(Error::InvalidConfig(format!(
                "remote DRAM latency {} below local {}",
                self.dram_remote, self.dram_local
            )));
        }
        Ok(())
    }

    /// Cycles charged once per thread that changes node.
    pub fn migration_penalty(&self) -> Cycles {
        self.affinity_lines * self.affinity_line_latency
    }
}

/// Symmetric, zero-diagonal `N x N` pairwise cache-to-cache transfer counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct C2CMatrix {
    n: usize,
    counts: Vec<Count>,
}

impl C2CMatrix {
    pub fn new(n: usize, counts: Vec<Count>) -> Result<Self> {
        if counts.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "c2c matrix for {n} threads needs {} entries, got {}",
                n * n,
                counts.len()
            )));
        }
        for i in 0..n {
            if counts[i * n + i] != 0 {
                return Err(Error::InvalidMatrix(format!("c2c diagonal entry ({i},{i}) is nonzero")));
            }
            for j in (i + 1)..n {
                if counts[i * n + j] != counts[j * n + i] {
                    return Err(Error::InvalidMatrix(format!("c2c matrix not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(C2CMatrix { n, counts })
    }

    pub fn zeros(n: usize) -> Self {
        C2CMatrix {
            n,
            counts: vec![0; n * n],
        }
    }

    /// Builds a matrix from `f(i, j)` evaluated on `i < j` and mirrored.
    pub fn from_pairs(n: usize, mut f: impl FnMut(usize, usize) -> Count) -> Self {
        let mut counts = vec![0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let c = f(i, j);
                counts[i * n + j] = c;
                counts[j * n + i] = c;
            }
        }
        C2CMatrix { n, counts }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Count {
        self.counts[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Count] {
        &self.counts[i * self.n..(i + 1) * self.n]
    }

    /// Sum over unordered pairs `i < j`.
    pub fn pair_total(&self) -> Count {
        (0..self.n)
            .flat_map(|i| ((i + 1)..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .sum()
    }

    /// Returns a copy with thread `t` relabeled to `perm[t]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut counts = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                counts[perm[i] * n + perm[j]] = self.get(i, j);
            }
        }
        C2CMatrix { n, counts }
    }
}

/// `N x L` DRAM access counts: row `t` holds thread `t`'s accesses to each
/// node's memory.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DramMatrix {
    n_threads: usize,
    n_nodes: usize,
    counts: Vec<Count>,
}

impl DramMatrix {
    pub fn new(n_threads: usize, n_nodes: usize, counts: Vec<Count>) -> Result<Self> {
        if counts.len() != n_threads * n_nodes {
            return Err(Error::DimensionMismatch(format!(
                "DRAM matrix {n_threads}x{n_nodes} needs {} entries, got {}",
                n_threads * n_nodes,
                counts.len()
            )));
        }
        Ok(DramMatrix {
            n_threads,
            n_nodes,
            counts,
        })
    }

    pub fn zeros(n_threads: usize, n_nodes: usize) -> Self {
        DramMatrix {
            n_threads,
            n_nodes,
            counts: vec![0; n_threads * n_nodes],
        }
    }

    pub fn from_fn(n_threads: usize, n_nodes: usize, mut f: impl FnMut(usize, usize) -> Count) -> Self {
        let counts = (0..n_threads)
            .flat_map(|t| (0..n_nodes).map(move |n| (t, n)))
            .map(|(t, n)| f(t, n))
            .collect();
        DramMatrix {
            n_threads,
            n_nodes,
            counts,
        }
    }

    pub fn n_threads(&self) -> usize {
        self.n_threads
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    #[inline]
    pub fn get(&self, thread: usize, node: usize) -> Count {
        self.counts[thread * self.n_nodes + node]
    }

    pub fn row(&self, thread: usize) -> &[Count] {
        &self.counts[thread * self.n_nodes..(thread + 1) * self.n_nodes]
    }
}

/// Partition of threads into socket-sized groups. Members are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grouping {
    groups: Vec<Vec<usize>>,
}

impl Grouping {
    /// Sorts members within each group; does not validate.
    pub fn new(mut groups: Vec<Vec<usize>>) -> Self {
        for g in &mut groups {
            g.sort_unstable();
        }
        Grouping { groups }
    }

    /// `{0..K-1}, {K..2K-1}, ...`
    pub fn identity(config: &SystemConfig) -> Self {
        let k = config.cores_per_node();
        Grouping {
            groups: (0..config.n_nodes()).map(|g| (g * k..(g + 1) * k).collect()).collect(),
        }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Groups ordered by their smallest member; equal for any two
    /// groupings that differ only by group labels.
    pub fn canonical(&self) -> Vec<Vec<usize>> {
        let mut c = self.groups.clone();
        c.sort();
        c
    }

    pub fn same_partition(&self, other: &Grouping) -> bool {
        self.canonical() == other.canonical()
    }

    /// Thread -> group index; `None` for threads not covered.
    pub fn group_of_threads(&self, n_threads: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n_threads];
        for (g, members) in self.groups.iter().enumerate() {
            for &t in members {
                if t < n_threads {
                    out[t] = Some(g);
                }
            }
        }
        out
    }

    pub fn validate(&self, config: &SystemConfig) -> Result<(), Vec<Violation>> {
        let mut v = Vec::new();
        self.collect_violations(config, &mut v);
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    fn collect_violations(&self, config: &SystemConfig, out: &mut Vec<Violation>) {
        let n = config.n_threads();
        if self.groups.len() != config.n_nodes() {
            out.push(Violation::GroupCount {
                expected: config.n_nodes(),
                found: self.groups.len(),
            });
        }
        let mut seen = vec![false; n];
        for (g, members) in self.groups.iter().enumerate() {
            if members.len() != config.cores_per_node() {
                out.push(Violation::GroupSize {
                    group: g,
                    expected: config.cores_per_node(),
                    found: members.len(),
                });
            }
            for &t in members {
                if t >= n {
                    out.push(Violation::ThreadOutOfRange(t));
                } else if seen[t] {
                    out.push(Violation::DuplicateThread(t));
                } else {
                    seen[t] = true;
                }
            }
        }
        out.extend(
            seen.iter()
                .enumerate()
                .filter(|(_, s)| !**s)
                .map(|(t, _)| Violation::MissingThread(t)),
        );
    }
}

/// Bijection from group index to node index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeAssignment {
    node_of_group: Vec<usize>,
}

impl NodeAssignment {
    pub fn new(node_of_group: Vec<usize>) -> Self {
        NodeAssignment { node_of_group }
    }

    pub fn identity(n_nodes: usize) -> Self {
        NodeAssignment {
            node_of_group: (0..n_nodes).collect(),
        }
    }

    pub fn node_of_group(&self) -> &[usize] {
        &self.node_of_group
    }

    pub fn node(&self, group: usize) -> usize {
        self.node_of_group[group]
    }

    pub fn validate(&self, n_nodes: usize) -> Result<(), Vec<Violation>> {
        let mut v = Vec::new();
        self.collect_violations(n_nodes, &mut v);
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    fn collect_violations(&self, n_nodes: usize, out: &mut Vec<Violation>) {
        if self.node_of_group.len() != n_nodes {
            out.push(Violation::AssignmentLength {
                expected: n_nodes,
                found: self.node_of_group.len(),
            });
        }
        let mut seen = vec![false; n_nodes];
        let mut bijective = true;
        for &node in &self.node_of_group {
            if node >= n_nodes {
                out.push(Violation::NodeOutOfRange(node));
            } else if seen[node] {
                bijective = false;
            } else {
                seen[node] = true;
            }
        }
        if !bijective || seen.iter().any(|s| !s) {
            out.push(Violation::AssignmentNotBijective);
        }
    }
}

/// A grouping plus the node each group runs on.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schedule {
    pub grouping: Grouping,
    pub assignment: NodeAssignment,
}

impl Schedule {
    pub fn new(grouping: Grouping, assignment: NodeAssignment) -> Self {
        Schedule { grouping, assignment }
    }

    /// Thread -> node map. Threads absent from the grouping map to
    /// `usize::MAX`; only meaningful for valid schedules.
    pub fn node_of_threads(&self, n_threads: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n_threads];
        for (g, members) in self.grouping.groups().iter().enumerate() {
            let node = self.assignment.node_of_group().get(g).copied().unwrap_or(usize::MAX);
            for &t in members {
                if t < n_threads {
                    out[t] = node;
                }
            }
        }
        out
    }

    fn n_threads(&self) -> usize {
        self.grouping.groups().iter().map(Vec::len).sum()
    }

    /// True when both schedules put every thread on the same node,
    /// regardless of group labels.
    pub fn same_placement(&self, other: &Schedule) -> bool {
        let n = self.n_threads();
        n == other.n_threads() && self.node_of_threads(n) == other.node_of_threads(n)
    }
}

/// One broken schedule invariant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Violation {
    GroupCount {
        expected: usize,
        found: usize,
    },
    GroupSize {
        group: usize,
        expected: usize,
        found: usize,
    },
    ThreadOutOfRange(usize),
    DuplicateThread(usize),
    MissingThread(usize),
    AssignmentLength {
        expected: usize,
        found: usize,
    },
    NodeOutOfRange(usize),
    AssignmentNotBijective,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::GroupCount { expected, found } => {
                write!(f, "expected {expected} groups, found {found}")
            }
            Violation::GroupSize { group, expected, found } => {
                write!(f, "group {group} has {found} threads, expected {expected}")
            }
            Violation::ThreadOutOfRange(t) => write!(f, "thread {t} out of range"),
            Violation::DuplicateThread(t) => write!(f, "duplicate thread {t}"),
            Violation::MissingThread(t) => write!(f, "missing thread {t}"),
            Violation::AssignmentLength { expected, found } => {
                write!(f, "assignment lists {found} nodes, expected {expected}")
            }
            Violation::NodeOutOfRange(n) => write!(f, "node {n} out of range"),
            Violation::AssignmentNotBijective => f.write_str("assignment not bijective"),
        }
    }
}

pub fn identity_schedule(config: &SystemConfig) -> Schedule {
    Schedule::new(Grouping::identity(config), NodeAssignment::identity(config.n_nodes()))
}

/// Every invariant violation of `schedule` under `config`.
pub fn validate_schedule(schedule: &Schedule, config: &SystemConfig) -> Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    schedule.grouping.collect_violations(config, &mut v);
    schedule.assignment.collect_violations(config.n_nodes(), &mut v);
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

/// Threads whose node differs between `prev` and `next`.
pub fn migrated_threads(prev: &Schedule, next: &Schedule) -> Result<BTreeSet<usize>> {
    let n = prev.n_threads();
    if n != next.n_threads()
        || prev.grouping.len() != next.grouping.len()
        || prev.assignment.node_of_group().len() != next.assignment.node_of_group().len()
    {
        return Err(Error::DimensionMismatch(
            "schedules belong to different configurations".into(),
        ));
    }
    let a = prev.node_of_threads(n);
    let b = next.node_of_threads(n);
    Ok((0..n).filter(|&t| a[t] != b[t]).collect())
}
