//! Group-to-node assignment heuristics that keep each group next to the
//! memory it touches most.

use std::cmp::Reverse;

use crate::error::{Error, Result};
use crate::model::{Count, DramMatrix, Grouping, NodeAssignment};

/// `L x L` DRAM access counts: entry `(g, n)` is the total number of
/// accesses group `g`'s threads make to node `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupDramMatrix {
    n: usize,
    counts: Vec<Count>,
}

impl GroupDramMatrix {
    pub fn new(n: usize, counts: Vec<Count>) -> Result<Self> {
        if counts.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "group DRAM matrix must be square: {} entries for {n} groups",
                counts.len()
            )));
        }
        Ok(GroupDramMatrix { n, counts })
    }

    /// Square matrix from rows; errors when any row length differs from the
    /// row count.
    pub fn from_rows(rows: &[Vec<Count>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "group DRAM matrix must be square: row of {} for {n} groups",
                bad.len()
            )));
        }
        Ok(GroupDramMatrix {
            n,
            counts: rows.concat(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, group: usize, node: usize) -> Count {
        self.counts[group * self.n + node]
    }

    /// Accesses that stay on-node under `assignment`.
    pub fn local_hits(&self, assignment: &NodeAssignment) -> Count {
        assignment
            .node_of_group()
            .iter()
            .enumerate()
            .map(|(g, &n)| self.get(g, n))
            .sum()
    }

    pub fn total(&self) -> Count {
        self.counts.iter().sum()
    }
}

pub fn aggregate_group_dram(grouping: &Grouping, dram: &DramMatrix) -> Result<GroupDramMatrix> {
    let l = dram.n_nodes();
    if grouping.len() != l {
        return Err(Error::DimensionMismatch(format!(
            "{} groups but {l} DRAM nodes",
            grouping.len()
        )));
    }
    let mut counts = vec![0; l * l];
    for (g, members) in grouping.groups().iter().enumerate() {
        for &t in members {
            if t >= dram.n_threads() {
                return Err(Error::DimensionMismatch(format!(
                    "thread {t} outside DRAM matrix of {} threads",
                    dram.n_threads()
                )));
            }
            for (acc, &c) in counts[g * l..(g + 1) * l].iter_mut().zip(dram.row(t)) {
                *acc += c;
            }
        }
    }
    Ok(GroupDramMatrix { n: l, counts })
}

/// Global greedy assignment.
///
/// Walks all `(group, node)` entries from the largest count down and binds
/// a group to a node whenever both are still free. Equal counts are taken
/// in `(group, node)` order.
pub fn assign_global_greedy(gd: &GroupDramMatrix) -> NodeAssignment {
    let l = gd.n();
    let mut entries: Vec<(usize, usize)> = (0..l).flat_map(|g| (0..l).map(move |n| (g, n))).collect();
    // slice::sort_by is a stable merge sort.
    entries.sort_by_key(|&(g, n)| Reverse(gd.get(g, n)));

    let mut node_of_group = vec![usize::MAX; l];
    let mut node_taken = vec![false; l];
    let mut left = l;
    for (g, n) in entries {
        if left == 0 {
            break;
        }
        if node_of_group[g] == usize::MAX && !node_taken[n] {
            node_of_group[g] = n;
            node_taken[n] = true;
            left -= 1;
        }
    }
    NodeAssignment::new(node_of_group)
}

/// Per-node greedy assignment: node 0 takes the unassigned group with the
/// most accesses to it, then node 1, and so on. Ties go to the lowest
/// group index.
pub fn assign_per_node_greedy(gd: &GroupDramMatrix) -> NodeAssignment {
    let l = gd.n();
    let mut node_of_group = vec![usize::MAX; l];
    for node in 0..l {
        let mut candidates: Vec<usize> = (0..l).filter(|&g| node_of_group[g] == usize::MAX).collect();
        candidates.sort_by_key(|&g| Reverse(gd.get(g, node)));
        node_of_group[candidates[0]] = node;
    }
    NodeAssignment::new(node_of_group)
}
