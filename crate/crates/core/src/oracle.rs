//! Exhaustive ground truth for small instances.
//!
//! Groupings are enumerated as unlabeled partitions: each new group starts
//! with the smallest unplaced thread and takes the rest of its members in
//! ascending combinations. That order visits canonical forms
//! lexicographically, so keeping the first strict minimum gives the
//! lexicographically smallest optimal partition.

use crate::cost::grouping_c2c_cost;
use crate::dram::GroupDramMatrix;
use crate::error::{Error, Result};
use crate::model::{
    C2CMatrix, Count, Cycles, DramMatrix, Grouping, LatencyConfig, NodeAssignment, Schedule, SystemConfig,
};

/// Largest thread count the grouping search accepts (~2.6M partitions at
/// `L = K = 4`).
pub const MAX_GROUPING_THREADS: usize = 16;
/// Largest node count the assignment search accepts (`8! = 40320`).
pub const MAX_ASSIGNMENT_NODES: usize = 8;
/// Largest thread count for the joint schedule search.
pub const MAX_JOINT_THREADS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleGrouping {
    pub grouping: Grouping,
    /// Cache-to-cache cost with every group on its own node.
    pub cost: Cycles,
    pub candidates_examined: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleAssignment {
    pub assignment: NodeAssignment,
    pub cost: Cycles,
    pub candidates_examined: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub best_schedule: Schedule,
    pub best_cost: Cycles,
    pub candidates_examined: u64,
}

/// Number of ways to split `L x K` threads into `L` unlabeled groups of `K`.
pub fn partition_count(n_nodes: usize, cores_per_node: usize) -> u128 {
    // Choose the group of the smallest unplaced thread, repeatedly:
    // prod_{g} C(remaining - 1, K - 1).
    let mut total: u128 = 1;
    let mut remaining = n_nodes * cores_per_node;
    for _ in 0..n_nodes {
        total *= binomial(remaining as u128 - 1, cores_per_node as u128 - 1);
        remaining -= cores_per_node;
    }
    total
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

struct Partitions<'a, F> {
    c2c: &'a C2CMatrix,
    n: usize,
    k: usize,
    full: u32,
    members: Vec<usize>,
    visit: F,
}

impl<F: FnMut(&[usize], Count)> Partitions<'_, F> {
    fn start_group(&mut self, used: u32, intra: Count) {
        if used == self.full {
            (self.visit)(&self.members, intra);
            return;
        }
        let first = (!used).trailing_zeros() as usize;
        self.members.push(first);
        self.extend_group(used | (1 << first), intra, first, 1);
        self.members.pop();
    }

    fn extend_group(&mut self, used: u32, intra: Count, last: usize, size: usize) {
        if size == self.k {
            self.start_group(used, intra);
            return;
        }
        let need = self.k - size;
        for t in (last + 1)..self.n {
            if used & (1 << t) != 0 {
                continue;
            }
            // Not enough free threads above t to finish the group.
            if ((!used & self.full) >> t).count_ones() < need as u32 {
                break;
            }
            let start = self.members.len() - size;
            let add: Count = self.members[start..].iter().map(|&m| self.c2c.get(t, m)).sum();
            self.members.push(t);
            self.extend_group(used | (1 << t), intra + add, t, size + 1);
            self.members.pop();
        }
    }
}

/// Calls `visit(flat_members, intra_sum)` once per partition, where
/// `flat_members` lists the groups back to back, `K` at a time.
fn for_each_partition(c2c: &C2CMatrix, config: &SystemConfig, visit: impl FnMut(&[usize], Count)) {
    let n = config.n_threads();
    let mut p = Partitions {
        c2c,
        n,
        k: config.cores_per_node(),
        full: if n == 32 { u32::MAX } else { (1u32 << n) - 1 },
        members: Vec::with_capacity(n),
        visit,
    };
    p.start_group(0, 0);
}

fn to_grouping(flat: &[usize], k: usize) -> Grouping {
    Grouping::new(flat.chunks(k).map(<[usize]>::to_vec).collect())
}

fn check_c2c(c2c: &C2CMatrix, config: &SystemConfig, bound: usize) -> Result<()> {
    if config.n_threads() > bound {
        return Err(Error::Bounds(format!(
            "{} threads exceeds the exhaustive-search limit of {bound}",
            config.n_threads()
        )));
    }
    if c2c.n() != config.n_threads() {
        return Err(Error::DimensionMismatch(format!(
            "c2c matrix covers {} threads, configuration has {}",
            c2c.n(),
            config.n_threads()
        )));
    }
    Ok(())
}

/// The grouping with the lowest cache-to-cache cost among all partitions.
pub fn best_grouping_bruteforce(c2c: &C2CMatrix, config: &SystemConfig, lat: &LatencyConfig) -> Result<OracleGrouping> {
    check_c2c(c2c, config, MAX_GROUPING_THREADS)?;
    let total = c2c.pair_total();
    let mut best: Option<(Cycles, Vec<usize>)> = None;
    let mut examined = 0u64;
    for_each_partition(c2c, config, |flat, intra| {
        examined += 1;
        let cost = intra * lat.c2c_local + (total - intra) * lat.c2c_remote;
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, flat.to_vec()));
        }
    });
    let (cost, flat) = best.expect("at least one partition exists");
    let grouping = to_grouping(&flat, config.cores_per_node());
    debug_assert_eq!(cost, grouping_c2c_cost(&grouping, c2c, lat));
    Ok(OracleGrouping {
        grouping,
        cost,
        candidates_examined: examined,
    })
}

/// DRAM cost of running group `g` on `assignment[g]`.
pub fn assignment_cost(gd: &GroupDramMatrix, assignment: &[usize], lat: &LatencyConfig) -> Cycles {
    let l = gd.n();
    (0..l)
        .map(|g| {
            (0..l)
                .map(|n| {
                    gd.get(g, n)
                        * if assignment[g] == n {
                            lat.dram_local
                        } else {
                            lat.dram_remote
                        }
                })
                .sum::<Cycles>()
        })
        .sum()
}

/// Calls `visit` on every permutation of `0..l` in lexicographic order.
fn for_each_permutation(l: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(perm: &mut Vec<usize>, used: &mut [bool], visit: &mut dyn FnMut(&[usize])) {
        if perm.len() == used.len() {
            visit(perm);
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                perm.push(v);
                rec(perm, used, visit);
                perm.pop();
                used[v] = false;
            }
        }
    }
    rec(&mut Vec::with_capacity(l), &mut vec![false; l], &mut visit);
}

/// The bijection with the lowest DRAM cost over all `L!` candidates.
pub fn best_assignment_bruteforce(gd: &GroupDramMatrix, lat: &LatencyConfig) -> Result<OracleAssignment> {
    let l = gd.n();
    if l > MAX_ASSIGNMENT_NODES {
        return Err(Error::Bounds(format!(
            "{l} nodes exceeds the exhaustive-search limit of {MAX_ASSIGNMENT_NODES}"
        )));
    }
    let mut best: Option<(Cycles, Vec<usize>)> = None;
    let mut examined = 0u64;
    for_each_permutation(l, |perm| {
        examined += 1;
        let cost = assignment_cost(gd, perm, lat);
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, perm.to_vec()));
        }
    });
    let (cost, perm) = best.unwrap_or_default();
    Ok(OracleAssignment {
        assignment: NodeAssignment::new(perm),
        cost,
        candidates_examined: examined,
    })
}

/// Joint optimum over every (partition, bijection) pair, migration-free.
/// Diagnostic only; limited to [`MAX_JOINT_THREADS`].
pub fn best_schedule_bruteforce(
    c2c: &C2CMatrix,
    dram: &DramMatrix,
    config: &SystemConfig,
    lat: &LatencyConfig,
) -> Result<OracleResult> {
    check_c2c(c2c, config, MAX_JOINT_THREADS)?;
    if dram.n_threads() != config.n_threads() || dram.n_nodes() != config.n_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "DRAM matrix is {}x{}, configuration is {config}",
            dram.n_threads(),
            dram.n_nodes()
        )));
    }
    let k = config.cores_per_node();
    let l = config.n_nodes();
    let total = c2c.pair_total();
    let mut best: Option<(Cycles, Vec<usize>, Vec<usize>)> = None;
    let mut examined = 0u64;
    for_each_partition(c2c, config, |flat, intra| {
        let c2c_cost = intra * lat.c2c_local + (total - intra) * lat.c2c_remote;
        let gd = group_dram(flat, k, l, dram);
        for_each_permutation(l, |perm| {
            examined += 1;
            let cost = c2c_cost + assignment_cost(&gd, perm, lat);
            if best.as_ref().is_none_or(|(b, _, _)| cost < *b) {
                best = Some((cost, flat.to_vec(), perm.to_vec()));
            }
        });
    });
    let (cost, flat, perm) = best.expect("at least one schedule exists");
    Ok(OracleResult {
        best_schedule: Schedule::new(to_grouping(&flat, k), NodeAssignment::new(perm)),
        best_cost: cost,
        candidates_examined: examined,
    })
}

fn group_dram(flat: &[usize], k: usize, l: usize, dram: &DramMatrix) -> GroupDramMatrix {
    let mut counts = vec![0; l * l];
    for (g, members) in flat.chunks(k).enumerate() {
        for &t in members {
            for n in 0..l {
                counts[g * l + n] += dram.get(t, n);
            }
        }
    }
    GroupDramMatrix::new(l, counts).expect("square by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u128) -> u128 {
        (1..=n).product()
    }

    #[test]
    fn partition_count_matches_multinomial() {
        for (l, k) in [(1, 4), (2, 4), (4, 4), (3, 4), (4, 2), (3, 3), (2, 1)] {
            let n = (l * k) as u128;
            let formula = factorial(n) / (factorial(k as u128).pow(l as u32) * factorial(l as u128));
            assert_eq!(partition_count(l, k), formula, "L={l} K={k}");
        }
        assert_eq!(partition_count(4, 4), 2_627_625);
    }

    #[test]
    fn single_group() {
        let c = SystemConfig::balanced(1, 4, 1).unwrap();
        let r = best_grouping_bruteforce(&C2CMatrix::zeros(4), &c, &LatencyConfig::default()).unwrap();
        assert_eq!(r.grouping.groups(), &[vec![0, 1, 2, 3]]);
        assert_eq!(r.candidates_examined, 1);
    }

    #[test]
    fn eight_threads_examines_35() {
        let c = SystemConfig::balanced(2, 4, 1).unwrap();
        let r = best_grouping_bruteforce(&C2CMatrix::zeros(8), &c, &LatencyConfig::default()).unwrap();
        assert_eq!(r.candidates_examined, 35);
        // All-zero: every candidate ties, the first canonical form wins.
        assert_eq!(r.grouping, Grouping::identity(&c));
    }

    #[test]
    fn examined_counts_match_formula() {
        for (l, k) in [(4, 2), (3, 4), (2, 3), (6, 2)] {
            let c = SystemConfig::balanced(l, k, 1).unwrap();
            let r = best_grouping_bruteforce(&C2CMatrix::zeros(l * k), &c, &LatencyConfig::default()).unwrap();
            assert_eq!(r.candidates_examined as u128, partition_count(l, k));
        }
    }

    #[test]
    fn planted_block_is_unique_optimum() {
        let c = SystemConfig::balanced(2, 4, 1).unwrap();
        let m = C2CMatrix::from_pairs(8, |i, j| if i % 2 == j % 2 { 1000 } else { 10 });
        let lat = LatencyConfig::default();
        let r = best_grouping_bruteforce(&m, &c, &lat).unwrap();
        assert_eq!(r.grouping.groups(), &[vec![0, 2, 4, 6], vec![1, 3, 5, 7]]);
        assert_eq!(r.cost, grouping_c2c_cost(&r.grouping, &m, &lat));
    }

    #[test]
    fn grouping_bounds() {
        let c = SystemConfig::balanced(5, 4, 1).unwrap();
        assert!(matches!(
            best_grouping_bruteforce(&C2CMatrix::zeros(20), &c, &LatencyConfig::default()),
            Err(Error::Bounds(_))
        ));
    }

    #[test]
    fn assignment_examples() {
        let lat = LatencyConfig::default();
        let one = GroupDramMatrix::new(1, vec![5]).unwrap();
        let r = best_assignment_bruteforce(&one, &lat).unwrap();
        assert_eq!(r.assignment, NodeAssignment::identity(1));

        let m = GroupDramMatrix::from_rows(&[vec![9, 10], vec![1, 8]]).unwrap();
        let r = best_assignment_bruteforce(&m, &lat).unwrap();
        assert_eq!(r.assignment.node_of_group(), &[0, 1]);
        assert_eq!(m.local_hits(&r.assignment), 17);
        assert_eq!(r.candidates_examined, 2);

        let m = GroupDramMatrix::from_rows(&[vec![10, 100], vec![9, 1]]).unwrap();
        let r = best_assignment_bruteforce(&m, &lat).unwrap();
        assert_eq!(r.assignment.node_of_group(), &[1, 0]);
        assert_eq!(m.local_hits(&r.assignment), 109);
    }

    #[test]
    fn assignment_ties_pick_lexicographic_smallest() {
        let m = GroupDramMatrix::new(3, vec![1; 9]).unwrap();
        let r = best_assignment_bruteforce(&m, &LatencyConfig::default()).unwrap();
        assert_eq!(r.assignment, NodeAssignment::identity(3));
        assert_eq!(r.candidates_examined, 6);
    }

    #[test]
    fn assignment_bounds() {
        let m = GroupDramMatrix::new(9, vec![0; 81]).unwrap();
        assert!(matches!(
            best_assignment_bruteforce(&m, &LatencyConfig::default()),
            Err(Error::Bounds(_))
        ));
    }

    #[test]
    fn joint_search_counts_and_bounds() {
        let c = SystemConfig::balanced(2, 4, 1).unwrap();
        let c2c = C2CMatrix::from_pairs(8, |i, j| if i % 2 == j % 2 { 1000 } else { 10 });
        // Odd threads live on node 0, even threads on node 1.
        let dram = DramMatrix::from_fn(8, 2, |t, n| if t % 2 != n { 500 } else { 5 });
        let r = best_schedule_bruteforce(&c2c, &dram, &c, &LatencyConfig::default()).unwrap();
        assert_eq!(r.candidates_examined, 35 * 2);
        assert_eq!(r.best_schedule.grouping.groups(), &[vec![0, 2, 4, 6], vec![1, 3, 5, 7]]);
        assert_eq!(r.best_schedule.assignment.node_of_group(), &[1, 0]);

        let big = SystemConfig::balanced(4, 4, 1).unwrap();
        assert!(best_schedule_bruteforce(
            &C2CMatrix::zeros(16),
            &DramMatrix::zeros(16, 4),
            &big,
            &LatencyConfig::default()
        )
        .is_err());
    }

    #[test]
    fn repeated_calls_agree() {
        let c = SystemConfig::balanced(3, 4, 1).unwrap();
        let m = C2CMatrix::from_pairs(12, |i, j| ((i * 7 + j * 13) % 11) as u64);
        let lat = LatencyConfig::default();
        assert_eq!(
            best_grouping_bruteforce(&m, &c, &lat).unwrap(),
            best_grouping_bruteforce(&m, &c, &lat).unwrap()
        );
    }
}
