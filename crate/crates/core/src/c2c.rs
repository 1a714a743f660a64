//! Thread-grouping heuristics that pull heavily communicating threads onto
//! the same socket.
//!
//! Both heuristics are greedy and emit one group at a time, removing its
//! members from the pool before forming the next. Ties always resolve toward
//! the lowest thread id so that results are reproducible.

use std::cmp::Reverse;

use crate::error::{Error, Result};
use crate::model::{C2CMatrix, Count, Grouping, SystemConfig};

/// One unordered thread pair and its transfer count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairEntry {
    pub lo: usize,
    pub hi: usize,
    pub count: Count,
}

/// All `N choose 2` pairs, descending by count, ties by `(lo, hi)`.
pub fn sorted_pairs(c2c: &C2CMatrix) -> Vec<PairEntry> {
    let n = c2c.n();
    let mut pairs: Vec<PairEntry> = (0..n)
        .flat_map(|lo| ((lo + 1)..n).map(move |hi| (lo, hi)))
        .map(|(lo, hi)| PairEntry {
            lo,
            hi,
            count: c2c.get(lo, hi),
        })
        .collect();
    // Stable: equal counts keep their (lo, hi) generation order.
    pairs.sort_by_key(|p| Reverse(p.count));
    pairs
}

fn check_dims(c2c: &C2CMatrix, config: &SystemConfig) -> Result<()> {
    if c2c.n() != config.n_threads() {
        return Err(Error::DimensionMismatch(format!(
            "c2c matrix covers {} threads, configuration has {}",
            c2c.n(),
            config.n_threads()
        )));
    }
    Ok(())
}

/// Highest-count partner of `t` among `pool`, lowest id on ties.
fn best_partner(c2c: &C2CMatrix, t: usize, pool: impl Iterator<Item = usize>) -> Option<(usize, Count)> {
    let mut best: Option<(usize, Count)> = None;
    for j in pool {
        if j == t {
            continue;
        }
        let c = c2c.get(t, j);
        match best {
            Some((bj, bc)) if c < bc || (c == bc && j > bj) => {}
            _ => best = Some((j, c)),
        }
    }
    best
}

/// Max-partner grouping.
///
/// Each round computes, for every remaining thread, its largest transfer
/// count with another remaining thread, seeds the group with the thread
/// whose maximum is largest, and fills it with that thread's top `K - 1`
/// partners.
pub fn group_by_max_partner(c2c: &C2CMatrix, config: &SystemConfig) -> Result<Grouping> {
    check_dims(c2c, config)?;
    let k = config.cores_per_node();
    if k < 2 {
        return Err(Error::Unsupported(format!(
            "max-partner grouping needs at least 2 cores per node, got {k}"
        )));
    }

    let mut remaining: Vec<usize> = (0..c2c.n()).collect();
    let mut groups = Vec::with_capacity(config.n_nodes());
    while groups.len() < config.n_nodes() {
        let mut seed: Option<(usize, Count)> = None;
        for &i in &remaining {
            let Some((_, max_i)) = best_partner(c2c, i, remaining.iter().copied()) else {
                continue;
            };
            if seed.is_none_or(|(_, best)| max_i > best) {
                seed = Some((i, max_i));
            }
        }
        let p = seed.map(|(p, _)| p).expect("at least K >= 2 threads remain");

        let mut partners: Vec<usize> = remaining.iter().copied().filter(|&j| j != p).collect();
        partners.sort_by(|&a, &b| c2c.get(p, b).cmp(&c2c.get(p, a)).then(a.cmp(&b)));
        partners.truncate(k - 1);
        partners.push(p);

        remaining.retain(|t| !partners.contains(t));
        groups.push(partners);
    }
    Ok(Grouping::new(groups))
}

/// Sorted-pairs grouping.
///
/// Each round starts from the heaviest pair among remaining threads and
/// scans down the sorted pair list. A disjoint pair joins the group whole.
/// A pair sharing one endpoint with the group contributes its outside
/// endpoint `l` together with `l`'s heaviest partner outside the group.
/// Pairs entirely inside the group are skipped. For `K = 4` this closes the
/// group after one step; larger even `K` keep scanning until full.
///
/// Once fewer than two pairs with nonzero counts remain, the leftover
/// threads fill the remaining groups in ascending id order.
pub fn group_by_sorted_pairs(c2c: &C2CMatrix, config: &SystemConfig) -> Result<Grouping> {
    check_dims(c2c, config)?;
    let k = config.cores_per_node();
    if !k.is_multiple_of(2) {
        return Err(Error::Unsupported(format!(
            "sorted-pairs grouping needs an even number of cores per node, got {k}"
        )));
    }

    let n = c2c.n();
    let pairs = sorted_pairs(c2c);
    let mut alive = vec![true; n];
    let mut groups: Vec<Vec<usize>> = Vec::with_capacity(config.n_nodes());

    while groups.len() < config.n_nodes() {
        let live = |p: &PairEntry| alive[p.lo] && alive[p.hi];
        let signal = pairs.iter().filter(|p| live(p) && p.count > 0).take(2).count();
        if signal < 2 {
            let rest: Vec<usize> = (0..n).filter(|&t| alive[t]).collect();
            groups.extend(rest.chunks(k).map(<[usize]>::to_vec));
            break;
        }

        let mut scan = pairs.iter().filter(|p| live(p));
        let top = scan.next().expect("live pairs exist");
        let mut members = vec![top.lo, top.hi];
        while members.len() < k {
            let next = scan.next().expect("a pair leaving the group always exists");
            let lo_in = members.contains(&next.lo);
            let hi_in = members.contains(&next.hi);
            match (lo_in, hi_in) {
                (false, false) => members.extend([next.lo, next.hi]),
                (true, true) => continue,
                _ => {
                    let l = if lo_in { next.hi } else { next.lo };
                    let pool = (0..n).filter(|&q| alive[q] && q != l && !members.contains(&q));
                    let (p, _) = best_partner(c2c, l, pool).expect("K <= remaining threads leaves a partner for l");
                    members.extend([l, p]);
                }
            }
        }
        for &t in &members {
            alive[t] = false;
        }
        groups.push(members);
    }
    Ok(Grouping::new(groups))
}
