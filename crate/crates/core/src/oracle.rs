//! Exact minimum capacitated k-dominating set for tiny instances.
//!
//! Gateway sets are enumerated by size, then lexicographically; for each set
//! the station assignment is decided by backtracking with a memo of failed
//! (station, remaining budgets) states. Exponential, so limited to 12 vertices.

use std::collections::HashSet;

use itertools::Itertools;

use crate::graph::{PlacementSolution, ProblemInstance};

pub const MAX_ORACLE_NODES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("exact search is limited to {MAX_ORACLE_NODES} vertices, instance has {0}")]
    TooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub optimal_size: usize,
    pub witness: PlacementSolution,
}

pub fn exact_min_gateways(instance: &ProblemInstance) -> Result<OracleResult, OracleError> {
    let n = instance.node_count();
    if n > MAX_ORACLE_NODES {
        return Err(OracleError::TooLarge(n));
    }
    for size in 0..=n {
        for gateways in (0..n).combinations(size) {
            if let Some(connections) = assign(instance, &gateways) {
                return Ok(OracleResult {
                    optimal_size: size,
                    witness: PlacementSolution {
                        gateways,
                        connections,
                    },
                });
            }
        }
    }
    unreachable!("making every vertex a gateway is always feasible")
}

struct Search<'a> {
    k: usize,
    /// Per station: (station id, [(gateway slot, cost units)]).
    options: Vec<(usize, Vec<(usize, u64)>)>,
    gateways: &'a [usize],
    failed: HashSet<(usize, Vec<u64>)>,
    chosen: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn solve(&mut self, idx: usize, budgets: &mut Vec<u64>) -> bool {
        if idx == self.options.len() {
            return true;
        }
        if self.failed.contains(&(idx, budgets.clone())) {
            return false;
        }
        let opts = self.options[idx].1.clone();
        for pick in opts.iter().combinations(self.k) {
            if pick.iter().any(|&&(slot, cost)| budgets[slot] < cost) {
                continue;
            }
            for &&(slot, cost) in &pick {
                budgets[slot] -= cost;
            }
            let ok = self.solve(idx + 1, budgets);
            for &&(slot, cost) in &pick {
                budgets[slot] += cost;
            }
            if ok {
                self.chosen[idx] = pick.iter().map(|&&(slot, _)| slot).collect();
                return true;
            }
        }
        self.failed.insert((idx, budgets.clone()));
        false
    }
}

/// Connections serving every station `k` times within capacity, if any exist.
fn assign(instance: &ProblemInstance, gateways: &[usize]) -> Option<Vec<(usize, usize)>> {
    let n = instance.node_count();
    let k = instance.k as usize;
    let mut slot_of = vec![None; n];
    for (slot, &g) in gateways.iter().enumerate() {
        slot_of[g] = Some(slot);
    }
    let mut options = Vec::new();
    for v in (0..n).filter(|&v| slot_of[v].is_none()) {
        let opts: Vec<(usize, u64)> = instance
            .graph
            .adjacency(v)
            .iter()
            .filter_map(|l| slot_of[l.node()].map(|slot| (slot, l.cost().units())))
            .collect();
        if opts.len() < k {
            return None;
        }
        options.push((v, opts));
    }
    // most constrained stations first
    options.sort_by_key(|(v, opts)| (opts.len(), *v));

    let mut search = Search {
        k,
        chosen: vec![Vec::new(); options.len()],
        options,
        gateways,
        failed: HashSet::new(),
    };
    let mut budgets = vec![instance.capacity.budget_units(); gateways.len()];
    if !search.solve(0, &mut budgets) {
        return None;
    }
    let mut connections: Vec<(usize, usize)> = search
        .options
        .iter()
        .zip(&search.chosen)
        .flat_map(|((v, _), slots)| slots.iter().map(move |&s| (*v, search.gateways[s])))
        .collect();
    connections.sort_unstable();
    Some(connections)
}
