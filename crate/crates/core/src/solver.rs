//! Greedy capacitated k-domination with an explicit connection scheme, and a
//! validator for the three feasibility conditions.
//!
//! Each round picks the vertex that can bring the most service: itself (if it
//! still needs service) plus the cheapest under-served neighbors that fit into
//! its capacity. The winner becomes a gateway and is connected to exactly
//! those neighbors. Ties go to the lowest vertex id.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::graph::{PlacementSolution, ProblemInstance};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolverError {
    #[error("invalid argument: graph has no vertices")]
    EmptyGraph,
    #[error("invalid argument: every vertex is already a gateway or served {0} times")]
    NothingToServe(u32),
}

/// A prospective gateway and the stations it would take on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GatewayChoice {
    pub gateway: usize,
    pub served: Vec<usize>,
    pub value: usize,
}

/// Partial solution: gateways, connections and per-vertex connection counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceState {
    is_gateway: Vec<bool>,
    degree: Vec<u32>,
    k: u32,
    unserved: usize,
    gateways: Vec<usize>,
    connections: Vec<(usize, usize)>,
}

impl ServiceState {
    pub fn new(n: usize, k: u32) -> Self {
        Self {
            is_gateway: vec![false; n],
            degree: vec![0; n],
            k,
            unserved: n,
            gateways: Vec::new(),
            connections: Vec::new(),
        }
    }

    pub fn is_gateway(&self, v: usize) -> bool {
        self.is_gateway[v]
    }

    /// Number of connections `v` has in the connection graph.
    pub fn degree(&self, v: usize) -> u32 {
        self.degree[v]
    }

    /// True for non-gateways with fewer than k connections.
    pub fn needs_service(&self, v: usize) -> bool {
        !self.is_gateway[v] && self.degree[v] < self.k
    }

    /// Count of vertices for which [`ServiceState::needs_service`] holds.
    pub fn unserved(&self) -> usize {
        self.unserved
    }

    /// Sum over non-gateways of the connections they still lack.
    pub fn missing_connections(&self) -> u64 {
        (0..self.is_gateway.len())
            .filter(|&v| !self.is_gateway[v])
            .map(|v| self.k.saturating_sub(self.degree[v]) as u64)
            .sum()
    }

    /// Adds the chosen gateway and its connections.
    ///
    /// A station promoted to gateway counts as fully served, so connections it
    /// received earlier are dropped from the final solution (see
    /// [`ServiceState::into_solution`]); their gateways keep the reserved
    /// capacity.
    pub fn apply(&mut self, choice: &GatewayChoice) {
        let w = choice.gateway;
        debug_assert!(!self.is_gateway[w]);
        if self.needs_service(w) {
            self.unserved -= 1;
        }
        self.is_gateway[w] = true;
        self.degree[w] = 0;
        self.gateways.push(w);
        for &v in &choice.served {
            debug_assert!(self.needs_service(v));
            self.degree[v] += 1;
            self.degree[w] += 1;
            if self.degree[v] == self.k {
                self.unserved -= 1;
            }
            self.connections.push((v, w));
        }
    }

    /// Gateways in selection order and the connections of every vertex that
    /// stayed a station.
    pub fn into_solution(self) -> PlacementSolution {
        let is_gateway = self.is_gateway;
        let mut connections = self.connections;
        connections.retain(|&(station, _)| !is_gateway[station]);
        PlacementSolution {
            gateways: self.gateways,
            connections,
        }
    }
}

/// Cheapest under-served neighbors of `w` that fit into the budget, admitted
/// in ascending (cost, id) order until the next one would overflow.
fn serve_set(instance: &ProblemInstance, state: &ServiceState, w: usize) -> Vec<usize> {
    let mut eligible: Vec<(u64, usize)> = instance
        .graph
        .adjacency(w)
        .iter()
        .filter(|l| state.needs_service(l.node()))
        .map(|l| (l.cost().units(), l.node()))
        .collect();
    eligible.sort_unstable();
    let mut remaining = instance.capacity.budget_units();
    let mut served = Vec::new();
    for (cost, v) in eligible {
        if cost > remaining {
            break;
        }
        remaining -= cost;
        served.push(v);
    }
    served
}

/// Value of `w` without materializing its serve set. Costs come in six
/// classes, so admission is counted per class in ascending cost.
fn score(instance: &ProblemInstance, state: &ServiceState, w: usize) -> usize {
    if state.is_gateway[w] {
        return 0;
    }
    let mut per_class = [0u64; 6];
    for link in instance.graph.adjacency(w) {
        if state.needs_service(link.node()) {
            per_class[link.sf().index()] += 1;
        }
    }
    let mut remaining = instance.capacity.budget_units();
    let mut served = 0u64;
    for (class, &count) in per_class.iter().enumerate() {
        let cost = 1u64 << class;
        let fits = count.min(remaining / cost);
        served += fits;
        remaining -= fits * cost;
        if fits < count {
            break;
        }
    }
    usize::from(state.needs_service(w)) + served as usize
}

/// Scores every vertex and returns the best gateway candidate.
pub fn new_gateway(
    instance: &ProblemInstance,
    state: &ServiceState,
) -> Result<GatewayChoice, SolverError> {
    let n = instance.node_count();
    if n == 0 {
        return Err(SolverError::EmptyGraph);
    }
    if state.unserved() == 0 {
        return Err(SolverError::NothingToServe(instance.k));
    }
    let (value, Reverse(gateway)) = (0..n)
        .into_par_iter()
        .map(|w| (score(instance, state, w), Reverse(w)))
        .max()
        .expect("non-empty range");
    let served = serve_set(instance, state, gateway);
    debug_assert_eq!(
        value,
        usize::from(state.needs_service(gateway)) + served.len()
    );
    Ok(GatewayChoice {
        gateway,
        served,
        value,
    })
}

/// Runs the greedy until every vertex is a gateway or has k connections.
///
/// Candidate values never increase between rounds, so stale values in a max
/// heap are upper bounds: the top entry wins once its recomputed value equals
/// its stored one. This selects the same vertex as a full [`new_gateway`] scan.
pub fn create_connection_graph(instance: &ProblemInstance) -> PlacementSolution {
    let n = instance.node_count();
    let mut state = ServiceState::new(n, instance.k);
    let mut heap: BinaryHeap<(usize, Reverse<usize>)> = (0..n)
        .map(|w| (score(instance, &state, w), Reverse(w)))
        .collect();
    while state.unserved() > 0 {
        let (stale, Reverse(w)) = heap
            .pop()
            .expect("an unserved vertex keeps a positive value");
        if state.is_gateway(w) {
            continue;
        }
        let fresh = score(instance, &state, w);
        if fresh < stale {
            if fresh > 0 {
                heap.push((fresh, Reverse(w)));
            }
            continue;
        }
        let served = serve_set(instance, &state, w);
        let choice = GatewayChoice {
            gateway: w,
            served,
            value: fresh,
        };
        state.apply(&choice);
    }
    state.into_solution()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// A connection does not join exactly one gateway with one station.
    EdgeEndpoint,
    /// A station has fewer than k connections.
    UnderDominated,
    /// A gateway's connection cost exceeds the capacity.
    CapacityExceeded,
    /// A connection or vertex that is not part of the graph.
    NotSubgraph,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::EdgeEndpoint => "edge-endpoint",
            Self::UnderDominated => "under-dominated",
            Self::CapacityExceeded => "capacity-exceeded",
            Self::NotSubgraph => "not-subgraph",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertex: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge: Option<(usize, usize)>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    feasible: bool,
    violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            feasible: violations.is_empty(),
            violations,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.feasible {
            return writeln!(f, "feasible: all conditions hold");
        }
        writeln!(f, "infeasible: {} violation(s)", self.violations.len())?;
        for v in &self.violations {
            write!(f, "  {}", v.kind)?;
            if let Some(vertex) = v.vertex {
                write!(f, " vertex {vertex}")?;
            }
            if let Some((a, b)) = v.edge {
                write!(f, " edge {a}-{b}")?;
            }
            writeln!(f, ": {}", v.detail)?;
        }
        Ok(())
    }
}

/// Checks a solution against the instance:
/// connections join a gateway with a station and exist in the graph, every
/// station has at least k connections, and no gateway's load exceeds the
/// capacity (compared exactly in cost units).
pub fn validate_solution(
    instance: &ProblemInstance,
    solution: &PlacementSolution,
) -> ValidationReport {
    let n = instance.node_count();
    let graph = &instance.graph;
    let mut violations = Vec::new();
    let mut is_gateway = vec![false; n];

    for &g in &solution.gateways {
        if g >= n {
            violations.push(Violation {
                kind: ViolationKind::NotSubgraph,
                vertex: Some(g),
                edge: None,
                detail: format!("gateway id out of range for {n} vertices"),
            });
        } else if std::mem::replace(&mut is_gateway[g], true) {
            violations.push(Violation {
                kind: ViolationKind::NotSubgraph,
                vertex: Some(g),
                edge: None,
                detail: "gateway listed more than once".into(),
            });
        }
    }

    let mut degree = vec![0u64; n];
    let mut load = vec![0u64; n];
    let mut seen = HashSet::with_capacity(solution.connections.len());
    for &(a, b) in &solution.connections {
        let edge_violation = |kind, detail: String| Violation {
            kind,
            vertex: None,
            edge: Some((a, b)),
            detail,
        };
        if a >= n || b >= n {
            violations.push(edge_violation(
                ViolationKind::NotSubgraph,
                format!("endpoint out of range for {n} vertices"),
            ));
            continue;
        }
        if !seen.insert((a.min(b), a.max(b))) {
            violations.push(edge_violation(
                ViolationKind::NotSubgraph,
                "duplicate connection".into(),
            ));
            continue;
        }
        let Some(sf) = graph.link(a, b) else {
            violations.push(edge_violation(
                ViolationKind::NotSubgraph,
                "no such edge in the graph".into(),
            ));
            continue;
        };
        let (station, gateway) = match (is_gateway[a], is_gateway[b]) {
            (false, true) => (a, b),
            (true, false) => (b, a),
            (both, _) => {
                let which = if both { "two gateways" } else { "two stations" };
                violations.push(edge_violation(
                    ViolationKind::EdgeEndpoint,
                    format!("joins {which}"),
                ));
                continue;
            }
        };
        degree[station] += 1;
        load[gateway] += sf.cost().units();
    }

    let k = instance.k as u64;
    for v in (0..n).filter(|&v| !is_gateway[v] && degree[v] < k) {
        violations.push(Violation {
            kind: ViolationKind::UnderDominated,
            vertex: Some(v),
            edge: None,
            detail: format!("{} of {k} required connections", degree[v]),
        });
    }
    let budget = instance.capacity.budget_units();
    for v in (0..n).filter(|&v| is_gateway[v] && load[v] > budget) {
        violations.push(Violation {
            kind: ViolationKind::CapacityExceeded,
            vertex: Some(v),
            edge: None,
            detail: format!(
                "load {}/32 exceeds capacity {}",
                load[v],
                instance.capacity.value()
            ),
        });
    }
    ValidationReport::from_violations(violations)
}
