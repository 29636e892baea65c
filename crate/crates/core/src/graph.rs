//! Visibility graph, problem instances, placement solutions and the coverage
//! deficit used to drive and check k-domination.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::radio::{LinkCost, SpreadingFactor};

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("invalid argument: vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("invalid argument: self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("invalid argument: parallel edge {0}-{1}")]
    ParallelEdge(usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed solution JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// One half of an undirected link: the neighbor and the link's spreading factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    node: u32,
    sf: SpreadingFactor,
}

impl Link {
    pub fn new(node: usize, sf: SpreadingFactor) -> Self {
        let node = u32::try_from(node).expect("vertex ids fit in u32");
        Self { node, sf }
    }

    pub fn node(&self) -> usize {
        self.node as usize
    }

    pub fn sf(&self) -> SpreadingFactor {
        self.sf
    }

    pub fn cost(&self) -> LinkCost {
        self.sf.cost()
    }
}

/// Undirected graph in compressed adjacency form. Every adjacency list is
/// sorted by neighbor id; the graph is immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityGraph {
    offsets: Vec<usize>,
    links: Vec<Link>,
}

impl VisibilityGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            offsets: vec![0; n + 1],
            links: Vec::new(),
        }
    }

    /// Builds from per-vertex lists that are already id-sorted and symmetric.
    pub(crate) fn from_sorted_adjacency(adjacency: Vec<Vec<Link>>) -> Self {
        let mut offsets = Vec::with_capacity(adjacency.len() + 1);
        offsets.push(0);
        let total = adjacency.iter().map(Vec::len).sum();
        let mut links = Vec::with_capacity(total);
        for list in adjacency {
            debug_assert!(list.windows(2).all(|w| w[0].node < w[1].node));
            links.extend(list);
            offsets.push(links.len());
        }
        Self { offsets, links }
    }

    /// Builds from an undirected edge list. Rejects self-loops, parallel edges
    /// and out-of-range endpoints.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize, SpreadingFactor)>,
    {
        let mut adjacency: Vec<Vec<Link>> = vec![Vec::new(); n];
        for (u, v, sf) in edges {
            for vertex in [u, v] {
                if vertex >= n {
                    return Err(GraphError::VertexOutOfRange { vertex, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adjacency[u].push(Link::new(v, sf));
            adjacency[v].push(Link::new(u, sf));
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_by_key(|l| l.node);
            if let Some(w) = list.windows(2).find(|w| w[0].node == w[1].node) {
                return Err(GraphError::ParallelEdge(
                    u.min(w[0].node()),
                    u.max(w[0].node()),
                ));
            }
        }
        Ok(Self::from_sorted_adjacency(adjacency))
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.links.len() / 2
    }

    /// Adjacency list of `v`, ordered by ascending neighbor id.
    pub fn neighbors(&self, v: usize) -> Result<&[Link], GraphError> {
        if v >= self.node_count() {
            return Err(GraphError::VertexOutOfRange {
                vertex: v,
                n: self.node_count(),
            });
        }
        Ok(self.adjacency(v))
    }

    /// Unchecked variant of [`VisibilityGraph::neighbors`]; panics when `v` is out of range.
    pub fn adjacency(&self, v: usize) -> &[Link] {
        &self.links[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Spreading factor of the edge `{u, w}` if it exists.
    pub fn link(&self, u: usize, w: usize) -> Option<SpreadingFactor> {
        if u >= self.node_count() || w >= self.node_count() {
            return None;
        }
        let list = self.adjacency(u);
        list.binary_search_by_key(&w, Link::node)
            .ok()
            .map(|i| list[i].sf)
    }

    /// Each undirected edge once as `(u, v, sf)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, SpreadingFactor)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.adjacency(u)
                .iter()
                .filter(move |l| l.node() > u)
                .map(move |l| (u, l.node(), l.sf))
        })
    }

    /// Writes the `u,v,sf,cost` edge list.
    pub fn write_edge_list<W: Write>(&self, out: &mut W) -> io::Result<()> {
        out.write_all(b"u,v,sf,cost\n")?;
        for (u, v, sf) in self.edges() {
            writeln!(out, "{u},{v},{},{}", sf.value(), sf.cost())?;
        }
        Ok(())
    }

    pub fn save_edge_list(&self, path: &Path) -> Result<(), GraphError> {
        let io_err = |source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
        self.write_edge_list(&mut out).map_err(io_err)?;
        out.flush().map_err(io_err)
    }
}

/// Per-gateway cost budget `c`.
///
/// Loads are sums of dyadic link costs, so `load <= c` is decided exactly by
/// comparing integer cost units against `floor(32 c)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Capacity(f64);

impl Capacity {
    pub fn new(value: f64) -> Result<Self, GraphError> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(GraphError::InvalidArgument(format!(
                "capacity must be positive and finite, got {value}"
            )))
        }
    }

    /// Capacity expressed in whole cost units, i.e. floor(32 c).
    pub fn from_units(units: u64) -> Result<Self, GraphError> {
        Self::new(units as f64 / LinkCost::UNITS_PER_ONE as f64)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn budget_units(self) -> u64 {
        // multiplying by a power of two is exact; the cast saturates
        (self.0 * LinkCost::UNITS_PER_ONE as f64).floor() as u64
    }
}

/// The triple (graph, capacity, k).
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub graph: VisibilityGraph,
    pub capacity: Capacity,
    pub k: u32,
}

impl ProblemInstance {
    pub fn new(graph: VisibilityGraph, capacity: Capacity, k: u32) -> Result<Self, GraphError> {
        if k == 0 {
            return Err(GraphError::InvalidArgument("k must be at least 1".into()));
        }
        Ok(Self { graph, capacity, k })
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }
}

/// Gateways in selection order plus the station-to-gateway connections.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementSolution {
    pub gateways: Vec<usize>,
    /// `(station, gateway)` pairs.
    pub connections: Vec<(usize, usize)>,
}

impl PlacementSolution {
    /// Compact JSON: `{"gateways":[..],"connections":[[station,gateway],..]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), GraphError> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text).map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn gateway_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &g in &self.gateways {
            if g < n {
                mask[g] = true;
            }
        }
        mask
    }
}

/// Coverage deficit `nk - sum_v d_k(v, D)`, where a gateway contributes `k`
/// and any other vertex contributes `min(k, |N(v) ∩ D|)`. Zero exactly when
/// `gateways` is k-dominating.
pub fn coverage_deficit(
    graph: &VisibilityGraph,
    gateways: &[usize],
    k: u32,
) -> Result<u64, GraphError> {
    let n = graph.node_count();
    let mut in_d = vec![false; n];
    for &g in gateways {
        if g >= n {
            return Err(GraphError::VertexOutOfRange { vertex: g, n });
        }
        in_d[g] = true;
    }
    let k = k as u64;
    let credit: u64 = (0..n)
        .map(|v| {
            if in_d[v] {
                k
            } else {
                let adjacent = graph.adjacency(v).iter().filter(|l| in_d[l.node()]).count() as u64;
                adjacent.min(k)
            }
        })
        .sum();
    Ok(n as u64 * k - credit)
}
