//! Gateway placement for LoRa-style LP WAN networks.
//!
//! Stations are laid out in the plane ([`topo`]), linked by a path loss model
//! that assigns each reachable pair a spreading factor and a connection cost
//! ([`radio`]), and a greedy capacitated k-domination selects gateways together
//! with an explicit station-to-gateway assignment ([`solver`]). An exact
//! solver for tiny instances ([`oracle`]) serves as ground truth, and
//! [`bench`] runs seeded experiment grids.

pub mod bench;
pub mod config;
pub mod graph;
pub mod oracle;
pub mod plot;
pub mod radio;
pub mod solver;
pub mod topo;

pub use graph::{coverage_deficit, Capacity, PlacementSolution, ProblemInstance, VisibilityGraph};
pub use radio::{build_visibility_graph, PropagationParams, SpreadingFactor};
pub use solver::{create_connection_graph, validate_solution, ValidationReport};
pub use topo::{generate_topology, Node, Topology};
