//! Experiment grid over node counts, areas and k, with per-run statistics
//! (gateway count, solve time, average SF, SF distribution) and per-cell means.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, KeyValues};
use crate::graph::{Capacity, PlacementSolution, ProblemInstance, VisibilityGraph};
use crate::radio::{build_visibility_graph, PropagationParams, SpreadingFactor};
use crate::solver::{create_connection_graph, validate_solution, ValidationReport};
use crate::topo::{generate_topology, TopoError};

/// Capacity used when none is configured.
pub const DEFAULT_CAPACITY: f64 = 40.0;

const SHADOWING_STREAM: u64 = 0x5ad0;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Topology(#[from] TopoError),
    #[error("infeasible solution for {cell} repetition {repetition} (seed {seed}):\n{report}")]
    Infeasible {
        cell: CellKey,
        repetition: usize,
        seed: u64,
        report: ValidationReport,
    },
}

/// A deployment rectangle in meters, written `WIDTHxHEIGHT`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub const fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }
}

impl fmt::Display for Area {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl FromStr for Area {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad dimension in {s:?}"))
        };
        let area = Area::new(parse(w)?, parse(h)?);
        if area.width > 0.0
            && area.height > 0.0
            && area.width.is_finite()
            && area.height.is_finite()
        {
            Ok(area)
        } else {
            Err(format!("area dimensions must be positive, got {s:?}"))
        }
    }
}

pub const STANDARD_NODE_COUNTS: [usize; 5] = [1000, 2500, 5000, 10000, 20000];
pub const STANDARD_AREAS: [Area; 4] = [
    Area::new(5000.0, 7500.0),
    Area::new(10000.0, 15000.0),
    Area::new(15000.0, 22500.0),
    Area::new(20000.0, 30000.0),
];
pub const STANDARD_K_VALUES: [u32; 3] = [1, 2, 3];
pub const STANDARD_REPETITIONS: usize = 30;

#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub node_counts: Vec<usize>,
    pub areas: Vec<Area>,
    pub k_values: Vec<u32>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub propagation: PropagationParams,
    pub capacity: Capacity,
}

const GRID_KEYS: [&str; 6] = [
    "node_counts",
    "areas",
    "k_values",
    "repetitions",
    "base_seed",
    "capacity",
];

impl ExperimentGrid {
    /// All node counts, areas and k values of the standard grid, 30 runs each.
    pub fn standard(base_seed: u64) -> Self {
        Self {
            node_counts: STANDARD_NODE_COUNTS.to_vec(),
            areas: STANDARD_AREAS.to_vec(),
            k_values: STANDARD_K_VALUES.to_vec(),
            repetitions: STANDARD_REPETITIONS,
            base_seed,
            propagation: PropagationParams::default(),
            capacity: Capacity::new(DEFAULT_CAPACITY).expect("positive"),
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let fail = |msg: &str| Err(BenchError::InvalidGrid(msg.to_string()));
        if self.repetitions == 0 {
            return fail("repetitions must be at least 1");
        }
        if self.node_counts.is_empty() || self.areas.is_empty() || self.k_values.is_empty() {
            return fail("node_counts, areas and k_values must be non-empty");
        }
        if self.k_values.contains(&0) {
            return fail("k values must be at least 1");
        }
        if self.node_counts.iter().any(|&n| n > u32::MAX as usize) {
            return fail("node count too large");
        }
        self.propagation
            .validate()
            .map_err(|e| BenchError::InvalidGrid(e.to_string()))
    }

    /// Reads a `key=value` grid. Missing keys fall back to [`ExperimentGrid::standard`];
    /// propagation keys may appear in the same file.
    pub fn from_config_str(text: &str) -> Result<Self, BenchError> {
        let config = KeyValues::parse(text)?;
        let known: Vec<&str> = GRID_KEYS
            .iter()
            .chain(PropagationParams::KEYS.iter())
            .copied()
            .collect();
        config.reject_unknown(&known)?;
        let mut grid = Self::standard(0);
        if let Some(v) = config.get_list("node_counts")? {
            grid.node_counts = v;
        }
        if let Some(v) = config.get_list("areas")? {
            grid.areas = v;
        }
        if let Some(v) = config.get_list("k_values")? {
            grid.k_values = v;
        }
        if let Some(v) = config.get("repetitions")? {
            grid.repetitions = v;
        }
        if let Some(v) = config.get("base_seed")? {
            grid.base_seed = v;
        }
        if let Some(v) = config.get_f64("capacity")? {
            grid.capacity = Capacity::new(v).map_err(|e| BenchError::InvalidGrid(e.to_string()))?;
        }
        grid.propagation.apply_config(&config)?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn cells(&self) -> Vec<CellKey> {
        let mut cells = Vec::new();
        for &n in &self.node_counts {
            for &area in &self.areas {
                for &k in &self.k_values {
                    cells.push(CellKey { n, area, k });
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellKey {
    pub n: usize,
    pub area: Area,
    pub k: u32,
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cell n={} area={} k={}", self.n, self.area, self.k)
    }
}

/// Stable 64-bit seed from a list of integers (first 8 bytes of SHA-256 over
/// their little-endian encoding).
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part.to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Seed of one repetition of a cell.
pub fn run_seed(base_seed: u64, cell: &CellKey, repetition: usize) -> u64 {
    derive_seed(&[
        base_seed,
        cell.n as u64,
        cell.area.width.to_bits(),
        cell.area.height.to_bits(),
        cell.k as u64,
        repetition as u64,
    ])
}

/// Shadowing seed paired with a topology seed.
pub fn shadowing_seed(run_seed: u64) -> u64 {
    derive_seed(&[run_seed, SHADOWING_STREAM])
}

/// Share of stations whose best serving link uses each SF.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SfHistogram {
    /// Fractions for SF7..=SF12; all zero when there are no stations.
    pub fractions: [f64; 6],
    /// Non-gateway vertices with at least one connection.
    pub stations: usize,
}

impl SfHistogram {
    pub fn is_empty(&self) -> bool {
        self.stations == 0
    }

    pub fn fraction(&self, sf: SpreadingFactor) -> f64 {
        self.fractions[sf.index()]
    }

    pub fn total(&self) -> f64 {
        self.fractions.iter().sum()
    }
}

/// For each station, the lowest SF among its connections; returned as
/// fractions over all stations. Empty when every vertex is a gateway.
pub fn sf_distribution(solution: &PlacementSolution, graph: &VisibilityGraph) -> SfHistogram {
    let n = graph.node_count();
    let is_gateway = solution.gateway_mask(n);
    let mut best: Vec<Option<SpreadingFactor>> = vec![None; n];
    for &(a, b) in &solution.connections {
        let station = if is_gateway[a] { b } else { a };
        if let Some(sf) = graph.link(a, b) {
            let slot = &mut best[station];
            *slot = Some(slot.map_or(sf, |cur| cur.min(sf)));
        }
    }
    let mut counts = [0usize; 6];
    for sf in best.iter().flatten() {
        counts[sf.index()] += 1;
    }
    let stations: usize = counts.iter().sum();
    let mut fractions = [0.0; 6];
    if stations > 0 {
        for (f, c) in fractions.iter_mut().zip(counts) {
            *f = c as f64 / stations as f64;
        }
    }
    SfHistogram {
        fractions,
        stations,
    }
}

/// Mean SF over all connections; `None` without connections.
pub fn average_sf(solution: &PlacementSolution, graph: &VisibilityGraph) -> Option<f64> {
    let sfs: Vec<f64> = solution
        .connections
        .iter()
        .filter_map(|&(a, b)| graph.link(a, b))
        .map(|sf| sf.value() as f64)
        .collect();
    (!sfs.is_empty()).then(|| sfs.iter().sum::<f64>() / sfs.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub gateway_count: usize,
    /// Seconds spent in the greedy solve only.
    pub wall_time: f64,
    pub avg_sf: Option<f64>,
    pub sf_histogram: SfHistogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub cell: CellKey,
    pub repetition: usize,
    pub seed: u64,
    pub stats: RunStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    #[serde(flatten)]
    pub cell: CellKey,
    pub runs: usize,
    pub mean_gateways: f64,
    pub mean_time_s: f64,
    pub mean_avg_sf: Option<f64>,
    /// Mean SF fractions over runs with at least one station, keyed by SF.
    pub mean_sf_fractions: BTreeMap<u8, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    pub runs: Vec<RunRecord>,
    pub cells: Vec<CellSummary>,
}

/// Generates, solves and validates one instance.
pub fn run_single(
    cell: &CellKey,
    seed: u64,
    propagation: &PropagationParams,
    capacity: Capacity,
) -> Result<(RunStats, ValidationReport), BenchError> {
    let topology = generate_topology(cell.n, cell.area.width, cell.area.height, seed)?;
    let graph = build_visibility_graph(&topology, propagation, shadowing_seed(seed));
    let instance = ProblemInstance::new(graph, capacity, cell.k)
        .map_err(|e| BenchError::InvalidGrid(e.to_string()))?;
    let started = Instant::now();
    let solution = create_connection_graph(&instance);
    let wall_time = started.elapsed().as_secs_f64();
    let report = validate_solution(&instance, &solution);
    let stats = RunStats {
        gateway_count: solution.gateways.len(),
        wall_time,
        avg_sf: average_sf(&solution, &instance.graph),
        sf_histogram: sf_distribution(&solution, &instance.graph),
    };
    Ok((stats, report))
}

/// Runs every cell and repetition of the grid in a worker pool. Output order
/// follows the grid, not completion order.
pub fn run_experiment(grid: &ExperimentGrid) -> Result<ExperimentResults, BenchError> {
    grid.validate()?;
    let tasks: Vec<(CellKey, usize)> = grid
        .cells()
        .into_iter()
        .flat_map(|cell| (0..grid.repetitions).map(move |rep| (cell, rep)))
        .collect();
    let runs = tasks
        .par_iter()
        .map(|&(cell, repetition)| {
            let seed = run_seed(grid.base_seed, &cell, repetition);
            let (stats, report) = run_single(&cell, seed, &grid.propagation, grid.capacity)?;
            if !report.is_feasible() {
                return Err(BenchError::Infeasible {
                    cell,
                    repetition,
                    seed,
                    report,
                });
            }
            Ok(RunRecord {
                cell,
                repetition,
                seed,
                stats,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let cells = runs.chunks(grid.repetitions).map(summarize).collect();
    Ok(ExperimentResults { runs, cells })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn summarize(runs: &[RunRecord]) -> CellSummary {
    let stats = || runs.iter().map(|r| &r.stats);
    let with_stations: Vec<&SfHistogram> = stats()
        .map(|s| &s.sf_histogram)
        .filter(|h| !h.is_empty())
        .collect();
    let mean_sf_fractions = SpreadingFactor::ALL
        .iter()
        .filter(|_| !with_stations.is_empty())
        .map(|sf| {
            let m = mean(with_stations.iter().map(|h| h.fraction(*sf))).unwrap_or(0.0);
            (sf.value(), m)
        })
        .collect();
    CellSummary {
        cell: runs[0].cell,
        runs: runs.len(),
        mean_gateways: mean(stats().map(|s| s.gateway_count as f64)).unwrap_or(0.0),
        mean_time_s: mean(stats().map(|s| s.wall_time)).unwrap_or(0.0),
        mean_avg_sf: mean(stats().filter_map(|s| s.avg_sf)),
        mean_sf_fractions,
    }
}

impl ExperimentResults {
    pub const CSV_HEADER: &'static str =
        "n,width,height,k,rep,gateways,time_s,avg_sf,sf7,sf8,sf9,sf10,sf11,sf12";

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for run in &self.runs {
            let s = &run.stats;
            write!(
                out,
                "{},{},{},{},{},{},{:.6},",
                run.cell.n,
                run.cell.area.width,
                run.cell.area.height,
                run.cell.k,
                run.repetition,
                s.gateway_count,
                s.wall_time
            )?;
            if let Some(avg) = s.avg_sf {
                write!(out, "{avg}")?;
            }
            for f in s.sf_histogram.fractions {
                write!(out, ",{f}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            cells: &'a [CellSummary],
        }
        serde_json::to_string_pretty(&Summary { cells: &self.cells }).expect("summary serializes")
    }

    pub fn cell(&self, n: usize, area: Area, k: u32) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.cell.n == n && c.cell.area == area && c.cell.k == k)
    }
}
