//! Node topologies: uniform random generation and the `id,x,y` CSV format.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Debug, thiserror::Error)]
pub enum TopoError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("line {line} (record {record}): {message}")]
    Parse {
        line: u64,
        record: u64,
        message: String,
    },
    #[error("{message}")]
    Ids { message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Stream(#[from] io::Error),
}

/// A candidate station in planar meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

impl Node {
    pub fn new(id: usize, x: f64, y: f64) -> Self {
        Self { id, x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<Node>,
    width: f64,
    height: f64,
}

impl Topology {
    /// Wraps nodes whose ids are already `0..n` in order. The area is the
    /// bounding rectangle anchored at the origin.
    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        debug_assert!(nodes.iter().enumerate().all(|(i, n)| n.id == i));
        let width = nodes.iter().map(|n| n.x).fold(0.0, f64::max);
        let height = nodes.iter().map(|n| n.y).fold(0.0, f64::max);
        Self {
            nodes,
            width,
            height,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn save(&self, path: &Path) -> Result<(), TopoError> {
        let io_err = |source| TopoError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io_err)?;
        let mut out = BufWriter::new(file);
        self.write_csv(&mut out).map_err(io_err)?;
        out.flush().map_err(io_err)
    }

    /// Writes the `id,x,y` CSV. Coordinates use the shortest representation
    /// that parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        out.write_all(b"id,x,y\n")?;
        for node in &self.nodes {
            writeln!(out, "{},{},{}", node.id, node.x, node.y)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TopoError> {
        let file = File::open(path).map_err(|source| TopoError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_csv(BufReader::new(file))
    }

    /// Reads an `id,x,y` CSV (the `id` column is optional). Rows may come in
    /// any order; ids must cover `0..n` exactly once.
    pub fn read_csv<R: Read>(input: R) -> Result<Self, TopoError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = reader.headers().map_err(|e| csv_error(&e, 1, 0))?.clone();
        let column = |name: &str| headers.iter().position(|h| h == name);
        let (Some(x_col), Some(y_col)) = (column("x"), column("y")) else {
            return Err(TopoError::Parse {
                line: 1,
                record: 0,
                message: format!("header must contain x and y columns, got {headers:?}"),
            });
        };
        let id_col = column("id");

        let mut rows: Vec<Node> = Vec::new();
        for (record_idx, result) in reader.records().enumerate() {
            let record_idx = record_idx as u64;
            let record = result.map_err(|e| csv_error(&e, record_idx + 2, record_idx))?;
            let line = record.position().map_or(record_idx + 2, |p| p.line());
            let parse_err = |message: String| TopoError::Parse {
                line,
                record: record_idx,
                message,
            };
            let field = |col: usize, name: &str| {
                record
                    .get(col)
                    .ok_or_else(|| parse_err(format!("missing {name} field")))
            };
            let coord = |col: usize, name: &str| -> Result<f64, TopoError> {
                let text = field(col, name)?;
                let value: f64 = text
                    .parse()
                    .map_err(|_| parse_err(format!("{name} is not a number: {text:?}")))?;
                if value.is_finite() {
                    Ok(value)
                } else {
                    Err(parse_err(format!("{name} is not finite: {text:?}")))
                }
            };
            let id = match id_col {
                Some(col) => {
                    let text = field(col, "id")?;
                    text.parse::<usize>().map_err(|_| {
                        parse_err(format!("id is not a non-negative integer: {text:?}"))
                    })?
                }
                None => rows.len(),
            };
            rows.push(Node::new(id, coord(x_col, "x")?, coord(y_col, "y")?));
        }

        let n = rows.len();
        let mut slots: Vec<Option<Node>> = vec![None; n];
        for node in rows {
            if node.id >= n {
                return Err(TopoError::Ids {
                    message: format!(
                        "id {} out of range for {n} nodes (ids must be 0..n)",
                        node.id
                    ),
                });
            }
            if slots[node.id].replace(node).is_some() {
                return Err(TopoError::Ids {
                    message: format!("duplicate id {}", node.id),
                });
            }
        }
        // n ids in 0..n without duplicates leaves no gaps
        Ok(Self::from_nodes(slots.into_iter().flatten().collect()))
    }
}

fn csv_error(err: &csv::Error, fallback_line: u64, record: u64) -> TopoError {
    let line = err.position().map_or(fallback_line, |p| p.line());
    TopoError::Parse {
        line,
        record,
        message: err.to_string(),
    }
}

/// Places `n` nodes independently and uniformly in `[0, width] x [0, height]`.
///
/// Uses xoshiro256++ seeded through SplitMix64, so the output is identical on
/// every platform for the same arguments.
pub fn generate_topology(
    n: usize,
    width: f64,
    height: f64,
    seed: u64,
) -> Result<Topology, TopoError> {
    if !(width.is_finite() && width > 0.0) || !(height.is_finite() && height > 0.0) {
        return Err(TopoError::InvalidArgument(format!(
            "area must be positive and finite, got {width} x {height}"
        )));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let nodes = (0..n)
        .map(|id| {
            let x = rng.random_range(0.0..=width);
            let y = rng.random_range(0.0..=height);
            Node::new(id, x, y)
        })
        .collect();
    Ok(Topology {
        nodes,
        width,
        height,
    })
}
