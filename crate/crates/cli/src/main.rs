//! `gwplace`: generate topologies, place gateways, validate, benchmark and plot.
//!
//! Exit codes: 0 success, 1 usage error, 2 infeasible solution, 3 I/O error.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use lpwan_gateways::bench::{average_sf, run_experiment, sf_distribution, Area, ExperimentGrid};
use lpwan_gateways::plot::{coverage_map_svg, sf_histogram_svg};
use lpwan_gateways::{
    build_visibility_graph, create_connection_graph, generate_topology, validate_solution,
    Capacity, PlacementSolution, ProblemInstance, PropagationParams, Topology, VisibilityGraph,
};

#[derive(Debug, Parser)]
#[command(name = "gwplace", version, about = "LP WAN gateway placement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a uniform random topology as `id,x,y` CSV.
    Generate(GenerateArgs),
    /// Select gateways for a topology and write the solution JSON.
    Solve(SolveArgs),
    /// Check a solution against its topology.
    Validate(ValidateArgs),
    /// Run an experiment grid and write per-run CSV and per-cell JSON.
    Bench(BenchArgs),
    /// Render a coverage map and SF histogram as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    nodes: usize,
    /// Area width in meters.
    #[arg(long)]
    width: f64,
    /// Area height in meters.
    #[arg(long)]
    height: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Graph construction inputs shared by solve, validate and plot.
#[derive(Debug, Args)]
struct RadioArgs {
    /// Shadowing seed for the visibility graph.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Propagation parameters as key=value lines.
    #[arg(long)]
    radio: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InstanceArgs {
    /// Required number of gateways per station.
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Per-gateway cost budget.
    #[arg(long, default_value_t = lpwan_gateways::bench::DEFAULT_CAPACITY)]
    capacity: f64,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    topology: PathBuf,
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    radio: RadioArgs,
    /// Solution JSON output.
    #[arg(long)]
    out: PathBuf,
    /// Optional `u,v,sf,cost` edge list output.
    #[arg(long)]
    edges: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    topology: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    radio: RadioArgs,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Grid as key=value lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the full standard grid (5 node counts, 4 areas, k 1..3, 30 runs).
    #[arg(long)]
    full_grid: bool,
    #[arg(long, value_delimiter = ',')]
    nodes: Option<Vec<usize>>,
    /// Areas as WIDTHxHEIGHT, comma separated.
    #[arg(long, value_delimiter = ',')]
    areas: Option<Vec<Area>>,
    #[arg(long, value_delimiter = ',')]
    k_values: Option<Vec<u32>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    capacity: Option<f64>,
    #[arg(long)]
    radio: Option<PathBuf>,
    /// Print the expanded grid cells and exit without running.
    #[arg(long)]
    dry_run: bool,
    #[arg(long, required_unless_present = "dry_run")]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    topology: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    #[command(flatten)]
    radio: RadioArgs,
    /// Coverage map SVG output.
    #[arg(long)]
    map: PathBuf,
    /// SF histogram SVG output.
    #[arg(long)]
    hist: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Infeasible(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Infeasible(_) => 2,
            Self::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Infeasible(m) | Self::Io(m) => f.write_str(m),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn io(e: impl fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| io(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io(format!("{}: {e}", path.display())))
}

fn load_params(path: Option<&Path>) -> Result<PropagationParams> {
    match path {
        Some(p) => PropagationParams::from_config_str(&read_file(p)?)
            .map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => Ok(PropagationParams::default()),
    }
}

fn load_graph(topology: &Topology, radio: &RadioArgs) -> Result<VisibilityGraph> {
    let params = load_params(radio.radio.as_deref())?;
    Ok(build_visibility_graph(topology, &params, radio.seed))
}

fn load_topology(path: &Path) -> Result<Topology> {
    Topology::load(path).map_err(|e| io(format!("{}: {e}", path.display())))
}

fn load_solution(path: &Path) -> Result<PlacementSolution> {
    PlacementSolution::load(path).map_err(|e| io(format!("{}: {e}", path.display())))
}

fn instance(graph: VisibilityGraph, args: &InstanceArgs) -> Result<ProblemInstance> {
    let capacity = Capacity::new(args.capacity).map_err(usage)?;
    ProblemInstance::new(graph, capacity, args.k).map_err(usage)
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let topology =
        generate_topology(args.nodes, args.width, args.height, args.seed).map_err(usage)?;
    topology.save(&args.out).map_err(io)?;
    println!("wrote {} nodes to {}", topology.len(), args.out.display());
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let topology = load_topology(&args.topology)?;
    let graph = load_graph(&topology, &args.radio)?;
    let inst = instance(graph, &args.instance)?;
    if let Some(edges) = &args.edges {
        inst.graph.save_edge_list(edges).map_err(io)?;
    }
    let started = Instant::now();
    let solution = create_connection_graph(&inst);
    let elapsed = started.elapsed().as_secs_f64();
    let report = validate_solution(&inst, &solution);
    if !report.is_feasible() {
        return Err(CliError::Infeasible(report.to_string()));
    }
    solution.save(&args.out).map_err(io)?;
    let avg =
        average_sf(&solution, &inst.graph).map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
    println!(
        "gateways={} time_s={elapsed:.4} avg_sf={avg} connections={}",
        solution.gateways.len(),
        solution.connections.len()
    );
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<()> {
    let topology = load_topology(&args.topology)?;
    let solution = load_solution(&args.solution)?;
    let graph = load_graph(&topology, &args.radio)?;
    let inst = instance(graph, &args.instance)?;
    let report = validate_solution(&inst, &solution);
    if args.json {
        println!("{}", report.to_json());
    } else {
        print!("{report}");
    }
    if report.is_feasible() {
        Ok(())
    } else {
        Err(CliError::Infeasible(format!(
            "{} violation(s)",
            report.violations().len()
        )))
    }
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let mut grid = match &args.config {
        Some(path) => ExperimentGrid::from_config_str(&read_file(path)?)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None if args.full_grid => ExperimentGrid::standard(0),
        None => ExperimentGrid {
            node_counts: vec![1000],
            areas: vec![Area::new(5000.0, 7500.0)],
            k_values: vec![1],
            repetitions: 1,
            ..ExperimentGrid::standard(0)
        },
    };
    if args.config.is_some() && args.full_grid {
        return Err(usage("--config and --full-grid are mutually exclusive"));
    }
    if let Some(v) = args.nodes {
        grid.node_counts = v;
    }
    if let Some(v) = args.areas {
        grid.areas = v;
    }
    if let Some(v) = args.k_values {
        grid.k_values = v;
    }
    if let Some(v) = args.reps {
        grid.repetitions = v;
    }
    if let Some(v) = args.seed {
        grid.base_seed = v;
    }
    if let Some(v) = args.capacity {
        grid.capacity = Capacity::new(v).map_err(usage)?;
    }
    if args.radio.is_some() {
        grid.propagation = load_params(args.radio.as_deref())?;
    }
    grid.validate().map_err(usage)?;
    if args.dry_run {
        for cell in grid.cells() {
            println!(
                "n={} area={} k={} runs={}",
                cell.n, cell.area, cell.k, grid.repetitions
            );
        }
        return Ok(());
    }

    let results = run_experiment(&grid).map_err(|e| match e {
        lpwan_gateways::bench::BenchError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
        other => usage(other),
    })?;
    let mut csv = Vec::new();
    results.write_csv(&mut csv).map_err(io)?;
    let out_csv = args.out_csv.as_deref().expect("clap requires --out-csv");
    write_file(out_csv, &String::from_utf8(csv).expect("utf-8 csv"))?;
    if let Some(path) = &args.out_json {
        write_file(path, &(results.summary_json() + "\n"))?;
    }
    for cell in &results.cells {
        let avg = cell
            .mean_avg_sf
            .map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        println!(
            "n={} area={} k={} runs={} gateways={:.2} time_s={:.4} avg_sf={avg}",
            cell.cell.n,
            cell.cell.area,
            cell.cell.k,
            cell.runs,
            cell.mean_gateways,
            cell.mean_time_s
        );
    }
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<()> {
    let topology = load_topology(&args.topology)?;
    let solution = load_solution(&args.solution)?;
    let graph = load_graph(&topology, &args.radio)?;
    let map = coverage_map_svg(&topology, &graph, &solution).map_err(usage)?;
    write_file(&args.map, &map)?;
    if let Some(path) = &args.hist {
        let histogram = sf_distribution(&solution, &graph);
        write_file(path, &sf_histogram_svg(&histogram))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Plot(a) => cmd_plot(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
