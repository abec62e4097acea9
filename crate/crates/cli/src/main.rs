use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use gridloop::expansion::CostCatalog;
use gridloop::pipeline::{
    compare_scenarios, read_report, run_pipeline, write_comparison, write_outputs, PipelineError,
};
use gridloop::scenario::{
    generate_estate_with, load_grid, load_scenario, radial_feeders, write_grid, BuildingStock, FeederLayout, GecMode,
    GridModel, ScenarioConfig, ScenarioError,
};

/// Building investment planning coupled with LV grid reinforcement and grid-cost feedback.
#[derive(Debug, Parser)]
#[command(name = "gridloop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full feedback loop and write reports.
    Simulate(SimulateArgs),
    /// Compare finished runs; the first is the baseline.
    Compare {
        #[arg(long, num_args = 2.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value = "comparison")]
        out: PathBuf,
    },
    /// Check input files without running anything.
    Validate {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        estate: Option<PathBuf>,
    },
    /// Write a synthetic estate and matching feeder grid.
    Generate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Estate parameters are taken from this scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Grid directory (nodes.csv, lines.csv, transformer.csv); generated feeders if omitted.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, conflicts_with = "generate")]
    estate: Option<PathBuf>,
    /// Generate the estate from this seed instead of loading one.
    #[arg(long)]
    generate: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<i32>>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    gec_mode: Option<GecMode>,
    #[arg(long)]
    max_loop: Option<usize>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Input(String),
    Runtime(String),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn load_stock(estate: Option<&Path>, seed: Option<u64>, config: &ScenarioConfig) -> Result<BuildingStock, Failure> {
    match (estate, seed) {
        (Some(path), _) => Ok(BuildingStock::load(path)?),
        (None, Some(seed)) => Ok(generate_estate_with(seed, &config.estate)?),
        (None, None) => Err(Failure::Input("either --estate or --generate is required".into())),
    }
}

fn load_or_build_grid(grid: Option<&Path>, stock: &BuildingStock) -> Result<GridModel, Failure> {
    match grid {
        Some(path) => Ok(load_grid(path)?),
        None => Ok(radial_feeders(&FeederLayout::default(), &stock.ids())),
    }
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let mut config = load_scenario(&args.scenario)?;
    if let Some(h) = args.horizons {
        config.horizons = h;
    }
    if let Some(eta) = args.eta {
        config.eta = eta;
    }
    if let Some(mode) = args.gec_mode {
        config.gec_mode = mode;
    }
    if let Some(n) = args.max_loop {
        config.max_loop_iterations = n;
    }
    config.validate()?;
    let stock = load_stock(args.estate.as_deref(), args.generate, &config)?;
    let grid = load_or_build_grid(args.grid.as_deref(), &stock)?;
    grid.validate_stock(&stock)?;
    let catalog = match &args.catalog {
        Some(path) => CostCatalog::load(path).map_err(|e| Failure::Input(e.to_string()))?,
        None => CostCatalog::from_grid(&grid),
    };
    let report = run_pipeline(&config, &stock, &grid, &catalog)?;
    write_outputs(&report, &args.out)?;
    info!("{} iterations, {}, reports in {}", report.iterations.len(), report.status.as_str(), args.out.display());
    Ok(())
}

fn validate(scenario: Option<PathBuf>, grid: Option<PathBuf>, estate: Option<PathBuf>) -> Result<(), Failure> {
    if scenario.is_none() && grid.is_none() && estate.is_none() {
        return Err(Failure::Input("nothing to validate; pass --scenario, --grid or --estate".into()));
    }
    if let Some(path) = &scenario {
        load_scenario(path)?;
        println!("{}: ok", path.display());
    }
    let stock = match &estate {
        Some(path) => {
            let s = BuildingStock::load(path)?;
            println!("{}: ok ({} buildings)", path.display(), s.len());
            Some(s)
        }
        None => None,
    };
    if let Some(path) = &grid {
        let g = load_grid(path)?;
        if let Some(s) = &stock {
            g.validate_stock(s)?;
        }
        println!("{}: ok ({} nodes, {} lines)", path.display(), g.nodes.len(), g.lines.len());
    }
    Ok(())
}

fn generate(seed: u64, scenario: Option<PathBuf>, out: PathBuf) -> Result<(), Failure> {
    let config = match &scenario {
        Some(path) => load_scenario(path)?,
        None => ScenarioConfig::default(),
    };
    let stock = generate_estate_with(seed, &config.estate)?;
    let grid = radial_feeders(&FeederLayout::default(), &stock.ids());
    std::fs::create_dir_all(out.join("grid")).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    stock.save(&out.join("estate.json"))?;
    write_grid(&grid, &out.join("grid"))?;
    println!("{} buildings, {} nodes written to {}", stock.len(), grid.nodes.len(), out.display());
    Ok(())
}

fn compare(runs: Vec<PathBuf>, out: PathBuf) -> Result<(), Failure> {
    let reports = runs
        .iter()
        .map(|r| read_report(r).map_err(|e| Failure::Input(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let comparison = compare_scenarios(&reports)?;
    write_comparison(&comparison, &out)?;
    println!("{} rows written to {}", comparison.rows.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Compare { runs, out } => compare(runs, out),
        Command::Validate { scenario, grid, estate } => validate(scenario, grid, estate),
        Command::Generate { seed, scenario, out } => generate(seed, scenario, out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
