use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coopbandit::experiments::{
    bound_curves, run_experiment, run_experiment_with, ExperimentConfig, Preset, PresetScale,
};
use coopbandit::graphs::{
    erdos_renyi, generate, graph_indices, named, DivisorMode, Graph, GraphKind, KappaSpec,
};
use coopbandit::report::{bound_rows, summary_rows, write_rows, CsvRow};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "coopbandit",
    version,
    about = "Cooperative multi-agent bandits over communication graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the explore-exploit indices and centralities of a graph.
    Index(IndexArgs),
    /// Run a Monte Carlo experiment and write regret curves as CSV.
    Simulate(SimulateArgs),
    /// Write the analytic regret bounds of a config as CSV.
    Bounds(BoundsArgs),
    /// Write a graph in the edge-list format.
    Graphgen(GraphgenArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct GraphSource {
    /// Named graph: four_agent, house, or a kind with a size such as complete5, ring5, line5, star5.
    #[arg(long)]
    preset: Option<String>,
    /// Edge-list file: node count on the first line, then one 1-based "a b" pair per line.
    #[arg(long)]
    edges: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Divisor {
    Dmax,
    DmaxPlusOne,
}

impl From<Divisor> for DivisorMode {
    fn from(d: Divisor) -> Self {
        match d {
            Divisor::Dmax => DivisorMode::Dmax,
            Divisor::DmaxPlusOne => DivisorMode::DmaxPlusOne,
        }
    }
}

#[derive(Args)]
struct IndexArgs {
    #[command(flatten)]
    graph: GraphSource,
    /// Consensus step size. Defaults to the max-degree choice (edge weight 1/(d_max+1)).
    #[arg(long)]
    kappa: Option<f64>,
    /// Divisor applied to kappa.
    #[arg(long, value_enum, default_value = "dmax-plus-one")]
    divisor: Divisor,
    /// Also write the table as CSV to this path ("-" for stdout).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ConfigSource {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in experiment: ex1, ex2, ex3, ex3_best_agent, ex4.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: ConfigSource,
    /// Output CSV path ("-" for stdout).
    #[arg(long)]
    out: PathBuf,
    /// Worker threads. Results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the run count (presets and configs).
    #[arg(long)]
    runs: Option<usize>,
    /// Override the horizon.
    #[arg(long)]
    horizon: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Experiment config (JSON) with fixed arm means.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path ("-" for stdout).
    #[arg(long)]
    out: PathBuf,
    /// Override the horizon.
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Args)]
struct GraphgenArgs {
    /// complete, ring, path (line), star, house, four_agent, erdos_renyi (er).
    #[arg(long)]
    kind: String,
    /// Number of nodes (ignored by house and four_agent).
    #[arg(long, default_value_t = 5)]
    m: usize,
    /// Edge probability for erdos_renyi.
    #[arg(long)]
    rho: Option<f64>,
    /// Seed for erdos_renyi.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path ("-" for stdout).
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

/// A failure with its exit code: 2 for user errors, 3 for numerical ones.
struct Failure {
    code: u8,
    message: String,
}

impl From<coopbandit::Error> for Failure {
    fn from(e: coopbandit::Error) -> Self {
        Failure {
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn user_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn io_error(path: &Path, e: io::Error) -> Failure {
    user_error(format!("{}: {e}", path.display()))
}

fn open_output(path: &Path) -> Result<Box<dyn Write>, Failure> {
    if path == Path::new("-") {
        Ok(Box::new(io::stdout().lock()))
    } else {
        let file = File::create(path).map_err(|e| io_error(path, e))?;
        Ok(Box::new(BufWriter::new(file)))
    }
}

fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<(), Failure> {
    let mut out = open_output(path)?;
    write_rows(rows, &mut out)?;
    out.flush().map_err(|e| io_error(path, e))
}

fn load_graph(src: &GraphSource) -> Result<Graph, Failure> {
    match (&src.preset, &src.edges) {
        (Some(name), _) => Ok(named(name)?),
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            Graph::parse_edge_list(&text)
                .map_err(|e| user_error(format!("{}: {e}", path.display())))
        }
        _ => unreachable!("clap enforces one graph source"),
    }
}

fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = 3 - x.abs().log10().floor() as i32;
    if digits > 8 {
        format!("{x:.3e}")
    } else if digits >= 0 {
        format!("{:.*}", digits as usize, x)
    } else {
        format!("{:.0}", x)
    }
}

fn cmd_index(args: &IndexArgs) -> Result<(), Failure> {
    let graph = load_graph(&args.graph)?;
    let mode = DivisorMode::from(args.divisor);
    let kappa = args
        .kappa
        .unwrap_or_else(|| KappaSpec::DmaxRatio.resolve(&graph, mode));
    let idx = graph_indices(&graph, kappa, mode)?;
    let m = graph.num_agents();
    // `--csv -` replaces the table on stdout.
    if args.csv.as_deref() != Some(Path::new("-")) {
        println!(
            "M = {m}, kappa = {}, edge weight = {}",
            sig4(kappa),
            sig4(idx.weight)
        );
        println!("eps_n = {}", sig4(idx.epsilon_n));
        println!(
            "{:>6} {:>8} {:>12} {:>12}",
            "node", "degree", "info_cent", "eps_c"
        );
        for k in 0..m {
            println!(
                "{:>6} {:>8} {:>12} {:>12}",
                k + 1,
                idx.degree[k],
                sig4(idx.info_centrality[k]),
                sig4(idx.epsilon_c[k])
            );
        }
    }
    if let Some(path) = &args.csv {
        let mut w = csv::Writer::from_writer(open_output(path)?);
        let csv_err = |e: csv::Error| user_error(format!("{}: {e}", path.display()));
        w.write_record([
            "num_agents",
            "kappa",
            "epsilon_n",
            "node",
            "degree",
            "info_centrality",
            "epsilon_c",
        ])
        .map_err(csv_err)?;
        for k in 0..m {
            w.write_record([
                m.to_string(),
                kappa.to_string(),
                idx.epsilon_n.to_string(),
                (k + 1).to_string(),
                idx.degree[k].to_string(),
                idx.info_centrality[k].to_string(),
                idx.epsilon_c[k].to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| io_error(path, e))?;
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let mut cfg = ExperimentConfig::from_json(&text)
        .map_err(|e| user_error(format!("{}: {e}", path.display())))?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    Ok(cfg)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let mut configs = match (&args.source.config, &args.source.preset) {
        (Some(path), _) => vec![load_config(path)?],
        (_, Some(name)) => {
            let preset = Preset::from_name(name)
                .ok_or_else(|| user_error(format!("unknown preset '{name}'")))?;
            let scale = preset.default_scale();
            let scale = PresetScale {
                runs: args.runs.unwrap_or(scale.runs),
                horizon: args.horizon.unwrap_or(scale.horizon),
            };
            preset.configs(scale, args.seed.unwrap_or(1))
        }
        _ => unreachable!("clap enforces one config source"),
    };
    for cfg in &mut configs {
        cfg.runs = args.runs.unwrap_or(cfg.runs);
        cfg.t = args.horizon.unwrap_or(cfg.t);
        cfg.master_seed = args.seed.unwrap_or(cfg.master_seed);
    }
    if args.workers == Some(0) {
        return Err(user_error("--workers must be at least 1"));
    }
    let mut rows = Vec::new();
    for cfg in &configs {
        let summary = match args.workers {
            Some(n) => run_experiment_with(cfg, n)?,
            None => run_experiment(cfg)?,
        };
        let (mean, sem) = summary.final_group();
        eprintln!(
            "{}: group regret at T={} is {} +/- {} ({} runs)",
            summary.label,
            summary.horizon,
            sig4(mean),
            sig4(sem),
            summary.runs
        );
        rows.extend(summary_rows(&summary));
    }
    write_csv(&args.out, &rows)
}

fn cmd_bounds(args: &BoundsArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&args.config)?;
    cfg.t = args.horizon.unwrap_or(cfg.t);
    let curves = bound_curves(&cfg)?;
    write_csv(&args.out, &bound_rows(&cfg.label(), &curves))
}

fn cmd_graphgen(args: &GraphgenArgs) -> Result<(), Failure> {
    let kind = GraphKind::from_name(&args.kind.to_ascii_lowercase())
        .ok_or_else(|| user_error(format!("unknown graph kind '{}'", args.kind)))?;
    let graph = if kind == GraphKind::ErdosRenyi {
        let rho = args
            .rho
            .ok_or_else(|| user_error("erdos_renyi needs --rho"))?;
        erdos_renyi(args.m, rho, &mut ChaCha8Rng::seed_from_u64(args.seed))?
    } else {
        generate(kind, args.m, None)?
    };
    let mut out = open_output(&args.out)?;
    out.write_all(graph.to_edge_list().as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| io_error(&args.out, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Graphgen(a) => cmd_graphgen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
