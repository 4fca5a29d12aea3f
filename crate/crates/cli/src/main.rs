//! `cch-knn`: preprocessing, k-nearest-neighbor queries, benchmarks and
//! travel demand generation on road networks.

mod demand;
mod error;
mod knn;
mod load;
mod output;
mod preprocess;

use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;

use cch_knn::demand::CradConfig;
use cch_knn::knn::{DistMode, KnnConfig};
use cch_knn::partition::PartitionConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "cch-knn", version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed of every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; demand output depends on the seed and this count.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Subgraphs with at most this many targets (k-NN) or selectable
    /// opportunities (demand) are handled without further descent.
    #[arg(long, global = true, default_value_t = 8)]
    recursion_threshold: usize,
    /// How distances to subgraphs are bounded during the descent.
    #[arg(long, global = true, value_enum, default_value_t = DistModeArg::LowerBound)]
    dist_mode: DistModeArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistModeArg {
    LowerBound,
    Exact,
}

impl Global {
    fn dist_mode(&self) -> DistMode {
        match self.dist_mode {
            DistModeArg::LowerBound => DistMode::LowerBound,
            DistModeArg::Exact => DistMode::Exact,
        }
    }

    fn knn_config(&self) -> KnnConfig {
        KnnConfig {
            recursion_threshold: self.recursion_threshold,
            dist_mode: self.dist_mode(),
        }
    }

    fn crad_config(&self) -> CradConfig {
        CradConfig {
            recursion_threshold: self.recursion_threshold as u64,
            dist_mode: self.dist_mode(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Dissect, contract and customize a DIMACS graph; writes PREFIX.cch,
    /// PREFIX.sdt and PREFIX.order.
    Preprocess {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        coords: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 32)]
        leaf_threshold: usize,
        #[arg(long, default_value_t = 0.3)]
        balance: f64,
    },
    /// Apply the arc lengths of a DIMACS graph to a hierarchy.
    Customize {
        #[arg(long)]
        cch: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// The k closest points of interest of each source, as CSV.
    Knn {
        #[arg(long)]
        cch: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        /// One input vertex id per line.
        #[arg(long)]
        poi: PathBuf,
        /// Input vertex id; repeat for several sources.
        #[arg(long = "source", required = true)]
        sources: Vec<u64>,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = knn::Algorithm::Cch)]
        algorithm: knn::Algorithm,
        #[arg(long, value_enum, default_value_t = knn::Mode::Online)]
        mode: knn::Mode,
        /// DIMACS graph, needed by `ine`.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time selection and queries on random POI sets drawn from Dijkstra balls.
    Bench {
        #[arg(long)]
        cch: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "cch,bcch,ine")]
        algorithms: Vec<knn::Algorithm>,
        /// Defaults to the whole graph.
        #[arg(long)]
        ball_size: Option<usize>,
        #[arg(long)]
        num_pois: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        poi_sets: usize,
        #[arg(long, default_value_t = 100)]
        sources_per_set: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Radiation-model trips between populated vertices.
    GenDemand {
        #[arg(long)]
        cch: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        /// CSV `vertex_id,count` over hierarchy ranks.
        #[arg(long)]
        population: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        trips: usize,
        #[arg(long, value_enum, default_value_t = demand::Algorithm::Crad)]
        algorithm: demand::Algorithm,
        /// DIMACS graph, needed by `drad`.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write `origin,destination,count` here.
        #[arg(long)]
        aggregate: Option<PathBuf>,
        /// Do not count the origin's own opportunities.
        #[arg(long)]
        exclude_origin: bool,
        /// Seconds per unit of arc length, for the trip length report.
        #[arg(long, default_value_t = 1.0)]
        seconds_per_unit: f64,
    },
    /// Turn a `lat,lon,count` population grid into a population file.
    IngestGrid {
        #[arg(long)]
        coords: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        /// Cell side in meters.
        #[arg(long, default_value_t = 1000.0)]
        cell_size: f64,
        /// Emit hierarchy ranks instead of input ids.
        #[arg(long)]
        cch: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    if g.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    if g.recursion_threshold == 0 {
        return Err(CliError::Usage("--recursion-threshold must be at least 1".into()));
    }
    match &cli.command {
        Command::Preprocess {
            graph,
            coords,
            out,
            leaf_threshold,
            balance,
        } => preprocess::preprocess(
            graph,
            coords,
            out,
            PartitionConfig {
                leaf_threshold: *leaf_threshold,
                balance: *balance,
            },
        ),
        Command::Customize { cch, graph, out } => preprocess::customize(cch, graph, out),
        Command::Knn {
            cch,
            tree,
            poi,
            sources,
            k,
            algorithm,
            mode,
            graph,
            out,
        } => knn::knn(knn::KnnArgs {
            cch,
            tree,
            poi,
            sources,
            k: *k,
            algorithm: *algorithm,
            mode: *mode,
            graph: graph.as_deref(),
            out: out.as_deref(),
            config: g.knn_config(),
        }),
        Command::Bench {
            cch,
            tree,
            graph,
            algorithms,
            ball_size,
            num_pois,
            k,
            poi_sets,
            sources_per_set,
            out,
        } => knn::bench(knn::BenchArgs {
            cch,
            tree,
            graph,
            algorithms,
            ball_size: *ball_size,
            num_pois: *num_pois,
            k: *k,
            poi_sets: *poi_sets,
            sources_per_set: *sources_per_set,
            seed: g.seed,
            out: out.as_deref(),
            config: g.knn_config(),
        }),
        Command::GenDemand {
            cch,
            tree,
            population,
            lambda,
            trips,
            algorithm,
            graph,
            out,
            aggregate,
            exclude_origin,
            seconds_per_unit,
        } => demand::gen_demand(demand::GenDemandArgs {
            cch,
            tree,
            population,
            lambda: *lambda,
            trips: *trips,
            algorithm: *algorithm,
            graph: graph.as_deref(),
            out: out.as_deref(),
            aggregate: aggregate.as_deref(),
            exclude_origin: *exclude_origin,
            seconds_per_unit: *seconds_per_unit,
            config: g.crad_config(),
            seed: g.seed,
            threads: g.threads,
        }),
        Command::IngestGrid {
            coords,
            grid,
            cell_size,
            cch,
            out,
        } => demand::ingest_grid(demand::IngestArgs {
            coords,
            grid,
            cell_size: *cell_size,
            cch: cch.as_deref(),
            out: out.as_deref(),
            seed: g.seed,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    // Failed assertions inside the algorithms are invariant violations.
    let result = panic::catch_unwind(|| run(cli)).unwrap_or_else(|payload| {
        let message = payload
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(CliError::Internal(message))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cch-knn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
