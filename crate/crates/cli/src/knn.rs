use std::path::Path;
use std::time::{Duration, Instant};

use cch_knn::baselines::{bcch_query, bcch_select, ine_knn, BcchContext, BcchOptions, BucketStore};
use cch_knn::graph::DijkstraContext;
use cch_knn::io::parse_poi;
use cch_knn::knn::{knn_query, KnnConfig, KnnContext, KnnResult, TargetIndex};
use cch_knn::{Graph, Vertex};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, CliResult};
use crate::load::{read_text, Hierarchy};
use crate::output::Output;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Algorithm {
    Cch,
    Bcch,
    Ine,
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::Cch => "cch",
            Algorithm::Bcch => "bcch",
            Algorithm::Ine => "ine",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    /// Rebuild the target selection for every query.
    Online,
    /// Build the selection once and reuse it.
    Offline,
}

enum Selection {
    Index(TargetIndex),
    Buckets(BucketStore),
}

impl Selection {
    fn memory_bytes(&self) -> usize {
        match self {
            Selection::Index(i) => i.memory_bytes(),
            Selection::Buckets(b) => b.memory_bytes(),
        }
    }
}

/// Everything one algorithm needs to answer queries over a fixed target set.
struct Engine<'a> {
    algorithm: Algorithm,
    hierarchy: &'a Hierarchy,
    graph: Option<&'a Graph>,
    config: KnnConfig,
    knn: KnnContext,
    bcch: BcchContext,
    dijkstra: DijkstraContext,
}

impl<'a> Engine<'a> {
    fn new(
        algorithm: Algorithm,
        hierarchy: &'a Hierarchy,
        graph: Option<&'a Graph>,
        config: KnnConfig,
    ) -> CliResult<Self> {
        let n = hierarchy.num_vertices();
        if algorithm == Algorithm::Ine && graph.is_none() {
            return Err(CliError::Usage("--algorithm ine needs --graph".into()));
        }
        let sized = |on: bool| if on { n } else { 0 };
        Ok(Engine {
            algorithm,
            hierarchy,
            graph,
            config,
            knn: KnnContext::new(sized(algorithm == Algorithm::Cch)),
            bcch: BcchContext::new(sized(algorithm == Algorithm::Bcch)),
            dijkstra: DijkstraContext::new(sized(algorithm == Algorithm::Ine)),
        })
    }

    fn select(&self, targets: &[Vertex]) -> CliResult<Selection> {
        Ok(match self.algorithm {
            Algorithm::Bcch => Selection::Buckets(bcch_select(
                &self.hierarchy.file.cch,
                targets,
                BcchOptions { stall_on_demand: true },
            )?),
            _ => Selection::Index(TargetIndex::build(targets, self.hierarchy.num_vertices())?),
        })
    }

    fn query(&mut self, selection: &Selection, source: Vertex, k: usize) -> CliResult<KnnResult> {
        Ok(match (self.algorithm, selection) {
            (Algorithm::Cch, Selection::Index(index)) => {
                knn_query(&mut self.knn, self.hierarchy.view(), index, source, k, self.config)?
            }
            (Algorithm::Ine, Selection::Index(index)) => {
                ine_knn(&mut self.dijkstra, self.graph.unwrap(), index, source, k)?
            }
            (Algorithm::Bcch, Selection::Buckets(buckets)) => {
                bcch_query(&mut self.bcch, &self.hierarchy.file.cch, buckets, source, k)?
            }
            _ => return Err(CliError::Internal("selection built for another algorithm".into())),
        })
    }
}

fn micros(d: Duration) -> f64 {
    d.as_secs_f64() * 1e6
}

pub struct KnnArgs<'a> {
    pub cch: &'a Path,
    pub tree: &'a Path,
    pub poi: &'a Path,
    pub sources: &'a [u64],
    pub k: usize,
    pub algorithm: Algorithm,
    pub mode: Mode,
    pub graph: Option<&'a Path>,
    pub out: Option<&'a Path>,
    pub config: KnnConfig,
}

pub fn knn(args: KnnArgs<'_>) -> CliResult<()> {
    if args.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    if args.sources.is_empty() {
        return Err(CliError::Usage("at least one --source is required".into()));
    }
    let hierarchy = Hierarchy::load(args.cch, args.tree)?;
    let graph = args.graph.map(|p| hierarchy.rank_graph(p)).transpose()?;
    let pois = parse_poi(&read_text(args.poi)?).map_err(|e| CliError::in_file(args.poi, e))?;
    if pois.is_empty() {
        return Err(CliError::in_file(args.poi, "no points of interest"));
    }
    let targets = pois
        .iter()
        .map(|&p| hierarchy.rank(p, "point of interest"))
        .collect::<CliResult<Vec<_>>>()?;
    let sources = args
        .sources
        .iter()
        .map(|&s| hierarchy.rank(s, "source"))
        .collect::<CliResult<Vec<_>>>()?;

    let mut engine = Engine::new(args.algorithm, &hierarchy, graph.as_ref(), args.config)?;
    let mut out = Output::open(args.out)?;
    let multi = sources.len() > 1;
    if multi {
        out.row(["source", "rank", "target", "distance"])?;
    } else {
        out.row(["rank", "target", "distance"])?;
    }

    let (mut selection_time, mut query_time) = (Duration::ZERO, Duration::ZERO);
    let mut offline = None;
    for (&source, &source_input) in sources.iter().zip(args.sources) {
        let start = Instant::now();
        let fresh;
        let selection = match args.mode {
            Mode::Online => {
                fresh = engine.select(&targets)?;
                &fresh
            }
            Mode::Offline => &*offline.get_or_insert(engine.select(&targets)?),
        };
        let selected = Instant::now();
        let result = engine.query(selection, source, args.k)?;
        query_time += selected.elapsed();
        selection_time += selected - start;
        for (i, nb) in result.neighbors.iter().enumerate() {
            let mut record = Vec::with_capacity(4);
            if multi {
                record.push(source_input.to_string());
            }
            record.push((i + 1).to_string());
            record.push(hierarchy.input_id(nb.target).to_string());
            record.push(nb.distance.to_string());
            out.row(&record)?;
        }
    }
    out.finish()?;
    let q = sources.len() as f64;
    eprintln!(
        "algorithm={} mode={:?} queries={} selection_us={:.1} mean_query_us={:.1}",
        args.algorithm.name(),
        args.mode,
        sources.len(),
        micros(selection_time),
        micros(query_time) / q
    );
    Ok(())
}

pub struct BenchArgs<'a> {
    pub cch: &'a Path,
    pub tree: &'a Path,
    pub graph: &'a Path,
    pub algorithms: &'a [Algorithm],
    pub ball_size: Option<usize>,
    pub num_pois: usize,
    pub k: usize,
    pub poi_sets: usize,
    pub sources_per_set: usize,
    pub seed: u64,
    pub out: Option<&'a Path>,
    pub config: KnnConfig,
}

/// The `size` vertices closest to `center`, frontier ties broken by id.
fn ball(ctx: &mut DijkstraContext, graph: &Graph, center: Vertex, size: usize) -> Vec<Vertex> {
    ctx.start(center);
    let mut ball = Vec::with_capacity(size);
    while ball.len() < size {
        match ctx.settle_next(graph) {
            Some((v, _)) => ball.push(v),
            None => break,
        }
    }
    ball
}

struct Stats {
    total: Duration,
    min: Duration,
    max: Duration,
    count: u32,
}

impl Stats {
    fn new() -> Self {
        Stats {
            total: Duration::ZERO,
            min: Duration::MAX,
            max: Duration::ZERO,
            count: 0,
        }
    }

    fn add(&mut self, d: Duration) {
        self.total += d;
        self.min = self.min.min(d);
        self.max = self.max.max(d);
        self.count += 1;
    }

    fn mean(&self) -> Duration {
        self.total / self.count.max(1)
    }
}

struct Report {
    selection: Stats,
    query: Stats,
    selection_bytes: usize,
    checksum: u64,
}

/// Per repetition: a uniform center, the ball of its nearest vertices, a
/// uniform POI set from the ball and uniform sources. Every algorithm sees the
/// same instances.
pub fn bench(args: BenchArgs<'_>) -> CliResult<()> {
    if args.k == 0 || args.num_pois == 0 || args.poi_sets == 0 || args.sources_per_set == 0 {
        return Err(CliError::Usage(
            "--k, --num-pois, --poi-sets and --sources-per-set must be at least 1".into(),
        ));
    }
    let hierarchy = Hierarchy::load(args.cch, args.tree)?;
    let graph = hierarchy.rank_graph(args.graph)?;
    let n = hierarchy.num_vertices();
    let ball_size = args.ball_size.unwrap_or(n);
    if args.num_pois > ball_size || ball_size > n {
        return Err(CliError::Usage(format!(
            "need num-pois <= ball-size <= {n}, got {} and {ball_size}",
            args.num_pois
        )));
    }

    let mut engines = args
        .algorithms
        .iter()
        .map(|&a| Engine::new(a, &hierarchy, Some(&graph), args.config))
        .collect::<CliResult<Vec<_>>>()?;
    let mut reports: Vec<Report> = engines
        .iter()
        .map(|_| Report {
            selection: Stats::new(),
            query: Stats::new(),
            selection_bytes: 0,
            checksum: 0,
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut dijkstra = DijkstraContext::new(n);
    let mut expected = vec![0u64; args.sources_per_set];
    for _ in 0..args.poi_sets {
        let center = rng.random_range(0..n) as Vertex;
        let b = ball(&mut dijkstra, &graph, center, ball_size);
        let targets: Vec<Vertex> = sample(&mut rng, b.len(), args.num_pois)
            .into_iter()
            .map(|i| b[i])
            .collect();
        let sources: Vec<Vertex> = (0..args.sources_per_set)
            .map(|_| rng.random_range(0..n) as Vertex)
            .collect();
        for (a, (engine, report)) in engines.iter_mut().zip(&mut reports).enumerate() {
            let start = Instant::now();
            let selection = engine.select(&targets)?;
            report.selection.add(start.elapsed());
            report.selection_bytes = report.selection_bytes.max(selection.memory_bytes());
            for (i, &s) in sources.iter().enumerate() {
                let start = Instant::now();
                let result = engine.query(&selection, s, args.k)?;
                report.query.add(start.elapsed());
                let sum = result.distances().iter().map(|&d| d as u64).sum::<u64>();
                report.checksum = report.checksum.wrapping_add(sum);
                if a == 0 {
                    expected[i] = sum;
                } else if expected[i] != sum {
                    return Err(CliError::Internal(format!(
                        "{} and {} disagree on the distances from vertex {}",
                        args.algorithms[0].name(),
                        engine.algorithm.name(),
                        hierarchy.input_id(s)
                    )));
                }
            }
        }
    }

    let mut out = Output::open(args.out)?;
    out.row([
        "algorithm",
        "ball_size",
        "num_pois",
        "k",
        "queries",
        "selection_ms",
        "selection_min_ms",
        "selection_max_ms",
        "query_us",
        "query_min_us",
        "query_max_us",
        "online_ms",
        "selection_bytes",
        "checksum",
    ])?;
    let ms = |d: Duration| d.as_secs_f64() * 1e3;
    for (&algorithm, r) in args.algorithms.iter().zip(&reports) {
        out.row([
            algorithm.name().to_string(),
            ball_size.to_string(),
            args.num_pois.to_string(),
            args.k.to_string(),
            r.query.count.to_string(),
            format!("{:.4}", ms(r.selection.mean())),
            format!("{:.4}", ms(r.selection.min)),
            format!("{:.4}", ms(r.selection.max)),
            format!("{:.2}", micros(r.query.mean())),
            format!("{:.2}", micros(r.query.min)),
            format!("{:.2}", micros(r.query.max)),
            format!("{:.4}", ms(r.selection.mean() + r.query.mean())),
            r.selection_bytes.to_string(),
            r.checksum.to_string(),
        ])?;
    }
    out.finish()
}
