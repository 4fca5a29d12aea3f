use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use cch_knn::demand::{generate_demand_parallel, CradConfig, DemandAlgorithm, DemandModel, DemandNetwork};
use cch_knn::io::{parse_population, read_cch, write_population};
use cch_knn::{Coordinates, Graph, Vertex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, CliResult};
use crate::load::{load_coords, read_bytes, read_text, write_bytes, Hierarchy};
use crate::output::Output;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Algorithm {
    Crad,
    Drad,
}

pub struct GenDemandArgs<'a> {
    pub cch: &'a Path,
    pub tree: &'a Path,
    pub population: &'a Path,
    pub lambda: f64,
    pub trips: usize,
    pub algorithm: Algorithm,
    pub graph: Option<&'a Path>,
    pub out: Option<&'a Path>,
    pub aggregate: Option<&'a Path>,
    pub exclude_origin: bool,
    pub seconds_per_unit: f64,
    pub config: CradConfig,
    pub seed: u64,
    pub threads: usize,
}

pub fn gen_demand(args: GenDemandArgs<'_>) -> CliResult<()> {
    if !(args.lambda >= 0.0 && args.lambda < 1.0) {
        return Err(CliError::Usage(format!(
            "--lambda must lie in [0, 1), got {}",
            args.lambda
        )));
    }
    if args.seconds_per_unit.is_nan() || args.seconds_per_unit <= 0.0 {
        return Err(CliError::Usage("--seconds-per-unit must be positive".into()));
    }
    let hierarchy = Hierarchy::load(args.cch, args.tree)?;
    let n = hierarchy.num_vertices();
    let graph = match (args.algorithm, args.graph) {
        (Algorithm::Drad, None) => return Err(CliError::Usage("--algorithm drad needs --graph".into())),
        (_, Some(p)) => hierarchy.rank_graph(p)?,
        // CRAD never reads the arcs.
        (Algorithm::Crad, None) => Graph::from_arcs(n, std::iter::empty())?,
    };
    let population =
        parse_population(&read_text(args.population)?, n).map_err(|e| CliError::in_file(args.population, e))?;
    let model = DemandModel::new(population, args.lambda)
        .map_err(|e| CliError::in_file(args.population, e))?
        .with_origin_excluded(args.exclude_origin);
    let algorithm = match args.algorithm {
        Algorithm::Crad => DemandAlgorithm::Crad,
        Algorithm::Drad => DemandAlgorithm::Drad,
    };
    let net = DemandNetwork {
        graph: &graph,
        view: hierarchy.view(),
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let start = Instant::now();
    let demand = pool.install(|| {
        generate_demand_parallel(net, &model, algorithm, args.trips, args.config, args.seed, args.threads)
    })?;
    let elapsed = start.elapsed();

    let mut out = Output::open(args.out)?;
    out.row(["origin", "destination", "distance"])?;
    for t in &demand.trips {
        out.row([t.origin.to_string(), t.destination.to_string(), t.distance.to_string()])?;
    }
    out.finish()?;
    if let Some(path) = args.aggregate {
        let mut out = Output::open(Some(path))?;
        out.row(["origin", "destination", "count"])?;
        for (o, d, c) in demand.aggregate() {
            out.row([o.to_string(), d.to_string(), c.to_string()])?;
        }
        out.finish()?;
    }

    let trips = demand.trips.len().max(1) as f64;
    let mean_length: f64 = demand.trips.iter().map(|t| t.distance as f64).sum::<f64>() / trips;
    eprintln!(
        "trips={} threads={} total_ms={:.1} mean_trip_us={:.2} mean_trip_minutes={:.3}",
        demand.trips.len(),
        args.threads,
        elapsed.as_secs_f64() * 1e3,
        elapsed.as_secs_f64() * 1e6 * args.threads as f64 / trips,
        mean_length * args.seconds_per_unit / 60.0
    );
    Ok(())
}

const METERS_PER_DEGREE: f64 = 111_320.0;

/// Equirectangular projection around a reference latitude, in meters.
struct Projection {
    cos_lat: f64,
}

impl Projection {
    fn point(&self, lat: f64, lon: f64) -> (f64, f64) {
        (lon * METERS_PER_DEGREE * self.cos_lat, lat * METERS_PER_DEGREE)
    }
}

pub struct IngestArgs<'a> {
    pub coords: &'a Path,
    pub grid: &'a Path,
    pub cell_size: f64,
    pub cch: Option<&'a Path>,
    pub out: Option<&'a Path>,
    pub seed: u64,
}

/// Places every inhabitant of a grid cell, given by its south-west corner, on
/// a uniform random vertex inside the cell. Coordinates are DIMACS
/// micro-degrees, x the longitude and y the latitude.
pub fn ingest_grid(args: IngestArgs<'_>) -> CliResult<()> {
    if args.cell_size.is_nan() || args.cell_size <= 0.0 {
        return Err(CliError::Usage("--cell-size must be positive".into()));
    }
    let coords = load_coords(args.coords)?;
    // Vertices to place people on, as (output id, input id).
    let vertices: Vec<(Vertex, Vertex)> = match args.cch {
        Some(cch) => {
            let file = read_cch(&read_bytes(cch)?).map_err(|e| CliError::in_file(cch, e))?;
            if let Some(&v) = file.input_ids.iter().find(|&&v| v as usize >= coords.len()) {
                return Err(CliError::in_file(args.coords, format!("no coordinates for vertex {v}")));
            }
            file.input_ids
                .iter()
                .enumerate()
                .map(|(r, &v)| (r as Vertex, v))
                .collect()
        }
        None => (0..coords.len() as Vertex).map(|v| (v, v)).collect(),
    };
    let population = place(&coords, &vertices, args.grid, args.cell_size, args.seed)?;
    let text = write_population(&population.counts);
    match args.out {
        Some(p) => write_bytes(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    eprintln!("placed={} dropped={}", population.placed, population.dropped);
    Ok(())
}

struct Placement {
    counts: Vec<u32>,
    placed: u64,
    dropped: u64,
}

fn place(
    coords: &Coordinates,
    vertices: &[(Vertex, Vertex)],
    grid: &Path,
    cell_size: f64,
    seed: u64,
) -> CliResult<Placement> {
    let degrees = |v: Vertex| {
        let (x, y) = coords.get(v);
        (y as f64 * 1e-6, x as f64 * 1e-6)
    };
    let mean_lat = vertices.iter().map(|&(_, v)| degrees(v).0).sum::<f64>() / vertices.len().max(1) as f64;
    let proj = Projection {
        cos_lat: mean_lat.to_radians().cos(),
    };
    let cell = |x: f64, y: f64| ((x / cell_size).floor() as i64, (y / cell_size).floor() as i64);

    let mut buckets: HashMap<(i64, i64), Vec<Vertex>> = HashMap::new();
    for &(id, v) in vertices {
        let (lat, lon) = degrees(v);
        let (x, y) = proj.point(lat, lon);
        buckets.entry(cell(x, y)).or_default().push(id);
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(grid)
        .map_err(|e| CliError::in_file(grid, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u32; vertices.len()];
    let (mut placed, mut dropped) = (0u64, 0u64);
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CliError::in_file(grid, e))?;
        if i == 0 && row.get(0).is_some_and(|f| f.eq_ignore_ascii_case("lat")) {
            continue;
        }
        let bad = || CliError::in_file(grid, format!("row {}: expected lat,lon,count", i + 1));
        if row.len() != 3 {
            return Err(bad());
        }
        let lat: f64 = row[0].parse().map_err(|_| bad())?;
        let lon: f64 = row[1].parse().map_err(|_| bad())?;
        let count: u64 = row[2].parse().map_err(|_| bad())?;
        if !lat.is_finite() || !lon.is_finite() {
            return Err(bad());
        }
        // Center of the cell, safe from rounding at its edges.
        let (x, y) = proj.point(lat, lon);
        let key = cell(x + cell_size / 2.0, y + cell_size / 2.0);
        match buckets.get(&key) {
            Some(inside) => {
                for _ in 0..count {
                    let v = inside[rng.random_range(0..inside.len())];
                    let slot = &mut counts[v as usize];
                    *slot = slot
                        .checked_add(1)
                        .ok_or_else(|| CliError::in_file(grid, "vertex population overflows 32 bits"))?;
                }
                placed += count;
            }
            None => dropped += count,
        }
    }
    Ok(Placement {
        counts,
        placed,
        dropped,
    })
}
