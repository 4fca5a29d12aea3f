//! Python bindings. Vertex ids are the 0-based ids of the input graph
//! throughout; ranks stay internal.

use cch_knn::baselines::{bcch_query, bcch_select, ine_knn, BcchContext, BcchOptions, BucketStore};
use cch_knn::cch::{elim_tree_query, SearchContext};
use cch_knn::demand::{generate_demand_parallel, CradConfig, DemandAlgorithm, DemandModel};
use cch_knn::graph::{parse_dimacs_co, parse_dimacs_gr, DijkstraContext};
use cch_knn::knn::{knn_query, DistMode, KnnConfig, KnnContext, KnnResult, TargetIndex};
use cch_knn::partition::PartitionConfig;
use cch_knn::{Coordinates, Graph, Vertex, Weight, INFINITY};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn dist_mode(name: &str) -> PyResult<DistMode> {
    match name {
        "lower-bound" => Ok(DistMode::LowerBound),
        "exact" => Ok(DistMode::Exact),
        _ => Err(PyValueError::new_err(format!("unknown dist_mode {name:?}"))),
    }
}

enum Selection {
    Index(TargetIndex),
    Buckets(BucketStore),
}

/// Points of interest prepared for one k-NN algorithm.
#[pyclass(frozen, module = "cchknn")]
struct Targets {
    algorithm: String,
    selection: Selection,
}

#[pymethods]
impl Targets {
    #[getter]
    fn algorithm(&self) -> &str {
        &self.algorithm
    }

    /// Bytes used by the selection structure.
    #[getter]
    fn memory_bytes(&self) -> usize {
        match &self.selection {
            Selection::Index(i) => i.memory_bytes(),
            Selection::Buckets(b) => b.memory_bytes(),
        }
    }

    fn __len__(&self) -> usize {
        match &self.selection {
            Selection::Index(i) => i.len(),
            Selection::Buckets(b) => b.num_entries(),
        }
    }
}

/// A road network restricted to its largest strongly connected component,
/// dissected, contracted and customized.
#[pyclass(module = "cchknn")]
struct Network {
    net: cch_knn::Network,
    search: SearchContext,
    knn: KnnContext,
    bcch: BcchContext,
    dijkstra: DijkstraContext,
}

impl Network {
    fn wrap(net: cch_knn::Network) -> Self {
        let n = net.num_vertices();
        Network {
            net,
            search: SearchContext::new(n),
            knn: KnnContext::new(n),
            bcch: BcchContext::new(n),
            dijkstra: DijkstraContext::new(n),
        }
    }

    fn build(py: Python<'_>, g: Graph, c: Coordinates, leaf_threshold: usize, balance: f64) -> PyResult<Self> {
        let config = PartitionConfig {
            leaf_threshold,
            balance,
        };
        let net = py
            .detach(|| cch_knn::Network::build(&g, &c, config))
            .map_err(value_error)?;
        Ok(Self::wrap(net))
    }

    fn rank(&self, input: u64) -> PyResult<Vertex> {
        u32::try_from(input)
            .ok()
            .and_then(|v| self.net.rank_of_input(v))
            .ok_or_else(|| PyValueError::new_err(format!("vertex {input} is not part of the network")))
    }

    fn ranks(&self, inputs: &[u64]) -> PyResult<Vec<Vertex>> {
        inputs.iter().map(|&v| self.rank(v)).collect()
    }

    fn neighbors(&self, result: KnnResult) -> Vec<(Vertex, Weight)> {
        result
            .neighbors
            .iter()
            .map(|nb| (self.net.input_ids[nb.target as usize], nb.distance))
            .collect()
    }
}

#[pymethods]
impl Network {
    /// Builds from DIMACS `.gr` and `.co` files.
    #[staticmethod]
    #[pyo3(signature = (graph_path, coords_path, leaf_threshold = 32, balance = 0.3))]
    fn from_dimacs(
        py: Python<'_>,
        graph_path: &str,
        coords_path: &str,
        leaf_threshold: usize,
        balance: f64,
    ) -> PyResult<Self> {
        let read = |p: &str| std::fs::read_to_string(p).map_err(|e| PyIOError::new_err(format!("{p}: {e}")));
        let g = parse_dimacs_gr(&read(graph_path)?).map_err(|e| value_error(format!("{graph_path}: {e}")))?;
        let c = parse_dimacs_co(&read(coords_path)?).map_err(|e| value_error(format!("{coords_path}: {e}")))?;
        Self::build(py, g, c, leaf_threshold, balance)
    }

    /// Builds from arc lists `tails[i] -> heads[i]` of length `weights[i]`
    /// and per-vertex coordinates.
    #[staticmethod]
    #[pyo3(signature = (tails, heads, weights, xs, ys, leaf_threshold = 32, balance = 0.3))]
    #[allow(clippy::too_many_arguments)]
    fn from_arcs(
        py: Python<'_>,
        tails: Vec<Vertex>,
        heads: Vec<Vertex>,
        weights: Vec<Weight>,
        xs: Vec<i32>,
        ys: Vec<i32>,
        leaf_threshold: usize,
        balance: f64,
    ) -> PyResult<Self> {
        if tails.len() != heads.len() || tails.len() != weights.len() || xs.len() != ys.len() {
            return Err(PyValueError::new_err("arc and coordinate lists differ in length"));
        }
        let arcs = tails.into_iter().zip(heads).zip(weights).map(|((t, h), w)| (t, h, w));
        let g = Graph::from_arcs(xs.len(), arcs).map_err(value_error)?;
        Self::build(py, g, Coordinates::new(xs, ys), leaf_threshold, balance)
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.net.num_vertices()
    }

    /// Input ids of the kept vertices, in rank order.
    #[getter]
    fn vertices(&self) -> Vec<Vertex> {
        self.net.input_ids.clone()
    }

    fn __contains__(&self, v: u64) -> bool {
        self.rank(v).is_ok()
    }

    /// Shortest-path distance, `None` if `t` is unreachable.
    fn distance(&mut self, s: u64, t: u64) -> PyResult<Option<Weight>> {
        let (s, t) = (self.rank(s)?, self.rank(t)?);
        let d = elim_tree_query(&mut self.search, &self.net.cch, s, t);
        Ok((d != INFINITY).then_some(d))
    }

    /// Replaces the arc lengths with those of a DIMACS file over the same arcs.
    fn customize(&mut self, py: Python<'_>, graph_path: &str) -> PyResult<()> {
        let text = std::fs::read_to_string(graph_path).map_err(|e| PyIOError::new_err(format!("{graph_path}: {e}")))?;
        let g = parse_dimacs_gr(&text).map_err(|e| value_error(format!("{graph_path}: {e}")))?;
        let net = &mut self.net;
        py.detach(|| net.customize_input(&g)).map_err(value_error)
    }

    /// Selection phase: prepares `pois` for `algorithm` (`cch`, `bcch` or `ine`).
    #[pyo3(signature = (pois, algorithm = "cch"))]
    fn select(&self, pois: Vec<u64>, algorithm: &str) -> PyResult<Targets> {
        let targets = self.ranks(&pois)?;
        let selection = match algorithm {
            "cch" | "ine" => {
                Selection::Index(TargetIndex::build(&targets, self.net.num_vertices()).map_err(value_error)?)
            }
            "bcch" => Selection::Buckets(
                bcch_select(&self.net.cch, &targets, BcchOptions { stall_on_demand: true }).map_err(value_error)?,
            ),
            _ => return Err(PyValueError::new_err(format!("unknown algorithm {algorithm:?}"))),
        };
        Ok(Targets {
            algorithm: algorithm.to_owned(),
            selection,
        })
    }

    /// The `k` targets closest to `source` as `(target, distance)` pairs,
    /// nearest first.
    #[pyo3(signature = (targets, source, k, recursion_threshold = 8, dist_mode = "lower-bound"))]
    fn knn(
        &mut self,
        targets: &Targets,
        source: u64,
        k: usize,
        recursion_threshold: usize,
        dist_mode: &str,
    ) -> PyResult<Vec<(Vertex, Weight)>> {
        let source = self.rank(source)?;
        let config = KnnConfig {
            recursion_threshold,
            dist_mode: self::dist_mode(dist_mode)?,
        };
        let result = match (targets.algorithm.as_str(), &targets.selection) {
            ("cch", Selection::Index(index)) => knn_query(&mut self.knn, self.net.view(), index, source, k, config),
            ("ine", Selection::Index(index)) => ine_knn(&mut self.dijkstra, &self.net.graph, index, source, k),
            (_, Selection::Buckets(buckets)) => bcch_query(&mut self.bcch, &self.net.cch, buckets, source, k),
            _ => unreachable!(),
        }
        .map_err(value_error)?;
        Ok(self.neighbors(result))
    }

    /// Radiation-model trips as `(origin, destination, distance)`.
    /// `population` maps input vertex ids to inhabitant counts.
    #[pyo3(signature = (population, lam, trips, algorithm = "crad", seed = 0, threads = 1, exclude_origin = false, recursion_threshold = 8, dist_mode = "lower-bound"))]
    #[allow(clippy::too_many_arguments)]
    fn generate_demand(
        &self,
        py: Python<'_>,
        population: std::collections::HashMap<u64, u32>,
        lam: f64,
        trips: usize,
        algorithm: &str,
        seed: u64,
        threads: usize,
        exclude_origin: bool,
        recursion_threshold: u64,
        dist_mode: &str,
    ) -> PyResult<Vec<(Vertex, Vertex, Weight)>> {
        let algorithm = match algorithm {
            "crad" => DemandAlgorithm::Crad,
            "drad" => DemandAlgorithm::Drad,
            _ => return Err(PyValueError::new_err(format!("unknown algorithm {algorithm:?}"))),
        };
        let mut counts = vec![0u32; self.net.num_vertices()];
        for (v, c) in population {
            counts[self.rank(v)? as usize] += c;
        }
        let model = DemandModel::new(counts, lam)
            .map_err(value_error)?
            .with_origin_excluded(exclude_origin);
        let config = CradConfig {
            recursion_threshold,
            dist_mode: self::dist_mode(dist_mode)?,
        };
        let net = self.net.demand_network();
        let demand = py
            .detach(|| generate_demand_parallel(net, &model, algorithm, trips, config, seed, threads))
            .map_err(value_error)?;
        let id = |r: Vertex| self.net.input_ids[r as usize];
        Ok(demand
            .trips
            .iter()
            .map(|t| (id(t.origin), id(t.destination), t.distance))
            .collect())
    }
}

#[pymodule]
fn cchknn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Network>()?;
    m.add_class::<Targets>()?;
    Ok(())
}
