//! Travel demand from the radiation model with selection.
//!
//! Every trip draws an origin proportional to population, a number of
//! selectable opportunities, and then the closest selectable opportunity.
//! DRAD finds it with Dijkstra; CRAD descends the separator decomposition,
//! splitting the selectable count among subgraphs with multivariate
//! hypergeometric draws and pruning subgraphs that cannot hold a closer one.
//!
//! Opportunities equal population and are numbered `0..N` along vertex ids,
//! so the opportunities of any id range form one contiguous index range.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Geometric};
use statrs::function::factorial::ln_factorial;

use crate::cch::{forward_elim_search, reset_forward, SearchContext};
use crate::error::{Error, Result};
use crate::graph::{DijkstraContext, Graph, Vertex, Weight, INFINITY, INVALID_VERTEX};
use crate::knn::{DistMode, TreeView};
use crate::partition::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct DemandModel {
    population: Vec<u32>,
    prefix: Vec<u64>,
    lambda: f64,
    exclude_origin: bool,
}

impl DemandModel {
    /// `population` is indexed by rank-ordered vertex id.
    pub fn new(population: Vec<u32>, lambda: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!("lambda {lambda} outside [0, 1)")));
        }
        let mut prefix = Vec::with_capacity(population.len() + 1);
        prefix.push(0u64);
        let mut sum = 0u64;
        for &m in &population {
            sum += m as u64;
            prefix.push(sum);
        }
        Ok(DemandModel {
            population,
            prefix,
            lambda,
            exclude_origin: false,
        })
    }

    /// Leave the origin's own opportunities out of every trip.
    pub fn with_origin_excluded(mut self, exclude: bool) -> Self {
        self.exclude_origin = exclude;
        self
    }

    pub fn origin_excluded(&self) -> bool {
        self.exclude_origin
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn num_vertices(&self) -> usize {
        self.population.len()
    }

    pub fn population(&self) -> &[u32] {
        &self.population
    }

    /// `M`, which is also `N`.
    pub fn total(&self) -> u64 {
        *self.prefix.last().unwrap()
    }

    /// Opportunities at vertices `l..=r`.
    pub fn opportunities_in_range(&self, l: Vertex, r: Vertex) -> u64 {
        self.prefix[r as usize + 1] - self.prefix[l as usize]
    }

    /// The vertex holding opportunity `i`.
    pub fn vertex_of_opportunity(&self, i: u64) -> Vertex {
        debug_assert!(i < self.total());
        (self.prefix.partition_point(|&p| p <= i) - 1) as Vertex
    }

    /// The opportunities a trip from `origin` may pick.
    pub fn view(&self, origin: Vertex) -> OpportunityView<'_> {
        let (lo, hi) = if self.exclude_origin {
            (self.prefix[origin as usize], self.prefix[origin as usize + 1])
        } else {
            (0, 0)
        };
        OpportunityView {
            model: self,
            skip_lo: lo,
            skip_len: hi - lo,
        }
    }
}

/// Opportunity numbering with an optional gap at the origin.
#[derive(Debug, Clone, Copy)]
pub struct OpportunityView<'a> {
    model: &'a DemandModel,
    skip_lo: u64,
    skip_len: u64,
}

impl OpportunityView<'_> {
    pub fn total(&self) -> u64 {
        self.model.total() - self.skip_len
    }

    /// Opportunities at vertices `l..=r`.
    pub fn count(&self, l: Vertex, r: Vertex) -> u64 {
        let (a, b) = (self.model.prefix[l as usize], self.model.prefix[r as usize + 1]);
        let overlap = if self.skip_len > 0 && a <= self.skip_lo && self.skip_lo < b {
            self.skip_len
        } else {
            0
        };
        b - a - overlap
    }

    pub fn at_vertex(&self, v: Vertex) -> u64 {
        self.count(v, v)
    }

    /// The vertex holding the `i`-th visible opportunity among vertices `l..`.
    fn vertex_in_range(&self, l: Vertex, i: u64) -> Vertex {
        let mut global = self.model.prefix[l as usize] + i;
        if self.skip_len > 0 && global >= self.skip_lo && self.model.prefix[l as usize] <= self.skip_lo {
            global += self.skip_len;
        }
        self.model.vertex_of_opportunity(global)
    }
}

/// Origin vertex with probability `m_v / M`.
pub fn sample_origin<R: Rng + ?Sized>(model: &DemandModel, rng: &mut R) -> Result<Vertex> {
    if model.total() == 0 {
        return Err(Error::ZeroPopulation);
    }
    Ok(model.vertex_of_opportunity(rng.random_range(0..model.total())))
}

/// `O_fit ~ U{0..N}`, `O_sel ~ Binomial(O_fit, 1 - λ)`, both redrawn until
/// `O_sel ≥ 1`.
pub fn sample_num_selectable<R: Rng + ?Sized>(total: u64, lambda: f64, rng: &mut R) -> Result<u64> {
    if total == 0 {
        return Err(Error::ZeroPopulation);
    }
    loop {
        let fit = rng.random_range(0..=total);
        let sel = if lambda == 0.0 {
            fit
        } else {
            Binomial::new(fit, 1.0 - lambda)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .sample(rng)
        };
        if sel > 0 {
            return Ok(sel);
        }
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Number of marked balls among `draws` drawn without replacement from an
/// urn of `population` balls, `marked` of them marked.
///
/// Exact inversion: the uniform variate is consumed by the probabilities in
/// order of distance from the mode, so the expected work is proportional to
/// the standard deviation.
pub fn hypergeometric<R: Rng + ?Sized>(population: u64, marked: u64, draws: u64, rng: &mut R) -> u64 {
    assert!(
        marked <= population && draws <= population,
        "invalid hypergeometric parameters"
    );
    if draws == 0 || marked == 0 {
        return 0;
    }
    if marked == population {
        return draws;
    }
    if draws == population {
        return marked;
    }
    let (n_big, k_big, n) = (population, marked, draws);
    let lo = (n + k_big).saturating_sub(n_big);
    let hi = n.min(k_big);
    let mode = (((n as u128 + 1) * (k_big as u128 + 1)) / (n_big as u128 + 2)) as u64;
    let mode = mode.clamp(lo, hi);
    let p_mode = (ln_choose(k_big, mode) + ln_choose(n_big - k_big, n - mode) - ln_choose(n_big, n)).exp();

    let mut u: f64 = rng.random();
    u -= p_mode;
    if u <= 0.0 {
        return mode;
    }
    let (mut l, mut h) = (mode, mode);
    let (mut pl, mut ph) = (p_mode, p_mode);
    let rest = n_big - k_big;
    loop {
        if l > lo {
            // p(l - 1) / p(l)
            pl *= (l as f64 * (rest + l - n) as f64) / ((k_big - l + 1) as f64 * (n - l + 1) as f64);
            l -= 1;
            u -= pl;
            if u <= 0.0 {
                return l;
            }
        }
        if h < hi {
            // p(h + 1) / p(h)
            ph *= ((k_big - h) as f64 * (n - h) as f64) / ((h + 1) as f64 * (rest + h + 1 - n) as f64);
            h += 1;
            u -= ph;
            if u <= 0.0 {
                return h;
            }
        }
        if l == lo && h == hi {
            // rounding left a sliver of mass
            return mode;
        }
    }
}

static CONSERVATION_CHECKS: AtomicUsize = AtomicUsize::new(0);

/// How many count-conservation assertions CRAD has passed, process-wide.
pub fn conservation_checks() -> usize {
    CONSERVATION_CHECKS.load(Ordering::Relaxed)
}

/// Multivariate hypergeometric draw: `draws` balls from an urn holding
/// `counts[i]` balls of color `i`, as a chain of univariate draws on the
/// remaining urn.
pub fn mv_hypergeom<R: Rng + ?Sized>(draws: u64, counts: &[u64], rng: &mut R) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(counts.len());
    mv_hypergeom_into(draws, counts, rng, &mut out)?;
    Ok(out)
}

pub fn mv_hypergeom_into<R: Rng + ?Sized>(draws: u64, counts: &[u64], rng: &mut R, out: &mut Vec<u64>) -> Result<()> {
    let mut remaining: u64 = counts.iter().sum();
    if draws > remaining {
        return Err(Error::InvalidArgument(format!(
            "{draws} draws from an urn of {remaining}"
        )));
    }
    out.clear();
    let mut left = draws;
    for &c in counts {
        let x = if left == 0 {
            0
        } else {
            hypergeometric(remaining, c, left, rng)
        };
        out.push(x);
        left -= x;
        remaining -= c;
    }
    debug_assert_eq!(left, 0);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trip {
    pub origin: Vertex,
    pub destination: Vertex,
    pub distance: Weight,
}

/// Dijkstra-based destination choice. The number of non-selectable
/// opportunities passed before the first selectable one follows a geometric
/// law with the mean of the exact negative hypergeometric law, truncated to
/// what exists.
pub fn drad_trip<R: Rng + ?Sized>(
    ctx: &mut DijkstraContext,
    g: &Graph,
    model: &DemandModel,
    origin: Vertex,
    num_selectable: u64,
    rng: &mut R,
) -> Result<Trip> {
    let view = model.view(origin);
    let total = view.total();
    if num_selectable == 0 || num_selectable > total {
        return Err(Error::InvalidArgument(format!(
            "{num_selectable} selectable opportunities out of {total}"
        )));
    }
    let p = (num_selectable + 1) as f64 / (total + 1) as f64;
    let interior = if p >= 1.0 {
        0
    } else {
        Geometric::new(p)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .sample(rng)
            .min(total - num_selectable)
    };
    let mut seen = 0u64;
    ctx.start(origin);
    while let Some((v, d)) = ctx.settle_next(g) {
        seen += view.at_vertex(v);
        if seen > interior {
            return Ok(Trip {
                origin,
                destination: v,
                distance: d,
            });
        }
    }
    panic!("graph exhausted before reaching {} opportunities", interior + 1);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CradConfig {
    /// Subgraphs with at most this many selectable opportunities are sampled
    /// directly.
    pub recursion_threshold: u64,
    pub dist_mode: DistMode,
}

impl Default for CradConfig {
    fn default() -> Self {
        CradConfig {
            recursion_threshold: 8,
            dist_mode: DistMode::LowerBound,
        }
    }
}

/// Per-thread scratch for CRAD.
#[derive(Debug, Clone)]
pub struct CradContext {
    pub search: SearchContext,
    counts: Vec<u64>,
    shares: Vec<u64>,
    children: Vec<(Weight, Vertex, NodeId, u64)>,
    sampled: Vec<u64>,
    sampled_set: HashSet<u64>,
    pending: Vec<Vertex>,
}

impl CradContext {
    pub fn new(num_vertices: usize) -> Self {
        CradContext {
            search: SearchContext::new(num_vertices),
            counts: Vec::new(),
            shares: Vec::new(),
            children: Vec::new(),
            sampled: Vec::new(),
            sampled_set: HashSet::new(),
            pending: Vec::new(),
        }
    }
}

/// A subgraph CRAD skipped and the lower bound that justified it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrunedSubgraph {
    pub node: NodeId,
    pub distance: Weight,
}

/// Tree-based destination choice with the same law as "pick a uniform
/// `num_selectable`-subset of all opportunities and return the member closest
/// to `origin`", ties going to the smaller vertex id.
pub fn crad_trip<R: Rng + ?Sized>(
    ctx: &mut CradContext,
    view: TreeView<'_>,
    model: &DemandModel,
    origin: Vertex,
    num_selectable: u64,
    config: CradConfig,
    rng: &mut R,
) -> Result<Trip> {
    crad_trip_traced(ctx, view, model, origin, num_selectable, config, rng, None)
}

#[allow(clippy::too_many_arguments)]
pub fn crad_trip_traced<R: Rng + ?Sized>(
    ctx: &mut CradContext,
    view: TreeView<'_>,
    model: &DemandModel,
    origin: Vertex,
    num_selectable: u64,
    config: CradConfig,
    rng: &mut R,
    pruned: Option<&mut Vec<PrunedSubgraph>>,
) -> Result<Trip> {
    let opportunities = model.view(origin);
    let total = opportunities.total();
    if num_selectable == 0 || num_selectable > total {
        return Err(Error::InvalidArgument(format!(
            "{num_selectable} selectable opportunities out of {total}"
        )));
    }
    if model.num_vertices() != view.cch.num_vertices() || ctx.search.num_vertices() != model.num_vertices() {
        return Err(Error::InvalidArgument(
            "model or context built for a different graph".into(),
        ));
    }
    forward_elim_search(&mut ctx.search, view.cch, origin);
    let mut descent = Descent {
        ctx,
        view,
        opportunities,
        origin,
        config,
        rng,
        best: (INFINITY, INVALID_VERTEX),
        pruned,
    };
    descent.visit(view.tree.root(), num_selectable);
    let (distance, destination) = descent.best;
    ctx.search.reset_path_distances();
    reset_forward(&mut ctx.search, view.cch, origin);
    ctx.search.audit_if_enabled();
    assert!(destination != INVALID_VERTEX, "no selectable opportunity found");
    Ok(Trip {
        origin,
        destination,
        distance,
    })
}

struct Descent<'q, 'a, R: ?Sized> {
    ctx: &'q mut CradContext,
    view: TreeView<'a>,
    opportunities: OpportunityView<'q>,
    origin: Vertex,
    config: CradConfig,
    rng: &'q mut R,
    best: (Weight, Vertex),
    pruned: Option<&'q mut Vec<PrunedSubgraph>>,
}

impl<R: Rng + ?Sized> Descent<'_, '_, R> {
    fn consider(&mut self, v: Vertex) {
        let d = if v == self.origin {
            0
        } else {
            self.ctx.search.path_distance(self.view.cch, v)
        };
        if (d, v) < self.best {
            self.best = (d, v);
        }
    }

    /// Distance to `G_y` (or its lower bound) from the cached path distances
    /// of the boundary, which lies on one elimination path.
    fn dist_to_child(&mut self, y: NodeId) -> Weight {
        let cch = self.view.cch;
        let boundary = cch.graph.upward_neighbors(self.view.tree.node(y).last_vertex);
        self.ctx.search.path_distance(cch, boundary[0]);
        let offsets = self.view.boundaries.offsets(y);
        let mut d = INFINITY;
        for (i, &b) in boundary.iter().enumerate() {
            let db = self.ctx.search.path_distance(cch, b);
            let offset = match self.config.dist_mode {
                DistMode::LowerBound => 0,
                DistMode::Exact => offsets[i],
            };
            d = d.min(db.saturating_add(offset));
        }
        d
    }

    /// Appends the distinct vertices holding a uniform `count`-subset of the
    /// opportunities at vertices `l..=r` (Floyd) to `ctx.pending`.
    fn sample_range(&mut self, l: Vertex, r: Vertex, count: u64) {
        let size = self.opportunities.count(l, r);
        self.ctx.sampled.clear();
        self.ctx.sampled_set.clear();
        let small = count <= 32;
        for j in size - count..size {
            let t = self.rng.random_range(0..=j);
            let pick = if small {
                if self.ctx.sampled.contains(&t) {
                    j
                } else {
                    t
                }
            } else if self.ctx.sampled_set.insert(t) {
                t
            } else {
                self.ctx.sampled_set.insert(j);
                j
            };
            self.ctx.sampled.push(pick);
        }
        let start = self.ctx.pending.len();
        for &i in &self.ctx.sampled {
            self.ctx.pending.push(self.opportunities.vertex_in_range(l, i));
        }
        self.ctx.pending[start..].sort_unstable();
        let mut kept = start;
        for i in start..self.ctx.pending.len() {
            if i == start || self.ctx.pending[i] != self.ctx.pending[kept - 1] {
                self.ctx.pending[kept] = self.ctx.pending[i];
                kept += 1;
            }
        }
        self.ctx.pending.truncate(kept);
    }

    /// Evaluates and drops the pending vertices from `start` on.
    fn consider_pending(&mut self, start: usize) {
        for i in start..self.ctx.pending.len() {
            let v = self.ctx.pending[i];
            self.consider(v);
        }
        self.ctx.pending.truncate(start);
    }

    fn visit(&mut self, x: NodeId, share: u64) {
        let tree = self.view.tree;
        let node = *tree.node(x);
        let pending_start = self.ctx.pending.len();
        if share <= self.config.recursion_threshold || node.num_children == 0 {
            self.sample_range(node.first_vertex, node.last_vertex, share);
            self.consider_pending(pending_start);
            return;
        }

        let counts_start = self.ctx.counts.len();
        for y in tree.children(x) {
            let child = tree.node(y);
            let c = self.opportunities.count(child.first_vertex, child.last_vertex);
            self.ctx.counts.push(c);
        }
        self.ctx
            .counts
            .push(self.opportunities.count(node.first_sep_vertex, node.last_vertex));
        let mut shares = std::mem::take(&mut self.ctx.shares);
        mv_hypergeom_into(share, &self.ctx.counts[counts_start..], self.rng, &mut shares)
            .expect("share exceeds opportunities in subgraph");
        self.ctx.counts.truncate(counts_start);
        assert_eq!(shares.iter().sum::<u64>(), share, "selectable count not conserved");
        CONSERVATION_CHECKS.fetch_add(1, Ordering::Relaxed);

        let sep_share = *shares.last().unwrap();
        let start = self.ctx.children.len();
        for (i, y) in tree.children(x).enumerate() {
            if shares[i] > 0 {
                self.ctx.children.push((0, tree.node(y).first_vertex, y, shares[i]));
            }
        }
        self.ctx.shares = shares;
        if sep_share > 0 {
            self.sample_range(node.first_sep_vertex, node.last_vertex, sep_share);
        }

        let end = self.ctx.children.len();
        for i in start..end {
            let y = self.ctx.children[i].2;
            self.ctx.children[i].0 = if tree.contains(y, self.origin) {
                0
            } else {
                self.dist_to_child(y)
            };
        }
        self.ctx.children[start..end].sort_unstable();
        for i in start..end {
            let (d, first, y, child_share) = self.ctx.children[i];
            if (d, first) < self.best {
                self.visit(y, child_share);
            } else if let Some(pruned) = self.pruned.as_deref_mut() {
                pruned.extend(
                    self.ctx.children[i..end]
                        .iter()
                        .map(|&(distance, _, node, _)| PrunedSubgraph { node, distance }),
                );
                break;
            } else {
                break;
            }
        }
        self.ctx.children.truncate(start);
        // separator candidates last, when the bound from the children is tight
        self.consider_pending(pending_start);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DemandAlgorithm {
    #[default]
    Crad,
    Drad,
}

/// What trip generation reads: the rank-ordered graph for DRAD and the tree
/// view for CRAD.
#[derive(Debug, Clone, Copy)]
pub struct DemandNetwork<'a> {
    pub graph: &'a Graph,
    pub view: TreeView<'a>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Demand {
    pub trips: Vec<Trip>,
}

impl Demand {
    /// `(origin, destination, count)` sorted by origin then destination.
    pub fn aggregate(&self) -> Vec<(Vertex, Vertex, u64)> {
        let mut pairs: Vec<(Vertex, Vertex)> = self.trips.iter().map(|t| (t.origin, t.destination)).collect();
        pairs.sort_unstable();
        let mut out: Vec<(Vertex, Vertex, u64)> = Vec::new();
        for (o, d) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == o && last.1 == d => last.2 += 1,
                _ => out.push((o, d, 1)),
            }
        }
        out
    }
}

/// Reusable per-thread state for [`generate_trip`].
#[derive(Debug, Clone)]
pub struct TripGenerator {
    dijkstra: DijkstraContext,
    crad: CradContext,
}

impl TripGenerator {
    pub fn new(num_vertices: usize) -> Self {
        TripGenerator {
            dijkstra: DijkstraContext::new(num_vertices),
            crad: CradContext::new(num_vertices),
        }
    }

    /// Turns the per-trip label audit on or off; see [`SearchContext::audit`].
    pub fn set_audit(&mut self, audit: bool) {
        self.crad.search.audit = audit;
    }

    pub fn generate_trip<R: Rng + ?Sized>(
        &mut self,
        net: DemandNetwork<'_>,
        model: &DemandModel,
        algorithm: DemandAlgorithm,
        config: CradConfig,
        rng: &mut R,
    ) -> Result<Trip> {
        let origin = sample_origin(model, rng)?;
        let total = model.view(origin).total();
        if total == 0 {
            return Err(Error::InvalidArgument(format!(
                "no opportunities outside origin {origin}"
            )));
        }
        let selectable = sample_num_selectable(total, model.lambda(), rng)?;
        match algorithm {
            DemandAlgorithm::Drad => drad_trip(&mut self.dijkstra, net.graph, model, origin, selectable, rng),
            DemandAlgorithm::Crad => crad_trip(&mut self.crad, net.view, model, origin, selectable, config, rng),
        }
    }
}

/// `num_trips` trips generated one after another from `rng`.
pub fn generate_demand<R: Rng + ?Sized>(
    net: DemandNetwork<'_>,
    model: &DemandModel,
    algorithm: DemandAlgorithm,
    num_trips: usize,
    config: CradConfig,
    rng: &mut R,
) -> Result<Demand> {
    if model.num_vertices() != net.graph.num_vertices() {
        return Err(Error::InvalidArgument("population does not match the graph".into()));
    }
    let mut generator = TripGenerator::new(model.num_vertices());
    let trips = (0..num_trips)
        .map(|_| generator.generate_trip(net, model, algorithm, config, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(Demand { trips })
}

/// Random stream of worker `worker` for base seed `seed`.
pub fn worker_rng(seed: u64, worker: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker);
    rng
}

/// Splits the trips over `workers` independent streams, worker `w` producing
/// a contiguous block; the result depends on `(seed, workers)` only.
pub fn generate_demand_parallel(
    net: DemandNetwork<'_>,
    model: &DemandModel,
    algorithm: DemandAlgorithm,
    num_trips: usize,
    config: CradConfig,
    seed: u64,
    workers: usize,
) -> Result<Demand> {
    use rayon::prelude::*;
    let workers = workers.max(1);
    let blocks: Vec<Result<Demand>> = (0..workers)
        .into_par_iter()
        .map(|w| {
            let count = num_trips / workers + usize::from(w < num_trips % workers);
            let mut rng = worker_rng(seed, w as u64);
            generate_demand(net, model, algorithm, count, config, &mut rng)
        })
        .collect();
    let mut trips = Vec::with_capacity(num_trips);
    for block in blocks {
        trips.extend(block?.trips);
    }
    Ok(Demand { trips })
}
