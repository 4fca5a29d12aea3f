//! k-nearest-neighbor queries by descending the separator decomposition tree.
//!
//! One forward elimination-tree search from the source is shared by all
//! distance computations of a query. Distances to whole subgraphs come from a
//! single reverse search seeded at the subgraph boundary, which is the upward
//! neighborhood of the subgraph's highest-ranked vertex.

use crate::cch::{forward_elim_search, reset_forward, Cch, SearchContext};
use crate::error::{Error, Result};
use crate::graph::{Vertex, Weight, INFINITY};
use crate::partition::{NodeId, SepDecompTree};

/// Targets sorted by id plus prefix counts over all vertex ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetIndex {
    targets: Vec<Vertex>,
    prefix: Vec<u32>,
}

impl TargetIndex {
    /// Selection: one sweep over all vertices. Duplicate targets collapse.
    pub fn build(targets: &[Vertex], num_vertices: usize) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptyTargets);
        }
        let mut prefix = vec![0u32; num_vertices + 1];
        for &t in targets {
            if t as usize >= num_vertices {
                return Err(Error::VertexOutOfRange {
                    vertex: t as u64,
                    num_vertices,
                });
            }
            prefix[t as usize + 1] = 1;
        }
        let mut sorted = Vec::with_capacity(targets.len());
        for v in 0..num_vertices {
            if prefix[v + 1] != 0 {
                sorted.push(v as Vertex);
            }
            prefix[v + 1] += prefix[v];
        }
        Ok(TargetIndex {
            targets: sorted,
            prefix,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn targets(&self) -> &[Vertex] {
        &self.targets
    }

    pub fn prefix_counts(&self) -> &[u32] {
        &self.prefix
    }

    /// Bytes held by the selection structures.
    pub fn memory_bytes(&self) -> usize {
        (self.targets.len() + self.prefix.len()) * std::mem::size_of::<u32>()
    }

    /// Targets with ids in `l..=r`.
    pub fn targets_in_range(&self, l: Vertex, r: Vertex) -> Result<&[Vertex]> {
        if l > r || r as usize >= self.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "range {l}..={r} outside 0..{}",
                self.num_vertices()
            )));
        }
        Ok(self.slice(l, r))
    }

    pub fn count_in_range(&self, l: Vertex, r: Vertex) -> usize {
        (self.prefix[r as usize + 1] - self.prefix[l as usize]) as usize
    }

    fn slice(&self, l: Vertex, r: Vertex) -> &[Vertex] {
        &self.targets[self.prefix[l as usize] as usize..self.prefix[r as usize + 1] as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub target: Vertex,
    pub distance: Weight,
}

/// Nearest targets sorted by `(distance, target)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnnResult {
    pub neighbors: Vec<Neighbor>,
}

impl KnnResult {
    pub fn distances(&self) -> Vec<Weight> {
        self.neighbors.iter().map(|n| n.distance).collect()
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// The `k` best `(distance, target)` pairs seen so far, kept sorted. A target
/// offered twice keeps its smaller distance.
#[derive(Debug, Clone)]
pub struct KnnHeap {
    k: usize,
    entries: Vec<(Weight, Vertex)>,
}

impl KnnHeap {
    pub fn new(k: usize) -> Self {
        KnnHeap {
            k,
            entries: Vec::with_capacity(k.min(1024)),
        }
    }

    pub fn reset(&mut self, k: usize) {
        self.k = k;
        self.entries.clear();
    }

    /// Key of the k-th best entry, infinity while fewer than `k` are known.
    pub fn bound(&self) -> Weight {
        if self.entries.len() < self.k {
            INFINITY
        } else {
            self.entries[self.k - 1].0
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, target: Vertex, distance: Weight) {
        if self.entries.len() == self.k && distance >= self.bound() {
            return;
        }
        if let Some(i) = self.entries.iter().position(|&(_, t)| t == target) {
            if self.entries[i].0 <= distance {
                return;
            }
            self.entries.remove(i);
        }
        let at = self.entries.partition_point(|&e| e < (distance, target));
        self.entries.insert(at, (distance, target));
        self.entries.truncate(self.k);
    }

    pub fn to_result(&self) -> KnnResult {
        KnnResult {
            neighbors: self
                .entries
                .iter()
                .map(|&(distance, target)| Neighbor { target, distance })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistMode {
    /// Boundary labels start at zero, giving a lower bound on the distance.
    #[default]
    LowerBound,
    /// Boundary labels start at the cheapest edge into the subgraph.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnnConfig {
    pub recursion_threshold: usize,
    pub dist_mode: DistMode,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            recursion_threshold: 8,
            dist_mode: DistMode::LowerBound,
        }
    }
}

/// Boundary entry offsets for every tree node: for each boundary vertex `b`
/// of `G_X`, the cheapest customized downward edge from `b` into `G_X`. These
/// lie between the true distance and the original arc length, so seeding
/// reverse searches with them yields exact subgraph distances. The boundary
/// vertices themselves are read from the upward graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgraphBoundaries {
    first: Vec<u32>,
    offsets: Vec<Weight>,
}

impl SubgraphBoundaries {
    /// Panics if `tree` is not the decomposition `cch` was contracted along.
    pub fn new(cch: &Cch, tree: &SepDecompTree) -> Self {
        Self::try_new(cch, tree).expect("tree does not match the hierarchy")
    }

    pub fn try_new(cch: &Cch, tree: &SepDecompTree) -> Result<Self> {
        if tree.num_vertices() != cch.num_vertices() {
            return Err(Error::Format(format!(
                "tree covers {} vertices, hierarchy has {}",
                tree.num_vertices(),
                cch.num_vertices()
            )));
        }
        let h = &cch.graph;
        let mut first = Vec::with_capacity(tree.num_nodes() + 1);
        first.push(0u32);
        let mut len = 0;
        for x in 0..tree.num_nodes() as NodeId {
            if !tree.is_root(x) {
                len += h.upward_neighbors(tree.node(x).last_vertex).len();
            }
            first.push(len as u32);
        }
        let mut offsets = vec![INFINITY; len];
        for v in 0..h.num_vertices() as Vertex {
            let home = tree.node_of_vertex(v);
            for e in h.edge_range(v) {
                let b = h.head(e);
                let w = h.down_weight(e);
                // every node containing v but not b has b on its boundary
                let mut y = home;
                while !tree.is_root(y) && !tree.contains(y, b) {
                    let boundary = h.upward_neighbors(tree.node(y).last_vertex);
                    let i = boundary
                        .binary_search(&b)
                        .map_err(|_| Error::Format(format!("edge ({v}, {b}) leaves node {y} outside its boundary")))?;
                    let slot = &mut offsets[first[y as usize] as usize + i];
                    *slot = (*slot).min(w);
                    y = tree.node(y).parent;
                }
            }
        }
        Ok(SubgraphBoundaries { first, offsets })
    }

    pub fn offsets(&self, x: NodeId) -> &[Weight] {
        &self.offsets[self.first[x as usize] as usize..self.first[x as usize + 1] as usize]
    }

    pub fn memory_bytes(&self) -> usize {
        (self.first.len() + self.offsets.len()) * std::mem::size_of::<u32>()
    }
}

/// Everything a k-NN query reads: the customized hierarchy, its separator
/// decomposition and the boundary offsets.
#[derive(Debug, Clone, Copy)]
pub struct TreeView<'a> {
    pub cch: &'a Cch,
    pub tree: &'a SepDecompTree,
    pub boundaries: &'a SubgraphBoundaries,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Boundary {
    /// `B(X)` in increasing rank.
    pub vertices: Vec<Vertex>,
    pub lowest: Vertex,
    pub offsets: Vec<Weight>,
}

/// `B(X) = N_H^↑(lastVertex(X))`, with its lowest-ranked member (the
/// elimination-tree parent of `lastVertex(X)`) and exact-mode offsets.
pub fn boundary_of(view: TreeView<'_>, x: NodeId) -> Result<Boundary> {
    if view.tree.is_root(x) {
        return Err(Error::RootBoundary);
    }
    let u = view.tree.node(x).last_vertex;
    let vertices = view.cch.graph.upward_neighbors(u).to_vec();
    let lowest = view.cch.tree.parent(u).ok_or(Error::RootBoundary)?;
    debug_assert_eq!(Some(&lowest), vertices.first());
    Ok(Boundary {
        vertices,
        lowest,
        offsets: view.boundaries.offsets(x).to_vec(),
    })
}

/// Distance from the current source to the subgraph `G_X`, or a lower bound
/// on it in [`DistMode::LowerBound`]. The forward labels for the source must
/// be present and the source must lie outside `G_X`.
pub fn dist_to_subgraph(
    ctx: &mut SearchContext,
    init: &mut Vec<(Vertex, Weight)>,
    view: TreeView<'_>,
    x: NodeId,
    mode: DistMode,
) -> Result<Weight> {
    if view.tree.is_root(x) {
        return Err(Error::RootBoundary);
    }
    Ok(bounded_dist_to_subgraph(ctx, init, view, x, mode, INFINITY))
}

/// Like [`dist_to_subgraph`], but any result at or above `bound` may be
/// reported as `bound`.
pub(crate) fn bounded_dist_to_subgraph(
    ctx: &mut SearchContext,
    init: &mut Vec<(Vertex, Weight)>,
    view: TreeView<'_>,
    x: NodeId,
    mode: DistMode,
    bound: Weight,
) -> Weight {
    let u = view.tree.node(x).last_vertex;
    let boundary = view.cch.graph.upward_neighbors(u);
    init.clear();
    match mode {
        DistMode::LowerBound => init.extend(boundary.iter().map(|&b| (b, 0))),
        DistMode::Exact => init.extend(boundary.iter().copied().zip(view.boundaries.offsets(x).iter().copied())),
    }
    ctx.bounded_reverse_search(view.cch, init, boundary[0], bound)
}

/// Per-thread scratch for k-NN queries.
#[derive(Debug, Clone)]
pub struct KnnContext {
    pub search: SearchContext,
    heap: KnnHeap,
    children: Vec<(Weight, NodeId)>,
    init: Vec<(Vertex, Weight)>,
}

impl KnnContext {
    pub fn new(num_vertices: usize) -> Self {
        KnnContext {
            search: SearchContext::new(num_vertices),
            heap: KnnHeap::new(1),
            children: Vec::new(),
            init: Vec::new(),
        }
    }
}

/// A child subgraph skipped by the query together with the distance that
/// caused the skip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrunedChild {
    pub node: NodeId,
    pub distance: Weight,
}

/// The `min(k, |T|)` targets closest to `source`.
pub fn knn_query(
    ctx: &mut KnnContext,
    view: TreeView<'_>,
    index: &TargetIndex,
    source: Vertex,
    k: usize,
    config: KnnConfig,
) -> Result<KnnResult> {
    knn_query_traced(ctx, view, index, source, k, config, None)
}

/// [`knn_query`] that also reports every pruned child subgraph.
pub fn knn_query_traced(
    ctx: &mut KnnContext,
    view: TreeView<'_>,
    index: &TargetIndex,
    source: Vertex,
    k: usize,
    config: KnnConfig,
    pruned: Option<&mut Vec<PrunedChild>>,
) -> Result<KnnResult> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    if index.is_empty() {
        return Err(Error::EmptyTargets);
    }
    let n = view.cch.num_vertices();
    if source as usize >= n {
        return Err(Error::VertexOutOfRange {
            vertex: source as u64,
            num_vertices: n,
        });
    }
    if index.num_vertices() != n || ctx.search.num_vertices() != n {
        return Err(Error::InvalidArgument(
            "target index or context built for a different graph".into(),
        ));
    }
    ctx.heap.reset(k);
    ctx.children.clear();
    forward_elim_search(&mut ctx.search, view.cch, source);
    let mut query = Query {
        ctx,
        view,
        index,
        source,
        config,
        pruned,
    };
    query.visit(view.tree.root());
    reset_forward(&mut ctx.search, view.cch, source);
    ctx.search.audit_if_enabled();
    Ok(ctx.heap.to_result())
}

struct Query<'q, 'a> {
    ctx: &'q mut KnnContext,
    view: TreeView<'a>,
    index: &'q TargetIndex,
    source: Vertex,
    config: KnnConfig,
    pruned: Option<&'q mut Vec<PrunedChild>>,
}

impl Query<'_, '_> {
    fn examine(&mut self, targets: &[Vertex]) {
        for &t in targets {
            let bound = self.ctx.heap.bound();
            let d = self
                .ctx
                .search
                .bounded_reverse_search(self.view.cch, &[(t, 0)], t, bound);
            self.ctx.heap.push(t, d);
        }
    }

    fn visit(&mut self, x: NodeId) {
        let tree = self.view.tree;
        let node = *tree.node(x);
        if self.index.count_in_range(node.first_vertex, node.last_vertex) <= self.config.recursion_threshold {
            self.examine(self.index.slice(node.first_vertex, node.last_vertex));
            return;
        }
        self.examine(self.index.slice(node.first_sep_vertex, node.last_vertex));

        let start = self.ctx.children.len();
        for y in tree.children(x) {
            let child = tree.node(y);
            if self.index.count_in_range(child.first_vertex, child.last_vertex) == 0 {
                continue;
            }
            let d = if tree.contains(y, self.source) {
                0
            } else {
                let bound = self.ctx.heap.bound();
                let KnnContext { search, init, .. } = &mut *self.ctx;
                bounded_dist_to_subgraph(search, init, self.view, y, self.config.dist_mode, bound)
            };
            self.ctx.children.push((d, y));
        }
        self.ctx.children[start..].sort_unstable();
        let end = self.ctx.children.len();
        for i in start..end {
            let (d, y) = self.ctx.children[i];
            if d < self.ctx.heap.bound() {
                self.visit(y);
            } else if let Some(pruned) = self.pruned.as_deref_mut() {
                pruned.extend(
                    self.ctx.children[i..end]
                        .iter()
                        .map(|&(distance, node)| PrunedChild { node, distance }),
                );
                break;
            } else {
                break;
            }
        }
        self.ctx.children.truncate(start);
    }
}
