//! Reference k-NN algorithms: incremental network expansion (plain Dijkstra)
//! and the bucket-based approach on top of the CCH.

use crate::cch::{forward_elim_search, reset_forward, Cch, SearchContext};
use crate::error::{Error, Result};
use crate::graph::{DijkstraContext, Graph, Vertex, Weight, INFINITY};
use crate::knn::{KnnHeap, KnnResult, TargetIndex};

fn check_query(k: usize, num_targets: usize, source: Vertex, n: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    if num_targets == 0 {
        return Err(Error::EmptyTargets);
    }
    if source as usize >= n {
        return Err(Error::VertexOutOfRange {
            vertex: source as u64,
            num_vertices: n,
        });
    }
    Ok(())
}

/// Dijkstra from `source` until `k` targets are settled.
pub fn ine_knn(
    ctx: &mut DijkstraContext,
    g: &Graph,
    index: &TargetIndex,
    source: Vertex,
    k: usize,
) -> Result<KnnResult> {
    check_query(k, index.len(), source, g.num_vertices())?;
    let mut heap = KnnHeap::new(k);
    ctx.start(source);
    while let Some((v, d)) = ctx.settle_next(g) {
        if index.count_in_range(v, v) == 1 {
            heap.push(v, d);
            if heap.len() == k {
                break;
            }
        }
    }
    Ok(heap.to_result())
}

/// Per-vertex buckets of `(distance, target)` entries, each sorted by
/// distance then target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketStore {
    first: Vec<u32>,
    entries: Vec<(Weight, Vertex)>,
}

impl BucketStore {
    pub fn bucket(&self, v: Vertex) -> &[(Weight, Vertex)] {
        &self.entries[self.first[v as usize] as usize..self.first[v as usize + 1] as usize]
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn memory_bytes(&self) -> usize {
        self.first.len() * std::mem::size_of::<u32>() + self.entries.len() * std::mem::size_of::<(Weight, Vertex)>()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BcchOptions {
    /// Drop bucket entries whose label is beaten by a path through a
    /// higher-ranked neighbor.
    pub stall_on_demand: bool,
}

/// Selection for the bucket approach: one reverse elimination-tree search per
/// target, depositing its labels into the buckets of the path vertices.
pub fn bcch_select(cch: &Cch, targets: &[Vertex], options: BcchOptions) -> Result<BucketStore> {
    let n = cch.num_vertices();
    if targets.is_empty() {
        return Err(Error::EmptyTargets);
    }
    if let Some(&t) = targets.iter().find(|&&t| t as usize >= n) {
        return Err(Error::VertexOutOfRange {
            vertex: t as u64,
            num_vertices: n,
        });
    }
    let mut targets = targets.to_vec();
    targets.sort_unstable();
    targets.dedup();

    let h = &cch.graph;
    let mut label = vec![INFINITY; n];
    let mut path = Vec::new();
    let mut raw: Vec<(Vertex, Weight, Vertex)> = Vec::new();
    for &t in &targets {
        label[t as usize] = 0;
        path.clear();
        for v in cch.tree.path_to_root(t) {
            path.push(v);
            let r = label[v as usize];
            if r == INFINITY {
                continue;
            }
            for e in h.edge_range(v) {
                let w = h.head(e) as usize;
                let nd = r.saturating_add(h.down_weight(e));
                if nd < label[w] {
                    label[w] = nd;
                }
            }
        }
        for &v in &path {
            let r = label[v as usize];
            if r == INFINITY {
                continue;
            }
            let stalled = options.stall_on_demand
                && h.edge_range(v)
                    .any(|e| h.up_weight(e).saturating_add(label[h.head(e) as usize]) < r);
            if !stalled {
                raw.push((v, r, t));
            }
        }
        for &v in &path {
            label[v as usize] = INFINITY;
        }
    }

    let mut first = vec![0u32; n + 1];
    for &(v, _, _) in &raw {
        first[v as usize + 1] += 1;
    }
    for v in 0..n {
        first[v + 1] += first[v];
    }
    let mut fill = first.clone();
    let mut entries = vec![(0, 0); raw.len()];
    for &(v, d, t) in &raw {
        entries[fill[v as usize] as usize] = (d, t);
        fill[v as usize] += 1;
    }
    for v in 0..n {
        entries[first[v] as usize..first[v + 1] as usize].sort_unstable();
    }
    Ok(BucketStore { first, entries })
}

/// Per-thread scratch for bucket queries.
#[derive(Debug, Clone)]
pub struct BcchContext {
    pub search: SearchContext,
    heap: KnnHeap,
}

impl BcchContext {
    pub fn new(num_vertices: usize) -> Self {
        BcchContext {
            search: SearchContext::new(num_vertices),
            heap: KnnHeap::new(1),
        }
    }
}

/// Forward elimination-tree search from `source`, scanning the bucket of
/// every path vertex until `x + y` reaches the current k-th best distance.
pub fn bcch_query(
    ctx: &mut BcchContext,
    cch: &Cch,
    buckets: &BucketStore,
    source: Vertex,
    k: usize,
) -> Result<KnnResult> {
    let n = cch.num_vertices();
    check_query(k, buckets.num_entries(), source, n)?;
    if ctx.search.num_vertices() != n || buckets.first.len() != n + 1 {
        return Err(Error::InvalidArgument(
            "buckets or context built for a different graph".into(),
        ));
    }
    ctx.heap.reset(k);
    forward_elim_search(&mut ctx.search, cch, source);
    for v in cch.tree.path_to_root(source) {
        let x = ctx.search.forward(v);
        if x == INFINITY {
            continue;
        }
        for &(y, t) in buckets.bucket(v) {
            let d = x.saturating_add(y);
            if d >= ctx.heap.bound() {
                break;
            }
            ctx.heap.push(t, d);
        }
    }
    reset_forward(&mut ctx.search, cch, source);
    ctx.search.audit_if_enabled();
    Ok(ctx.heap.to_result())
}
