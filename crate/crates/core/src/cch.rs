//! Customizable contraction hierarchies: contraction along a nested
//! dissection order, metric customization, the elimination tree and the
//! point-to-point query algorithms built on them.
//!
//! All functions here expect a graph whose vertex ids already equal ranks.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex, Weight, INFINITY, INVALID_VERTEX};

/// The upward graph `H`: for every vertex its higher-ranked neighbors in
/// increasing rank order. Edge `e = (v, w)` carries `up[e]`, the length of
/// traversing `v -> w`, and `down[e]`, the length of traversing `w -> v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpwardGraph {
    first_out: Vec<u32>,
    head: Vec<Vertex>,
    up: Vec<Weight>,
    down: Vec<Weight>,
}

impl UpwardGraph {
    /// Assembles an upward graph from raw arrays, checking the structural
    /// invariants (sorted, strictly upward neighbor lists).
    pub fn from_parts(
        first_out: Vec<u32>,
        head: Vec<Vertex>,
        up: Vec<Weight>,
        down: Vec<Weight>,
    ) -> Result<Self, String> {
        if first_out.is_empty() || first_out[0] != 0 {
            return Err("first_out must start with 0".into());
        }
        let n = first_out.len() - 1;
        let m = *first_out.last().unwrap() as usize;
        if head.len() != m || up.len() != m || down.len() != m {
            return Err("edge array lengths disagree".into());
        }
        for v in 0..n {
            if first_out[v] > first_out[v + 1] {
                return Err(format!("first_out decreases at {v}"));
            }
            let heads = &head[first_out[v] as usize..first_out[v + 1] as usize];
            if heads.iter().any(|&w| w as usize >= n || w as usize <= v) || heads.windows(2).any(|p| p[0] >= p[1]) {
                return Err(format!("neighbors of {v} are not sorted upward"));
            }
        }
        Ok(UpwardGraph {
            first_out,
            head,
            up,
            down,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.first_out.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.head.len()
    }

    pub fn edge_range(&self, v: Vertex) -> Range<usize> {
        self.first_out[v as usize] as usize..self.first_out[v as usize + 1] as usize
    }

    /// `N_H^↑(v)`, sorted by rank.
    pub fn upward_neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.head[self.edge_range(v)]
    }

    pub fn edge_id(&self, v: Vertex, w: Vertex) -> Option<usize> {
        let range = self.edge_range(v);
        self.head[range.clone()].binary_search(&w).ok().map(|i| range.start + i)
    }

    pub fn head(&self, e: usize) -> Vertex {
        self.head[e]
    }

    pub fn up_weight(&self, e: usize) -> Weight {
        self.up[e]
    }

    pub fn down_weight(&self, e: usize) -> Weight {
        self.down[e]
    }

    pub fn first_out(&self) -> &[u32] {
        &self.first_out
    }

    pub fn heads(&self) -> &[Vertex] {
        &self.head
    }

    pub fn up_weights(&self) -> &[Weight] {
        &self.up
    }

    pub fn down_weights(&self) -> &[Weight] {
        &self.down
    }

    /// Lower-triangle customization: seeds edge weights with the input arc
    /// lengths, then relaxes every edge `(u, w)` over each triangle
    /// `{v, u, w}` with `v` ranked below both, processing `v` bottom-up.
    pub fn customize(&mut self, g: &Graph) {
        assert_eq!(g.num_vertices(), self.num_vertices(), "metric graph size mismatch");
        self.up.fill(INFINITY);
        self.down.fill(INFINITY);
        for (a, b, len) in g.arcs() {
            if a < b {
                let e = self.edge_id(a, b).expect("input arc missing from upward graph");
                self.up[e] = self.up[e].min(len);
            } else {
                let e = self.edge_id(b, a).expect("input arc missing from upward graph");
                self.down[e] = self.down[e].min(len);
            }
        }

        let n = self.num_vertices();
        let mut edge_to = vec![u32::MAX; n];
        for v in 0..n as Vertex {
            let lower = self.edge_range(v);
            for e in lower.clone() {
                edge_to[self.head[e] as usize] = e as u32;
            }
            for e_vu in lower.clone() {
                let u = self.head[e_vu];
                let (down_vu, up_vu) = (self.down[e_vu], self.up[e_vu]);
                for e_uw in self.edge_range(u) {
                    let e_vw = edge_to[self.head[e_uw] as usize];
                    if e_vw == u32::MAX {
                        continue;
                    }
                    let e_vw = e_vw as usize;
                    let via_up = down_vu.saturating_add(self.up[e_vw]);
                    if via_up < self.up[e_uw] {
                        self.up[e_uw] = via_up;
                    }
                    let via_down = self.down[e_vw].saturating_add(up_vu);
                    if via_down < self.down[e_uw] {
                        self.down[e_uw] = via_down;
                    }
                }
            }
            for e in lower {
                edge_to[self.head[e] as usize] = u32::MAX;
            }
        }
    }
}

/// Contracts the vertices in rank order and returns the resulting chordal
/// supergraph with all weights unset.
///
/// Uses the elimination-tree formulation: once the upward neighborhood of `v`
/// is final, it is merged into the neighborhood of its lowest member; the
/// remaining clique edges follow when that vertex is contracted.
pub fn contract(g: &Graph) -> UpwardGraph {
    let n = g.num_vertices();
    let mut upward: Vec<Vec<Vertex>> = vec![Vec::new(); n];
    for (a, b, _) in g.arcs() {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        upward[lo as usize].push(hi);
    }
    for list in &mut upward {
        list.sort_unstable();
        list.dedup();
    }
    let mut merged = Vec::new();
    for v in 0..n {
        if upward[v].len() < 2 {
            continue;
        }
        let parent = upward[v][0] as usize;
        let parent_list = std::mem::take(&mut upward[parent]);
        merged.clear();
        merge_sorted(&parent_list, &upward[v][1..], &mut merged);
        upward[parent] = std::mem::replace(&mut merged, parent_list);
    }

    let mut first_out = Vec::with_capacity(n + 1);
    first_out.push(0u32);
    let mut head = Vec::new();
    for list in &upward {
        head.extend_from_slice(list);
        first_out.push(head.len() as u32);
    }
    let m = head.len();
    UpwardGraph {
        first_out,
        head,
        up: vec![INFINITY; m],
        down: vec![INFINITY; m],
    }
}

fn merge_sorted(a: &[Vertex], b: &[Vertex], out: &mut Vec<Vertex>) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Parent of every vertex is its lowest-ranked upward neighbor; roots have
/// [`INVALID_VERTEX`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationTree {
    parent: Vec<Vertex>,
}

impl EliminationTree {
    pub fn from_parents(parent: Vec<Vertex>) -> Self {
        EliminationTree { parent }
    }

    pub fn parent(&self, v: Vertex) -> Option<Vertex> {
        let p = self.parent[v as usize];
        (p != INVALID_VERTEX).then_some(p)
    }

    pub fn parents(&self) -> &[Vertex] {
        &self.parent
    }

    /// `v` followed by all of its ancestors, in increasing rank.
    pub fn path_to_root(&self, v: Vertex) -> PathToRoot<'_> {
        PathToRoot {
            parent: &self.parent,
            next: v,
        }
    }
}

pub struct PathToRoot<'a> {
    parent: &'a [Vertex],
    next: Vertex,
}

impl Iterator for PathToRoot<'_> {
    type Item = Vertex;

    fn next(&mut self) -> Option<Vertex> {
        let v = self.next;
        if v == INVALID_VERTEX {
            return None;
        }
        self.next = self.parent[v as usize];
        Some(v)
    }
}

pub fn build_elimination_tree(h: &UpwardGraph) -> EliminationTree {
    let parent = (0..h.num_vertices() as Vertex)
        .map(|v| h.upward_neighbors(v).first().copied().unwrap_or(INVALID_VERTEX))
        .collect();
    EliminationTree { parent }
}

/// Upward graph plus elimination tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cch {
    pub graph: UpwardGraph,
    pub tree: EliminationTree,
}

impl Cch {
    /// Contracts `g` (ids must equal ranks). Weights stay unset until
    /// [`Cch::customize`].
    pub fn new(g: &Graph) -> Self {
        let graph = contract(g);
        let tree = build_elimination_tree(&graph);
        Cch { graph, tree }
    }

    pub fn customized(g: &Graph) -> Self {
        let mut cch = Cch::new(g);
        cch.customize(g);
        cch
    }

    pub fn customize(&mut self, g: &Graph) {
        self.graph.customize(g);
    }

    /// [`Cch::customize`] for metrics of unknown origin: fails instead of
    /// panicking if `g` has an arc that is not an edge of the hierarchy.
    pub fn try_customize(&mut self, g: &Graph) -> Result<()> {
        if g.num_vertices() != self.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "metric has {} vertices, hierarchy has {}",
                g.num_vertices(),
                self.num_vertices()
            )));
        }
        if let Some((a, b, _)) = g
            .arcs()
            .find(|&(a, b, _)| self.graph.edge_id(a.min(b), a.max(b)).is_none())
        {
            return Err(Error::InvalidArgument(format!(
                "arc {a} -> {b} is not an edge of the hierarchy"
            )));
        }
        self.customize(g);
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.graph.num_vertices()
    }
}

static AUDITS: AtomicUsize = AtomicUsize::new(0);
static AUDIT_VIOLATIONS: AtomicUsize = AtomicUsize::new(0);

/// Number of label audits run and how many of them found a dirty label,
/// process-wide.
pub fn audit_counts() -> (usize, usize) {
    (AUDITS.load(Ordering::Relaxed), AUDIT_VIOLATIONS.load(Ordering::Relaxed))
}

/// Forward and reverse distance labels for elimination-tree searches. Between
/// operations every label is [`INFINITY`].
#[derive(Debug, Clone)]
pub struct SearchContext {
    forward: Vec<Weight>,
    reverse: Vec<Weight>,
    /// Exact distances from the forward source to vertices whose whole
    /// elimination path has been swept. The swept set is closed under
    /// taking ancestors.
    path: Vec<Weight>,
    swept: Vec<bool>,
    swept_list: Vec<Vertex>,
    stack: Vec<Vertex>,
    /// Run a full-array audit after every query in debug builds.
    pub audit: bool,
}

impl SearchContext {
    pub fn new(num_vertices: usize) -> Self {
        SearchContext {
            forward: vec![INFINITY; num_vertices],
            reverse: vec![INFINITY; num_vertices],
            path: vec![INFINITY; num_vertices],
            swept: vec![false; num_vertices],
            swept_list: Vec::new(),
            stack: Vec::new(),
            audit: cfg!(debug_assertions),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.forward.len()
    }

    pub fn forward(&self, v: Vertex) -> Weight {
        self.forward[v as usize]
    }

    pub fn forward_labels(&self) -> &[Weight] {
        &self.forward
    }

    pub fn reverse_labels(&self) -> &[Weight] {
        &self.reverse
    }

    pub fn is_clean(&self) -> bool {
        self.forward
            .iter()
            .chain(&self.reverse)
            .chain(&self.path)
            .all(|&d| d == INFINITY)
            && !self.swept.iter().any(|&s| s)
    }

    /// Exact distance from the forward source to `v`. Sweeps the part of the
    /// elimination path of `v` not swept yet, top-down, using
    /// `d(b) = min(forward(b), min over upward edges (b, w) of d(w) + down(b, w))`.
    /// Results stay cached until [`SearchContext::reset_path_distances`].
    pub fn path_distance(&mut self, cch: &Cch, v: Vertex) -> Weight {
        let h = &cch.graph;
        self.stack.clear();
        for u in cch.tree.path_to_root(v) {
            if self.swept[u as usize] {
                break;
            }
            self.stack.push(u);
        }
        while let Some(b) = self.stack.pop() {
            let mut d = self.forward[b as usize];
            for e in h.edge_range(b) {
                d = d.min(self.path[h.head[e] as usize].saturating_add(h.down[e]));
            }
            self.path[b as usize] = d;
            self.swept[b as usize] = true;
            self.swept_list.push(b);
        }
        self.path[v as usize]
    }

    pub fn reset_path_distances(&mut self) {
        for &v in &self.swept_list {
            self.path[v as usize] = INFINITY;
            self.swept[v as usize] = false;
        }
        self.swept_list.clear();
    }

    /// Full-array scan; records the outcome in [`audit_counts`] and panics in
    /// debug builds if a label is not at infinity.
    pub fn audit_clean(&self) -> bool {
        let clean = self.is_clean();
        AUDITS.fetch_add(1, Ordering::Relaxed);
        if !clean {
            AUDIT_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
        }
        debug_assert!(clean, "search context labels not reset");
        clean
    }

    pub(crate) fn audit_if_enabled(&self) {
        if self.audit {
            self.audit_clean();
        }
    }
}

/// Forward elimination-tree search: labels every ancestor `v` of `source`
/// with the shortest upward path length `source -> v`. Returns the number of
/// scanned vertices. Labels persist until [`reset_forward`].
pub fn forward_elim_search(ctx: &mut SearchContext, cch: &Cch, source: Vertex) -> usize {
    let h = &cch.graph;
    ctx.forward[source as usize] = 0;
    let mut scanned = 0;
    for v in cch.tree.path_to_root(source) {
        scanned += 1;
        let d = ctx.forward[v as usize];
        if d == INFINITY {
            continue;
        }
        for e in h.edge_range(v) {
            let w = h.head[e] as usize;
            let nd = d.saturating_add(h.up[e]);
            if nd < ctx.forward[w] {
                ctx.forward[w] = nd;
            }
        }
    }
    scanned
}

/// Reverse elimination-tree search seeded with `(vertex, offset)` pairs that
/// all lie on the path from `start_lowest` to the root. Relaxes downward
/// edges while walking up, resets every reverse label right after scanning it
/// and returns `min(forward[v] + reverse[v])` over the path.
pub fn reverse_elim_search(
    ctx: &mut SearchContext,
    cch: &Cch,
    init: &[(Vertex, Weight)],
    start_lowest: Vertex,
) -> Weight {
    ctx.bounded_reverse_search(cch, init, start_lowest, INFINITY)
}

impl SearchContext {
    /// [`reverse_elim_search`] that starts from a known upper bound: the
    /// result is `min(bound, true result)` and relaxation stops early once a
    /// label reaches the bound.
    pub fn bounded_reverse_search(
        &mut self,
        cch: &Cch,
        init: &[(Vertex, Weight)],
        start_lowest: Vertex,
        bound: Weight,
    ) -> Weight {
        let h = &cch.graph;
        for &(b, offset) in init {
            debug_assert!(b >= start_lowest);
            let label = &mut self.reverse[b as usize];
            *label = (*label).min(offset);
        }
        let mut best = bound;
        for v in cch.tree.path_to_root(start_lowest) {
            let r = self.reverse[v as usize];
            if r == INFINITY {
                continue;
            }
            self.reverse[v as usize] = INFINITY;
            best = best.min(self.forward[v as usize].saturating_add(r));
            if r >= best {
                continue;
            }
            for e in h.edge_range(v) {
                let w = h.head[e] as usize;
                let nd = r.saturating_add(h.down[e]);
                if nd < self.reverse[w] {
                    self.reverse[w] = nd;
                }
            }
        }
        debug_assert!(
            init.iter().all(|&(b, _)| self.reverse[b as usize] == INFINITY),
            "seed vertex off the elimination-tree path"
        );
        best
    }
}

/// Clears the forward labels set by [`forward_elim_search`] from `source`.
pub fn reset_forward(ctx: &mut SearchContext, cch: &Cch, source: Vertex) {
    for v in cch.tree.path_to_root(source) {
        ctx.forward[v as usize] = INFINITY;
    }
}

/// Point-to-point elimination-tree query.
pub fn elim_tree_query(ctx: &mut SearchContext, cch: &Cch, source: Vertex, target: Vertex) -> Weight {
    forward_elim_search(ctx, cch, source);
    let d = reverse_elim_search(ctx, cch, &[(target, 0)], target);
    reset_forward(ctx, cch, source);
    ctx.audit_if_enabled();
    d
}

/// Scratch space for the bidirectional Dijkstra-based CCH query.
#[derive(Debug, Clone)]
pub struct CchDijkstraContext {
    dist: [Vec<Weight>; 2],
    touched: Vec<Vertex>,
    queues: [BinaryHeap<Reverse<(Weight, Vertex)>>; 2],
}

impl CchDijkstraContext {
    pub fn new(num_vertices: usize) -> Self {
        CchDijkstraContext {
            dist: [vec![INFINITY; num_vertices], vec![INFINITY; num_vertices]],
            touched: Vec::new(),
            queues: [BinaryHeap::new(), BinaryHeap::new()],
        }
    }

    fn clear(&mut self) {
        for v in self.touched.drain(..) {
            self.dist[0][v as usize] = INFINITY;
            self.dist[1][v as usize] = INFINITY;
        }
        self.queues[0].clear();
        self.queues[1].clear();
    }
}

/// Bidirectional Dijkstra on `H`: the forward search relaxes upward edges by
/// their up weights, the reverse search by their down weights. Each side stops
/// once its queue minimum reaches the best meeting distance.
pub fn cch_dijkstra_query(ctx: &mut CchDijkstraContext, cch: &Cch, source: Vertex, target: Vertex) -> Weight {
    let h = &cch.graph;
    ctx.clear();
    let mut best = INFINITY;
    for (side, start) in [(0, source), (1, target)] {
        ctx.dist[side][start as usize] = 0;
        ctx.queues[side].push(Reverse((0, start)));
    }
    ctx.touched.extend([source, target]);
    if source == target {
        return 0;
    }
    let mut side = 0;
    loop {
        let live = |q: &BinaryHeap<Reverse<(Weight, Vertex)>>| q.peek().is_some_and(|e| e.0 .0 < best);
        let (f, r) = (live(&ctx.queues[0]), live(&ctx.queues[1]));
        if !f && !r {
            break;
        }
        if !(if side == 0 { f } else { r }) {
            side ^= 1;
        }
        let Reverse((d, v)) = ctx.queues[side].pop().unwrap();
        if d > ctx.dist[side][v as usize] {
            side ^= 1;
            continue;
        }
        let other = ctx.dist[side ^ 1][v as usize];
        best = best.min(d.saturating_add(other));
        let weights = if side == 0 { &h.up } else { &h.down };
        for e in h.edge_range(v) {
            let w = h.head[e];
            let nd = d.saturating_add(weights[e]);
            if nd < ctx.dist[side][w as usize] {
                if ctx.dist[0][w as usize] == INFINITY && ctx.dist[1][w as usize] == INFINITY {
                    ctx.touched.push(w);
                }
                ctx.dist[side][w as usize] = nd;
                ctx.queues[side].push(Reverse((nd, w)));
            }
        }
        side ^= 1;
    }
    best
}
