//! Separator decompositions by recursive Inertial Flow dissection and the
//! nested dissection order they induce.
//!
//! Vertices are renumbered by a postorder walk of the decomposition tree, so
//! every subtree covers a contiguous id range and its separator occupies the
//! tail of that range. Each tree node only stores three vertex indices.

use std::ops::{Range, RangeInclusive};

use crate::error::{Error, Result};
use crate::graph::{invert_permutation, Coordinates, Graph, Vertex, INVALID_VERTEX};

pub type NodeId = u32;
pub const NO_NODE: NodeId = u32::MAX;

/// Undirected view of a graph: an edge is present if either arc is.
#[derive(Debug, Clone)]
pub struct Adjacency {
    first: Vec<u32>,
    neighbors: Vec<Vertex>,
}

impl Adjacency {
    pub fn symmetric(g: &Graph) -> Self {
        let mut pairs: Vec<(Vertex, Vertex)> = g.arcs().flat_map(|(t, h, _)| [(t, h), (h, t)]).collect();
        pairs.sort_unstable();
        pairs.dedup();
        let n = g.num_vertices();
        let mut first = vec![0u32; n + 1];
        for &(t, _) in &pairs {
            first[t as usize + 1] += 1;
        }
        for v in 0..n {
            first[v + 1] += first[v];
        }
        Adjacency {
            first,
            neighbors: pairs.into_iter().map(|p| p.1).collect(),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.first.len() - 1
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.neighbors[self.first[v as usize] as usize..self.first[v as usize + 1] as usize]
    }
}

/// A balanced vertex separator of a vertex subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    pub side_a: Vec<Vertex>,
    pub side_b: Vec<Vertex>,
    pub separator: Vec<Vertex>,
}

/// Projection directions, tried in this order: S->N, W->E, SW->NE, SE->NW.
const DIRECTIONS: [fn(i32, i32) -> i64; 4] = [
    |_, y| y as i64,
    |x, _| x as i64,
    |x, y| x as i64 + y as i64,
    |x, y| y as i64 - x as i64,
];

/// Computes an Inertial Flow vertex separator of the subgraph induced by
/// `subset`. Sides are returned sorted by id.
pub fn inertial_flow_cut(g: &Graph, coords: &Coordinates, subset: &[Vertex], balance: f64) -> Result<Cut> {
    if !(balance > 0.0 && balance <= 0.5) {
        return Err(Error::InvalidArgument(format!("balance {balance} outside (0, 1/2]")));
    }
    if subset.len() < 2 {
        return Err(Error::InvalidArgument("cannot cut fewer than two vertices".into()));
    }
    if coords.len() != g.num_vertices() {
        return Err(Error::InvalidArgument("coordinate count mismatch".into()));
    }
    let adj = Adjacency::symmetric(g);
    let mut local = vec![INVALID_VERTEX; g.num_vertices()];
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &v in &sorted {
        if v as usize >= g.num_vertices() {
            return Err(Error::VertexOutOfRange {
                vertex: v as u64,
                num_vertices: g.num_vertices(),
            });
        }
    }
    Ok(cut_subset(&adj, coords, &sorted, balance, &mut local))
}

/// Core of [`inertial_flow_cut`]. `subset` is sorted, `local` is an
/// all-invalid scratch array that is restored before returning.
fn cut_subset(adj: &Adjacency, coords: &Coordinates, subset: &[Vertex], balance: f64, local: &mut [Vertex]) -> Cut {
    let n = subset.len();
    if n == 2 {
        // too small for a balanced vertex cut: split into singletons
        return Cut {
            side_a: vec![subset[0]],
            side_b: vec![subset[1]],
            separator: Vec::new(),
        };
    }
    for (i, &v) in subset.iter().enumerate() {
        local[v as usize] = i as Vertex;
    }
    let mut local_first = Vec::with_capacity(n + 1);
    let mut local_adj = Vec::new();
    local_first.push(0u32);
    for &v in subset {
        local_adj.extend(
            adj.neighbors(v)
                .iter()
                .map(|&w| local[w as usize])
                .filter(|&w| w != INVALID_VERTEX),
        );
        local_first.push(local_adj.len() as u32);
    }
    for &v in subset {
        local[v as usize] = INVALID_VERTEX;
    }
    let neighbors = |i: usize| &local_adj[local_first[i] as usize..local_first[i + 1] as usize];

    let k = ((balance * n as f64).floor() as usize).clamp(1, n / 2);

    let mut best: Option<(SplitNetwork, Vec<usize>)> = None;
    let mut best_size = usize::MAX;
    for cuttable_terminals in [false, true] {
        for dir in DIRECTIONS {
            let mut by_key: Vec<usize> = (0..n).collect();
            by_key.sort_by_key(|&i| {
                let (x, y) = coords.get(subset[i]);
                (dir(x, y), subset[i])
            });
            let mut is_source = vec![false; n];
            for &i in &by_key[..k] {
                is_source[i] = true;
            }
            if !cuttable_terminals
                && by_key[n - k..]
                    .iter()
                    .any(|&i| neighbors(i).iter().any(|&j| is_source[j as usize]))
            {
                continue;
            }
            let mut split = SplitNetwork::new(n, &neighbors, cuttable_terminals);
            split.add_sources(&by_key[..k]);
            split.add_sinks(&by_key[n - k..]);
            // a direction that reaches the best size so far cannot win
            let limit = best_size.min(usize::MAX / 2) as i64;
            let size = split.net.max_flow_bounded(split.source, split.sink, limit) as usize;
            if size < best_size {
                best_size = size;
                best = Some((split, by_key));
            }
        }
        if best.is_some() {
            break;
        }
    }
    let (mut split, by_key) = best.expect("cuttable terminals always give a finite cut");
    let flow = best_size;

    // Among the minimum cuts of the winning direction prefer a balanced one:
    // grow both terminal sets along the projection while the cut size stays.
    let mut sources = k;
    let mut sinks = k;
    let half = n / 2;
    let mut reach = Reach::new(split.net.num_nodes);
    for grow_sources in [true, false] {
        let (mut lo, mut hi) = if grow_sources {
            (sources, half)
        } else {
            (sinks, half.min(n - sources))
        };
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            let (s_end, t_end) = if grow_sources { (mid, sinks) } else { (sources, mid) };
            if split.has_augmenting_path(&mut reach, &by_key[k..s_end], &by_key[n - t_end..n - k]) {
                hi = mid - 1;
            } else {
                lo = mid;
            }
        }
        if grow_sources {
            sources = lo;
        } else {
            sinks = lo;
        }
    }
    debug_assert!(sources + sinks <= n);
    split.add_sources(&by_key[k..sources]);
    split.add_sinks(&by_key[n - sinks..n - k]);

    let sides = split.sides();
    let mut cut = Cut {
        side_a: Vec::new(),
        side_b: Vec::new(),
        separator: Vec::new(),
    };
    for (i, &side) in sides.iter().enumerate() {
        match side {
            Side::A => cut.side_a.push(subset[i]),
            Side::B => cut.side_b.push(subset[i]),
            Side::Separator => cut.separator.push(subset[i]),
        }
    }
    debug_assert_eq!(cut.separator.len(), flow);
    cut
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    A,
    B,
    Separator,
}

const INF_CAP: i32 = i32::MAX / 4;

/// Vertex-split flow network: every vertex becomes an in/out pair joined by a
/// unit arc, so a minimum cut corresponds to a minimum vertex separator.
#[derive(Clone)]
struct SplitNetwork {
    net: FlowNetwork,
    n: usize,
    source: usize,
    sink: usize,
    split_arc: Vec<usize>,
    cuttable_terminals: bool,
}

impl SplitNetwork {
    fn new<'a>(n: usize, neighbors: &impl Fn(usize) -> &'a [Vertex], cuttable_terminals: bool) -> Self {
        let mut net = FlowNetwork::new(2 * n + 2);
        let mut split_arc = Vec::with_capacity(n);
        for i in 0..n {
            split_arc.push(net.add_arc(2 * i, 2 * i + 1, 1));
            for &j in neighbors(i) {
                net.add_arc(2 * i + 1, 2 * j as usize, INF_CAP);
            }
        }
        SplitNetwork {
            net,
            n,
            source: 2 * n,
            sink: 2 * n + 1,
            split_arc,
            cuttable_terminals,
        }
    }

    fn make_uncuttable(&mut self, i: usize) {
        let e = self.split_arc[i];
        // keep already routed flow, lift the capacity
        self.net.cap[e] += INF_CAP;
    }

    fn add_sources(&mut self, vertices: &[usize]) {
        for &i in vertices {
            if !self.cuttable_terminals {
                self.make_uncuttable(i);
            }
            self.net.add_arc(self.source, 2 * i, INF_CAP);
        }
    }

    fn add_sinks(&mut self, vertices: &[usize]) {
        for &i in vertices {
            if !self.cuttable_terminals {
                self.make_uncuttable(i);
            }
            self.net.add_arc(2 * i + 1, self.sink, INF_CAP);
        }
    }

    /// Whether the residual network has a source-sink path once the given
    /// vertices join the terminal sets. Leaves the network unchanged.
    fn has_augmenting_path(&mut self, reach: &mut Reach, extra_sources: &[usize], extra_sinks: &[usize]) -> bool {
        self.net.index();
        reach.clear();
        for &i in extra_sinks {
            reach.target[2 * i + 1] = true;
            if !self.cuttable_terminals {
                reach.target[2 * i] = true;
            }
        }
        reach.target[self.sink] = true;
        reach.visit(self.source);
        for &i in extra_sources {
            reach.visit(2 * i);
            if !self.cuttable_terminals {
                reach.visit(2 * i + 1);
            }
        }
        let net = &self.net;
        while let Some(u) = reach.stack.pop() {
            if reach.target[u as usize] {
                return true;
            }
            for &e in net.arcs(u as usize) {
                if net.cap[e as usize] > 0 {
                    reach.visit(net.to[e as usize] as usize);
                }
            }
        }
        false
    }

    fn sides(&mut self) -> Vec<Side> {
        let reachable = self.net.residual_reachable(self.source);
        (0..self.n)
            .map(|i| match (reachable[2 * i], reachable[2 * i + 1]) {
                (true, true) => Side::A,
                (true, false) => Side::Separator,
                _ => Side::B,
            })
            .collect()
    }
}

/// Scratch space for residual reachability probes.
struct Reach {
    seen: Vec<bool>,
    target: Vec<bool>,
    touched: Vec<u32>,
    stack: Vec<u32>,
}

impl Reach {
    fn new(num_nodes: usize) -> Self {
        Reach {
            seen: vec![false; num_nodes],
            target: vec![false; num_nodes],
            touched: Vec::new(),
            stack: Vec::new(),
        }
    }

    fn clear(&mut self) {
        for &u in &self.touched {
            self.seen[u as usize] = false;
        }
        self.touched.clear();
        self.stack.clear();
        self.target.fill(false);
    }

    fn visit(&mut self, u: usize) {
        if !self.seen[u] {
            self.seen[u] = true;
            self.touched.push(u as u32);
            self.stack.push(u as u32);
        }
    }
}

/// Dinic max-flow on unit-ish capacities. Arcs are kept as a list and
/// indexed by tail lazily, so terminals can be added after a flow exists.
#[derive(Clone)]
struct FlowNetwork {
    num_nodes: usize,
    tail: Vec<u32>,
    to: Vec<u32>,
    cap: Vec<i32>,
    start: Vec<u32>,
    out: Vec<u32>,
    indexed: bool,
}

impl FlowNetwork {
    fn new(num_nodes: usize) -> Self {
        FlowNetwork {
            num_nodes,
            tail: Vec::new(),
            to: Vec::new(),
            cap: Vec::new(),
            start: Vec::new(),
            out: Vec::new(),
            indexed: false,
        }
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: i32) -> usize {
        // arc e and its residual twin e ^ 1
        let e = self.to.len();
        self.tail.extend([from as u32, to as u32]);
        self.to.extend([to as u32, from as u32]);
        self.cap.extend([cap, 0]);
        self.indexed = false;
        e
    }

    fn index(&mut self) {
        if self.indexed {
            return;
        }
        let mut start = vec![0u32; self.num_nodes + 1];
        for &t in &self.tail {
            start[t as usize + 1] += 1;
        }
        for i in 0..self.num_nodes {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut out = vec![0u32; self.tail.len()];
        for (e, &t) in self.tail.iter().enumerate() {
            out[fill[t as usize] as usize] = e as u32;
            fill[t as usize] += 1;
        }
        self.start = start;
        self.out = out;
        self.indexed = true;
    }

    fn arcs(&self, u: usize) -> &[u32] {
        &self.out[self.start[u] as usize..self.start[u + 1] as usize]
    }

    /// BFS levels in the residual graph. Stops once the sink level is done.
    fn levels(&self, source: usize, sink: usize, level: &mut [u32], queue: &mut Vec<u32>) -> bool {
        level.fill(u32::MAX);
        level[source] = 0;
        queue.clear();
        queue.push(source as u32);
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head] as usize;
            head += 1;
            if level[u] >= level[sink] {
                break;
            }
            for &e in self.arcs(u) {
                let v = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0 && level[v] == u32::MAX {
                    level[v] = level[u] + 1;
                    queue.push(v as u32);
                }
            }
        }
        level[sink] != u32::MAX
    }

    /// Augments until no path is left or at least `limit` units were pushed.
    fn max_flow_bounded(&mut self, source: usize, sink: usize, limit: i64) -> i64 {
        self.index();
        let mut total = 0i64;
        let mut level = vec![u32::MAX; self.num_nodes];
        let mut queue = Vec::new();
        let mut next = vec![0u32; self.num_nodes];
        let mut path: Vec<u32> = Vec::new();
        while total < limit && self.levels(source, sink, &mut level, &mut queue) {
            next.copy_from_slice(&self.start[..self.num_nodes]);
            path.clear();
            let mut u = source;
            loop {
                if u == sink {
                    let pushed = path.iter().map(|&e| self.cap[e as usize]).min().unwrap();
                    for &e in &path {
                        self.cap[e as usize] -= pushed;
                        self.cap[e as usize ^ 1] += pushed;
                    }
                    total += pushed as i64;
                    if total >= limit {
                        return total;
                    }
                    // restart from the tail of the first saturated arc
                    let cut = path.iter().position(|&e| self.cap[e as usize] == 0).unwrap();
                    path.truncate(cut);
                    u = path.last().map_or(source, |&e| self.to[e as usize] as usize);
                    continue;
                }
                let end = self.start[u + 1];
                let mut advanced = false;
                while next[u] < end {
                    let e = self.out[next[u] as usize] as usize;
                    let v = self.to[e] as usize;
                    if self.cap[e] > 0 && level[v] == level[u] + 1 {
                        path.push(e as u32);
                        u = v;
                        advanced = true;
                        break;
                    }
                    next[u] += 1;
                }
                if advanced {
                    continue;
                }
                // dead end: retreat
                if u == source {
                    break;
                }
                let e = path.pop().unwrap() as usize;
                u = self.tail[e] as usize;
                next[u] += 1;
            }
        }
        total
    }

    fn residual_reachable(&mut self, source: usize) -> Vec<bool> {
        self.index();
        let mut seen = vec![false; self.num_nodes];
        seen[source] = true;
        let mut stack = vec![source];
        while let Some(u) = stack.pop() {
            for &e in self.arcs(u) {
                let v = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

/// One node of a separator decomposition. All bounds refer to nested
/// dissection ids: the subgraph covers `first_vertex..=last_vertex` and the
/// separator itself `first_sep_vertex..=last_vertex`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SepDecompNode {
    pub parent: NodeId,
    pub first_child: NodeId,
    pub num_children: u32,
    pub first_vertex: Vertex,
    pub last_vertex: Vertex,
    pub first_sep_vertex: Vertex,
}

/// Separator decomposition tree with nodes in breadth-first order, so the root
/// is node 0 and the children of every node are contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SepDecompTree {
    nodes: Vec<SepDecompNode>,
}

impl SepDecompTree {
    pub fn from_nodes(nodes: Vec<SepDecompNode>) -> Result<Self> {
        let tree = SepDecompTree { nodes };
        if tree.nodes.is_empty() {
            return Err(Error::Format("tree has no nodes".into()));
        }
        tree.check_invariants().map_err(Error::Format)?;
        Ok(tree)
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[SepDecompNode] {
        &self.nodes
    }

    pub fn node(&self, x: NodeId) -> &SepDecompNode {
        &self.nodes[x as usize]
    }

    pub fn is_root(&self, x: NodeId) -> bool {
        self.nodes[x as usize].parent == NO_NODE
    }

    pub fn children(&self, x: NodeId) -> Range<NodeId> {
        let node = &self.nodes[x as usize];
        node.first_child..node.first_child + node.num_children
    }

    /// Vertex ids of the subgraph `G_X`.
    pub fn subgraph_range(&self, x: NodeId) -> RangeInclusive<Vertex> {
        let node = &self.nodes[x as usize];
        node.first_vertex..=node.last_vertex
    }

    /// Vertex ids of the separator `X`.
    pub fn separator_range(&self, x: NodeId) -> RangeInclusive<Vertex> {
        let node = &self.nodes[x as usize];
        node.first_sep_vertex..=node.last_vertex
    }

    /// `v ∈ V(G_X)`.
    pub fn contains(&self, x: NodeId, v: Vertex) -> bool {
        let node = &self.nodes[x as usize];
        node.first_vertex <= v && v <= node.last_vertex
    }

    pub fn num_vertices(&self) -> usize {
        self.nodes[0].last_vertex as usize + 1
    }

    /// The node whose separator holds `v`.
    pub fn node_of_vertex(&self, v: Vertex) -> NodeId {
        assert!((v as usize) < self.num_vertices(), "vertex {v} out of range");
        let mut x = self.root();
        loop {
            let node = &self.nodes[x as usize];
            if v >= node.first_sep_vertex {
                return x;
            }
            let children = &self.nodes[self.children(x).start as usize..self.children(x).end as usize];
            // children ranges are increasing and tile first_vertex..first_sep_vertex
            let i = children.partition_point(|c| c.last_vertex < v);
            x = node.first_child + i as NodeId;
        }
    }

    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        for x in 1..self.nodes.len() {
            depth[x] = depth[self.nodes[x].parent as usize] + 1;
        }
        depth.into_iter().max().unwrap_or(0) + 1
    }

    /// Checks the structural invariants: range nesting and tiling, breadth-first
    /// layout and parent/child consistency.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let nodes = &self.nodes;
        let root = nodes.first().ok_or("empty tree")?;
        if root.parent != NO_NODE || root.first_vertex != 0 {
            return Err("root must be node 0 and start at vertex 0".into());
        }
        for (x, node) in nodes.iter().enumerate() {
            if !(node.first_vertex <= node.first_sep_vertex && node.first_sep_vertex <= node.last_vertex) {
                return Err(format!("node {x}: bounds out of order"));
            }
            if x > 0 && (node.parent as usize >= x) {
                return Err(format!("node {x}: parent must precede child"));
            }
            let children = node.first_child as usize..(node.first_child + node.num_children) as usize;
            if node.num_children > 0 && (children.start <= x || children.end > nodes.len()) {
                return Err(format!("node {x}: bad child span"));
            }
            let mut expected = node.first_vertex;
            for c in children {
                let child = &nodes[c];
                if child.parent as usize != x {
                    return Err(format!("node {c}: parent link mismatch"));
                }
                if child.first_vertex != expected {
                    return Err(format!("node {c}: child ranges do not tile"));
                }
                expected = child.last_vertex + 1;
            }
            if expected != node.first_sep_vertex {
                return Err(format!("node {x}: children do not end at the separator"));
            }
        }
        let child_count: usize = nodes.iter().map(|n| n.num_children as usize).sum();
        if child_count + 1 != nodes.len() {
            return Err("every non-root node must be some node's child".into());
        }
        Ok(())
    }
}

/// Nested dissection order as a rank per vertex and its inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedDissectionOrder {
    rank: Vec<Vertex>,
    order: Vec<Vertex>,
}

impl NestedDissectionOrder {
    pub fn from_ranks(rank: Vec<Vertex>) -> Result<Self> {
        crate::graph::check_permutation(&rank, rank.len())?;
        let order = invert_permutation(&rank);
        Ok(NestedDissectionOrder { rank, order })
    }

    /// Rank of input vertex `v`.
    pub fn rank(&self, v: Vertex) -> Vertex {
        self.rank[v as usize]
    }

    /// Input vertex with the given rank.
    pub fn vertex(&self, rank: Vertex) -> Vertex {
        self.order[rank as usize]
    }

    pub fn ranks(&self) -> &[Vertex] {
        &self.rank
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionConfig {
    /// Subgraphs with at most this many vertices become leaves.
    pub leaf_threshold: usize,
    /// Inertial Flow balance: the fraction of vertices fixed on each side.
    pub balance: f64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            leaf_threshold: 32,
            balance: 0.3,
        }
    }
}

/// Decomposition tree plus the graph renumbered by its nested dissection order.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub tree: SepDecompTree,
    pub order: NestedDissectionOrder,
    pub graph: Graph,
    pub coords: Coordinates,
}

struct TempNode {
    separator: Vec<Vertex>,
    children: Vec<usize>,
}

struct Dissector<'a> {
    adj: Adjacency,
    coords: &'a Coordinates,
    config: PartitionConfig,
    local: Vec<Vertex>,
    mark: Vec<bool>,
    nodes: Vec<TempNode>,
}

impl Dissector<'_> {
    fn dissect(&mut self, subset: Vec<Vertex>) -> usize {
        if subset.len() <= self.config.leaf_threshold {
            self.nodes.push(TempNode {
                separator: subset,
                children: Vec::new(),
            });
            return self.nodes.len() - 1;
        }
        let mut cut = cut_subset(&self.adj, self.coords, &subset, self.config.balance, &mut self.local);
        if cut.separator.is_empty() {
            // only happens for disconnected or two-vertex subsets
            let promoted = cut.side_b.remove(0);
            cut.separator.push(promoted);
        }
        let components = self.components(&subset, &cut.separator);
        let children = components.into_iter().map(|c| self.dissect(c)).collect();
        self.nodes.push(TempNode {
            separator: cut.separator,
            children,
        });
        self.nodes.len() - 1
    }

    /// Connected components of `subset \ separator`, each sorted, ordered by
    /// smallest vertex.
    fn components(&mut self, subset: &[Vertex], separator: &[Vertex]) -> Vec<Vec<Vertex>> {
        for &v in subset {
            self.mark[v as usize] = true;
        }
        for &v in separator {
            self.mark[v as usize] = false;
        }
        let mut components = Vec::new();
        for &start in subset {
            if !self.mark[start as usize] {
                continue;
            }
            self.mark[start as usize] = false;
            let mut comp = vec![start];
            let mut i = 0;
            while i < comp.len() {
                let v = comp[i];
                i += 1;
                for &w in self.adj.neighbors(v) {
                    if self.mark[w as usize] {
                        self.mark[w as usize] = false;
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }
}

/// Recursively dissects `g` and renumbers it by the resulting nested dissection
/// order. Separator vertices keep their relative input order.
pub fn build_sep_decomposition(g: &Graph, coords: &Coordinates, config: PartitionConfig) -> Result<Decomposition> {
    let n = g.num_vertices();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if coords.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} coordinates for {n} vertices",
            coords.len()
        )));
    }
    if config.leaf_threshold == 0 {
        return Err(Error::InvalidArgument("leaf threshold must be positive".into()));
    }
    if !(config.balance > 0.0 && config.balance <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "balance {} outside (0, 1/2]",
            config.balance
        )));
    }
    let mut dissector = Dissector {
        adj: Adjacency::symmetric(g),
        coords,
        config,
        local: vec![INVALID_VERTEX; n],
        mark: vec![false; n],
        nodes: Vec::new(),
    };
    let root = dissector.dissect((0..n as Vertex).collect());
    let temp = dissector.nodes;

    // postorder walk assigns ranks; children before the separator
    let mut rank = vec![INVALID_VERTEX; n];
    let mut bounds = vec![(0u32, 0u32, 0u32); temp.len()];
    let mut next_rank: Vertex = 0;
    let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
    let mut first_of = vec![0u32; temp.len()];
    while let Some((x, child_pos)) = stack.pop() {
        if child_pos == 0 {
            first_of[x] = next_rank;
        }
        if child_pos < temp[x].children.len() {
            stack.push((x, child_pos + 1));
            stack.push((temp[x].children[child_pos], 0));
            continue;
        }
        let first_sep = next_rank;
        for &v in &temp[x].separator {
            rank[v as usize] = next_rank;
            next_rank += 1;
        }
        bounds[x] = (first_of[x], next_rank - 1, first_sep);
    }
    debug_assert_eq!(next_rank as usize, n);

    // breadth-first layout
    let mut bfs = vec![root];
    let mut new_id = vec![0 as NodeId; temp.len()];
    let mut i = 0;
    while i < bfs.len() {
        let x = bfs[i];
        new_id[x] = i as NodeId;
        bfs.extend(temp[x].children.iter().copied());
        i += 1;
    }
    let mut nodes = Vec::with_capacity(temp.len());
    let mut parent = vec![NO_NODE; temp.len()];
    for &x in &bfs {
        for &c in &temp[x].children {
            parent[c] = new_id[x];
        }
    }
    for &x in &bfs {
        let (first_vertex, last_vertex, first_sep_vertex) = bounds[x];
        let first_child = temp[x].children.first().map_or(NO_NODE, |&c| new_id[c]);
        nodes.push(SepDecompNode {
            parent: parent[x],
            first_child: if temp[x].children.is_empty() { 0 } else { first_child },
            num_children: temp[x].children.len() as u32,
            first_vertex,
            last_vertex,
            first_sep_vertex,
        });
    }
    let tree = SepDecompTree { nodes };
    debug_assert_eq!(tree.check_invariants(), Ok(()));

    let order = NestedDissectionOrder::from_ranks(rank)?;
    let graph = g.permute(order.ranks())?;
    let coords = coords.permute(order.ranks())?;
    Ok(Decomposition {
        tree,
        order,
        graph,
        coords,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::synth;

    /// Smallest separator size for which the rest splits into two unions of
    /// components, each of size at least `min_side`, by exhaustive enumeration.
    fn brute_force_min_separator(g: &Graph, min_side: usize) -> usize {
        let n = g.num_vertices();
        let adj = Adjacency::symmetric(g);
        let mut best = usize::MAX;
        for mask in 0u32..(1 << n) {
            let size = mask.count_ones() as usize;
            if size >= best {
                continue;
            }
            let mut comp_sizes = Vec::new();
            let mut seen = mask;
            for start in 0..n {
                if seen & (1 << start) != 0 {
                    continue;
                }
                seen |= 1 << start;
                let mut stack = vec![start as Vertex];
                let mut count = 0;
                while let Some(v) = stack.pop() {
                    count += 1;
                    for &w in adj.neighbors(v) {
                        if seen & (1 << w) == 0 {
                            seen |= 1 << w;
                            stack.push(w);
                        }
                    }
                }
                comp_sizes.push(count);
            }
            let total: usize = comp_sizes.iter().sum();
            let splittable = (1u32..(1 << comp_sizes.len()) - 1).any(|sel| {
                let a: usize = (0..comp_sizes.len())
                    .filter(|&i| sel & (1 << i) != 0)
                    .map(|i| comp_sizes[i])
                    .sum();
                a >= min_side && total - a >= min_side
            });
            if splittable {
                best = size;
            }
        }
        best
    }

    fn check_cut(g: &Graph, subset: &[Vertex], cut: &Cut, min_side: usize) {
        let mut all: Vec<Vertex> = cut
            .side_a
            .iter()
            .chain(&cut.side_b)
            .chain(&cut.separator)
            .copied()
            .collect();
        all.sort_unstable();
        let mut expected = subset.to_vec();
        expected.sort_unstable();
        assert_eq!(all, expected, "cut must partition the subset");
        for (t, h, _) in g.arcs() {
            let a = |v| cut.side_a.contains(&v);
            let b = |v| cut.side_b.contains(&v);
            assert!(!(a(t) && b(h) || b(t) && a(h)), "edge {t}-{h} crosses the cut");
        }
        assert!(cut.side_a.len() >= min_side && cut.side_b.len() >= min_side);
    }

    #[test]
    fn cut_of_path() {
        let g = p5();
        let cut = inertial_flow_cut(&g, &p5_coords(), &[0, 1, 2, 3, 4], 0.3).unwrap();
        check_cut(&g, &[0, 1, 2, 3, 4], &cut, 1);
        assert_eq!(cut.separator.len(), brute_force_min_separator(&g, 1));
        assert_eq!(cut.separator.len(), 1);
    }

    #[test]
    fn cut_of_grid() {
        let g = grid3();
        let all: Vec<Vertex> = (0..9).collect();
        let cut = inertial_flow_cut(&g, &grid3_coords(), &all, 0.3).unwrap();
        check_cut(&g, &all, &cut, 2);
        let optimum = brute_force_min_separator(&g, 2);
        assert_eq!(optimum, 3);
        assert!(cut.separator.len() <= 3);
    }

    #[test]
    fn two_vertex_cut_is_degenerate() {
        let cut = inertial_flow_cut(&p5(), &p5_coords(), &[0, 1], 0.3).unwrap();
        assert_eq!(cut.side_a, vec![0]);
        assert_eq!(cut.side_b, vec![1]);
        assert!(cut.separator.is_empty());
    }

    #[test]
    fn cut_argument_errors() {
        assert!(inertial_flow_cut(&p5(), &p5_coords(), &[3], 0.3).is_err());
        assert!(inertial_flow_cut(&p5(), &p5_coords(), &[0, 1, 2], 0.0).is_err());
        assert!(inertial_flow_cut(&p5(), &p5_coords(), &[0, 1, 2], 0.7).is_err());
    }

    #[test]
    fn complete_graph_falls_back_to_cuttable_terminals() {
        let k4 = Graph::from_edges(4, [(0, 1, 1), (0, 2, 1), (0, 3, 1), (1, 2, 1), (1, 3, 1), (2, 3, 1)]).unwrap();
        let coords = Coordinates::new(vec![0, 1, 2, 3], vec![0, 0, 0, 0]);
        let cut = inertial_flow_cut(&k4, &coords, &[0, 1, 2, 3], 0.3).unwrap();
        assert!(!cut.separator.is_empty());
        check_cut(&k4, &[0, 1, 2, 3], &cut, 0);
    }

    #[test]
    fn random_cuts_satisfy_post_conditions() {
        for seed in 0..10 {
            let (g, c) = synth::random_geometric(200, seed);
            let all: Vec<Vertex> = (0..g.num_vertices() as Vertex).collect();
            let cut = inertial_flow_cut(&g, &c, &all, 0.3).unwrap();
            check_cut(&g, &all, &cut, (0.3 * all.len() as f64) as usize);
        }
    }

    #[test]
    fn single_vertex_graph_is_one_node() {
        let g = Graph::from_arcs(1, []).unwrap();
        let d = build_sep_decomposition(&g, &Coordinates::new(vec![0], vec![0]), PartitionConfig::default()).unwrap();
        assert_eq!(d.tree.num_nodes(), 1);
        assert_eq!(d.tree.subgraph_range(0), 0..=0);
        assert_eq!(d.tree.separator_range(0), 0..=0);
    }

    #[test]
    fn path_decomposition() {
        let config = PartitionConfig {
            leaf_threshold: 2,
            balance: 0.3,
        };
        let d = build_sep_decomposition(&p5(), &p5_coords(), config).unwrap();
        let t = &d.tree;
        assert_eq!(t.num_nodes(), 3);
        assert_eq!(t.separator_range(0), 4..=4);
        assert_eq!(t.children(0), 1..3);
        assert_eq!(t.subgraph_range(1), 0..=1);
        assert_eq!(t.subgraph_range(2), 2..=3);
        // the middle vertex is the separator
        assert_eq!(d.order.rank(2), 4);
        check_separation(&d);
    }

    /// No edge joins two different children of a node.
    fn check_separation(d: &Decomposition) {
        let t = &d.tree;
        t.check_invariants().unwrap();
        for x in 0..t.num_nodes() as NodeId {
            let children: Vec<NodeId> = t.children(x).collect();
            for (t_, h, _) in d.graph.arcs() {
                let ct = children.iter().position(|&c| t.contains(c, t_));
                let ch = children.iter().position(|&c| t.contains(c, h));
                if let (Some(a), Some(b)) = (ct, ch) {
                    assert_eq!(a, b, "edge {t_}-{h} joins children of node {x}");
                }
            }
        }
    }

    /// Postorder property: ranks in a child's range are below the parent's separator.
    fn check_postorder(t: &SepDecompTree) {
        for x in 1..t.num_nodes() as NodeId {
            let parent = t.node(x).parent;
            assert!(t.node(x).last_vertex < t.node(parent).first_sep_vertex);
        }
    }

    #[test]
    fn grid_decomposition_separates() {
        for leaf in [1, 2, 3, 9] {
            let config = PartitionConfig {
                leaf_threshold: leaf,
                balance: 0.3,
            };
            let d = build_sep_decomposition(&grid3(), &grid3_coords(), config).unwrap();
            check_separation(&d);
            check_postorder(&d.tree);
        }
    }

    #[test]
    fn random_decompositions_are_valid() {
        for seed in 0..10 {
            let (g, c) = synth::random_geometric(300, seed);
            let config = PartitionConfig {
                leaf_threshold: 8,
                balance: 0.3,
            };
            let d = build_sep_decomposition(&g, &c, config).unwrap();
            check_separation(&d);
            check_postorder(&d.tree);
            // every vertex in exactly one separator
            let mut count = vec![0; g.num_vertices()];
            for x in 0..d.tree.num_nodes() as NodeId {
                for v in d.tree.separator_range(x) {
                    count[v as usize] += 1;
                }
            }
            assert!(count.iter().all(|&c| c == 1));
        }
    }

    /// Membership `v ∈ V(G_X)` by explicit subtree traversal.
    fn explicit_members(t: &SepDecompTree, x: NodeId) -> Vec<Vertex> {
        let mut out: Vec<Vertex> = t.separator_range(x).collect();
        for c in t.children(x) {
            out.extend(explicit_members(t, c));
        }
        out.sort_unstable();
        out
    }

    #[test]
    fn range_membership_matches_explicit_subtrees() {
        let mut decomps = vec![build_sep_decomposition(
            &grid3(),
            &grid3_coords(),
            PartitionConfig {
                leaf_threshold: 1,
                balance: 0.3,
            },
        )
        .unwrap()];
        for seed in 0..50 {
            let (g, c) = synth::random_geometric(60, seed);
            decomps.push(
                build_sep_decomposition(
                    &g,
                    &c,
                    PartitionConfig {
                        leaf_threshold: 4,
                        balance: 0.3,
                    },
                )
                .unwrap(),
            );
        }
        for d in &decomps {
            let t = &d.tree;
            for x in 0..t.num_nodes() as NodeId {
                let members = explicit_members(t, x);
                let by_range: Vec<Vertex> = (0..d.graph.num_vertices() as Vertex)
                    .filter(|&v| t.contains(x, v))
                    .collect();
                assert_eq!(members, by_range);
            }
        }
    }

    #[test]
    fn node_of_vertex_matches_linear_scan() {
        let d = build_sep_decomposition(
            &grid3(),
            &grid3_coords(),
            PartitionConfig {
                leaf_threshold: 1,
                balance: 0.3,
            },
        )
        .unwrap();
        let t = &d.tree;
        assert_eq!(t.node_of_vertex(8), t.root());
        for v in 0..9 {
            let scan: Vec<NodeId> = (0..t.num_nodes() as NodeId)
                .filter(|&x| t.separator_range(x).contains(&v))
                .collect();
            assert_eq!(scan.len(), 1);
            assert_eq!(t.node_of_vertex(v), scan[0]);
        }
        let leaf = (0..t.num_nodes() as NodeId)
            .find(|&x| t.node(x).num_children == 0)
            .unwrap();
        assert_eq!(t.node_of_vertex(t.node(leaf).first_vertex), leaf);
    }

    #[test]
    fn decomposition_is_deterministic() {
        let (g, c) = synth::random_geometric(400, 7);
        let a = build_sep_decomposition(&g, &c, PartitionConfig::default()).unwrap();
        let b = build_sep_decomposition(&g, &c, PartitionConfig::default()).unwrap();
        assert_eq!(a.tree, b.tree);
        assert_eq!(a.order, b.order);
    }
}
