//! Road network representation, DIMACS input, connectivity reduction and the
//! plain Dijkstra search every other module is checked against.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type Vertex = u32;
pub type Weight = u32;

/// Distance of unreachable vertices and length of absent arcs.
pub const INFINITY: Weight = u32::MAX;
pub const INVALID_VERTEX: Vertex = u32::MAX;

/// Directed graph in adjacency-array form. Out-arcs of every vertex are
/// sorted by head, parallel arcs are collapsed to the shortest one and
/// self-loops are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    first_out: Vec<u32>,
    head: Vec<Vertex>,
    weight: Vec<Weight>,
}

impl Graph {
    pub fn from_arcs<I>(num_vertices: usize, arcs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vertex, Vertex, Weight)>,
    {
        let mut arcs: Vec<(Vertex, Vertex, Weight)> = arcs.into_iter().collect();
        for &(tail, head, _) in &arcs {
            for v in [tail, head] {
                if v as usize >= num_vertices {
                    return Err(Error::VertexOutOfRange {
                        vertex: v as u64,
                        num_vertices,
                    });
                }
            }
        }
        arcs.retain(|&(t, h, _)| t != h);
        arcs.sort_unstable();
        // sorted by weight within equal (tail, head), so the first one is the minimum
        arcs.dedup_by_key(|a| (a.0, a.1));

        let mut first_out = vec![0u32; num_vertices + 1];
        for &(tail, _, _) in &arcs {
            first_out[tail as usize + 1] += 1;
        }
        for v in 0..num_vertices {
            first_out[v + 1] += first_out[v];
        }
        Ok(Graph {
            first_out,
            head: arcs.iter().map(|a| a.1).collect(),
            weight: arcs.iter().map(|a| a.2).collect(),
        })
    }

    /// Bidirected graph: every undirected edge `(u, w, len)` becomes two arcs.
    pub fn from_edges<I>(num_vertices: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vertex, Vertex, Weight)>,
    {
        Self::from_arcs(
            num_vertices,
            edges.into_iter().flat_map(|(u, w, len)| [(u, w, len), (w, u, len)]),
        )
    }

    pub fn num_vertices(&self) -> usize {
        self.first_out.len() - 1
    }

    pub fn num_arcs(&self) -> usize {
        self.head.len()
    }

    pub fn out_arcs(&self, v: Vertex) -> impl Iterator<Item = (Vertex, Weight)> + '_ {
        let range = self.first_out[v as usize] as usize..self.first_out[v as usize + 1] as usize;
        self.head[range.clone()]
            .iter()
            .copied()
            .zip(self.weight[range].iter().copied())
    }

    pub fn out_degree(&self, v: Vertex) -> usize {
        (self.first_out[v as usize + 1] - self.first_out[v as usize]) as usize
    }

    /// Length of the arc `tail -> head`, if present.
    pub fn arc_length(&self, tail: Vertex, head: Vertex) -> Option<Weight> {
        let range = self.first_out[tail as usize] as usize..self.first_out[tail as usize + 1] as usize;
        let heads = &self.head[range.clone()];
        heads.binary_search(&head).ok().map(|i| self.weight[range.start + i])
    }

    pub fn arcs(&self) -> impl Iterator<Item = (Vertex, Vertex, Weight)> + '_ {
        (0..self.num_vertices() as Vertex).flat_map(move |v| self.out_arcs(v).map(move |(h, w)| (v, h, w)))
    }

    pub fn first_out(&self) -> &[u32] {
        &self.first_out
    }

    pub fn heads(&self) -> &[Vertex] {
        &self.head
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weight
    }

    /// The same topology with every arc length replaced by `f(tail, head, length)`.
    pub fn map_weights(&self, mut f: impl FnMut(Vertex, Vertex, Weight) -> Weight) -> Graph {
        let weight = self.arcs().map(|(t, h, w)| f(t, h, w)).collect();
        Graph {
            first_out: self.first_out.clone(),
            head: self.head.clone(),
            weight,
        }
    }

    pub fn reversed(&self) -> Graph {
        Graph::from_arcs(self.num_vertices(), self.arcs().map(|(t, h, w)| (h, t, w))).expect("reversing a valid graph")
    }

    /// Relabels vertices so that input vertex `v` becomes output vertex `rank[v]`.
    pub fn permute(&self, rank: &[Vertex]) -> Result<Graph> {
        check_permutation(rank, self.num_vertices())?;
        Graph::from_arcs(
            self.num_vertices(),
            self.arcs().map(|(t, h, w)| (rank[t as usize], rank[h as usize], w)),
        )
    }

    /// Subgraph induced by the vertices with `keep[v]`, renumbered in increasing
    /// id order. Returns the graph and the old id of every new vertex.
    pub fn induced_subgraph(&self, keep: &[bool]) -> (Graph, Vec<Vertex>) {
        let mut new_id = vec![INVALID_VERTEX; self.num_vertices()];
        let mut old_ids = Vec::new();
        for (v, &k) in keep.iter().enumerate() {
            if k {
                new_id[v] = old_ids.len() as Vertex;
                old_ids.push(v as Vertex);
            }
        }
        let arcs = self.arcs().filter_map(|(t, h, w)| {
            let (nt, nh) = (new_id[t as usize], new_id[h as usize]);
            (nt != INVALID_VERTEX && nh != INVALID_VERTEX).then_some((nt, nh, w))
        });
        let g = Graph::from_arcs(old_ids.len(), arcs).expect("induced subgraph ids are valid");
        (g, old_ids)
    }
}

pub(crate) fn check_permutation(rank: &[Vertex], n: usize) -> Result<()> {
    if rank.len() != n {
        return Err(Error::NotAPermutation(format!(
            "length {} but graph has {} vertices",
            rank.len(),
            n
        )));
    }
    let mut seen = vec![false; n];
    for &r in rank {
        if r as usize >= n || std::mem::replace(&mut seen[r as usize], true) {
            return Err(Error::NotAPermutation(format!("rank {r} repeated or out of range")));
        }
    }
    Ok(())
}

/// Inverts a permutation given as rank-per-vertex into vertex-per-rank.
pub fn invert_permutation(rank: &[Vertex]) -> Vec<Vertex> {
    let mut order = vec![INVALID_VERTEX; rank.len()];
    for (v, &r) in rank.iter().enumerate() {
        order[r as usize] = v as Vertex;
    }
    order
}

/// Per-vertex fixed-point coordinates (degrees times 10^6), `x` is the
/// longitude and `y` the latitude as in DIMACS `.co` files.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Coordinates {
    pub x: Vec<i32>,
    pub y: Vec<i32>,
}

impl Coordinates {
    pub fn new(x: Vec<i32>, y: Vec<i32>) -> Self {
        assert_eq!(x.len(), y.len());
        Coordinates { x, y }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn get(&self, v: Vertex) -> (i32, i32) {
        (self.x[v as usize], self.y[v as usize])
    }

    pub fn permute(&self, rank: &[Vertex]) -> Result<Coordinates> {
        check_permutation(rank, self.len())?;
        let mut x = vec![0; self.len()];
        let mut y = vec![0; self.len()];
        for (v, &r) in rank.iter().enumerate() {
            x[r as usize] = self.x[v];
            y[r as usize] = self.y[v];
        }
        Ok(Coordinates { x, y })
    }

    pub fn select(&self, ids: &[Vertex]) -> Coordinates {
        Coordinates {
            x: ids.iter().map(|&v| self.x[v as usize]).collect(),
            y: ids.iter().map(|&v| self.y[v as usize]).collect(),
        }
    }
}

/// Relabels graph and coordinates by `rank` (input vertex `v` becomes `rank[v]`).
pub fn permute(g: &Graph, coords: &Coordinates, rank: &[Vertex]) -> Result<(Graph, Coordinates)> {
    Ok((g.permute(rank)?, coords.permute(rank)?))
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, line: usize, what: &str) -> Result<T> {
    let field = field.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    field
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} '{field}'")))
}

/// Parses a DIMACS shortest-path `.gr` file (`p sp n m` header, `a u v w` arcs,
/// 1-based ids).
pub fn parse_dimacs_gr(text: &str) -> Result<Graph> {
    let mut header: Option<(usize, usize)> = None;
    let mut arcs = Vec::new();
    let mut last_line = 0;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let mut fields = line.split_whitespace();
        match fields.next() {
            None | Some("c") => continue,
            Some("p") => {
                if header.is_some() {
                    return Err(Error::parse(lineno, "duplicate problem line"));
                }
                if fields.next() != Some("sp") {
                    return Err(Error::parse(lineno, "expected 'p sp <n> <m>'"));
                }
                let n: usize = parse_field(fields.next(), lineno, "vertex count")?;
                let m: usize = parse_field(fields.next(), lineno, "arc count")?;
                if fields.next().is_some() {
                    return Err(Error::parse(lineno, "trailing fields in problem line"));
                }
                header = Some((n, m));
                arcs.reserve(m);
            }
            Some("a") => {
                let (n, _) = header.ok_or_else(|| Error::parse(lineno, "arc before problem line"))?;
                let u: u64 = parse_field(fields.next(), lineno, "arc tail")?;
                let v: u64 = parse_field(fields.next(), lineno, "arc head")?;
                let w: i64 = parse_field(fields.next(), lineno, "arc weight")?;
                for id in [u, v] {
                    if id == 0 || id > n as u64 {
                        return Err(Error::parse(lineno, format!("vertex id {id} out of range 1..={n}")));
                    }
                }
                if w < 0 {
                    return Err(Error::parse(lineno, format!("negative weight {w}")));
                }
                if w >= INFINITY as i64 {
                    return Err(Error::parse(lineno, format!("weight {w} too large")));
                }
                arcs.push(((u - 1) as Vertex, (v - 1) as Vertex, w as Weight));
            }
            Some(other) => {
                return Err(Error::parse(lineno, format!("unknown line type '{other}'")));
            }
        }
    }
    let (n, m) = header.ok_or_else(|| Error::parse(last_line.max(1), "missing problem line"))?;
    if arcs.len() != m {
        return Err(Error::parse(
            last_line.max(1),
            format!("header announces {m} arcs but {} were read", arcs.len()),
        ));
    }
    Graph::from_arcs(n, arcs)
}

pub fn write_dimacs_gr(g: &Graph) -> String {
    let mut out = String::new();
    writeln!(out, "p sp {} {}", g.num_vertices(), g.num_arcs()).unwrap();
    for (t, h, w) in g.arcs() {
        writeln!(out, "a {} {} {}", t + 1, h + 1, w).unwrap();
    }
    out
}

/// Parses a DIMACS coordinate file (`v id x y` lines, 1-based ids). Every
/// vertex announced in the `p aux sp co n` line must be present.
pub fn parse_dimacs_co(text: &str) -> Result<Coordinates> {
    let mut n: Option<usize> = None;
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut seen = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let mut fields = line.split_whitespace();
        match fields.next() {
            None | Some("c") => continue,
            Some("p") => {
                let kind: Vec<&str> = fields.by_ref().take(3).collect();
                if kind != ["aux", "sp", "co"] {
                    return Err(Error::parse(lineno, "expected 'p aux sp co <n>'"));
                }
                let count: usize = parse_field(fields.next(), lineno, "vertex count")?;
                n = Some(count);
                x = vec![0; count];
                y = vec![0; count];
                seen = vec![false; count];
            }
            Some("v") => {
                let count = n.ok_or_else(|| Error::parse(lineno, "vertex before problem line"))?;
                let id: u64 = parse_field(fields.next(), lineno, "vertex id")?;
                if id == 0 || id > count as u64 {
                    return Err(Error::parse(lineno, format!("vertex id {id} out of range 1..={count}")));
                }
                let v = (id - 1) as usize;
                x[v] = parse_field(fields.next(), lineno, "x coordinate")?;
                y[v] = parse_field(fields.next(), lineno, "y coordinate")?;
                seen[v] = true;
            }
            Some(other) => {
                return Err(Error::parse(lineno, format!("unknown line type '{other}'")));
            }
        }
    }
    if n.is_none() {
        return Err(Error::parse(1, "missing problem line"));
    }
    if let Some(v) = seen.iter().position(|&s| !s) {
        return Err(Error::MissingCoordinates(v as Vertex));
    }
    Ok(Coordinates { x, y })
}

pub fn write_dimacs_co(c: &Coordinates) -> String {
    let mut out = String::new();
    writeln!(out, "p aux sp co {}", c.len()).unwrap();
    for v in 0..c.len() {
        writeln!(out, "v {} {} {}", v + 1, c.x[v], c.y[v]).unwrap();
    }
    out
}

/// Result of restricting a graph to its largest strongly connected component.
#[derive(Debug, Clone)]
pub struct SccReduction {
    pub graph: Graph,
    pub coords: Option<Coordinates>,
    /// Original id of every vertex of the reduced graph.
    pub original_ids: Vec<Vertex>,
}

/// Component id per vertex (iterative Tarjan); returns the ids and the
/// component count.
pub fn strongly_connected_components(g: &Graph) -> (Vec<u32>, usize) {
    let n = g.num_vertices();
    const UNVISITED: u32 = u32::MAX;
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNVISITED; n];
    let mut stack: Vec<Vertex> = Vec::new();
    // (vertex, position in its out-arc list)
    let mut call: Vec<(Vertex, u32)> = Vec::new();
    let mut next_index = 0u32;
    let mut num_comps = 0usize;

    for root in 0..n as Vertex {
        if index[root as usize] != UNVISITED {
            continue;
        }
        call.push((root, g.first_out[root as usize]));
        index[root as usize] = next_index;
        lowlink[root as usize] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root as usize] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < g.first_out[v as usize + 1] {
                let w = g.head[*pos as usize];
                *pos += 1;
                if index[w as usize] == UNVISITED {
                    index[w as usize] = next_index;
                    lowlink[w as usize] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    call.push((w, g.first_out[w as usize]));
                } else if on_stack[w as usize] {
                    lowlink[v as usize] = lowlink[v as usize].min(index[w as usize]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    lowlink[parent as usize] = lowlink[parent as usize].min(lowlink[v as usize]);
                }
                if lowlink[v as usize] == index[v as usize] {
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w as usize] = false;
                        comp[w as usize] = num_comps as u32;
                        if w == v {
                            break;
                        }
                    }
                    num_comps += 1;
                }
            }
        }
    }
    (comp, num_comps)
}

/// Restricts the graph to its largest strongly connected component. Ties
/// between equally large components go to the one holding the smallest id.
pub fn largest_scc(g: &Graph, coords: Option<&Coordinates>) -> Result<SccReduction> {
    if g.num_vertices() == 0 {
        return Err(Error::EmptyGraph);
    }
    if let Some(c) = coords {
        if c.len() != g.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates for {} vertices",
                c.len(),
                g.num_vertices()
            )));
        }
    }
    let (comp, num_comps) = strongly_connected_components(g);
    let mut size = vec![0usize; num_comps];
    for &c in &comp {
        size[c as usize] += 1;
    }
    // first vertex in id order of a maximum component wins the tie
    let mut best = comp[0];
    for &c in &comp {
        if size[c as usize] > size[best as usize] {
            best = c;
        }
    }
    let keep: Vec<bool> = comp.iter().map(|&c| c == best).collect();
    let (graph, original_ids) = g.induced_subgraph(&keep);
    Ok(SccReduction {
        graph,
        coords: coords.map(|c| c.select(&original_ids)),
        original_ids,
    })
}

/// Reusable Dijkstra state. Labels of vertices touched by the previous run are
/// reset lazily when the next run starts.
#[derive(Debug, Clone)]
pub struct DijkstraContext {
    dist: Vec<Weight>,
    touched: Vec<Vertex>,
    queue: BinaryHeap<Reverse<(Weight, Vertex)>>,
}

impl DijkstraContext {
    pub fn new(num_vertices: usize) -> Self {
        DijkstraContext {
            dist: vec![INFINITY; num_vertices],
            touched: Vec::new(),
            queue: BinaryHeap::new(),
        }
    }

    pub fn start(&mut self, source: Vertex) {
        for v in self.touched.drain(..) {
            self.dist[v as usize] = INFINITY;
        }
        self.queue.clear();
        self.dist[source as usize] = 0;
        self.touched.push(source);
        self.queue.push(Reverse((0, source)));
    }

    /// Settles the next vertex. Equal distances are settled in increasing id order.
    pub fn settle_next(&mut self, g: &Graph) -> Option<(Vertex, Weight)> {
        while let Some(Reverse((d, v))) = self.queue.pop() {
            if d > self.dist[v as usize] {
                continue;
            }
            for (w, len) in g.out_arcs(v) {
                let nd = d.saturating_add(len);
                if nd < self.dist[w as usize] {
                    if self.dist[w as usize] == INFINITY {
                        self.touched.push(w);
                    }
                    self.dist[w as usize] = nd;
                    self.queue.push(Reverse((nd, w)));
                }
            }
            return Some((v, d));
        }
        None
    }

    pub fn distance(&self, v: Vertex) -> Weight {
        self.dist[v as usize]
    }

    pub fn distances(&self) -> &[Weight] {
        &self.dist
    }
}

/// Exact distances from `source` to every vertex; unreachable vertices get
/// [`INFINITY`].
pub fn dijkstra(g: &Graph, source: Vertex) -> Vec<Weight> {
    dijkstra_with_stop(g, source, |_, _| false)
}

/// Dijkstra that stops right after settling a vertex for which `stop` returns
/// true. Labels of settled vertices are exact, the others are upper bounds.
pub fn dijkstra_with_stop(g: &Graph, source: Vertex, mut stop: impl FnMut(Vertex, Weight) -> bool) -> Vec<Weight> {
    let mut ctx = DijkstraContext::new(g.num_vertices());
    ctx.start(source);
    while let Some((v, d)) = ctx.settle_next(g) {
        if stop(v, d) {
            break;
        }
    }
    ctx.dist
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Bidirected path 0-1-2-3-4 with unit lengths.
    pub fn p5() -> Graph {
        Graph::from_edges(5, (0..4).map(|i| (i, i + 1, 1))).unwrap()
    }

    pub fn p5_coords() -> Coordinates {
        Coordinates::new((0..5).collect(), vec![0; 5])
    }

    /// 3x3 grid, row-major ids, bidirected unit lengths.
    pub fn grid3() -> Graph {
        let mut edges = Vec::new();
        for r in 0..3 {
            for c in 0..3 {
                let v = r * 3 + c;
                if c < 2 {
                    edges.push((v, v + 1, 1));
                }
                if r < 2 {
                    edges.push((v, v + 3, 1));
                }
            }
        }
        Graph::from_edges(9, edges).unwrap()
    }

    pub fn grid3_coords() -> Coordinates {
        Coordinates::new((0..9).map(|v| v % 3).collect(), (0..9).map(|v| v / 3).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::synth;
    use proptest::prelude::*;

    fn bellman_ford(g: &Graph, s: Vertex) -> Vec<u64> {
        let n = g.num_vertices();
        let mut dist = vec![u64::MAX; n];
        dist[s as usize] = 0;
        for _ in 0..n {
            let mut changed = false;
            for (t, h, w) in g.arcs() {
                if dist[t as usize] != u64::MAX && dist[t as usize] + (w as u64) < dist[h as usize] {
                    dist[h as usize] = dist[t as usize] + w as u64;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        dist
    }

    #[test]
    fn parses_single_arc() {
        let g = parse_dimacs_gr("p sp 2 1\na 1 2 5").unwrap();
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.arcs().collect::<Vec<_>>(), vec![(0, 1, 5)]);
    }

    #[test]
    fn parallel_arcs_keep_minimum() {
        let g = parse_dimacs_gr("p sp 2 2\na 1 2 5\na 1 2 3").unwrap();
        assert_eq!(g.arcs().collect::<Vec<_>>(), vec![(0, 1, 3)]);
    }

    #[test]
    fn comments_are_ignored() {
        let g = parse_dimacs_gr("c hello\np sp 3 1\nc mid\na 3 1 7\n").unwrap();
        assert_eq!(g.arcs().collect::<Vec<_>>(), vec![(2, 0, 7)]);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let cases = [
            ("p sp x 1\n", 1),
            ("p sp 2 1\na 1 3 5\n", 2),
            ("p sp 2 1\na 1 2 -5\n", 2),
            ("p sp 2 2\na 1 2 5\n", 2),
            ("a 1 2 5\n", 1),
            ("p sp 2 1\nq\n", 2),
        ];
        for (text, line) in cases {
            match parse_dimacs_gr(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn gr_round_trip() {
        for g in [p5(), grid3()] {
            assert_eq!(parse_dimacs_gr(&write_dimacs_gr(&g)).unwrap(), g);
        }
    }

    #[test]
    fn parses_coordinates() {
        let c = parse_dimacs_co("p aux sp co 1\nv 1 100 200").unwrap();
        assert_eq!(c.get(0), (100, 200));
    }

    #[test]
    fn missing_coordinates_is_an_error() {
        let err = parse_dimacs_co("p aux sp co 3\nv 1 0 0\nv 3 1 1\n").unwrap_err();
        assert!(matches!(err, Error::MissingCoordinates(1)));
        assert!(err.to_string().contains("missing coordinates"));
    }

    #[test]
    fn co_round_trip() {
        let c = grid3_coords();
        assert_eq!(parse_dimacs_co(&write_dimacs_co(&c)).unwrap(), c);
    }

    #[test]
    fn scc_of_strongly_connected_graph_is_identity() {
        let r = largest_scc(&p5(), None).unwrap();
        assert_eq!(r.graph, p5());
        assert_eq!(r.original_ids, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn scc_drops_isolated_and_one_way_vertices() {
        let isolated = Graph::from_arcs(6, p5().arcs()).unwrap();
        let r = largest_scc(&isolated, None).unwrap();
        assert_eq!(r.graph, p5());
        assert_eq!(r.original_ids, vec![0, 1, 2, 3, 4]);

        let one_way = Graph::from_arcs(6, p5().arcs().chain([(4, 5, 1)])).unwrap();
        let r = largest_scc(&one_way, Some(&Coordinates::new(vec![0; 6], vec![1; 6]))).unwrap();
        assert_eq!(r.graph, p5());
        assert_eq!(r.coords.unwrap().len(), 5);
    }

    #[test]
    fn scc_rejects_empty_graph() {
        let g = Graph::from_arcs(0, []).unwrap();
        assert!(matches!(largest_scc(&g, None), Err(Error::EmptyGraph)));
    }

    /// Mutual reachability by repeated BFS, for small graphs.
    fn brute_force_scc_sizes(g: &Graph) -> Vec<usize> {
        let n = g.num_vertices();
        let reach: Vec<Vec<bool>> = (0..n as Vertex)
            .map(|s| dijkstra(g, s).iter().map(|&d| d != INFINITY).collect())
            .collect();
        (0..n)
            .map(|v| (0..n).filter(|&w| reach[v][w] && reach[w][v]).count())
            .collect()
    }

    #[test]
    fn scc_matches_reachability_oracle() {
        for seed in 0..20 {
            let g = synth::random_digraph(40, 70, seed);
            let sizes = brute_force_scc_sizes(&g);
            let largest = *sizes.iter().max().unwrap();
            let r = largest_scc(&g, None).unwrap();
            assert_eq!(r.graph.num_vertices(), largest);
            // reduced graph is strongly connected
            let fwd = dijkstra(&r.graph, 0);
            let bwd = dijkstra(&r.graph.reversed(), 0);
            assert!(fwd.iter().chain(&bwd).all(|&d| d != INFINITY));
        }
    }

    #[test]
    fn dijkstra_on_fixtures() {
        assert_eq!(dijkstra(&p5(), 0), vec![0, 1, 2, 3, 4]);
        assert_eq!(dijkstra(&grid3(), 0)[8], 4);
    }

    #[test]
    fn dijkstra_stop_settles_prefix_exactly() {
        let g = grid3();
        let full = dijkstra(&g, 0);
        let mut settled = Vec::new();
        let partial = dijkstra_with_stop(&g, 0, |v, _| {
            settled.push(v);
            v == 4
        });
        for v in settled {
            assert_eq!(partial[v as usize], full[v as usize]);
        }
    }

    #[test]
    fn dijkstra_matches_bellman_ford() {
        for seed in 0..10 {
            let g = synth::random_digraph(50, 150, seed);
            for s in [0, 17, 49] {
                let d = dijkstra(&g, s);
                let bf = bellman_ford(&g, s);
                for v in 0..50 {
                    let expected = if bf[v] == u64::MAX { INFINITY } else { bf[v] as Weight };
                    assert_eq!(d[v], expected);
                }
            }
        }
    }

    #[test]
    fn permute_identity_and_reversal() {
        let g = p5();
        assert_eq!(g.permute(&[0, 1, 2, 3, 4]).unwrap(), g);
        // reversal of a symmetric path is the same path
        assert_eq!(g.permute(&[4, 3, 2, 1, 0]).unwrap(), g);
        let one_way = Graph::from_arcs(3, [(0, 1, 2), (1, 2, 3)]).unwrap();
        let rev = one_way.permute(&[2, 1, 0]).unwrap();
        assert_eq!(rev.arcs().collect::<Vec<_>>(), vec![(1, 0, 3), (2, 1, 2)]);
    }

    #[test]
    fn permute_rejects_non_permutations() {
        assert!(matches!(p5().permute(&[0, 1, 2, 3, 3]), Err(Error::NotAPermutation(_))));
        assert!(matches!(p5().permute(&[0, 1, 2]), Err(Error::NotAPermutation(_))));
        assert!(matches!(p5().permute(&[0, 1, 2, 3, 5]), Err(Error::NotAPermutation(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn distances_are_permutation_invariant(seed in 0u64..1000, shuffle in 0u64..1000) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let g = synth::random_digraph(30, 80, seed);
            let mut rank: Vec<Vertex> = (0..30).collect();
            rank.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(shuffle));
            let p = g.permute(&rank).unwrap();
            for s in 0..30u32 {
                let d = dijkstra(&g, s);
                let pd = dijkstra(&p, rank[s as usize]);
                for t in 0..30usize {
                    prop_assert_eq!(d[t], pd[rank[t] as usize]);
                }
            }
        }

        #[test]
        fn gr_parse_inverts_write(seed in 0u64..1000) {
            let g = synth::random_digraph(20, 60, seed);
            prop_assert_eq!(parse_dimacs_gr(&write_dimacs_gr(&g)).unwrap(), g);
        }
    }
}
