//! Synthetic graphs for tests, benchmarks and examples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{largest_scc, Coordinates, Graph, Vertex, Weight};

/// Uniformly random arcs with lengths in `1..=100`; not necessarily connected.
pub fn random_digraph(num_vertices: usize, num_arcs: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = num_vertices as Vertex;
    let arcs: Vec<_> = (0..num_arcs)
        .map(|_| {
            (
                rng.random_range(0..n),
                rng.random_range(0..n),
                rng.random_range(1..=100),
            )
        })
        .collect();
    Graph::from_arcs(num_vertices, arcs).unwrap()
}

/// `width x height` grid with row-major ids, bidirected edges of the given length.
pub fn grid(width: usize, height: usize, length: Weight) -> (Graph, Coordinates) {
    let mut edges = Vec::new();
    for r in 0..height {
        for c in 0..width {
            let v = (r * width + c) as Vertex;
            if c + 1 < width {
                edges.push((v, v + 1, length));
            }
            if r + 1 < height {
                edges.push((v, v + width as Vertex, length));
            }
        }
    }
    let g = Graph::from_edges(width * height, edges).unwrap();
    let coords = Coordinates::new(
        (0..width * height).map(|v| (v % width) as i32).collect(),
        (0..width * height).map(|v| (v / width) as i32).collect(),
    );
    (g, coords)
}

/// Random geometric graph: points in a square, each joined to its nearest
/// neighbors with travel times proportional to distance; a few roads are
/// one-way. Restricted to the largest strongly connected component.
pub fn random_geometric(num_vertices: usize, seed: u64) -> (Graph, Coordinates) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(i32, i32)> = (0..num_vertices)
        .map(|_| (rng.random_range(0..1_000_000), rng.random_range(0..1_000_000)))
        .collect();
    let dist = |a: (i32, i32), b: (i32, i32)| {
        let dx = (a.0 - b.0) as f64;
        let dy = (a.1 - b.1) as f64;
        (dx * dx + dy * dy).sqrt()
    };
    let mut arcs = Vec::new();
    let mut by_dist: Vec<(f64, usize)> = Vec::with_capacity(num_vertices);
    for v in 0..num_vertices {
        by_dist.clear();
        by_dist.extend((0..num_vertices).filter(|&w| w != v).map(|w| (dist(pts[v], pts[w]), w)));
        let degree = 3.min(by_dist.len());
        if degree == 0 {
            continue;
        }
        by_dist.select_nth_unstable_by(degree - 1, |a, b| a.partial_cmp(b).unwrap());
        for &(d, w) in &by_dist[..degree] {
            let len = (d / 1000.0) as Weight + rng.random_range(1..=10);
            arcs.push((v as Vertex, w as Vertex, len));
            if rng.random::<f64>() >= 0.05 {
                arcs.push((w as Vertex, v as Vertex, len));
            }
        }
    }
    let g = Graph::from_arcs(num_vertices, arcs).unwrap();
    let coords = Coordinates::new(pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect());
    let r = largest_scc(&g, Some(&coords)).unwrap();
    (r.graph, r.coords.unwrap())
}

/// Road-like network: a grid with jittered intersections where each street
/// survives with probability `keep`, random travel times and a few one-way
/// streets. Restricted to the largest strongly connected component.
pub fn road_like_grid(width: usize, height: usize, keep: f64, seed: u64) -> (Graph, Coordinates) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = width * height;
    let spacing = 1000;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for v in 0..n {
        x.push((v % width) as i32 * spacing + rng.random_range(-300..=300));
        y.push((v / width) as i32 * spacing + rng.random_range(-300..=300));
    }
    let mut arcs = Vec::new();
    for r in 0..height {
        for c in 0..width {
            let v = (r * width + c) as Vertex;
            let mut neighbors = Vec::with_capacity(2);
            if c + 1 < width {
                neighbors.push(v + 1);
            }
            if r + 1 < height {
                neighbors.push(v + width as Vertex);
            }
            for w in neighbors {
                if rng.random::<f64>() >= keep {
                    continue;
                }
                let len = rng.random_range(10..=100);
                match rng.random_range(0..40) {
                    0 => arcs.push((v, w, len)),
                    1 => arcs.push((w, v, len)),
                    _ => {
                        arcs.push((v, w, len));
                        arcs.push((w, v, len));
                    }
                }
            }
        }
    }
    let g = Graph::from_arcs(n, arcs).unwrap();
    let coords = Coordinates::new(x, y);
    let r = largest_scc(&g, Some(&coords)).unwrap();
    (r.graph, r.coords.unwrap())
}

/// Road network with the degree structure of real data: a jittered junction
/// grid where each street survives with probability `keep` and is drawn as a
/// chain of `0..=2 * mean_chain` degree-two vertices. Every tenth row and
/// column is an arterial with a third of the travel time. Restricted to the
/// largest strongly connected component.
pub fn road_network(width: usize, height: usize, keep: f64, mean_chain: usize, seed: u64) -> (Graph, Coordinates) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spacing = 1000;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for v in 0..width * height {
        x.push((v % width) as i32 * spacing + rng.random_range(-250..=250));
        y.push((v / width) as i32 * spacing + rng.random_range(-250..=250));
    }
    let mut arcs = Vec::new();
    for r in 0..height {
        for c in 0..width {
            let v = (r * width + c) as Vertex;
            let mut streets = Vec::with_capacity(2);
            if c + 1 < width {
                streets.push((v + 1, r % 10 == 0));
            }
            if r + 1 < height {
                streets.push((v + width as Vertex, c % 10 == 0));
            }
            for (w, arterial) in streets {
                if rng.random::<f64>() >= keep {
                    continue;
                }
                let interior = rng.random_range(0..=2 * mean_chain);
                let (ax, ay) = (x[v as usize], y[v as usize]);
                let (bx, by) = (x[w as usize], y[w as usize]);
                let mut chain = vec![v];
                for i in 1..=interior {
                    let t = i as f64 / (interior + 1) as f64;
                    x.push(ax + ((bx - ax) as f64 * t) as i32 + rng.random_range(-40..=40));
                    y.push(ay + ((by - ay) as f64 * t) as i32 + rng.random_range(-40..=40));
                    chain.push((x.len() - 1) as Vertex);
                }
                chain.push(w);
                let one_way = rng.random_range(0..40);
                for pair in chain.windows(2) {
                    let (a, b) = (pair[0], pair[1]);
                    let mut len = rng.random_range(20..=200) / (interior as Weight + 1) + 1;
                    if arterial {
                        len = len.div_ceil(3);
                    }
                    if one_way != 1 {
                        arcs.push((a, b, len));
                    }
                    if one_way != 0 {
                        arcs.push((b, a, len));
                    }
                }
            }
        }
    }
    let g = Graph::from_arcs(x.len(), arcs).unwrap();
    let coords = Coordinates::new(x, y);
    let r = largest_scc(&g, Some(&coords)).unwrap();
    (r.graph, r.coords.unwrap())
}
