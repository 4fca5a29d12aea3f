//! The whole preprocessing pipeline in one owned value.

use crate::cch::Cch;
use crate::demand::DemandNetwork;
use crate::error::{Error, Result};
use crate::graph::{largest_scc, Coordinates, Graph, Vertex, INVALID_VERTEX};
use crate::knn::{SubgraphBoundaries, TreeView};
use crate::partition::{build_sep_decomposition, PartitionConfig, SepDecompTree};

/// A customized hierarchy with its decomposition. All vertex ids are ranks
/// unless a method says otherwise.
#[derive(Debug, Clone)]
pub struct Network {
    /// Rank-ordered graph carrying the current metric.
    pub graph: Graph,
    pub coords: Coordinates,
    pub tree: SepDecompTree,
    pub cch: Cch,
    pub boundaries: SubgraphBoundaries,
    /// Input id of every rank-ordered vertex.
    pub input_ids: Vec<Vertex>,
    input_to_rank: Vec<Vertex>,
}

impl Network {
    /// Restricts `g` to its largest strongly connected component, dissects,
    /// contracts and customizes it.
    pub fn build(g: &Graph, coords: &Coordinates, config: PartitionConfig) -> Result<Self> {
        let scc = largest_scc(g, Some(coords))?;
        let dec = build_sep_decomposition(&scc.graph, scc.coords.as_ref().unwrap(), config)?;
        let input_ids: Vec<Vertex> = dec
            .order
            .vertices()
            .iter()
            .map(|&v| scc.original_ids[v as usize])
            .collect();
        let cch = Cch::customized(&dec.graph);
        Ok(Self::from_parts(
            dec.graph,
            dec.coords,
            dec.tree,
            cch,
            input_ids,
            g.num_vertices(),
        ))
    }

    pub fn from_parts(
        graph: Graph,
        coords: Coordinates,
        tree: SepDecompTree,
        cch: Cch,
        input_ids: Vec<Vertex>,
        num_input_vertices: usize,
    ) -> Self {
        let boundaries = SubgraphBoundaries::new(&cch, &tree);
        let input_to_rank = input_to_rank(&input_ids, num_input_vertices);
        Network {
            graph,
            coords,
            tree,
            cch,
            boundaries,
            input_ids,
            input_to_rank,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.graph.num_vertices()
    }

    pub fn view(&self) -> TreeView<'_> {
        TreeView {
            cch: &self.cch,
            tree: &self.tree,
            boundaries: &self.boundaries,
        }
    }

    pub fn demand_network(&self) -> DemandNetwork<'_> {
        DemandNetwork {
            graph: &self.graph,
            view: self.view(),
        }
    }

    /// Rank of an input vertex, `None` if it was dropped with its component.
    pub fn rank_of_input(&self, input: Vertex) -> Option<Vertex> {
        self.input_to_rank
            .get(input as usize)
            .copied()
            .filter(|&r| r != INVALID_VERTEX)
    }

    /// Replaces the metric. `g` uses input ids, as in the original file.
    pub fn customize_input(&mut self, g: &Graph) -> Result<()> {
        let metric = rank_ordered_metric(g, &self.input_ids)?;
        self.cch.try_customize(&metric)?;
        self.boundaries = SubgraphBoundaries::new(&self.cch, &self.tree);
        self.graph = metric;
        Ok(())
    }

    /// Replaces the metric with a rank-ordered graph of the same topology.
    pub fn customize(&mut self, metric: Graph) {
        self.cch.customize(&metric);
        self.boundaries = SubgraphBoundaries::new(&self.cch, &self.tree);
        self.graph = metric;
    }
}

pub fn input_to_rank(input_ids: &[Vertex], num_input_vertices: usize) -> Vec<Vertex> {
    let mut map = vec![INVALID_VERTEX; num_input_vertices];
    for (r, &v) in input_ids.iter().enumerate() {
        if (v as usize) < num_input_vertices {
            map[v as usize] = r as Vertex;
        }
    }
    map
}

/// Restricts an input-id graph to the vertices in `input_ids` and renumbers
/// vertex `input_ids[r]` as `r`.
pub fn rank_ordered_metric(g: &Graph, input_ids: &[Vertex]) -> Result<Graph> {
    if let Some(&v) = input_ids.iter().find(|&&v| v as usize >= g.num_vertices()) {
        return Err(Error::VertexOutOfRange {
            vertex: v as u64,
            num_vertices: g.num_vertices(),
        });
    }
    let map = input_to_rank(input_ids, g.num_vertices());
    let arcs = g.arcs().filter_map(|(a, b, w)| {
        let (ra, rb) = (map[a as usize], map[b as usize]);
        (ra != INVALID_VERTEX && rb != INVALID_VERTEX).then_some((ra, rb, w))
    });
    Graph::from_arcs(input_ids.len(), arcs.collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cch::{elim_tree_query, SearchContext};
    use crate::graph::dijkstra;
    use crate::synth;

    #[test]
    fn build_keeps_distances_of_the_connected_part() {
        let (g, c) = synth::road_like_grid(20, 20, 0.8, 3);
        let net = Network::build(&g, &c, PartitionConfig::default()).unwrap();
        assert_eq!(net.num_vertices(), g.num_vertices());
        let mut ctx = SearchContext::new(net.num_vertices());
        for s in (0..g.num_vertices() as Vertex).step_by(37) {
            let oracle = dijkstra(&g, s);
            let rs = net.rank_of_input(s).unwrap();
            for t in 0..g.num_vertices() as Vertex {
                let rt = net.rank_of_input(t).unwrap();
                assert_eq!(elim_tree_query(&mut ctx, &net.cch, rs, rt), oracle[t as usize]);
            }
        }
    }

    #[test]
    fn dropped_vertices_have_no_rank() {
        let g = Graph::from_arcs(4, [(0, 1, 1), (1, 0, 1), (1, 2, 1)]).unwrap();
        let c = Coordinates::new(vec![0, 1, 2, 3], vec![0; 4]);
        let net = Network::build(&g, &c, PartitionConfig::default()).unwrap();
        assert_eq!(net.num_vertices(), 2);
        assert!(net.rank_of_input(2).is_none());
        assert!(net.rank_of_input(3).is_none());
        assert!(net.rank_of_input(9).is_none());
        let mut ids = net.input_ids.clone();
        ids.sort_unstable();
        assert_eq!(ids, vec![0, 1]);
    }

    #[test]
    fn customizing_from_input_ids_matches_rebuild() {
        let (g, c) = synth::random_geometric(150, 8);
        let mut net = Network::build(&g, &c, PartitionConfig::default()).unwrap();
        let tripled = g.map_weights(|_, _, w| 3 * w);
        net.customize_input(&tripled).unwrap();
        let mut ctx = SearchContext::new(net.num_vertices());
        let oracle = dijkstra(&tripled, 0);
        let r0 = net.rank_of_input(0).unwrap();
        for t in 0..g.num_vertices() as Vertex {
            assert_eq!(
                elim_tree_query(&mut ctx, &net.cch, r0, net.rank_of_input(t).unwrap()),
                oracle[t as usize]
            );
        }
    }
}
