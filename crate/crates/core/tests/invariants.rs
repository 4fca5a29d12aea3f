use cch_knn::baselines::{bcch_query, bcch_select, ine_knn, BcchContext, BcchOptions};
use cch_knn::cch::{elim_tree_query, SearchContext};
use cch_knn::demand::{crad_trip, drad_trip, mv_hypergeom, CradConfig, CradContext, DemandModel};
use cch_knn::graph::{dijkstra, DijkstraContext};
use cch_knn::io::{read_cch, read_tree, write_cch, write_tree, CchFile};
use cch_knn::knn::{knn_query, DistMode, KnnConfig, KnnContext, TargetIndex};
use cch_knn::partition::{build_sep_decomposition, PartitionConfig};
use cch_knn::{synth, Network, Vertex, Weight};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn network(n: usize, seed: u64, leaf: usize) -> Network {
    let (g, c) = synth::random_geometric(n, seed);
    Network::build(
        &g,
        &c,
        PartitionConfig {
            leaf_threshold: leaf,
            balance: 0.3,
        },
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decomposition_is_valid(n in 20usize..400, seed in 0u64..1000, leaf in 1usize..40) {
        let (g, c) = synth::random_geometric(n, seed);
        let dec = build_sep_decomposition(&g, &c, PartitionConfig { leaf_threshold: leaf, balance: 0.3 }).unwrap();
        prop_assert!(dec.tree.check_invariants().is_ok());
        prop_assert_eq!(dec.tree.num_vertices(), g.num_vertices());
        let mut seen = vec![false; g.num_vertices()];
        for &r in dec.order.ranks() {
            prop_assert!(!std::mem::replace(&mut seen[r as usize], true));
        }
        prop_assert_eq!(dec.graph.num_arcs(), g.num_arcs());
        prop_assert_eq!(read_tree(&write_tree(&dec.tree)).unwrap(), dec.tree);
    }

    #[test]
    fn queries_are_exact(n in 20usize..400, seed in 0u64..1000, s in any::<u32>(), t in any::<u32>()) {
        let net = network(n, seed, 8);
        let n = net.num_vertices() as Vertex;
        let (s, t) = (s % n, t % n);
        let mut ctx = SearchContext::new(n as usize);
        prop_assert_eq!(elim_tree_query(&mut ctx, &net.cch, s, t), dijkstra(&net.graph, s)[t as usize]);
        prop_assert!(ctx.is_clean());
    }

    #[test]
    fn knn_strategies_agree(
        n in 20usize..300,
        seed in 0u64..1000,
        raw_targets in proptest::collection::vec(any::<u32>(), 1..40),
        s in any::<u32>(),
        k in 1usize..10,
    ) {
        let net = network(n, seed, 4);
        let n = net.num_vertices();
        let targets: Vec<Vertex> = raw_targets.iter().map(|&t| t % n as u32).collect();
        let s = s % n as u32;
        let index = TargetIndex::build(&targets, n).unwrap();
        let mut kctx = KnnContext::new(n);
        let lower = knn_query(&mut kctx, net.view(), &index, s, k, KnnConfig::default()).unwrap();
        let exact = knn_query(&mut kctx, net.view(), &index, s, k, KnnConfig { dist_mode: DistMode::Exact, ..KnnConfig::default() }).unwrap();
        let buckets = bcch_select(&net.cch, &targets, BcchOptions { stall_on_demand: true }).unwrap();
        let bucket = bcch_query(&mut BcchContext::new(n), &net.cch, &buckets, s, k).unwrap();
        let ine = ine_knn(&mut DijkstraContext::new(n), &net.graph, &index, s, k).unwrap();

        let dist = dijkstra(&net.graph, s);
        let mut expected: Vec<Weight> = index.targets().iter().map(|&t| dist[t as usize]).collect();
        expected.sort_unstable();
        expected.truncate(k);
        prop_assert_eq!(lower.distances(), expected.clone());
        prop_assert_eq!(exact.distances(), expected.clone());
        prop_assert_eq!(bucket.distances(), expected.clone());
        prop_assert_eq!(ine.distances(), expected);
        for nb in &lower.neighbors {
            prop_assert_eq!(dist[nb.target as usize], nb.distance);
        }
    }

    #[test]
    fn trips_end_at_opportunities(
        n in 20usize..200,
        seed in 0u64..1000,
        pop in proptest::collection::vec(0u32..4, 200),
        origin in any::<u32>(),
        sel_raw in any::<u64>(),
        rng_seed in any::<u64>(),
    ) {
        let net = network(n, seed, 4);
        let n = net.num_vertices();
        let mut population = pop[..n].to_vec();
        population[0] += 1;
        let model = DemandModel::new(population.clone(), 0.3).unwrap();
        let origin = origin % n as u32;
        let sel = 1 + sel_raw % model.total();
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let dist = dijkstra(&net.graph, origin);

        let mut ctx = CradContext::new(n);
        let trip = crad_trip(&mut ctx, net.view(), &model, origin, sel, CradConfig::default(), &mut rng).unwrap();
        prop_assert!(population[trip.destination as usize] > 0);
        prop_assert_eq!(trip.distance, dist[trip.destination as usize]);
        prop_assert!(ctx.search.is_clean());

        let trip = drad_trip(&mut DijkstraContext::new(n), &net.graph, &model, origin, sel, &mut rng).unwrap();
        prop_assert!(population[trip.destination as usize] > 0);
        prop_assert_eq!(trip.distance, dist[trip.destination as usize]);
    }

    #[test]
    fn multivariate_draws_conserve_counts(
        counts in proptest::collection::vec(0u64..50, 1..8),
        frac in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let total: u64 = counts.iter().sum();
        let draws = (total as f64 * frac) as u64;
        let x = mv_hypergeom(draws, &counts, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(x.iter().sum::<u64>(), draws);
        prop_assert!(x.iter().zip(&counts).all(|(a, b)| a <= b));
    }
}

#[test]
fn hierarchy_file_round_trip_preserves_queries() {
    let net = network(300, 3, 8);
    let file = CchFile {
        rank: (0..net.num_vertices() as Vertex).collect(),
        cch: net.cch.clone(),
        input_ids: net.input_ids.clone(),
    };
    let back = read_cch(&write_cch(&file)).unwrap();
    let mut ctx = SearchContext::new(net.num_vertices());
    for s in (0..net.num_vertices() as Vertex).step_by(29) {
        let oracle = dijkstra(&net.graph, s);
        for t in 0..net.num_vertices() as Vertex {
            assert_eq!(elim_tree_query(&mut ctx, &back.cch, s, t), oracle[t as usize]);
        }
    }
}
