use std::path::{Path, PathBuf};
use std::time::Instant;

use cch_knn::io::{read_cch, write_cch, write_order, write_tree, CchFile};
use cch_knn::network::rank_ordered_metric;
use cch_knn::partition::PartitionConfig;
use cch_knn::{Network, Vertex};

use crate::error::{CliError, CliResult};
use crate::load::{load_coords, load_graph, read_bytes, write_bytes};

/// Output paths `PREFIX.cch`, `PREFIX.sdt` and `PREFIX.order`.
pub fn output_paths(prefix: &Path) -> [PathBuf; 3] {
    ["cch", "sdt", "order"].map(|ext| {
        let mut p = prefix.as_os_str().to_owned();
        p.push(".");
        p.push(ext);
        PathBuf::from(p)
    })
}

/// Rank of every kept input vertex, the kept vertices taken in increasing
/// input id.
fn order_of_kept(input_ids: &[Vertex]) -> Vec<Vertex> {
    let mut by_input: Vec<(Vertex, Vertex)> = input_ids.iter().enumerate().map(|(r, &v)| (v, r as Vertex)).collect();
    by_input.sort_unstable();
    by_input.into_iter().map(|(_, r)| r).collect()
}

pub fn preprocess(graph: &Path, coords: &Path, prefix: &Path, config: PartitionConfig) -> CliResult<()> {
    if config.leaf_threshold == 0 || !(config.balance > 0.0 && config.balance <= 0.5) {
        return Err(CliError::Usage(
            "need --leaf-threshold >= 1 and --balance in (0, 0.5]".into(),
        ));
    }
    let g = load_graph(graph)?;
    let c = load_coords(coords)?;
    if c.len() != g.num_vertices() {
        return Err(CliError::in_file(
            coords,
            format!("{} coordinates for a graph of {} vertices", c.len(), g.num_vertices()),
        ));
    }
    let start = Instant::now();
    let net = Network::build(&g, &c, config)?;
    let elapsed = start.elapsed();
    let rank = order_of_kept(&net.input_ids);
    let file = CchFile {
        rank: rank.clone(),
        cch: net.cch.clone(),
        input_ids: net.input_ids.clone(),
    };
    let [cch_path, tree_path, order_path] = output_paths(prefix);
    write_bytes(&cch_path, &write_cch(&file))?;
    write_bytes(&tree_path, &write_tree(&net.tree))?;
    write_bytes(&order_path, &write_order(&rank))?;
    eprintln!(
        "input_vertices={} input_arcs={} kept_vertices={} hierarchy_edges={} tree_nodes={} preprocess_ms={:.1}",
        g.num_vertices(),
        g.num_arcs(),
        net.num_vertices(),
        net.cch.graph.num_edges(),
        net.tree.num_nodes(),
        elapsed.as_secs_f64() * 1e3
    );
    Ok(())
}

pub fn customize(cch: &Path, graph: &Path, out: &Path) -> CliResult<()> {
    let mut file = read_cch(&read_bytes(cch)?).map_err(|e| CliError::in_file(cch, e))?;
    let g = load_graph(graph)?;
    let metric = rank_ordered_metric(&g, &file.input_ids).map_err(|e| CliError::in_file(graph, e))?;
    let start = Instant::now();
    file.cch
        .try_customize(&metric)
        .map_err(|e| CliError::in_file(graph, e))?;
    let elapsed = start.elapsed();
    write_bytes(out, &write_cch(&file))?;
    eprintln!("customize_ms={:.1}", elapsed.as_secs_f64() * 1e3);
    Ok(())
}
