//! Reading and writing the files the commands share, with errors naming the
//! offending file.

use std::fs;
use std::path::Path;

use cch_knn::graph::{parse_dimacs_co, parse_dimacs_gr};
use cch_knn::io::{read_cch, read_tree, CchFile};
use cch_knn::knn::{SubgraphBoundaries, TreeView};
use cch_knn::network::{input_to_rank, rank_ordered_metric};
use cch_knn::partition::SepDecompTree;
use cch_knn::{Coordinates, Graph, Vertex};

use crate::error::{CliError, CliResult};

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::in_file(path, e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::in_file(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::in_file(path, e))
}

pub fn load_graph(path: &Path) -> CliResult<Graph> {
    parse_dimacs_gr(&read_text(path)?).map_err(|e| CliError::in_file(path, e))
}

pub fn load_coords(path: &Path) -> CliResult<Coordinates> {
    parse_dimacs_co(&read_text(path)?).map_err(|e| CliError::in_file(path, e))
}

/// A customized hierarchy with its separator decomposition.
pub struct Hierarchy {
    pub file: CchFile,
    pub tree: SepDecompTree,
    pub boundaries: SubgraphBoundaries,
    input_to_rank: Vec<Vertex>,
}

impl Hierarchy {
    pub fn load(cch_path: &Path, tree_path: &Path) -> CliResult<Self> {
        let file = read_cch(&read_bytes(cch_path)?).map_err(|e| CliError::in_file(cch_path, e))?;
        let tree = read_tree(&read_bytes(tree_path)?).map_err(|e| CliError::in_file(tree_path, e))?;
        let boundaries = SubgraphBoundaries::try_new(&file.cch, &tree).map_err(|e| CliError::in_file(tree_path, e))?;
        let num_input = file.input_ids.iter().map(|&v| v as usize + 1).max().unwrap_or(0);
        let input_to_rank = input_to_rank(&file.input_ids, num_input);
        Ok(Hierarchy {
            file,
            tree,
            boundaries,
            input_to_rank,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.file.cch.num_vertices()
    }

    pub fn view(&self) -> TreeView<'_> {
        TreeView {
            cch: &self.file.cch,
            tree: &self.tree,
            boundaries: &self.boundaries,
        }
    }

    /// Rank of a 0-based input vertex id.
    pub fn rank(&self, input: u64, what: &str) -> CliResult<Vertex> {
        self.input_to_rank
            .get(input as usize)
            .copied()
            .filter(|&r| r != cch_knn::INVALID_VERTEX)
            .ok_or_else(|| {
                CliError::Input(format!(
                    "{what} {input} is not a vertex of the hierarchy (unknown id or outside the largest strongly connected component)"
                ))
            })
    }

    pub fn input_id(&self, rank: Vertex) -> Vertex {
        self.file.input_ids[rank as usize]
    }

    /// The graph in `path`, renumbered by rank.
    pub fn rank_graph(&self, path: &Path) -> CliResult<Graph> {
        let g = load_graph(path)?;
        rank_ordered_metric(&g, &self.file.input_ids).map_err(|e| CliError::in_file(path, e))
    }
}
