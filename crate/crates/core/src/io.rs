//! Binary files for decomposition trees, orders and hierarchies, plus the
//! small text formats for targets and population. All binary integers are
//! 32-bit little-endian.

use crate::cch::{build_elimination_tree, Cch, UpwardGraph};
use crate::error::{Error, Result};
use crate::graph::{check_permutation, Vertex, INVALID_VERTEX};
use crate::partition::{SepDecompNode, SepDecompTree};

const TREE_MAGIC: &[u8; 4] = b"SDT1";
const CCH_MAGIC: &[u8; 4] = b"CCH1";

fn push_u32s(out: &mut Vec<u8>, values: &[u32]) {
    out.reserve(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], magic: &[u8; 4]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != magic {
            return Err(Error::Format(format!(
                "expected magic {}",
                String::from_utf8_lossy(magic)
            )));
        }
        Ok(Reader { bytes, pos: 4 })
    }

    fn u32(&mut self) -> Result<u32> {
        let end = self.pos + 4;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(u32::from_le_bytes(chunk.try_into().unwrap()))
    }

    fn u32s(&mut self, count: usize) -> Result<Vec<u32>> {
        if self.bytes.len().saturating_sub(self.pos) / 4 < count {
            return Err(Error::Format(format!(
                "truncated: {count} values expected at byte {}",
                self.pos
            )));
        }
        (0..count).map(|_| self.u32()).collect()
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}

/// `SDT1`, node count, then per node: parent, first child, child count,
/// first vertex, last vertex, first separator vertex. Roots store `u32::MAX`
/// as parent.
pub fn write_tree(tree: &SepDecompTree) -> Vec<u8> {
    let mut out = TREE_MAGIC.to_vec();
    push_u32s(&mut out, &[tree.num_nodes() as u32]);
    for n in tree.nodes() {
        push_u32s(
            &mut out,
            &[
                n.parent,
                n.first_child,
                n.num_children,
                n.first_vertex,
                n.last_vertex,
                n.first_sep_vertex,
            ],
        );
    }
    out
}

pub fn read_tree(bytes: &[u8]) -> Result<SepDecompTree> {
    let mut r = Reader::new(bytes, TREE_MAGIC)?;
    let count = r.u32()? as usize;
    let raw = r.u32s(count * 6)?;
    r.finish()?;
    let nodes = raw
        .chunks_exact(6)
        .map(|c| SepDecompNode {
            parent: c[0],
            first_child: c[1],
            num_children: c[2],
            first_vertex: c[3],
            last_vertex: c[4],
            first_sep_vertex: c[5],
        })
        .collect();
    SepDecompTree::from_nodes(nodes)
}

/// Rank of every vertex, no header.
pub fn write_order(rank: &[Vertex]) -> Vec<u8> {
    let mut out = Vec::new();
    push_u32s(&mut out, rank);
    out
}

pub fn read_order(bytes: &[u8]) -> Result<Vec<Vertex>> {
    if !bytes.len().is_multiple_of(4) {
        return Err(Error::Format("order file length is not a multiple of 4".into()));
    }
    let rank: Vec<Vertex> = bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    check_permutation(&rank, rank.len())?;
    Ok(rank)
}

/// Contents of a hierarchy file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CchFile {
    /// Rank of every vertex of the connected input.
    pub rank: Vec<Vertex>,
    pub cch: Cch,
    /// Input file id of every rank-ordered vertex.
    pub input_ids: Vec<Vertex>,
}

/// `CCH1`, vertex count `n`, edge count `m`, ranks (`n`), first-out
/// offsets (`n + 1`), heads (`m`), up weights (`m`), down weights (`m`),
/// elimination-tree parents (`n`, roots as `u32::MAX`), input ids (`n`).
pub fn write_cch(file: &CchFile) -> Vec<u8> {
    let h = &file.cch.graph;
    let mut out = CCH_MAGIC.to_vec();
    push_u32s(&mut out, &[h.num_vertices() as u32, h.num_edges() as u32]);
    push_u32s(&mut out, &file.rank);
    push_u32s(&mut out, h.first_out());
    push_u32s(&mut out, h.heads());
    push_u32s(&mut out, h.up_weights());
    push_u32s(&mut out, h.down_weights());
    push_u32s(&mut out, file.cch.tree.parents());
    push_u32s(&mut out, &file.input_ids);
    out
}

pub fn read_cch(bytes: &[u8]) -> Result<CchFile> {
    let mut r = Reader::new(bytes, CCH_MAGIC)?;
    let n = r.u32()? as usize;
    let m = r.u32()? as usize;
    let rank = r.u32s(n)?;
    let first_out = r.u32s(n + 1)?;
    let head = r.u32s(m)?;
    let up = r.u32s(m)?;
    let down = r.u32s(m)?;
    let parent = r.u32s(n)?;
    let input_ids = r.u32s(n)?;
    r.finish()?;
    check_permutation(&rank, n)?;
    let graph = UpwardGraph::from_parts(first_out, head, up, down).map_err(Error::Format)?;
    let tree = build_elimination_tree(&graph);
    if tree.parents() != parent.as_slice() {
        return Err(Error::Format("elimination tree does not match the upward graph".into()));
    }
    debug_assert!(parent.iter().all(|&p| p == INVALID_VERTEX || (p as usize) < n));
    Ok(CchFile {
        rank,
        cch: Cch { graph, tree },
        input_ids,
    })
}

/// One 0-based vertex id per line; blank lines are skipped.
pub fn parse_poi(text: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let id = line
            .parse::<u64>()
            .map_err(|_| Error::parse(i + 1, format!("expected a vertex id, found {line:?}")))?;
        out.push(id);
    }
    Ok(out)
}

/// `vertex_id,count` rows, optionally preceded by that header. Repeated
/// vertices add up.
pub fn parse_population(text: &str, num_vertices: usize) -> Result<Vec<u32>> {
    let mut population = vec![0u32; num_vertices];
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("vertex_id")) {
            continue;
        }
        let (v, c) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(i + 1, "expected vertex_id,count"))?;
        let v: u64 = v
            .trim()
            .parse()
            .map_err(|_| Error::parse(i + 1, format!("bad vertex id {v:?}")))?;
        let c: u32 = c
            .trim()
            .parse()
            .map_err(|_| Error::parse(i + 1, format!("bad count {c:?}")))?;
        if v as usize >= num_vertices {
            return Err(Error::VertexOutOfRange {
                vertex: v,
                num_vertices,
            });
        }
        let slot = &mut population[v as usize];
        *slot = slot
            .checked_add(c)
            .ok_or_else(|| Error::parse(i + 1, "population overflow"))?;
    }
    Ok(population)
}

pub fn write_population(population: &[u32]) -> String {
    let mut out = String::from("vertex_id,count\n");
    for (v, &c) in population.iter().enumerate() {
        if c > 0 {
            out.push_str(&format!("{v},{c}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::partition::{build_sep_decomposition, PartitionConfig};
    use crate::synth;
    use proptest::prelude::*;

    #[test]
    fn tree_round_trip() {
        for seed in 0..5 {
            let (g, c) = synth::random_geometric(200, seed);
            let dec = build_sep_decomposition(&g, &c, PartitionConfig::default()).unwrap();
            let bytes = write_tree(&dec.tree);
            assert_eq!(&bytes[..4], b"SDT1");
            assert_eq!(bytes.len(), 8 + 24 * dec.tree.num_nodes());
            assert_eq!(read_tree(&bytes).unwrap(), dec.tree);
        }
    }

    #[test]
    fn corrupt_tree_is_rejected() {
        let dec = build_sep_decomposition(
            &grid3(),
            &grid3_coords(),
            PartitionConfig {
                leaf_threshold: 1,
                balance: 0.3,
            },
        )
        .unwrap();
        let bytes = write_tree(&dec.tree);
        assert!(read_tree(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read_tree(&bad).is_err());
        let mut bad = bytes.clone();
        // child count of the root
        bad[8 + 8] ^= 1;
        assert!(read_tree(&bad).is_err());
    }

    #[test]
    fn order_round_trip() {
        let rank = vec![2, 0, 1, 4, 3];
        assert_eq!(read_order(&write_order(&rank)).unwrap(), rank);
        assert!(read_order(&write_order(&[0, 0])).is_err());
        assert!(read_order(&[1, 2, 3]).is_err());
    }

    #[test]
    fn cch_round_trip() {
        let dec = build_sep_decomposition(
            &grid3(),
            &grid3_coords(),
            PartitionConfig {
                leaf_threshold: 1,
                balance: 0.3,
            },
        )
        .unwrap();
        let file = CchFile {
            rank: dec.order.ranks().to_vec(),
            cch: Cch::customized(&dec.graph),
            input_ids: dec.order.vertices().to_vec(),
        };
        let bytes = write_cch(&file);
        assert_eq!(&bytes[..4], b"CCH1");
        assert_eq!(read_cch(&bytes).unwrap(), file);
        assert!(read_cch(&bytes[..bytes.len() - 4]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(read_cch(&extra).is_err());
    }

    #[test]
    fn poi_and_population_parsing() {
        assert_eq!(parse_poi("3\n\n 0 \n17\n").unwrap(), vec![3, 0, 17]);
        assert!(matches!(parse_poi("1\nx\n"), Err(Error::Parse { line: 2, .. })));
        let text = "vertex_id,count\n0,5\n2,1\n0,2\n";
        assert_eq!(parse_population(text, 3).unwrap(), vec![7, 0, 1]);
        assert!(parse_population("5,1\n", 3).is_err());
        assert!(matches!(
            parse_population("0;1\n", 3),
            Err(Error::Parse { line: 1, .. })
        ));
        assert_eq!(
            parse_population(&write_population(&[0, 4, 9]), 3).unwrap(),
            vec![0, 4, 9]
        );
    }

    proptest! {
        #[test]
        fn population_round_trip(pop in proptest::collection::vec(0u32..1000, 1..50)) {
            prop_assert_eq!(parse_population(&write_population(&pop), pop.len()).unwrap(), pop);
        }
    }
}
