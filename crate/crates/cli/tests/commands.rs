use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cch_knn::graph::{dijkstra, largest_scc, write_dimacs_co, write_dimacs_gr};
use cch_knn::{synth, Coordinates, Graph};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cch-knn")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn grid3() -> (Graph, Coordinates) {
    synth::grid(3, 3, 1)
}

fn p5() -> (Graph, Coordinates) {
    let g = Graph::from_edges(5, (0..4).map(|i| (i, i + 1, 1))).unwrap();
    (g, Coordinates::new((0..5).collect(), vec![0; 5]))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: TempDir,
    graph: Graph,
}

impl Fixture {
    fn new((graph, coords): (Graph, Coordinates)) -> Self {
        let dir = TempDir::new().unwrap();
        fs::write(dir.path().join("g.gr"), write_dimacs_gr(&graph)).unwrap();
        fs::write(dir.path().join("g.co"), write_dimacs_co(&coords)).unwrap();
        let f = Fixture { dir, graph };
        ok(&[
            "preprocess",
            "--graph",
            s(&f.path("g.gr")),
            "--coords",
            s(&f.path("g.co")),
            "--out",
            s(&f.path("h")),
            "--leaf-threshold",
            "4",
        ]);
        f
    }

    fn random(n: usize, seed: u64) -> Self {
        let (g, c) = synth::random_geometric(n, seed);
        let keep = largest_scc(&g, Some(&c)).unwrap();
        Self::new((keep.graph, keep.coords.unwrap()))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn knn(&self, extra: &[&str]) -> String {
        let (cch, tree, graph) = (self.path("h.cch"), self.path("h.sdt"), self.path("g.gr"));
        let mut args = vec!["knn", "--cch", s(&cch), "--tree", s(&tree), "--graph", s(&graph)];
        args.extend_from_slice(extra);
        ok(&args)
    }
}

fn distances(csv: &str) -> Vec<String> {
    csv.lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().to_owned())
        .collect()
}

#[test]
fn preprocess_writes_all_files_deterministically() {
    let f = Fixture::new(grid3());
    let first: Vec<Vec<u8>> = ["h.cch", "h.sdt", "h.order"]
        .iter()
        .map(|n| fs::read(f.path(n)).unwrap())
        .collect();
    ok(&[
        "preprocess",
        "--graph",
        s(&f.path("g.gr")),
        "--coords",
        s(&f.path("g.co")),
        "--out",
        s(&f.path("h")),
        "--leaf-threshold",
        "4",
    ]);
    let second: Vec<Vec<u8>> = ["h.cch", "h.sdt", "h.order"]
        .iter()
        .map(|n| fs::read(f.path(n)).unwrap())
        .collect();
    assert_eq!(first, second);
    assert_eq!(&first[0][..4], b"CCH1");
    assert_eq!(&first[1][..4], b"SDT1");
    assert_eq!(first[2].len(), 9 * 4);
}

#[test]
fn knn_matches_dijkstra_for_every_algorithm_and_mode() {
    let f = Fixture::random(300, 5);
    let n = f.graph.num_vertices();
    let pois: Vec<u32> = (0..n as u32).step_by(7).collect();
    fs::write(
        f.path("poi.txt"),
        pois.iter().map(|p| format!("{p}\n")).collect::<String>(),
    )
    .unwrap();
    for source in [0u32, 13, n as u32 - 1] {
        let mut expected: Vec<u32> = pois.iter().map(|&p| dijkstra(&f.graph, source)[p as usize]).collect();
        expected.sort_unstable();
        expected.truncate(5);
        let expected: Vec<String> = expected.iter().map(u32::to_string).collect();
        for algorithm in ["cch", "bcch", "ine"] {
            for mode in ["online", "offline"] {
                let csv = f.knn(&[
                    "--poi",
                    s(&f.path("poi.txt")),
                    "--source",
                    &source.to_string(),
                    "--k",
                    "5",
                    "--algorithm",
                    algorithm,
                    "--mode",
                    mode,
                ]);
                assert!(csv.starts_with("rank,target,distance\n"));
                assert_eq!(distances(&csv), expected, "{algorithm} {mode} from {source}");
            }
        }
    }
}

#[test]
fn knn_with_source_as_only_poi_is_distance_zero() {
    let f = Fixture::new(p5());
    fs::write(f.path("poi.txt"), "3\n").unwrap();
    let csv = f.knn(&["--poi", s(&f.path("poi.txt")), "--source", "3", "--k", "1"]);
    assert_eq!(csv, "rank,target,distance\n1,3,0\n");
    let both = f.knn(&[
        "--poi",
        s(&f.path("poi.txt")),
        "--source",
        "3",
        "--source",
        "1",
        "--k",
        "1",
        "--dist-mode",
        "exact",
    ]);
    assert!(both.starts_with("source,rank,target,distance\n3,1,3,0\n1,1,3,"));
}

#[test]
fn customize_with_doubled_lengths_doubles_distances() {
    let f = Fixture::new(grid3());
    let doubled = f.graph.map_weights(|_, _, w| 2 * w);
    fs::write(f.path("g2.gr"), write_dimacs_gr(&doubled)).unwrap();
    ok(&[
        "customize",
        "--cch",
        s(&f.path("h.cch")),
        "--graph",
        s(&f.path("g2.gr")),
        "--out",
        s(&f.path("h2.cch")),
    ]);
    let again = f.path("h3.cch");
    ok(&[
        "customize",
        "--cch",
        s(&f.path("h.cch")),
        "--graph",
        s(&f.path("g2.gr")),
        "--out",
        s(&again),
    ]);
    assert_eq!(fs::read(f.path("h2.cch")).unwrap(), fs::read(&again).unwrap());

    fs::write(f.path("poi.txt"), (0..9).map(|p| format!("{p}\n")).collect::<String>()).unwrap();
    let query = |cch: &str| {
        ok(&[
            "knn",
            "--cch",
            cch,
            "--tree",
            s(&f.path("h.sdt")),
            "--poi",
            s(&f.path("poi.txt")),
            "--source",
            "4",
            "--k",
            "9",
        ])
    };
    let single: Vec<u32> = distances(&query(s(&f.path("h.cch"))))
        .iter()
        .map(|d| d.parse().unwrap())
        .collect();
    let double: Vec<u32> = distances(&query(s(&f.path("h2.cch"))))
        .iter()
        .map(|d| d.parse().unwrap())
        .collect();
    assert_eq!(double, single.iter().map(|d| 2 * d).collect::<Vec<_>>());
}

#[test]
fn bench_reports_every_algorithm_with_equal_checksums() {
    let f = Fixture::random(400, 9);
    let csv = ok(&[
        "--seed",
        "3",
        "bench",
        "--cch",
        s(&f.path("h.cch")),
        "--tree",
        s(&f.path("h.sdt")),
        "--graph",
        s(&f.path("g.gr")),
        "--ball-size",
        "100",
        "--num-pois",
        "20",
        "--poi-sets",
        "2",
        "--sources-per-set",
        "3",
    ]);
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let col = |name: &str| rows[0].iter().position(|c| *c == name).unwrap();
    assert_eq!(
        rows[1..].iter().map(|r| r[0]).collect::<Vec<_>>(),
        ["cch", "bcch", "ine"]
    );
    for r in &rows[1..] {
        assert_eq!(r[col("queries")], "6");
        assert_eq!(r[col("checksum")], rows[1][col("checksum")]);
    }
    assert_eq!(
        run(&[
            "bench",
            "--cch",
            s(&f.path("h.cch")),
            "--tree",
            s(&f.path("h.sdt")),
            "--graph",
            s(&f.path("g.gr")),
            "--ball-size",
            "10",
            "--num-pois",
            "20"
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn gen_demand_is_seeded_and_writes_aggregates() {
    let f = Fixture::random(200, 2);
    let n = f.graph.num_vertices();
    let pop: String = (0..n).step_by(3).map(|v| format!("{v},{}\n", 1 + v % 4)).collect();
    fs::write(f.path("pop.csv"), format!("vertex_id,count\n{pop}")).unwrap();
    let gen = |algorithm: &str, threads: &str, out: &str| {
        ok(&[
            "--seed",
            "11",
            "--threads",
            threads,
            "gen-demand",
            "--cch",
            s(&f.path("h.cch")),
            "--tree",
            s(&f.path("h.sdt")),
            "--graph",
            s(&f.path("g.gr")),
            "--population",
            s(&f.path("pop.csv")),
            "--lambda",
            "0.5",
            "--trips",
            "500",
            "--algorithm",
            algorithm,
            "--out",
            s(&f.path(out)),
            "--aggregate",
            s(&f.path(&format!("{out}.agg"))),
        ]);
        fs::read_to_string(f.path(out)).unwrap()
    };
    let a = gen("crad", "2", "a.csv");
    assert_eq!(a, gen("crad", "2", "b.csv"));
    assert_eq!(a.lines().count(), 501);
    assert!(a.starts_with("origin,destination,distance\n"));
    let agg = fs::read_to_string(f.path("a.csv.agg")).unwrap();
    assert!(agg.starts_with("origin,destination,count\n"));
    let total: u64 = agg
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 500);
    let d = gen("drad", "1", "d.csv");
    assert_eq!(d.lines().count(), 501);

    let empty = ok(&[
        "gen-demand",
        "--cch",
        s(&f.path("h.cch")),
        "--tree",
        s(&f.path("h.sdt")),
        "--population",
        s(&f.path("pop.csv")),
        "--lambda",
        "0.5",
        "--trips",
        "0",
    ]);
    assert_eq!(empty, "origin,destination,distance\n");
}

#[test]
fn ingest_grid_places_people_inside_their_cell() {
    let dir = TempDir::new().unwrap();
    // Micro-degrees: two vertices in one cell near the equator, one in another.
    let coords = Coordinates::new(vec![100, 200, 50_000], vec![100, 200, 50_000]);
    fs::write(dir.path().join("g.co"), write_dimacs_co(&coords)).unwrap();
    fs::write(
        dir.path().join("grid.csv"),
        "lat,lon,count\n0,0,100000\n0.045,0.045,7\n0.5,0.5,9\n",
    )
    .unwrap();
    let run_ingest = |seed: &str| {
        let out = run(&[
            "--seed",
            seed,
            "ingest-grid",
            "--coords",
            s(&dir.path().join("g.co")),
            "--grid",
            s(&dir.path().join("grid.csv")),
            "--cell-size",
            "1000",
        ]);
        assert!(out.status.success());
        (
            String::from_utf8(out.stdout).unwrap(),
            String::from_utf8(out.stderr).unwrap(),
        )
    };
    let (csv, report) = run_ingest("4");
    assert_eq!(run_ingest("4").0, csv);
    assert!(report.contains("dropped=9"), "{report}");
    let counts: Vec<(u32, u32)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (v, c) = l.split_once(',').unwrap();
            (v.parse().unwrap(), c.parse().unwrap())
        })
        .collect();
    assert_eq!(counts.len(), 3);
    assert_eq!(counts[2], (2, 7));
    // 50/50 split within four standard deviations.
    assert!((counts[0].1 as f64 - 50_000.0).abs() < 4.0 * 158.2);
    assert_eq!(counts[0].1 + counts[1].1, 100_000);
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.gr");
    fs::write(&bad, "p xx 3 2\n").unwrap();
    fs::write(dir.path().join("g.co"), write_dimacs_co(&p5().1)).unwrap();
    let out = run(&[
        "preprocess",
        "--graph",
        s(&bad),
        "--coords",
        s(&dir.path().join("g.co")),
        "--out",
        s(&dir.path().join("h")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.gr"));

    assert_eq!(run(&["knn", "--k", "3"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(
        run(&[
            "preprocess",
            "--graph",
            "x",
            "--coords",
            "y",
            "--out",
            "z",
            "--balance",
            "0.9"
        ])
        .status
        .code(),
        Some(1)
    );

    let f = Fixture::new(p5());
    fs::write(f.path("poi.txt"), "99\n").unwrap();
    let out = run(&[
        "knn",
        "--cch",
        s(&f.path("h.cch")),
        "--tree",
        s(&f.path("h.sdt")),
        "--poi",
        s(&f.path("poi.txt")),
        "--source",
        "0",
        "--k",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let mut tree = fs::read(f.path("h.sdt")).unwrap();
    tree.truncate(tree.len() - 2);
    fs::write(f.path("h.sdt"), tree).unwrap();
    fs::write(f.path("poi.txt"), "1\n").unwrap();
    let out = run(&[
        "knn",
        "--cch",
        s(&f.path("h.cch")),
        "--tree",
        s(&f.path("h.sdt")),
        "--poi",
        s(&f.path("poi.txt")),
        "--source",
        "0",
        "--k",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
