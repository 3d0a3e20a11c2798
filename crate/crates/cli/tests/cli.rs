use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn iddp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iddp"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn stat(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .to_string()
}

const TOY4: &str = ">a\nACGTTGCA\n>b\nACGTGCA\n>c\nAGTTGCAA\n>dd\nCGTTGCA\n";
const MATRIX: &str = "# toy\nA C G T\nA 0 3 2 3\nC 3 0 3 2\nG 2 3 0 3\nT 3 2 3 0\n";

#[test]
fn identical_sequences_cost_nothing() {
    let dir = TempDir::new().unwrap();
    let fa = write(dir.path(), "s.fa", ">x\nACGT\n>y\nACGT\n");
    let o = iddp(&["align", "--input", &fa]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = stdout(&o);
    assert_eq!(stat(&out, "cost"), "0");
    assert!(out.starts_with("x  acgt\ny  acgt\n"));
}

#[test]
fn iddp_all3_reports_every_stat() {
    let dir = TempDir::new().unwrap();
    let fa = write(dir.path(), "toy.fa", TOY4);
    let m = write(dir.path(), "m.txt", MATRIX);
    let stats = dir.path().join("stats.txt");
    let fasta = dir.path().join("out.fa");
    let o = iddp(&[
        "align",
        "--input",
        &fa,
        "--matrix",
        &m,
        "--gap-open",
        "4",
        "--gap-extend",
        "2",
        "--heuristic",
        "all3",
        "--stats-out",
        stats.to_str().unwrap(),
        "--fasta-out",
        fasta.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = fs::read_to_string(&stats).unwrap();
    for key in iddp_cli::format::STATS_KEYS {
        stat(&text, key);
    }
    assert_eq!(stat(&text, "algo"), "iddp");
    assert!(stat(&text, "nu").parse::<f64>().unwrap() >= 1.0);
    assert!(stat(&text, "heu_entries").parse::<u64>().unwrap() > 0);
    // alignment went to stdout, stats did not
    let out = stdout(&o);
    assert!(out.contains("dd  ") && !out.contains("cost="));
    let fa_out = fs::read_to_string(&fasta).unwrap();
    assert_eq!(fa_out.matches('>').count(), 4);
}

#[test]
fn every_algorithm_matches_the_oracle() {
    let dir = TempDir::new().unwrap();
    let fa = write(dir.path(), "toy.fa", TOY4);
    let m = write(dir.path(), "m.txt", MATRIX);
    let common = [
        "--input",
        &fa,
        "--matrix",
        &m,
        "--gap-open",
        "3",
        "--gap-extend",
        "1",
        "--end-gap-mode",
        "charged",
    ];
    let o = iddp(&[&["oracle"][..], &common].concat());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let g = stat(&stdout(&o), "g_star");
    for alg in ["dijkstra", "astar", "pea", "iddp"] {
        for h in ["pair", "one", "zero"] {
            if alg == "dijkstra" && h != "zero" {
                continue;
            }
            let o = iddp(
                &[
                    &[
                        "align",
                        "--algorithm",
                        alg,
                        "--heuristic",
                        h,
                        "--delta-pair",
                        "2",
                    ][..],
                    &common,
                ]
                .concat(),
            );
            assert_eq!(
                o.status.code(),
                Some(0),
                "{alg} {h}: {}",
                String::from_utf8_lossy(&o.stderr)
            );
            let out = stdout(&o);
            assert_eq!(stat(&out, "cost"), g, "{alg} {h}");
            if alg == "dijkstra" {
                assert_eq!(stat(&out, "nu"), "1.0000");
            }
        }
    }
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let fa = write(dir.path(), "toy.fa", TOY4);
    let m = write(dir.path(), "m.txt", MATRIX);
    let base = ["align", "--input", &fa, "--matrix", &m];
    assert_eq!(
        iddp(&[&base[..], &["--upper-bound-mode", "1"]].concat())
            .status
            .code(),
        Some(2)
    );
    let o = iddp(&[&base[..], &["--memory-cap", "200"]].concat());
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(o.stdout.is_empty());
    assert_eq!(
        iddp(&[&base[..], &["--algorithm", "nope"]].concat())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        iddp(
            &[
                &base[..],
                &["--algorithm", "dijkstra", "--heuristic", "pair"]
            ]
            .concat()
        )
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        iddp(&["align", "--input", "/nonexistent.fa"]).status.code(),
        Some(1)
    );
    let bad = write(dir.path(), "bad.fa", ">x\nACGZ\n");
    let o = iddp(&["align", "--input", &bad, "--matrix", &m]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("'Z'"));
}

#[test]
fn oracle_refuses_oversize_instances() {
    let dir = TempDir::new().unwrap();
    let seq = "ACGT".repeat(10);
    let text: String = (0..5).map(|i| format!(">s{i}\n{seq}\n")).collect();
    let fa = write(dir.path(), "big.fa", &text);
    let o = iddp(&["oracle", "--input", &fa]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    // 41^5 vertices times 32 directions
    assert!(err.contains(&(41u128.pow(5) * 32).to_string()), "{err}");
}

#[test]
fn bench_writes_one_row_per_instance() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "a.fa", TOY4);
    write(dir.path(), "b.fa", ">x\nACGT\n>y\nAGT\n>z\nACT\n");
    write(dir.path(), "m.txt", MATRIX);
    let manifest = write(
        dir.path(),
        "list.txt",
        "# two instances and a failing one\na.fa --heuristic pair\nb.fa --algorithm astar\na.fa --upper-bound-mode 1\n",
    );
    let table = dir.path().join("out.tsv");
    let o = iddp(&[
        "bench",
        "--manifest",
        &manifest,
        "--jobs",
        "2",
        "--output",
        table.to_str().unwrap(),
        "--",
        "--matrix",
        "m.txt",
        "--gap-open",
        "2",
        "--gap-extend",
        "1",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = fs::read_to_string(&table).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.len() == rows[0].len()));
    assert_eq!(rows[0][0], "instance");
    assert_eq!(
        (rows[1][0], rows[1][4], rows[1][5]),
        ("a", "optimal", "iddp")
    );
    assert_eq!((rows[2][0], rows[2][1], rows[2][5]), ("b", "3", "astar"));
    assert_eq!(rows[3][4], "no_solution");
}
