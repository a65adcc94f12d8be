use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pace(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pace")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = pace(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Generates data and extracts one PACE file into a fresh directory.
fn prepared() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.toml"), "trajectories = 600\nvertices = 12\n").unwrap();
    ok(dir.path(), &["gen", "--spec", "spec.toml", "--seed", "11", "--out-dir", "data"]);
    ok(
        dir.path(),
        &["extract-tpaths", "--graph", "data/graph.txt", "--trajectories", "data/trajectories.txt", "--tau", "30", "--out-dir", "data"],
    );
    dir
}

#[test]
fn gen_is_deterministic_and_needs_a_seed() {
    let dir = prepared();
    let d = dir.path();
    ok(d, &["gen", "--spec", "spec.toml", "--seed", "11", "--out-dir", "again"]);
    for f in ["graph.txt", "trajectories.txt"] {
        assert_eq!(fs::read(d.join("data").join(f)).unwrap(), fs::read(d.join("again").join(f)).unwrap());
    }
    assert!(!pace(d, &["gen", "--spec", "spec.toml"]).status.success());
}

#[test]
fn routing_matches_the_oracle() {
    let dir = prepared();
    let d = dir.path();
    fs::write(d.join("q.txt"), "v0 v6 0 40\nv0 v6 0 70\n").unwrap();
    let oracle_line = |budget: &str| {
        let out = pace(d, &["oracle", "--pace", "data/all.pace", "--source", "v0", "--dest", "v6", "--budget", budget]);
        assert!(out.status.success());
        let err = String::from_utf8(out.stderr).unwrap();
        err.trim().rsplit(' ').next().unwrap().to_string()
    };
    let expected = [oracle_line("40"), oracle_line("70")];
    for variant in ["T-None", "T-B-P", "T-BS-2", "V-None", "V-B-P", "V-BS-1"] {
        let out = ok(d, &["route", "--pace", "data/all.pace", "--query-file", "q.txt", "--variant", variant]);
        let probs: Vec<&str> = out.lines().map(|l| l.split('\t').nth(1).unwrap()).collect();
        assert_eq!(probs, expected, "{variant}");
    }
}

#[test]
fn stores_and_heuristic_caches_are_written() {
    let dir = prepared();
    let d = dir.path();
    ok(d, &["build-vpaths", "--pace", "data/all.pace", "--out", "units.txt"]);
    let units = fs::read_to_string(d.join("units.txt")).unwrap();
    assert!(units.lines().all(|l| l.starts_with("U ")));
    let table =
        ok(d, &["heuristics", "--pace", "data/all.pace", "--units", "units.txt", "--kind", "table", "--delta", "5", "--dest", "v3"]);
    assert!(table.starts_with("D v3 5 "));
    assert_eq!(table.lines().filter(|l| l.starts_with("H ")).count(), 12);
    let binary = ok(d, &["heuristics", "--pace", "data/all.pace", "--kind", "binary", "--all"]);
    assert_eq!(binary.lines().count(), 12 * 12);
    assert!(!pace(d, &["heuristics", "--pace", "data/all.pace", "--kind", "table", "--all"]).status.success());
}

#[test]
fn periods_select_graphs_by_departure() {
    let dir = prepared();
    let d = dir.path();
    fs::write(
        d.join("periods.toml"),
        "[[period]]\npace = \"data/all.pace\"\nstart = 0\nend = 100\n\n[[period]]\npace = \"data/all.pace\"\nstart = 100\nend = 200\n",
    )
    .unwrap();
    fs::write(d.join("q.txt"), "v0 v6 50 60\nv0 v6 150 60\n").unwrap();
    let out = ok(d, &["route", "--periods", "periods.toml", "--query-file", "q.txt"]);
    assert_eq!(out.lines().count(), 2);
    fs::write(d.join("late.txt"), "v0 v6 250 60\n").unwrap();
    let out = pace(d, &["route", "--periods", "periods.toml", "--query-file", "late.txt"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("250"));
}

#[test]
fn bench_and_kl_reports() {
    let dir = prepared();
    let d = dir.path();
    fs::write(d.join("w.toml"), "pairs_per_bucket = 2\nbuckets = [[1, 3], [4, 6]]\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_pace"))
        .current_dir(d)
        .env("PACE_WORKERS", "2")
        .args(["bench", "--pace", "data/all.pace", "--variants", "T-None,V-BS-1,V-B-P", "--workload", "w.toml", "--summary", "sum.toml"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let tsv = String::from_utf8(out.stdout).unwrap();
    assert!(tsv.starts_with("variant\tbucket\tmultiplier"));
    assert!(fs::read_to_string(d.join("sum.toml")).unwrap().contains("[[cells]]"));

    let kl = ok(d, &["eval-kl", "--graph", "data/graph.txt", "--trajectories", "data/trajectories.txt", "--tau", "20", "--folds", "5"]);
    assert_eq!(kl.lines().count(), 7);

    let bad = Command::new(env!("CARGO_BIN_EXE_pace"))
        .current_dir(d)
        .env("PACE_WORKERS", "zero")
        .args(["build-vpaths", "--pace", "data/all.pace"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("PACE_WORKERS"));
}
