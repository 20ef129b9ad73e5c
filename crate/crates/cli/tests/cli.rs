use std::path::Path;
use std::process::{Command, Output};

use lrpop::polyrep::{bernstein_instance, rank_two_example};
use lrpop::{CpPoly, RunReport};
use lrpop_cli::BenchArchive;

fn lrpop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrpop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_problem(dir: &Path, name: &str, f: &CpPoly) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(&f.to_json()).unwrap()).unwrap();
    path.display().to_string()
}

fn read_report(path: &Path) -> RunReport {
    RunReport::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_archive(path: &Path) -> BenchArchive {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn example_fixture_bound_is_below_every_grid_value() {
    let dir = tempfile::tempdir().unwrap();
    let f = rank_two_example();
    let input = write_problem(dir.path(), "ex.json", &f);
    let out = dir.path().join("report.json");
    let res = lrpop(&["solve", &input, "-k", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let lb = read_report(&out).lower_bound.expect("bound reported");

    let steps = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut min = f64::INFINITY;
    for code in 0..steps.len().pow(5) {
        let x: Vec<f64> = (0..5)
            .map(|i| steps[code / steps.len().pow(i) % steps.len()])
            .collect();
        min = min.min(f.eval(&x).unwrap());
    }
    assert!(lb <= min + 1e-6, "{lb} > {min}");
}

#[test]
fn bernstein_fixture_bound_is_near_rank() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_problem(dir.path(), "b.json", &bernstein_instance(10, 2, 2, 1.0, 7));
    let out = dir.path().join("report.json");
    let res = lrpop(&[
        "solve",
        &input,
        "-k",
        "2",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0));
    let report = read_report(&out);
    assert_eq!(report.instance.seed, Some(7));
    let lb = report.lower_bound.unwrap();
    assert!((lb - 2.0).abs() <= 1e-3, "{lb}");
    let table = String::from_utf8(res.stdout).unwrap();
    assert!(table.contains("lower bound"), "{table}");
}

#[test]
fn report_json_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_problem(dir.path(), "b.json", &bernstein_instance(4, 2, 1, 1.0, 3));
    let out = dir.path().join("report.json");
    let res = lrpop(&["solve", &input, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(RunReport::from_json(&text).unwrap().to_json(), text);
}

#[test]
fn malformed_input_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"n": 2, "r": 1, "basis": "monomial""#).unwrap();
    let out = dir.path().join("report.json");
    let res = lrpop(&[
        "solve",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(res.stdout.is_empty());
    assert!(!out.exists());
}

#[test]
fn ragged_grid_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ragged.json");
    std::fs::write(
        &path,
        r#"{"n": 2, "r": 1, "basis": "monomial", "factors": [[[1.0, 1.0]]]}"#,
    )
    .unwrap();
    assert_eq!(
        lrpop(&["solve", path.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn order_too_small_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_problem(dir.path(), "ex.json", &rank_two_example());
    let res = lrpop(&["solve", &input, "-k", "0"]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn solver_failure_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_problem(dir.path(), "ex.json", &rank_two_example());
    let res = lrpop(&["solve", &input, "--backend", "external:exit 1"]);
    assert_eq!(res.status.code(), Some(4));
}

#[test]
fn tiny_timeout_blanks_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.json");
    let res = lrpop(&[
        "bench",
        "bernstein",
        "-n",
        "10,20",
        "--timeout",
        "0.001",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0));
    let archive = read_archive(&out);
    assert_eq!(archive.cells.len(), 2);
    assert!(archive.cells.iter().all(|c| c.bound().is_none()));
    let table = String::from_utf8(res.stdout).unwrap();
    assert!(!table.contains("1."), "{table}");
}

#[test]
fn monomial_table_is_monotone_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.json");
    let res = lrpop(&[
        "bench",
        "monomial",
        "-r",
        "1",
        "-d",
        "3",
        "-n",
        "2,3,4,5,6",
        "-k",
        "2,3",
        "-j",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0));
    let archive = read_archive(&out);
    for n in 2..=6 {
        let bound = |k| {
            archive
                .cells
                .iter()
                .find(|c| c.n == n && c.order == k)
                .and_then(|c| c.bound())
                .unwrap_or_else(|| panic!("no bound for n={n} k={k}"))
        };
        assert!(
            bound(2) <= bound(3) + 1e-6,
            "n={n}: {} > {}",
            bound(2),
            bound(3)
        );
    }
}

#[test]
fn bench_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let res = lrpop(&[
            "bench",
            "bernstein",
            "-n",
            "6,12",
            "--seed",
            "5",
            "-j",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(res.status.code(), Some(0));
        read_archive(&out)
    };
    let (a, b) = (run("a.json"), run("b.json"));
    for (x, y) in a.cells.iter().zip(&b.cells) {
        let (x, y) = (x.bound().unwrap(), y.bound().unwrap());
        assert!((x - y).abs() <= 1e-8, "{x} vs {y}");
    }
}

#[test]
fn expand_prints_the_cross_term() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_problem(dir.path(), "ex.json", &rank_two_example());
    let res = lrpop(&["expand", &input]);
    assert_eq!(res.status.code(), Some(0));
    let text = String::from_utf8(res.stdout).unwrap();
    let line = text
        .lines()
        .find(|l| l.trim_end().ends_with(" x2*x3*x4*x5"))
        .expect("term listed");
    let c: f64 = line.split_whitespace().next().unwrap().parse().unwrap();
    assert_eq!(c, -3.0);
}

#[test]
fn graph_and_tree_render_as_dot() {
    let res = lrpop(&["graph", "-r", "2", "-n", "3"]);
    assert_eq!(res.status.code(), Some(0));
    let g = String::from_utf8(res.stdout).unwrap();
    assert!(g.starts_with("graph G {"));
    // t_{l,1}–x_1 plus a triangle for every later position, per rank-one term.
    assert_eq!(g.matches(" -- ").count(), 2 * (1 + 3 * 2));

    let res = lrpop(&["graph", "-r", "2", "-n", "3", "--tree"]);
    let t = String::from_utf8(res.stdout).unwrap();
    assert!(t.starts_with("graph T {"));
    assert_eq!(t.matches("label=").count(), 6);
}

#[test]
fn unknown_backend_is_rejected() {
    let res = lrpop(&["solve", "missing.json", "--backend", "mosek"]);
    assert_eq!(res.status.code(), Some(2));
}
