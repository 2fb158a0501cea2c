use std::path::Path;
use std::process::{Command, Output};

use hegemm::io::{read_matrix, write_matrix};
use hegemm::matrix::naive_matmul;
use hegemm::Matrix;

fn hegemm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hegemm")).args(args).env_remove("HEGEMM_SLOTS").output().expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).unwrap()
}

fn operands(dir: &Path) -> (Matrix, Matrix) {
    let a = Matrix::from_fn(5, 3, |r, c| (r * 3 + c) as i64 - 4);
    let b = Matrix::from_fn(3, 4, |r, c| (2 * r) as i64 - c as i64);
    write_matrix(&a, &dir.join("a.txt")).unwrap();
    write_matrix(&b, &dir.join("b.json")).unwrap();
    (a, b)
}

#[test]
fn multiply_prints_product_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = operands(dir.path());
    let pa = dir.path().join("a.txt");
    let pb = dir.path().join("b.json");
    let out = hegemm(&["multiply", "--algo", "hegmm", pa.to_str().unwrap(), pb.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let product = hegemm::io::parse_text_matrix(&text(&out.stdout)).unwrap();
    assert_eq!(product, naive_matmul(&a, &b).unwrap());
    // stderr is piped, so stats come out as JSON.
    let stats: serde_json::Value = serde_json::from_str(text(&out.stderr).trim()).unwrap();
    assert_eq!(stats["stats"]["cloud"]["mult_cc"], 3);
    assert_eq!(stats["dims"], serde_json::json!([5, 3, 4]));
}

#[test]
fn multiply_is_byte_stable_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--seed", "7", "multiply", "--random", "4x6x3", "--stats", "table"];
    let first = hegemm(&args);
    let second = hegemm(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stderr, second.stderr);
    assert!(text(&first.stderr).contains("mult_cc"));

    let out_path = dir.path().join("c.json");
    let stats_path = dir.path().join("stats.json");
    let out = hegemm(&[
        "--seed",
        "7",
        "multiply",
        "--random",
        "4x6x3",
        "--out",
        out_path.to_str().unwrap(),
        "--stats-out",
        stats_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let c = read_matrix(&out_path).unwrap();
    assert_eq!(c.shape(), (4, 3));
    let stats: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&stats_path).unwrap()).unwrap();
    assert_eq!(stats["stats"]["cloud"]["mult_cc"], 3);
}

#[test]
fn diagonals_reproduces_offsets() {
    let out = hegemm(&["diagonals", "--transform", "eps", "--k", "1", "--dims", "5x3", "--order", "col"]);
    assert!(out.status.success());
    let s = text(&out.stdout);
    assert!(s.contains("offsets: +5,-10"), "{s}");
    assert!(s.contains("offset +5 weight 10") && s.contains("offset -10 weight 5"));

    let out = hegemm(&["diagonals", "--transform", "omega", "--k", "1", "--dims", "3x5", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["entries"], serde_json::json!([[1, 10], [-2, 5]]));
}

#[test]
fn usage_and_error_statuses() {
    let out = hegemm(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("Usage"));
    assert_eq!(hegemm(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(hegemm(&["multiply", "--algo", "fast", "--random", "2x2x2"]).status.code(), Some(1));

    let out = hegemm(&["--slots", "16", "multiply", "--random", "5x3x4"]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "2 2\n1 x\n3 4\n").unwrap();
    let out = hegemm(&["multiply", bad.to_str().unwrap(), bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let missing = dir.path().join("missing.txt");
    let out = hegemm(&["multiply", missing.to_str().unwrap(), missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));

    let a = dir.path().join("a.txt");
    std::fs::write(&a, "2 3\n1 2 3\n4 5 6\n").unwrap();
    let out = hegemm(&["multiply", a.to_str().unwrap(), a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn slots_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_hegemm"))
        .args(["multiply", "--random", "5x3x4"])
        .env("HEGEMM_SLOTS", "16")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_hegemm"))
        .args(["--slots", "64", "multiply", "--random", "5x3x4"])
        .env("HEGEMM_SLOTS", "16")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn bench_csv_and_json() {
    let out = hegemm(&["--seed", "3", "bench", "--cases", "5", "--dim-hi", "6"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let csv = text(&out.stdout);
    assert_eq!(csv.lines().count(), 1 + 5 * 3);
    assert!(csv.starts_with("case,m,l,n,categories,algorithm"));
    let again = hegemm(&["--seed", "3", "bench", "--cases", "5", "--dim-hi", "6"]);
    assert_eq!(out.stdout, again.stdout);

    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    std::fs::write(&model, r#"{"rot": 0.0}"#).unwrap();
    let report = dir.path().join("r.json");
    let out = hegemm(&[
        "bench",
        "--cases",
        "3",
        "--algos",
        "hegmm,hegmm-en",
        "--format",
        "json",
        "--cost-model",
        model.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["cases"].as_array().unwrap().len(), 3);
    assert_eq!(v["config"]["cost_model"]["rot"], 0.0);

    std::fs::write(&model, r#"{"rot": -1.0}"#).unwrap();
    let out = hegemm(&["bench", "--cases", "1", "--cost-model", model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn block_multiply_plans() {
    let dir = tempfile::tempdir().unwrap();
    let a = Matrix::from_fn(9, 7, |r, c| (r as i64 - c as i64) * 3);
    let b = Matrix::from_fn(7, 5, |r, c| (r * c) as i64 % 4);
    let (pa, pb) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    write_matrix(&a, &pa).unwrap();
    write_matrix(&b, &pb).unwrap();
    let expect = naive_matmul(&a, &b).unwrap();
    for plan in ["p1", "p2"] {
        let out = hegemm(&["block-multiply", "--plan", plan, pa.to_str().unwrap(), pb.to_str().unwrap()]);
        assert!(out.status.success(), "{}", text(&out.stderr));
        assert_eq!(hegemm::io::parse_text_matrix(&text(&out.stdout)).unwrap(), expect);
    }
    let cuts = dir.path().join("cuts.txt");
    std::fs::write(&cuts, "4 5\n3 4\n2 3\n").unwrap();
    let args = ["--slots", "32", "block-multiply", "--plan", "custom", "--cuts", cuts.to_str().unwrap()];
    let out = hegemm(&[&args[..], &[pa.to_str().unwrap(), pb.to_str().unwrap()]].concat());
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert_eq!(hegemm::io::parse_text_matrix(&text(&out.stdout)).unwrap(), expect);

    let out = hegemm(&["block-multiply", "--plan", "custom", pa.to_str().unwrap(), pb.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
