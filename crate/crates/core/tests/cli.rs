use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;
use spca::formulations::objective;
use spca::matrix::{load_matrix, MatrixFormat};
use spca::{DataMatrix, Formulation};

fn spca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spca"))
        .args(args)
        .env_remove("SPCA_THREADS")
        .output()
        .expect("binary runs")
}

fn write_mtx(dir: &Path, name: &str, n: usize, p: usize, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = format!(
        "%%MatrixMarket matrix coordinate real general\n% test data\n{n} {p} {}\n",
        n * p
    );
    for j in 0..p {
        for i in 0..n {
            let v: f64 = rng.sample(StandardNormal);
            text.push_str(&format!("{} {} {v:e}\n", i + 1, j + 1));
        }
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn solve_args<'a>(input: &'a str, output: &'a str) -> Vec<&'a str> {
    vec![
        "solve",
        "--input",
        input,
        "--variance",
        "l2",
        "--sparsity",
        "l0",
        "--mode",
        "constraint",
        "--s",
        "5",
        "--starts",
        "64",
        "--strategy",
        "otf",
        "--batch",
        "16",
        "--seed",
        "7",
        "--output",
        output,
    ]
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn dense_loading(doc: &Value) -> Vec<f64> {
    let p = doc["best"]["dimension"].as_u64().unwrap() as usize;
    let mut x = vec![0.0; p];
    for e in doc["best"]["loading"].as_array().unwrap() {
        x[e["index"].as_u64().unwrap() as usize] = e["value"].as_f64().unwrap();
    }
    x
}

#[test]
fn solve_writes_sparse_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_mtx(dir.path(), "a.mtx", 30, 40, 1);
    let out = dir.path().join("r.json");
    let res = spca(&solve_args(input.to_str().unwrap(), out.to_str().unwrap()));
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));

    let doc = read_json(&out);
    assert_eq!(doc["formulation"]["index"], 1);
    assert_eq!(doc["formulation"]["s"], 5);
    assert_eq!(doc["plan"]["seed"], 7);
    let card = doc["best"]["cardinality"].as_u64().unwrap();
    assert!((1..=5).contains(&card));
    assert_eq!(doc["starts"].as_array().unwrap().len(), 64);
    let evr = doc["best"]["explained_variance_ratio"].as_f64().unwrap();
    assert!(evr > 0.0 && evr <= 1.0);

    // Re-scoring the reported loading reproduces the reported objective.
    let a = load_matrix(&input, MatrixFormat::MatrixMarket).unwrap();
    let form = Formulation::from_index(1, 5.0).unwrap();
    let x = dense_loading(&doc);
    let rescored = objective(&form, &a, &x).unwrap();
    let reported = doc["best"]["objective"].as_f64().unwrap();
    assert!((rescored - reported).abs() <= 1e-10 * reported.max(1.0));
    let best_of_starts = doc["starts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["objective"].as_f64().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(best_of_starts, reported);
}

#[test]
fn solve_is_deterministic_apart_from_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_mtx(dir.path(), "a.mtx", 20, 25, 2);
    let (o1, o2) = (dir.path().join("1.json"), dir.path().join("2.json"));
    for o in [&o1, &o2] {
        let res = spca(&solve_args(input.to_str().unwrap(), o.to_str().unwrap()));
        assert_eq!(res.status.code(), Some(0));
    }
    let strip = |p: &Path| -> String {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.trim_start().starts_with("\"wall_time\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&o1), strip(&o2));
}

#[test]
fn invalid_sparsity_level_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_mtx(dir.path(), "a.mtx", 5, 6, 3);
    let out = dir.path().join("r.json");
    let mut args = solve_args(input.to_str().unwrap(), out.to_str().unwrap());
    let s_pos = args.iter().position(|a| *a == "--s").unwrap();
    args[s_pos + 1] = "0";
    let res = spca(&args);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("s must be in [1, 6]"));

    args[s_pos + 1] = "7";
    assert_eq!(spca(&args).status.code(), Some(2));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.mtx");
    let res = spca(&["solve", "--input", missing.to_str().unwrap(), "--s", "1"]);
    assert_eq!(res.status.code(), Some(2));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1,2,3\n4,5\n").unwrap();
    let res = spca(&["solve", "--input", bad.to_str().unwrap(), "--s", "1"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 2"));

    let good = write_mtx(dir.path(), "a.mtx", 4, 4, 4);
    let res = spca(&["solve", "--input", good.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let res = spca(&[
        "solve",
        "--input",
        good.to_str().unwrap(),
        "--s",
        "2",
        "--strategy",
        "fast",
    ]);
    assert_eq!(res.status.code(), Some(2));
    let res = spca(&[
        "solve",
        "--input",
        good.to_str().unwrap(),
        "--s",
        "2",
        "--strategy",
        "bat",
        "--batch",
        "99",
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn zero_solution_everywhere_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_mtx(dir.path(), "a.mtx", 6, 5, 5);
    let out = dir.path().join("r.json");
    let res = spca(&[
        "solve",
        "--input",
        input.to_str().unwrap(),
        "--mode",
        "penalty",
        "--gamma",
        "1e9",
        "--starts",
        "4",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
    let doc = read_json(&out);
    assert_eq!(doc["best"]["cardinality"], 0);
    assert_eq!(doc["best"]["objective"].as_f64().unwrap(), 0.0);
}

#[test]
fn csv_input_with_header_and_centering() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("a.csv");
    fs::write(&input, "u,v,w\n1,2,0\n3,2,1\n5,8,2\n").unwrap();
    let out = dir.path().join("r.json");
    let res = spca(&[
        "solve",
        "--input",
        input.to_str().unwrap(),
        "--csv-header",
        "--center",
        "--variance",
        "l1",
        "--s",
        "1",
        "--starts",
        "3",
        "--strategy",
        "sfa",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let doc = read_json(&out);
    assert_eq!(doc["input"]["n"], 3);
    assert_eq!(doc["input"]["centered"], true);
    assert!(doc["best"].get("explained_variance_ratio").is_none());
    // Centered column 1 is (-2, 0, 2) with L1 norm 4, column 2 is (-2, -2, 4) with 8.
    assert_eq!(doc["best"]["objective"].as_f64().unwrap(), 8.0);
}

fn read_csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn variance_sweep_rows() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_mtx(dir.path(), "a.mtx", 20, 16, 6);
    let out = dir.path().join("sweep.csv");
    let res = spca(&[
        "variance-sweep",
        "--input",
        input.to_str().unwrap(),
        "--grid",
        "16",
        "--starts",
        "24",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let (header, rows) = read_csv_rows(&out);
    assert_eq!(header[0], "param");
    assert_eq!(rows.len(), 24);
    for row in &rows {
        let fraction: f64 = row[4].parse().unwrap();
        assert!(fraction > 0.0 && fraction <= 1.0);
        // No sparsity: every start finds the top singular vector.
        assert!(fraction >= 0.999);
        assert!(row[2].contains('e'));
    }

    let res = spca(&[
        "variance-sweep",
        "--input",
        input.to_str().unwrap(),
        "--starts",
        "8",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0));
    let (_, rows) = read_csv_rows(&out);
    assert_eq!(rows.len(), 5 * 8);
    for row in &rows {
        let fraction: f64 = row[4].parse().unwrap();
        assert!(fraction > 0.0 && fraction <= 1.0);
    }
}

#[test]
fn bench_strategies_rows() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_mtx(dir.path(), "a.mtx", 25, 30, 7);
    let out = dir.path().join("bench.csv");
    let res = spca(&[
        "bench-strategies",
        "--input",
        input.to_str().unwrap(),
        "--s",
        "4",
        "--starts",
        "32",
        "--strategies",
        "nai,sfa,bat:8,otf:8",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let (header, rows) = read_csv_rows(&out);
    assert_eq!(header[0], "strategy");
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][0], "nai");
    assert_eq!(rows[0][7].parse::<f64>().unwrap(), 1.0);
    let best = &rows[0][9];
    assert!(rows.iter().all(|r| &r[9] == best));
    let sweeps = |i: usize| rows[i][3].parse::<usize>().unwrap();
    assert!(sweeps(3) <= sweeps(2));
    assert_eq!(rows[2][1], "8");
}

#[test]
fn thread_env_variable() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_mtx(dir.path(), "a.mtx", 8, 8, 8);
    let out = dir.path().join("r.json");
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_spca"))
            .args([
                "solve",
                "--input",
                input.to_str().unwrap(),
                "--s",
                "2",
                "--starts",
                "16",
            ])
            .args(["--output", out.to_str().unwrap()])
            .env("SPCA_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(run("2").status.code(), Some(0));
    assert_eq!(run("zero").status.code(), Some(2));
    assert_eq!(run("0").status.code(), Some(2));
}

#[test]
fn in_process_entry_point() {
    let dir = tempfile::tempdir().unwrap();
    let a = DataMatrix::diag(&[3.0, 1.0]);
    let path = dir.path().join("d.csv");
    let mut text = String::new();
    for i in 0..a.n() {
        let row: Vec<String> = (0..a.p()).map(|j| a.get(i, j).to_string()).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(&path, text).unwrap();
    let out = dir.path().join("r.json");
    let code = spca::cli::run([
        "spca",
        "solve",
        "--input",
        path.to_str().unwrap(),
        "--s",
        "1",
        "--starts",
        "2",
        "--start-scheme",
        "column",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(read_json(&out)["best"]["objective"].as_f64().unwrap(), 3.0);
    assert_eq!(spca::cli::run(["spca", "--help"]), 0);
    assert_eq!(spca::cli::run(["spca", "solve"]), 2);
}
