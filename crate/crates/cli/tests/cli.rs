use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hodgemap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hodgemap")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hodgemap(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).count()
}

#[test]
fn generate_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let torus = dir.path().join("torus.csv");
    let stdout = ok(&["generate", "torus", "50", "--out", torus.to_str().unwrap()]);
    assert!(stdout.contains("2500"));
    assert_eq!(data_rows(&torus), 2500);
    let first = fs::read_to_string(&torus).unwrap();
    assert_eq!(first.lines().next().unwrap().split(',').count(), 3);

    let circle = dir.path().join("circle.csv");
    ok(&["generate", "circle", "4", "--out", circle.to_str().unwrap()]);
    assert_eq!(data_rows(&circle), 4);

    let sphere = dir.path().join("sphere.csv");
    ok(&["generate", "sphere", "2", "--out", sphere.to_str().unwrap()]);
    let text = fs::read_to_string(&sphere).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 4);
    let parse = |r: &str| r.split(',').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>();
    assert_eq!(parse(rows[0]), parse(rows[2]));

    assert!(!hodgemap(&["generate", "klein", "10", "--out", "x.csv"]).status.success());
}

#[test]
fn fit_circle_and_query() {
    let dir = tempfile::tempdir().unwrap();
    let points = dir.path().join("circle.csv");
    ok(&["generate", "circle", "80", "--out", points.to_str().unwrap()]);
    let out = dir.path().join("run");
    let summary = ok(&[
        "fit",
        points.to_str().unwrap(),
        "--k-order",
        "0",
        "--knn",
        "10",
        "--out-dir",
        out.to_str().unwrap(),
        "--svg",
        "--save-operator",
    ]);
    assert!(summary.contains("intrinsic_dim = 1"));
    assert!(summary.contains("lambda_4"));
    let emb = fs::read_to_string(out.join("embedding.csv")).unwrap();
    let mut lines = emb.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 7);
    assert_eq!(lines.count(), 80);
    let diag = fs::read_to_string(out.join("diagonal.csv")).unwrap();
    assert!(diag.starts_with("index,eta_1_1,eta_2_2,eta_3_3\n"));
    for f in ["frames.txt", "eigenvalues.csv", "spectrum.txt", "operator.txt", "summary.txt", "diagonal.svg"] {
        assert!(out.join(f).exists(), "{f} missing");
    }

    let spec = out.join("spectrum.txt");
    let spec = spec.to_str().unwrap();
    let a: f64 = ok(&["affinity", spec, "3", "4"]).trim().parse().unwrap();
    assert!(a > 0.0);
    let d: f64 = ok(&["distance", spec, "3", "3"]).trim().parse().unwrap();
    assert_eq!(d, 0.0);
    assert!(!hodgemap(&["affinity", spec, "3", "80"]).status.success());

    let re = dir.path().join("re");
    ok(&["embed", spec, "--m", "2", "--tm", "2", "--out-dir", re.to_str().unwrap()]);
    let header = fs::read_to_string(re.join("embedding.csv")).unwrap();
    assert!(header.starts_with("index,eta_1_1,eta_1_2,eta_2_2\n"));
}

#[test]
fn fit_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let points = dir.path().join("torus.csv");
    ok(&["generate", "torus", "12", "--out", points.to_str().unwrap()]);
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        ok(&["--threads", threads, "fit", points.to_str().unwrap(), "--knn", "12", "--out-dir", out.to_str().unwrap()]);
        out
    };
    let (a, b) = (run("1", "a"), run("4", "b"));
    for f in ["frames.txt", "eigenvalues.csv", "spectrum.txt", "embedding.csv", "diagonal.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn fit_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let points = dir.path().join("circle.csv");
    ok(&["generate", "circle", "20", "--out", points.to_str().unwrap()]);
    let p = points.to_str().unwrap();
    let out = dir.path().to_str().unwrap();
    let zero_t = hodgemap(&["fit", p, "--t", "0", "--knn", "5", "--out-dir", out]);
    assert!(!zero_t.status.success());
    assert!(String::from_utf8_lossy(&zero_t.stderr).contains("bandwidth"));
    assert!(!hodgemap(&["fit", p, "--knn", "20", "--out-dir", out]).status.success());
    assert!(!hodgemap(&["fit", p, "--knn", "5", "--k-order", "3", "--out-dir", out]).status.success());
    assert!(!hodgemap(&["fit", "/nonexistent/points.csv"]).status.success());

    let sphere = dir.path().join("sphere.csv");
    ok(&["generate", "sphere", "10", "--out", sphere.to_str().unwrap()]);
    let s = sphere.to_str().unwrap();
    let rejected = hodgemap(&["fit", s, "--knn", "8", "--out-dir", out]);
    assert!(String::from_utf8_lossy(&rejected.stderr).contains("--degenerate borrow"));
    ok(&["fit", s, "--knn", "8", "--degenerate", "borrow", "--out-dir", out]);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let points = dir.path().join("circle.csv");
    ok(&["generate", "circle", "40", "--out", points.to_str().unwrap()]);
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# circle settings\nk = 0\nknn = 6\nm = 2\n").unwrap();
    let out = dir.path().join("o");
    let p = points.to_str().unwrap();
    let c = cfg.to_str().unwrap();
    let o = out.to_str().unwrap();
    ok(&["fit", p, "--config", c, "--m", "4", "--out-dir", o]);
    let header = fs::read_to_string(out.join("diagonal.csv")).unwrap();
    assert!(header.starts_with("index,eta_1_1,eta_2_2,eta_3_3\n"));
    let emb = fs::read_to_string(out.join("embedding.csv")).unwrap();
    assert_eq!(emb.lines().next().unwrap().split(',').count(), 11);
    fs::write(&cfg, "knn: 6\n").unwrap();
    assert!(!hodgemap(&["fit", p, "--config", c, "--out-dir", o]).status.success());
}

#[test]
fn baseline_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let points = dir.path().join("circle.csv");
    ok(&["generate", "circle", "50", "--out", points.to_str().unwrap()]);
    let out = dir.path().join("dm.csv");
    let stdout = ok(&["baseline", points.to_str().unwrap(), "--m", "2", "--out", out.to_str().unwrap()]);
    assert!(stdout.contains("epsilon"));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("index,psi_1,psi_2\n"));
    assert_eq!(text.lines().count(), 51);

    let report = ok(&["eval", "convergence"]);
    assert!(report.starts_with("[PASS] 2."));
    assert!(!hodgemap(&["eval", "everything"]).status.success());
}
