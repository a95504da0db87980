use std::path::PathBuf;

use dkl_cli::{run, EXIT_NUMERICAL, EXIT_USAGE};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dkl-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Runs `dkl args... --out <tmp>` and returns the exit code and CSV rows.
fn csv(name: &str, args: &[&str]) -> (i32, Vec<Vec<String>>) {
    let path = scratch(name);
    let mut full = vec!["dkl"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path.to_str().unwrap()]);
    let code = run(full);
    let text = std::fs::read_to_string(&path).unwrap_or_default();
    let rows = text.lines().map(|l| l.split(',').map(String::from).collect()).collect();
    (code, rows)
}

fn field(rows: &[Vec<String>], row: usize, col: &str) -> String {
    let i = rows[0].iter().position(|h| h == col).unwrap();
    rows[row][i].clone()
}

fn num(rows: &[Vec<String>], row: usize, col: &str) -> f64 {
    field(rows, row, col).parse().unwrap()
}

#[test]
fn solve_q_zero_killing_roots() {
    let (code, rows) = csv("sq1.csv", &["solve-q", "--alpha", "1.5", "--kappa", "0"]);
    assert_eq!(code, 0);
    assert_eq!(rows[0].join(","), "alpha,beta1,beta2,beta3,beta4,kappa,q,residual");
    assert!((num(&rows, 1, "q") - 0.5).abs() < 1e-12);

    let (code, rows) = csv("sq2.csv", &["solve-q", "--alpha", "0.5", "--kappa", "0"]);
    assert_eq!(code, 0);
    assert_eq!(num(&rows, 1, "q"), 0.0);
}

#[test]
fn solve_q_round_trip_through_hke() {
    let (_, rows) = csv("sq3.csv", &["solve-q", "--alpha", "1", "--beta", "1,0,0,0", "--kappa", "0.5"]);
    let q = num(&rows, 1, "q");
    let (_, hke) = csv(
        "hke-kappa.csv",
        &["hke", "--alpha", "1", "--beta", "1,0,0,0", "--kappa", "0.5", "--t", "1", "--x", "0.5", "--y", "2"],
    );
    assert_eq!(num(&hke, 1, "q"), q);
}

#[test]
fn hke_row() {
    let (code, rows) = csv(
        "hke.csv",
        &["hke", "--alpha", "1", "--beta", "1,0,0,0", "--q", "0.5", "--t", "1", "--x", "0.5", "--y", "2"],
    );
    assert_eq!(code, 0);
    assert_eq!(field(&rows, 1, "regime"), "one-jump");
    // stable factor min(1, 1 * 1.5^-2) and survival (0.5 ∧ 1)^0.5
    assert!((num(&rows, 1, "stable") - 1.0 / 2.25).abs() < 1e-15);
    assert!((num(&rows, 1, "survival_x") - 0.5f64.sqrt()).abs() < 1e-15);
    assert_eq!(num(&rows, 1, "survival_y"), 1.0);
}

#[test]
fn map_tags_and_symmetry() {
    let args = [
        "map",
        "--dim",
        "2",
        "--alpha",
        "1",
        "--beta",
        "0.5,2,0,0",
        "--x",
        "0,0.001",
        "--t",
        "0.0001",
        "--q",
        "0.5",
        "--n",
        "5",
        "--extent",
        "4",
    ];
    let (code, rows) = csv("map.csv", &args);
    assert_eq!(code, 0);
    assert_eq!(rows.len(), 26);
    // first row block: lowest height; far cells hug the boundary
    assert_eq!(field(&rows, 1, "tag"), "two-jump");
    assert_eq!(field(&rows, 25, "tag"), "one-jump");
    for block in 0..5 {
        for i in 0..5 {
            let a = 1 + block * 5 + i;
            let b = 1 + block * 5 + (4 - i);
            assert_eq!(rows[a][2..], rows[b][2..]);
        }
    }
}

#[test]
fn green_row_and_free_infinity() {
    let (code, rows) = csv("green.csv", &["green", "--alpha", "1.5", "--x", "1", "--y", "3", "--q", "0.5"]);
    assert_eq!(code, 0);
    assert_eq!(field(&rows, 1, "free"), "inf");
    let (_, rows) = csv("green2.csv", &["green", "--dim", "2", "--x", "0,1", "--y", "1,2", "--q", "0.5"]);
    assert_eq!(field(&rows, 1, "case"), "below-threshold");
    assert!(num(&rows, 1, "free").is_finite());
}

#[test]
fn config_file_and_flag_override() {
    let cfg = scratch("run.cfg");
    std::fs::write(&cfg, "# sweep point\nalpha = 1.5\nkappa = 0\n").unwrap();
    let c = cfg.to_str().unwrap();
    let (code, rows) = csv("cfg1.csv", &["solve-q", "--config", c]);
    assert_eq!(code, 0);
    assert!((num(&rows, 1, "q") - 0.5).abs() < 1e-12);
    let (_, rows) = csv("cfg2.csv", &["solve-q", "--config", c, "--alpha", "0.5"]);
    assert_eq!(num(&rows, 1, "alpha"), 0.5);

    std::fs::write(&cfg, "alpha = 1.5\nwhatever = 3\n").unwrap();
    assert_eq!(run(["dkl", "solve-q", "--config", c]), EXIT_USAGE);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(["dkl", "check", "no_such_lemma"]), EXIT_USAGE);
    assert_eq!(run(["dkl", "frobnicate"]), EXIT_USAGE);
    assert_eq!(run(["dkl", "hke", "--t", "1", "--x", "1"]), EXIT_USAGE);
    assert_eq!(run(["dkl", "solve-q", "--alpha", "2.5"]), EXIT_USAGE);
    assert_eq!(run(["dkl", "hke", "--dim", "2", "--t", "1", "--x", "1", "--y", "0,1", "--q", "1"]), EXIT_USAGE);
    assert_eq!(run(["dkl", "check", "comp_AB", "--budget", "0"]), EXIT_USAGE);
}

#[test]
fn numerical_failures_exit_one() {
    let code = run(["dkl", "solve-q", "--alpha", "1", "--beta", "1,0,0,0", "--kappa", "1", "--tol", "1e-17"]);
    assert_eq!(code, EXIT_NUMERICAL);
}

#[test]
fn passing_check_exits_zero() {
    let (code, rows) = csv("check.csv", &["check", "slowly_varying", "--budget", "20"]);
    assert_eq!(code, 0);
    assert_eq!(field(&rows, 1, "pass"), "true");
}

#[test]
fn check_output_is_deterministic() {
    let args = ["check", "cal_00,bessel_bound", "--budget", "40", "--seed", "3"];
    let (c1, a) = csv("det1.csv", &args);
    let (c2, b) = csv("det2.csv", &args);
    assert_eq!(c1, c2);
    assert_eq!(a, b);
    assert_eq!(a[0].join(","), "id,region,sidedness,samples,excluded,min_ratio,max_ratio,required,ceiling,pass");
    // one summary row per id plus its regions
    assert_eq!(a.iter().filter(|r| r[1].is_empty()).count(), 2);
}
