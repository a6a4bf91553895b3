use std::path::Path;
use std::process::{Command, Output};

use tactics_lab::examples;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tactics-lab"))
}

fn run_in(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut c = bin();
    c.current_dir(dir).args(args);
    match threads {
        Some(t) => c.env("TACTICS_LAB_THREADS", t),
        None => c.env_remove("TACTICS_LAB_THREADS"),
    };
    c.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_STOCH: &str = r#"
name = "small"
kind = "exec-stoch"
seed = 11

[exec-stoch]
x0 = 800.0
horizon = 500
liquidity = 25.0
zeta = 0.1
beta = 0.5
v0 = [20.0, 25.0, 30.0]
d = { start = 8, stop = 12, step = 2 }
n_mc = 300
volume = { type = "weibull", lambda = 11.79, k = 1.21 }
kernel = { type = "power", g = 1.0, gamma = 0.5 }
uniform_kernel = { type = "power", g = 1.0, gamma = 0.5 }
"#;

#[test]
fn empty_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "name = \"c\"\nkind = \"compare\"\n[compare]\nboundary = \"MP\"\nq = []\nq_a = 0.6\nhorizon = 10\ndepths = [1]\n",
    )
    .unwrap();
    let o = run_in(dir.path(), &["run", "c.toml"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("compare.q"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn typo_reports_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "name = \"c\"\nkind = \"allocate\"\n[allocate]\npositions = [\"below-lower\"]\npwt_dpeth = 2\n",
    )
    .unwrap();
    let o = run_in(dir.path(), &["run", "c.toml"], None);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("line 5") && e.contains("pwt_dpeth"), "{e}");
}

#[test]
fn invalid_parameters_fail_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "name = \"c\"\nkind = \"pt-eval\"\n[pt-eval]\nboundary = \"MO\"\nq = [0.9, 0.3]\nq_a = 0.5\nhorizon = 4\n",
    )
    .unwrap();
    let o = run_in(dir.path(), &["run", "c.toml"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("q=0.3"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn oversized_order_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let text = examples::find("fig5-det-cost")
        .unwrap()
        .source
        .replace("x0 = 800.0", "x0 = 20000.0");
    std::fs::write(dir.path().join("c.toml"), text).unwrap();
    let o = run_in(dir.path(), &["run", "c.toml"], None);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn unwritable_output_is_an_internal_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("blocker"), "").unwrap();
    let o = run_in(
        dir.path(),
        &["run", "--example", "allocation", "--out", "blocker/sub"],
        None,
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn bad_thread_cap_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["run", "--example", "allocation"],
        Some("zero"),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn manifest_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SMALL_STOCH).unwrap();
    let o = run_in(
        dir.path(),
        &["run", "s.toml", "--seed", "99", "--out", "a"],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = std::fs::read_to_string(dir.path().join("a/small.manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 99"), "{manifest}");
    assert!(manifest.contains("version = \"0.1.0\""), "{manifest}");

    let o = run_in(
        dir.path(),
        &["run", "a/small.manifest.toml", "--out", "b"],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["small.csv", "small.dat", "small.summary.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SMALL_STOCH).unwrap();
    for (t, out) in [("1", "one"), ("4", "four")] {
        let o = run_in(dir.path(), &["run", "s.toml", "--out", out], Some(t));
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = std::fs::read(dir.path().join("one/small.csv")).unwrap();
    let b = std::fs::read(dir.path().join("four/small.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn list_examples_names_every_bundle() {
    let o = bin().arg("list-examples").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for ex in examples::ALL {
        assert!(text.contains(ex.name), "{}", ex.name);
    }
    for fig in 1..=7 {
        assert!(text.contains(&format!("fig{fig}-")), "figure {fig}");
    }
}

#[test]
fn figure_three_costs_cross() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["run", "--example", "fig3-total-cost"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(dir.path().join("out/fig3-total-cost.csv")).unwrap();
    let head = r.headers().unwrap().clone();
    let pt = head.iter().position(|h| h == "C_PT").unwrap();
    let k1 = head.iter().position(|h| h == "C_PWT_K1").unwrap();
    let diffs: Vec<f64> = r
        .records()
        .map(|rec| {
            let rec = rec.unwrap();
            rec[pt].parse::<f64>().unwrap() - rec[k1].parse::<f64>().unwrap()
        })
        .collect();
    assert_eq!(diffs.len(), 91);
    assert!(diffs.first().unwrap() > &0.0 && diffs.last().unwrap() < &0.0);
}
