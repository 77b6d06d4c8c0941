use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn fqaoa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fqaoa"))
        .args(args)
        .current_dir(dir)
        .env_remove("FQAOA_OUT_DIR")
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn fqaoa")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap_or("").to_string()).collect()
}

#[test]
fn gen_is_deterministic_and_refuses_overwrite() {
    let dir = TempDir::new().unwrap();
    let a = fqaoa(dir.path(), &["gen", "--n", "6", "--m", "3", "--seed", "5", "-o", "a.toml"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = fqaoa(dir.path(), &["gen", "--n", "6", "--m", "3", "--seed", "5", "-o", "b.toml"]);
    assert!(b.status.success());
    let ta = fs::read_to_string(dir.path().join("a.toml")).unwrap();
    assert_eq!(ta, fs::read_to_string(dir.path().join("b.toml")).unwrap());
    assert!(ta.contains("C(12, 3) = 220"));

    let again = fqaoa(dir.path(), &["gen", "--n", "6", "--m", "3", "--seed", "5", "-o", "a.toml"]);
    assert_eq!(again.status.code(), Some(2));
    let forced = fqaoa(dir.path(), &["gen", "--n", "6", "--m", "3", "--seed", "6", "-o", "a.toml", "--force"]);
    assert!(forced.status.success());
    assert_ne!(ta, fs::read_to_string(dir.path().join("a.toml")).unwrap());
}

#[test]
fn invalid_configurations_exit_2() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["gen", "--n", "4", "--m", "9"][..],
        &["gen", "--n", "4", "--m", "0"],
        &["run", "--method", "qaoa_plus", "--n", "4", "--m", "2", "--p", "1", "--wdt", "1"],
        &["run", "--method", "fqaoa", "--n", "4", "--m", "2", "--p", "1", "--wdt", "-1"],
        &["run", "--method", "xy_qaoa_2", "--n", "4", "--m", "2", "--p", "1", "--wdt", "1"],
        &["run", "--method", "fqaoa", "--n", "4", "--m", "2", "--p", "1", "--wdt", "1", "--optimize", "--optimizer", "lbfgs"],
    ] {
        let o = fqaoa(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn run_reports_anchor_gate_counts() {
    let dir = TempDir::new().unwrap();
    let o = fqaoa(
        dir.path(),
        &["run", "--method", "fqaoa", "--n", "8", "--m", "4", "--p", "1", "--wdt", "10", "--name", "anchor"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("556 single-qubit, 656 two-qubit"));
    let csv = fs::read_to_string(dir.path().join("anchor.csv")).unwrap();
    assert_eq!(column(&csv, "singles"), ["556"]);
    assert_eq!(column(&csv, "twos"), ["656"]);
    assert_eq!(column(&csv, "status"), ["ok"]);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("anchor.json")).unwrap()).unwrap();
    let feas = json["feasibility"].as_f64().unwrap();
    assert!((feas - 1.0).abs() < 1e-10);
}

#[test]
fn optimized_run_does_not_lose_to_fixed_schedule() {
    let dir = TempDir::new().unwrap();
    let base = ["run", "--method", "fqaoa", "--n", "4", "--m", "2", "--p", "2", "--wdt", "0.5", "--seed", "3"];
    let fixed = fqaoa(dir.path(), &[&base[..], &["--name", "fixed"]].concat());
    assert!(fixed.status.success());
    let opt = fqaoa(dir.path(), &[&base[..], &["--name", "opt", "--optimize"]].concat());
    assert!(opt.status.success(), "{}", String::from_utf8_lossy(&opt.stderr));
    let e = |name: &str| -> f64 {
        let csv = fs::read_to_string(dir.path().join(format!("{name}.csv"))).unwrap();
        column(&csv, "E_p")[0].parse().unwrap()
    };
    assert!(e("opt") <= e("fixed") + 1e-12);
}

#[test]
fn x_qaoa_leaks_out_of_the_feasible_subspace() {
    let dir = TempDir::new().unwrap();
    let o = fqaoa(
        dir.path(),
        &["run", "--method", "x_qaoa", "--n", "4", "--m", "2", "--p", "2", "--wdt", "1", "--name", "x"],
    );
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("x.csv")).unwrap();
    let feas: f64 = column(&csv, "feasibility")[0].parse().unwrap();
    assert!(feas < 1.0 - 1e-6);
}

#[test]
fn run_accepts_config_file_and_instance_file() {
    let dir = TempDir::new().unwrap();
    assert!(fqaoa(dir.path(), &["gen", "--n", "4", "--m", "-2", "--seed", "9", "-o", "inst.toml"]).status.success());
    fs::write(
        dir.path().join("cfg.toml"),
        "method = \"fqaoa\"\nN = 4\nD = 2\nM = -2\np = 3\ndelta_t = 0.4\ninstance_file = \"inst.toml\"\n",
    )
    .unwrap();
    let o = fqaoa(dir.path(), &["run", "--config", "cfg.toml", "--name", "c"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert_eq!(column(&csv, "p"), ["3"]);
    assert_eq!(column(&csv, "M"), ["-2"]);

    fs::write(dir.path().join("bad.toml"), "method = \"fqaoa\"\nN = 4\nM = 2\np = 1\ndelta_t = 1\ncolour = 3\n").unwrap();
    assert_eq!(fqaoa(dir.path(), &["run", "--config", "bad.toml"]).status.code(), Some(2));
    assert_eq!(fqaoa(dir.path(), &["run", "--config", "missing.toml"]).status.code(), Some(1));
}

const PLAN: &str = r#"
methods = ["fqaoa", "x_qaoa", "xy_qaoa_1"]
N = 4
M = 2
p = [1, 2]
delta_t = [0.5]
seeds = [0, 1]
"#;

#[test]
fn sweep_is_byte_deterministic_and_marks_failures() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("plan.toml"), PLAN).unwrap();
    let a = fqaoa(dir.path(), &["sweep", "plan.toml", "-o", "a.csv", "-j", "1"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = fqaoa(dir.path(), &["sweep", "plan.toml", "-o", "b.csv", "-j", "3"]);
    assert!(b.status.success());
    let ta = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(ta, fs::read(dir.path().join("b.csv")).unwrap());

    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().count(), 1 + 12);
    let status = column(&text, "status");
    let methods = column(&text, "method");
    for (m, s) in methods.iter().zip(&status) {
        // the XY baselines only run with optimized angles
        if m == "xy_qaoa_1" {
            assert!(s.trim_start_matches('"').starts_with("error"), "{s}");
        } else {
            assert_eq!(s, "ok");
        }
    }
    assert!(stdout(&a).contains("12 rows (4 failed)"));
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("empty.toml"), "methods = [\"fqaoa\"]\nN = 4\nM = 2\np = []\ndelta_t = [1.0]\nseeds = [0]\n")
        .unwrap();
    let o = fqaoa(dir.path(), &["sweep", "empty.toml"]);
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("empty.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("method,N,D,M,p,delta_t"));
}

#[test]
fn out_dir_env_sets_default_location() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fqaoa"))
        .args(["gen", "--n", "4", "--m", "1"])
        .current_dir(dir.path())
        .env("FQAOA_OUT_DIR", "results/inst")
        .env("RUST_LOG", "error")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("results/inst/instance_N4_D2_M1_s0.toml").exists());
}

#[test]
fn certify_passes_and_catches_extra_rung_swaps() {
    let dir = TempDir::new().unwrap();
    let ok = fqaoa(dir.path(), &["certify"]);
    assert!(ok.status.success());
    let out = stdout(&ok);
    assert!(out.contains("anchor N=8 D=2 M=4 p=1: 556 single-qubit and 656 two-qubit gates"));
    assert!(out.contains("36 configurations certified"));

    let bad = fqaoa(dir.path(), &["certify", "--n", "4", "--corrupt-rung-fswaps"]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("U_m"));
}

#[test]
fn analyze_aggregates_over_seeds() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("p.toml"),
        "methods = [\"fqaoa\"]\nN = 4\nM = 2\np = [1, 2, 4, 8]\ndelta_t = [0.5]\nseeds = [0, 1, 2]\n",
    )
    .unwrap();
    assert!(fqaoa(dir.path(), &["sweep", "p.toml"]).status.success());
    let o = fqaoa(dir.path(), &["analyze", "p.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("p_summary.csv")).unwrap();
    assert_eq!(column(&summary, "runs"), ["3", "3", "3", "3"]);
    assert_eq!(column(&summary, "p"), ["1", "2", "4", "8"]);
    let fits = fs::read_to_string(dir.path().join("p_summary_fits.csv")).unwrap();
    assert_eq!(column(&fits, "points"), ["4"]);
    let slope: f64 = column(&fits, "slope")[0].parse().unwrap();
    assert!(slope.is_finite());
}
