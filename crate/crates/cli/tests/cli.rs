use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str], config: Option<&str>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_znwedge"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(text) = config {
        let path = out.with_extension("cfg");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

const QUICK: &str = "quadrature.level = 0\nquadrature.max_level = 0\nfusion.eta = closed-form\n";

#[test]
fn axioms_pass_for_n3_and_n4() {
    let tmp = TempDir::new().unwrap();
    for n in [3, 4] {
        let out = tmp.path().join(format!("n{n}"));
        let o = run(&["axioms"], Some(&format!("n = {n}\n")), &out);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let rows = data_rows(&read(&out, "axioms.csv"));
        assert!(rows.iter().all(|r| r[7] == "true"));
        let unitarity = rows.iter().filter(|r| r[0] == "unitarity").count();
        assert_eq!(unitarity, ((n - 1) * (n - 1)) as usize);
        let poles = data_rows(&read(&out, "poles.csv"));
        assert!(poles.iter().any(|r| r[1] == "1" && r[2] == "1" && r[5] == "s"));
        if n == 4 {
            assert!(poles.iter().any(|r| r[8] == "2" && r[6].is_empty()));
        }
        let json: serde_json::Value = serde_json::from_str(&read(&out, "axioms.json")).unwrap();
        assert_eq!(json["pass"], true);
    }
}

#[test]
fn perturbed_s_matrix_fails_the_axioms() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["axioms", "--perturb-s", "1e-3"], None, tmp.path());
    assert_eq!(code(&o), 1);
    let rows = data_rows(&read(tmp.path(), "axioms.csv"));
    assert!(rows.iter().any(|r| r[0] == "unitarity" && r[7] == "false"));
}

#[test]
fn fusion_tables_have_one_row_per_process() {
    let tmp = TempDir::new().unwrap();
    for (n, rows) in [(2, 0), (3, 2), (4, 6)] {
        let out = tmp.path().join(format!("n{n}"));
        let o = run(&["fusion"], Some(&format!("n = {n}\nfusion.eta = closed-form\n")), &out);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let text = read(&out, "fusion.csv");
        assert!(text.starts_with("N,alpha,beta,gamma,theta_ab,theta_ba,pole_im,"));
        assert_eq!(data_rows(&text).len(), rows);
    }
    // N = 3: θ_11 = 2π/3 and η = i√(2π√3).
    let row = &data_rows(&read(&tmp.path().join("n3"), "fusion.csv"))[0];
    let pole: f64 = row[6].parse().unwrap();
    let eta_im: f64 = row[10].parse().unwrap();
    assert!((pole - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    assert!((eta_im - (2.0 * std::f64::consts::PI * 3f64.sqrt()).sqrt()).abs() < 1e-12);
}

#[test]
fn weak_commutator_default_run_passes() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["weak-commutator"], None, tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = data_rows(&read(tmp.path(), "summary.csv"));
    assert_eq!(summary.len(), 5);
    assert!(summary.iter().all(|r| r[15] == "true" && r[1] == "1"));
    assert_eq!(data_rows(&read(tmp.path(), "plot.csv")).len(), 15);
    assert!(data_rows(&read(tmp.path(), "controls.csv"))
        .iter()
        .all(|r| r[4] == "true"));
    assert!(tmp.path().join("reports/single-types.json").exists());
    let json: serde_json::Value = serde_json::from_str(&read(tmp.path(), "weak.json")).unwrap();
    assert_eq!(json["pass"], true);
    let kappa = json["fit"]["kappa"][0].as_f64().unwrap();
    assert!((kappa - 2.0 * std::f64::consts::PI).abs() < 1e-6);
}

#[test]
fn zero_eta_fails_weak_locality() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["weak-commutator", "--zero-eta"], Some(QUICK), tmp.path());
    assert_eq!(code(&o), 1);
    assert!(data_rows(&read(tmp.path(), "summary.csv"))
        .iter()
        .all(|r| r[15] == "false"));
}

#[test]
fn empty_request_list_still_reports() {
    let tmp = TempDir::new().unwrap();
    let cfg = format!("{QUICK}weak.default_pairs = false\n");
    let o = run(&["weak-commutator"], Some(&cfg), tmp.path());
    assert_eq!(code(&o), 0);
    assert_eq!(read(tmp.path(), "summary.csv").lines().count(), 1);
    assert_eq!(data_rows(&read(tmp.path(), "controls.csv")).len(), 2);
}

#[test]
fn custom_pairs_run_and_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = format!(
        "{QUICK}weak.default_pairs = false\npair.mine.f = 1:0:-1:0.5:1\npair.mine.g = 2:0.2:1.1:0.5:1\n\
         pair.moved.f = 1:0.5:-1:0.5:1:0.2\npair.moved.g = 2:0.7:1.1:0.5:1\npair.moved.left = 0.5:0\npair.moved.right = 0.5:0\n"
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = run(&["weak-commutator"], Some(&cfg), dir);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in [
        "summary.csv",
        "plot.csv",
        "controls.csv",
        "transforms.csv",
        "weak.json",
        "reports/mine.json",
    ] {
        assert_eq!(read(&a, name), read(&b, name), "{name} differs between runs");
    }
    let labels: Vec<String> = data_rows(&read(&a, "summary.csv"))
        .into_iter()
        .map(|r| r[0].clone())
        .collect();
    assert_eq!(labels, ["mine", "moved"]);
    // Two pairs, one type each in f and g, two signs, 41 rapidities.
    assert_eq!(data_rows(&read(&a, "transforms.csv")).len(), 2 * 2 * 2 * 41);
}

#[test]
fn pair_outside_its_wedge_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = format!("{QUICK}pair.bad.f = 1:0:1:0.5:1\npair.bad.g = 2:0.2:1.1:0.5:1\n");
    let o = run(&["weak-commutator"], Some(&cfg), tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("pair bad"));
}

#[test]
fn unknown_keys_and_missing_files_are_errors() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["fusion"], Some("colour = blue\n"), &tmp.path().join("x"));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key colour"));
    let o = Command::new(env!("CARGO_BIN_EXE_znwedge"))
        .args(["axioms", "--config", "/nonexistent/run.cfg"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn repeated_runs_write_identical_files() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        assert_eq!(code(&run(&["axioms"], Some("n = 5\n"), dir)), 0);
        assert_eq!(
            code(&run(&["fusion"], Some("n = 5\nfusion.eta = closed-form\n"), dir)),
            0
        );
    }
    for name in ["axioms.csv", "poles.csv", "axioms.json", "fusion.csv", "fusion.json"] {
        assert_eq!(read(&a, name), read(&b, name), "{name} differs between runs");
    }
}

#[test]
fn refine_flag_overrides_the_verdict_level() {
    let tmp = TempDir::new().unwrap();
    let cfg = format!("{QUICK}weak.default_pairs = false\npair.p.f = 1:0:-1:0.5:1\npair.p.g = 2:0.2:1.1:0.5:1\n");
    let o = run(&["weak-commutator", "--refine", "1"], Some(&cfg), tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let levels: Vec<String> = data_rows(&read(tmp.path(), "plot.csv"))
        .into_iter()
        .map(|r| r[1].clone())
        .collect();
    assert_eq!(levels, ["0", "1"]);
    assert_eq!(data_rows(&read(tmp.path(), "summary.csv"))[0][1], "1");
}
