use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn steiner(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steiner"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

const SQUARE: &str = r#"
backend = { kind = "euclidean", dim = 3 }
thickness = { kind = "constant", value = 0.2 }
[region]
lower = [0.0, 0.0]
upper = [1.0, 1.0]
"#;

#[test]
fn negative_resolution_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SQUARE}cells = [-4, 8]\n"));
    let out = dir.path().join("out");
    let run = steiner(&["solve", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(run.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("region.cells[0]"), "{stderr}");
    let r = report(&out);
    assert_eq!(r["status"], "error");
    assert_eq!(r["error"]["kind"], "validation");
    assert!(r["error"]["message"].as_str().unwrap().contains("region.cells[0]"));
}

#[test]
fn too_few_cells_and_unknown_keys_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &format!("{SQUARE}cells = [8, 3]\n"));
    let run = steiner(&["fields", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("region.cells[1]"));

    let cfg = write_config(dir.path(), &format!("{SQUARE}cells = [8, 8]\n[solver]\neps_mni = 1.0\n"));
    let run = steiner(&["solve", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("solver.eps_mni"));
}

#[test]
fn missing_thickness_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("thickness_file = \"absent.csv\"\n{SQUARE}cells = [8, 8]\n"));
    let out = dir.path().join("out");
    let run = steiner(&["solve", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(run.status.code(), Some(2));
    assert!(report(&out)["error"]["message"].as_str().unwrap().contains("thickness_file"));
}

#[test]
fn thickness_file_is_read_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("node,h\n");
    for i in 0..81 {
        csv.push_str(&format!("{i},0.5\n"));
    }
    fs::write(dir.path().join("h.csv"), csv).unwrap();
    let cfg = write_config(dir.path(), &format!("thickness_file = \"h.csv\"\n{SQUARE}cells = [8, 8]\n"));
    let out = dir.path().join("out");
    let run = steiner(&["solve", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let volume = report(&out)["result"]["volume"].as_f64().unwrap();
    assert!((volume - 1.0).abs() < 1e-12);
}

#[test]
fn nonconvergence_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "connection = {{ kind = \"exact\", potential = {{ kind = \"sin_product\", amplitude = 2.0, wavenumbers = [6.0, 6.0] }} }}\n{SQUARE}cells = [16, 16]\n[solver]\nmax_newton = 1\n"
    );
    let cfg = write_config(dir.path(), &body);
    let out = dir.path().join("out");
    let run = steiner(&["solve", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(run.status.code(), Some(3));
    let r = report(&out);
    assert_eq!(r["error"]["kind"], "nonconvergence");
    assert!(r["error"]["details"]["residual"].as_f64().unwrap() > 0.0);
}

#[test]
fn experiment_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("helix_synthetic.toml");
    let run = steiner(&["solve", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn report_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "connection = {{ kind = \"constant\", components = [0.1, -0.2] }}\n{SQUARE}cells = [16, 16]\n[initial]\nrandom_amplitude = 0.1\n"
    );
    let cfg = write_config(dir.path(), &body);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for (out, seed, threads) in [(&a, "5", "1"), (&b, "5", "2"), (&c, "6", "1")] {
        let run = steiner(
            &["solve", "--config", cfg.to_str().unwrap(), "--seed", seed, "--threads", threads],
            out,
        );
        assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    }
    let read = |p: &Path, f: &str| fs::read(p.join(f)).unwrap();
    assert_eq!(read(&a, "report.json"), read(&b, "report.json"));
    assert_eq!(read(&a, "sheets.csv"), read(&b, "sheets.csv"));
    assert_ne!(read(&a, "report.json"), read(&c, "report.json"));
    assert!(a.join("timing.json").exists());
}

#[test]
fn verify_on_euclidean_square_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("verify.toml");
    let run = steiner(&["verify", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let r = report(&out);
    assert_eq!(r["result"]["passed"], true);
    let names: Vec<&str> = r["result"]["invariants"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"steiner_consistency"));
    assert_eq!(r["result"]["checks"].as_array().unwrap().len(), 3);
    assert!(String::from_utf8_lossy(&run.stdout).contains("[PASS]"));
}

#[test]
fn verify_rejects_unknown_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let run = steiner(&["verify", "--check", "no_such_check"], &out);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("--check"));
}

#[test]
fn solve_recovers_manufactured_potential() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("solve_manufactured.toml");
    let run = steiner(&["solve", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let r = report(&out);
    let err = r["result"]["reference_error"].as_f64().unwrap();
    assert!(err <= 5e-3, "error {err}");
    assert!(r["result"]["area"].as_f64().unwrap() <= r["result"]["initial_area"].as_f64().unwrap());
    let sheets = fs::read_to_string(out.join("sheets.csv")).unwrap();
    assert!(sheets.starts_with("node,lower,upper\n"));
    assert_eq!(sheets.lines().count(), 1 + 129 * 129);
}

#[test]
fn helix_finds_a_nonzero_winding() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("helix_synthetic.toml");
    let run = steiner(&["helix", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let r = report(&out);
    assert!((r["result"]["holonomy"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(r["result"]["best"]["best_m"], -2);
    let windings = fs::read_to_string(out.join("windings.csv")).unwrap();
    assert!(windings.starts_with("m,area\n"));
    assert_eq!(windings.lines().count(), 6);
    let scan = fs::read_to_string(out.join("winding_scan.csv")).unwrap();
    assert_eq!(scan.lines().count(), 16);
}

#[test]
fn fields_writes_radial_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("fields_ch2.toml");
    let run = steiner(&["fields", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = fs::read_to_string(out.join("fields.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,theta,k,w_norm,g_tt,g_tth,g_thth,g_tph,g_thph,g_phph"
    );
    assert_eq!(lines.count(), 64);
    let first: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    let (t, theta) = (first[0], first[1]);
    let k = (theta.cos().powi(2) * (2.0 * t).cosh().powi(2) + theta.sin().powi(2) * t.cosh().powi(2)).sqrt();
    assert!((first[2] - k).abs() < 1e-12);
    assert_eq!(first[4], 1.0);
}

#[test]
fn diagnose_writes_beta_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("diagnose_ch2.toml");
    let run = steiner(&["diagnose", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let r = report(&out);
    assert!(r["result"]["level_inequality_violation"].as_f64().unwrap() <= 0.0);
    assert_eq!(r["result"]["monotone"], true);
    let beta = fs::read_to_string(out.join("beta.csv")).unwrap();
    assert!(beta.starts_with("lambda,rho,beta,hausdorff\n"));
    assert_eq!(beta.lines().count(), 1 + 5 * 4);
    let ell = fs::read_to_string(out.join("ellipticity.csv")).unwrap();
    let mut lines = ell.lines();
    assert_eq!(lines.next().unwrap(), "simplex,mu1,mu2,ddf,proj,grad_norm_sq");
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let (mu1, mu2, ddf) = (v[1], v[2], v[3]);
        let base = v[4] / (1.0 + v[5]).sqrt();
        assert!(mu1 * base <= ddf * (1.0 + 1e-12) && ddf <= mu2 * base * (1.0 + 1e-12), "{line}");
    }
}
