use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trace-bounds"))
}

fn run_config(dir: &Path, toml: &str) -> (Output, Option<Value>) {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, toml).unwrap();
    let out_dir = dir.join("out");
    let out = bin().arg("run").arg(&cfg).arg("--output").arg(&out_dir).output().unwrap();
    let report = std::fs::read_to_string(out_dir.join("report.json"))
        .ok()
        .map(|s| serde_json::from_str(&s).unwrap());
    (out, report)
}

fn csv_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

#[test]
fn disk_sobolev_run() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = run_config(
        dir.path(),
        "tasks = [\"sobolev\", \"battery\"]\nh = [0.04, 0.02]\n[domain]\nkind = \"disk\"\nradius = 1.0\n",
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report.unwrap();
    assert_eq!(r["passed"], true);
    let levels = r["sobolev"]["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 2);
    for l in levels {
        assert!((l["b"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    }
    let nodes = levels[1]["interior_nodes"].as_u64().unwrap() + levels[1]["boundary_nodes"].as_u64().unwrap();
    let table = csv_lines(&dir.path().join("out/normal_field.csv"));
    assert_eq!(table[0], "x,y,boundary,n_x,n_y,div_n");
    assert_eq!(table.len() as u64, nodes + 1);
    let battery = csv_lines(&dir.path().join("out/battery.csv"));
    assert_eq!(battery.len(), r["battery"]["trace"].as_array().unwrap().len() + 1);
}

#[test]
fn ball_ld_run() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = run_config(
        dir.path(),
        "tasks = [\"ld\"]\nh = [0.1]\nnorm = \"vec2\"\ndump_fields = false\n[domain]\nkind = \"ball\"\nradius = 1.0\n",
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report.unwrap();
    let level = &r["ld"]["levels"][0];
    assert!((level["a"].as_f64().unwrap() - 3.0 * 2f64.sqrt()).abs() < 1e-12);
    let ld = csv_lines(&dir.path().join("out/ld_bounds.csv"));
    assert_eq!(ld.len(), 2);
    assert!(ld[1].starts_with("ball,vec2,3,0.1,"));
    assert!(!dir.path().join("out/ek_sigma_k1.bin").exists());
}

#[test]
fn rerun_is_byte_identical() {
    let toml = "tasks = [\"sobolev\", \"matnorm-verify\", \"optimal-bc-sweep\"]\nh = [0.1]\nsamples = 500\nsweep_steps = 7\n[domain]\nkind = \"disk\"\nradius = 1.0\n";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_config(a.path(), toml);
    run_config(b.path(), toml);
    let ra = std::fs::read_to_string(a.path().join("out/report.json")).unwrap();
    let rb = std::fs::read_to_string(b.path().join("out/report.json")).unwrap();
    // Only the output directory differs.
    let strip = |s: &str, d: &Path| s.replace(d.join("out").to_str().unwrap(), "OUT");
    assert_eq!(strip(&ra, a.path()), strip(&rb, b.path()));
    for f in ["normal_field.bin", "equivalence_n3.csv", "theta_sweep.csv"] {
        assert_eq!(std::fs::read(a.path().join("out").join(f)).unwrap(), std::fs::read(b.path().join("out").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    for bad in [
        "tasks = [\"sobolev\"]\nh = [0.1\n",
        "tasks = [\"sobolev\"]\nh = [0.02, 0.04]\n[domain]\nkind = \"disk\"\nradius = 1.0\n",
        "tasks = [\"ld\"]\nh = [0.1]\nnorm = \"op2\"\n[domain]\nkind = \"ball\"\nradius = 1.0\n",
    ] {
        let (out, report) = run_config(dir.path(), bad);
        assert_eq!(out.status.code(), Some(2), "{bad}");
        assert!(report.is_none());
    }
    let out = bin().args(["run", "/nonexistent/config.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["verify-matnorm", "--dim", "4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn grid_too_coarse_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (out, _) = run_config(dir.path(), "tasks = [\"sobolev\"]\nh = [5.0]\n[domain]\nkind = \"disk\"\nradius = 1.0\n");
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_matnorm_prints_table() {
    let out = bin().args(["verify-matnorm", "--dim", "3", "--samples", "200", "--seed", "7"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("pair,lower,upper,observed_min,observed_max"));
    let rows: Vec<_> = lines.collect();
    assert!(!rows.is_empty());
    for r in rows {
        let v: Vec<f64> = r.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
        assert!(v[0] <= v[2] * (1.0 + 1e-12) && v[3] <= v[1] * (1.0 + 1e-12), "{r}");
    }
}

#[test]
fn sweep_theta_prints_rows() {
    let out = bin().args(["sweep-theta", "--norm", "vecInf", "--steps", "5", "--resolution", "11"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "theta,closed_value,brute_value,max_entry_diff");
    assert_eq!(lines.len(), 6);
    let out = bin().args(["sweep-theta", "--norm", "vec2", "--steps", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
