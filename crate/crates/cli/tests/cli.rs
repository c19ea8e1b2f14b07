use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_circlebundle"));
    c.env_remove("CIRCLEBUNDLE_OUTPUT_DIR").env_remove("CIRCLEBUNDLE_THREADS").env_remove("CIRCLEBUNDLE_ORACLE_TOL");
    c
}

fn run_config(dir: &Path, body: &str) -> Output {
    let config = dir.join("run.toml");
    fs::write(&config, body).unwrap();
    bin().arg("run").arg(&config).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TORUS: &str = r#"
euler_number = 0
output_dir = "out"
[surface]
preset = "torus"
n = 10
m = 10
[connection]
kind = "constructed"
[solver]
multistart = 2
"#;

#[test]
fn torus_run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(dir.path(), TORUS);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    for f in ["report.json", "section.csv", "singularities.csv", "energy_trace.csv", "profile.csv"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let r: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["topology"]["singularity_count"], 0);
    assert!((r["energy"]["volume"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(r["multistart"].as_array().unwrap().len(), 2);
    assert!(r["timestamp"].as_u64().is_some());
    let trace = fs::read_to_string(out.join("energy_trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,energy\n"));
    let section = fs::read_to_string(out.join("section.csv")).unwrap();
    assert_eq!(section.lines().count(), 101);
}

#[test]
fn sphere_run_has_one_index_two_point() {
    let dir = tempfile::tempdir().unwrap();
    let body = "euler_number = 2\noutput_dir = \"out\"\n[surface]\npreset = \"icosphere\"\n[connection]\nkind = \"levi-civita\"\n";
    let o = run_config(dir.path(), body);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let r: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["topology"]["singularity_count"], 1);
    assert_eq!(r["singularities"][0]["index"].as_i64().unwrap().abs(), 2);
    let hc = &r["hcones"][0];
    assert!(hc["report"].is_object() != hc["error"].is_string());
    let profile = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert_eq!(profile.lines().count(), 9);
    assert_eq!(fs::read_to_string(out.join("singularities.csv")).unwrap().lines().count(), 2);
}

#[test]
fn odd_euler_number_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(dir.path(), &TORUS.replace("euler_number = 0", "euler_number = 3"));
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("must be even"), "{msg}");
    assert_eq!(msg.trim().lines().count(), 1);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn mismatched_connection_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = TORUS.replace("preset = \"torus\"\nn = 10\nm = 10", "preset = \"icosphere\"\nsubdivisions = 1")
        .replace("kind = \"constructed\"", "kind = \"levi-civita\"");
    let o = run_config(dir.path(), &body);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Euler number 2"), "{}", stderr(&o));
}

#[test]
fn bad_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_config(dir.path(), "not toml [").status.code(), Some(2));
    assert_eq!(run_config(dir.path(), &format!("{TORUS}\nbogus = 1\n")).status.code(), Some(2));
    let body = TORUS.replace("preset = \"torus\"\nn = 10\nm = 10", "preset = \"file\"\npath = \"missing.off\"");
    assert_eq!(run_config(dir.path(), &body).status.code(), Some(2));
    let o = bin().arg("run").arg(dir.path().join("nope.toml")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_directory_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, TORUS).unwrap();
    let o = bin().arg("run").arg(&config).env("CIRCLEBUNDLE_OUTPUT_DIR", blocker.join("sub")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().arg("verify-oracles").env("CIRCLEBUNDLE_OUTPUT_DIR", blocker.join("sub")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn environment_overrides_output_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, TORUS).unwrap();
    let elsewhere = dir.path().join("elsewhere");
    let o = bin()
        .arg("run")
        .arg(&config)
        .env("CIRCLEBUNDLE_OUTPUT_DIR", &elsewhere)
        .env("CIRCLEBUNDLE_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(elsewhere.join("report.json").is_file());
    assert!(!dir.path().join("out").exists());
    let o = bin().arg("run").arg(&config).env("CIRCLEBUNDLE_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_oracles_passes_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().arg("verify-oracles").env("CIRCLEBUNDLE_OUTPUT_DIR", dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("pontryagin_volume") && !table.contains("FAIL"));
    let json: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("oracles.json")).unwrap()).unwrap();
    assert!(json.as_array().unwrap().iter().all(|r| r["passed"] == true));
}

#[test]
fn verify_oracles_fails_at_an_unreachable_tolerance() {
    let o = bin().arg("verify-oracles").env("CIRCLEBUNDLE_ORACLE_TOL", "1e-15").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn mesh_info_reports_topology() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sphere.off");
    fs::write(&path, circlebundle::make_icosphere(1, 1.0).unwrap().to_off()).unwrap();
    let o = bin().arg("mesh-info").arg(&path).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("vertices: 42"), "{s}");
    assert!(s.contains("faces: 80"));
    assert!(s.contains("euler characteristic: 2"));
    assert!(s.contains("genus: 0"));
    let o = bin().arg("mesh-info").arg(dir.path().join("missing.off")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mesh_file_and_connection_file_configs_run() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = circlebundle::make_flat_torus(6, 6, 1.0, 1.0).unwrap();
    fs::write(dir.path().join("torus.off"), mesh.to_off()).unwrap();
    let conn = circlebundle::Connection::trivial(&mesh);
    fs::write(dir.path().join("rho.csv"), conn.to_csv(&mesh)).unwrap();
    let body = "euler_number = 0\noutput_dir = \"out\"\n[surface]\npreset = \"file\"\npath = \"torus.off\"\n[connection]\nkind = \"file\"\npath = \"rho.csv\"\n[solver]\nmultistart = 1\n";
    let o = run_config(dir.path(), body);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("out/report.json").is_file());
}
