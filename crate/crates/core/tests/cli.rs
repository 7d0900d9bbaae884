use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const FIXTURE: &str = include_str!("../configs/profile_s2.toml");
const IDENTITY: &str = include_str!("../configs/identity.toml");

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn landslide(cmd: &str, config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_landslide"))
        .args([cmd, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn small(text: &str) -> String {
    text.replace("nx = 128", "nx = 64").replace("ny = 128", "ny = 64")
}

#[test]
fn verify_passes_on_the_fixture_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "fixture.toml", FIXTURE);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = landslide("verify", &cfg, &a);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(landslide("verify", &cfg, &b).status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(a.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(fs::read(a.join("verify.json")).unwrap(), fs::read(b.join("verify.json")).unwrap());
}

#[test]
fn tolerance_failures_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let text = small(FIXTURE).replace("\nu0 = 0.5", "\nu0 = 0.5\nperturbation = 0.01");
    let cfg = write_config(tmp.path(), "bumped.toml", &text);
    let out = landslide("verify", &cfg, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("flatness"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &small(FIXTURE).replace("\nu0 = 0.5", "\nu0 = 0.5\nbogus = 1"));
    assert_eq!(landslide("verify", &cfg, &tmp.path().join("out")).status.code(), Some(2));
    let missing = tmp.path().join("missing.toml");
    assert_eq!(landslide("solve", &missing, &tmp.path().join("out")).status.code(), Some(2));
}

#[test]
fn stage_errors_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "flat.toml", &small(FIXTURE).replace("\nu0 = 0.5", "\nu0 = 0.0"));
    let out = landslide("solve", &cfg, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solve"));
}

#[test]
fn export_writes_one_mesh_per_angle() {
    let tmp = tempfile::tempdir().unwrap();
    let thetas: Vec<String> = (0..8).map(|k| format!("{:?}", k as f64 * std::f64::consts::PI / 4.0)).collect();
    let text = small(FIXTURE).replace("[spectral]", &format!("[spectral]\nthetas = [{}]", thetas.join(", ")));
    let cfg = write_config(tmp.path(), "export.toml", &text);
    let out_dir = tmp.path().join("out");
    let out = landslide("export", &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for k in 0..8 {
        let obj = fs::read_to_string(out_dir.join(format!("mesh_{k:03}.obj"))).unwrap();
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 64 * 64);
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    let checks = manifest["suite"]["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 4);
    assert!(checks.iter().all(|c| c["pass"] == true));
}

#[test]
fn zero_connection_surface_sits_at_the_origin() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "identity.toml", IDENTITY);
    let out_dir = tmp.path().join("out");
    assert_eq!(landslide("export", &cfg, &out_dir).status.code(), Some(0));
    let obj = fs::read_to_string(out_dir.join("mesh_000.obj")).unwrap();
    let verts: Vec<&str> = obj.lines().filter(|l| l.starts_with("v ")).collect();
    assert_eq!(verts.len(), 256);
    for v in verts {
        for x in v.split_whitespace().skip(1) {
            assert!(x.parse::<f64>().unwrap().abs() < 1e-15, "{v}");
        }
    }
}

#[test]
fn holonomy_and_sweep_write_their_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", &small(FIXTURE));
    let out_dir = tmp.path().join("out");
    assert_eq!(landslide("holonomy", &cfg, &out_dir).status.code(), Some(0));
    for k in 0..4 {
        assert!(out_dir.join(format!("holonomy_{k:03}.json")).exists());
    }
    assert!(out_dir.join("cr.json").exists());
    assert_eq!(landslide("sweep", &cfg, &out_dir).status.code(), Some(0));
    assert!(out_dir.join("sweep.json").exists() && out_dir.join("frame_000.csv").exists());
}
