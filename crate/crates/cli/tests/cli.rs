use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use smokeflow::grid::{Dims, ScalarGrid};
use smokeflow::io;

fn scene(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smokeflow")).args(args).output().unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(&[&["--json"], args].concat());
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_of(out: &Output) -> Value {
    assert!(!out.status.success());
    let v: Value = serde_json::from_slice(&out.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)));
    v["error"].clone()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn zero_density_renders_the_background_file() {
    let tmp = tempfile::tempdir().unwrap();
    let gen = tmp.path().join("gen");
    ok_json(&["gen", "--config", s(&scene("plume_small.json")), "--out", s(&gen)]);
    let manifest: Value = serde_json::from_slice(&fs::read(gen.join("manifest.json")).unwrap()).unwrap();
    let res: Vec<usize> = serde_json::from_value(manifest["res"].clone()).unwrap();
    let empty = tmp.path().join("empty.vgrid");
    io::write_scalar(&empty, &ScalarGrid::zeros(Dims::new(res[0], res[1], res[2]))).unwrap();
    let out = tmp.path().join("render");
    let rep = ok_json(&["render", "--scene", s(&gen.join("manifest.json")), "--density", s(&empty), "--out", s(&out)]);
    assert_eq!(rep["images"].as_array().unwrap().len(), 3);
    let bg = fs::read(gen.join("background.pfm")).unwrap();
    for c in 0..3 {
        assert_eq!(fs::read(out.join(format!("view{c}.pfm"))).unwrap(), bg, "view {c}");
    }
}

#[test]
fn gradcheck_passes_on_a_small_instance() {
    let rep = ok_json(&["gradcheck", "--scene", s(&scene("plume_small.json")), "--size", "4", "--samples", "48", "--h", "1e-4"]);
    assert_eq!(rep["pass"], true);
    assert!(rep["report"]["max_rel_error"].as_f64().unwrap() < 1e-6);
}

#[test]
fn compare_upsample_reports_bspline_smoother() {
    let tmp = tempfile::tempdir().unwrap();
    let png = tmp.path().join("slices.png");
    for seed in ["0", "1", "2"] {
        let rep = ok_json(&["--seed", seed, "compare-upsample", "--res", "5,6,5", "--out", s(&png)]);
        let (lin, bsp) = (rep["roughness_linear"].as_f64().unwrap(), rep["roughness_bspline2"].as_f64().unwrap());
        assert!(bsp < lin, "seed {seed}: {bsp} vs {lin}");
        assert_eq!(rep["bspline2_smoother"], true);
    }
    assert!(fs::metadata(&png).unwrap().len() > 0);
}

#[test]
fn advect_writes_one_volume_per_step_and_reports_mass() {
    let tmp = tempfile::tempdir().unwrap();
    let gen = tmp.path().join("gen");
    ok_json(&["gen", "--config", s(&scene("static.json")), "--out", s(&gen)]);
    let out = tmp.path().join("adv");
    let rep = ok_json(&[
        "advect",
        "--density",
        s(&gen.join("density_000.vgrid")),
        "--velocity",
        s(&gen.join("velocity_000.vgrid")),
        "--steps",
        "2",
        "--scheme",
        "sl",
        "--out",
        s(&out),
    ]);
    assert_eq!(rep["mass"].as_array().unwrap().len(), 3);
    assert!(out.join("density_002.vgrid").exists());
}

#[test]
fn missing_input_is_a_machine_readable_error() {
    let out = run(&["advect", "--density", "/nonexistent/d.vgrid", "--velocity", "/nonexistent/u.vgrid", "--out", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(1));
    let e = error_of(&out);
    assert_eq!(e["kind"], "io");
    assert!(e["message"].as_str().unwrap().contains("/nonexistent/d.vgrid"));
}

#[test]
fn usage_errors_exit_with_two() {
    let out = run(&["advect", "--scheme"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["kind"], "usage");
    let out = run(&["--threads", "0", "compare-upsample"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_errors_name_the_field_and_file() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad_scene.json");
    let mut cfg: Value = serde_json::from_slice(&fs::read(scene("static.json")).unwrap()).unwrap();
    cfg["blob_radius"] = Value::from(-1.0);
    fs::write(&bad, cfg.to_string()).unwrap();
    let out = run(&["gen", "--config", s(&bad), "--out", s(&tmp.path().join("o"))]);
    let e = error_of(&out);
    let msg = e["message"].as_str().unwrap();
    assert!(msg.contains("bad_scene.json") && msg.contains("blob_radius"), "{msg}");

    let recon = tmp.path().join("recon.json");
    fs::write(&recon, r#"{"lr_velocity": -0.1}"#).unwrap();
    let gen = tmp.path().join("gen");
    ok_json(&["gen", "--config", s(&scene("static.json")), "--out", s(&gen)]);
    let out = run(&["reconstruct", "--scene", s(&gen), "--config", s(&recon), "--out", s(&tmp.path().join("r"))]);
    let msg = error_of(&out)["message"].as_str().unwrap().to_string();
    assert!(msg.contains("recon.json") && msg.contains("lr_velocity"), "{msg}");

    fs::write(&recon, r#"{"lr_velocty": 0.1}"#).unwrap();
    let out = run(&["reconstruct", "--scene", s(&gen), "--config", s(&recon), "--out", s(&tmp.path().join("r"))]);
    let msg = error_of(&out)["message"].as_str().unwrap().to_string();
    assert!(msg.contains("recon.json") && msg.contains("lr_velocty"), "{msg}");
}

#[test]
fn reconstruct_writes_a_comparable_scene() {
    let tmp = tempfile::tempdir().unwrap();
    let gen = tmp.path().join("gen");
    ok_json(&["gen", "--config", s(&scene("static.json")), "--out", s(&gen)]);
    let cfg = tmp.path().join("short.json");
    fs::write(&cfg, r#"{"levels": 2, "density_iterations": 30, "iterations_per_level": 10}"#).unwrap();
    let out = tmp.path().join("recon");
    let rep = ok_json(&["reconstruct", "--scene", s(&gen), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(rep["status"]["status"], "converged");
    assert!(rep["max_divergence"].as_f64().unwrap() < 1e-12);
    let lines = fs::read_to_string(out.join("report.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), rep["iterations"].as_u64().unwrap() as usize);
    let m = ok_json(&["metrics", "--ours", s(&out), "--reference", s(&gen)]);
    assert!(m["mean_density_rmse"].as_f64().unwrap().is_finite());
}
