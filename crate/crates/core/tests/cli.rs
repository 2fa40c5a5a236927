use std::path::Path;
use std::process::{Command, Output};

use photo3d::geom::Grid;
use photo3d::image_io::{save_color, write_pfm};
use photo3d::scenes::{Rect, Scene};
use serde_json::Value;

fn photo3d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_photo3d"))
        .args(args)
        .env_remove("PHOTO3D_CONFIG")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_scene(dir: &Path, scene: &Scene) {
    save_color(&dir.join("color.png"), &scene.color).unwrap();
    let d = &scene.disparity;
    write_pfm(&dir.join("disp.pfm"), d.width, d.height, 1, &d.data).unwrap();
}

fn build(dir: &Path, out: &str) -> Output {
    photo3d(&[
        "build",
        "--color", p(&dir.join("color.png")),
        "--depth", p(&dir.join("disp.pfm")),
        "--mode", "disparity",
        "--out", p(&dir.join(out)),
    ])
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn two_layer() -> Scene {
    Scene::two_layer(48, 40, Rect { x0: 14, y0: 10, x1: 34, y1: 30 })
}

#[test]
fn flat_image_has_no_edges() {
    let dir = tempfile::tempdir().unwrap();
    let flat = Scene { color: Grid::new(16, 12, [50, 60, 70]), disparity: Grid::new(16, 12, 0.3) };
    write_scene(dir.path(), &flat);
    let out = build(dir.path(), "run");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("run/report.json"));
    assert_eq!(report["edges"], 0);
    assert_eq!(report["ldi_pixels"], 16 * 12);
    assert_eq!(report["triangles"], 2 * 15 * 11);
}

#[test]
fn build_writes_a_reproducible_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    write_scene(dir.path(), &two_layer());
    for run in ["a", "b"] {
        let out = build(dir.path(), run);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let run = dir.path().join("a");
    for f in ["scene.ldi", "mesh.glb", "mesh.obj", "report.json", "config.toml", "manifest.json", "timings.json"] {
        assert!(run.join(f).exists(), "missing {f}");
    }
    let report = json(&run.join("report.json"));
    assert_eq!(report["edges"], 1);
    assert!(report["synthesized_pixels"].as_u64().unwrap() > 0);
    assert!(report["max_layers"].as_u64().unwrap() >= 2);

    let manifest = std::fs::read(run.join("manifest.json")).unwrap();
    assert_eq!(manifest, std::fs::read(dir.path().join("b/manifest.json")).unwrap());
    let entries = json(&run.join("manifest.json"));
    let names: Vec<&str> = entries.as_array().unwrap().iter().map(|e| e["file"].as_str().unwrap()).collect();
    assert!(names.contains(&"scene.ldi") && !names.contains(&"timings.json"));
    for e in entries.as_array().unwrap() {
        let bytes = std::fs::read(run.join(e["file"].as_str().unwrap())).unwrap();
        assert_eq!(e["bytes"], bytes.len());
        assert_eq!(e["sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn render_orbit_from_ldi_and_glb() {
    let dir = tempfile::tempdir().unwrap();
    write_scene(dir.path(), &two_layer());
    assert!(build(dir.path(), "run").status.success());
    let traj = dir.path().join("orbit.json");
    std::fs::write(&traj, r#"{"frames": 30, "path": {"kind": "orbit", "radius": 0.01, "focus_depth": 2.0}}"#).unwrap();

    let frames = dir.path().join("frames");
    let out = photo3d(&["render", "--input", p(&dir.path().join("run/scene.ldi")), "--trajectory", p(&traj), "--out", p(&frames)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let n = std::fs::read_dir(&frames).unwrap().count();
    assert_eq!(n, 30);
    assert!(frames.join("frame_0029.png").exists());
    let first = image::open(frames.join("frame_0000.png")).unwrap();
    assert_eq!((first.width(), first.height()), (48, 40));

    let glb = dir.path().join("run/mesh.glb");
    let out = photo3d(&["render", "--input", p(&glb), "--trajectory", p(&traj), "--out", p(&dir.path().join("g"))]);
    assert_eq!(out.status.code(), Some(2));
    let out = photo3d(&[
        "render", "--input", p(&glb), "--trajectory", p(&traj), "--out", p(&dir.path().join("g")),
        "--width", "24", "--height", "20",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_dir(dir.path().join("g")).unwrap().count(), 30);
}

#[test]
fn bad_inputs_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_scene(dir.path(), &two_layer());
    std::fs::write(dir.path().join("color.png"), b"\x89PNG\r\n\x1a\nnot really").unwrap();
    assert_eq!(build(dir.path(), "run").status.code(), Some(2));

    write_scene(dir.path(), &two_layer());
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "threshold = -1.0\n").unwrap();
    let out = photo3d(&[
        "--config", p(&cfg), "build",
        "--color", p(&dir.path().join("color.png")),
        "--depth", p(&dir.path().join("disp.pfm")),
        "--out", p(&dir.path().join("run")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let out = photo3d(&["--config", p(&cfg), "compare", "--out", p(&dir.path().join("c"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn compare_reports_every_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("cmp");
    let out = photo3d(&["compare", "--scene", "two-layer", "--size", "64", "--baselines", "0,3,6", "--out", p(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out_dir.join("compare.json"));
    assert_eq!(report["edges"], 1);
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for (row, px) in rows.iter().zip([0.0, 3.0, 6.0]) {
        assert_eq!(row["baseline_px"], px);
        for key in ["translation", "margin", "naive_holes", "pipeline_holes"] {
            assert!(row.get(key).is_some(), "missing {key}");
        }
        assert_eq!(row["pipeline_holes"], 0);
    }
    assert_eq!(rows[0]["naive_holes"], 0);
    assert!(rows[2]["naive_holes"].as_u64().unwrap() > 0);
    assert!(out_dir.join("compare_00.png").exists());
}

#[test]
fn metrics_on_identical_images() {
    let dir = tempfile::tempdir().unwrap();
    let img = two_layer().color;
    save_color(&dir.path().join("a.png"), &img).unwrap();
    let out = photo3d(&["metrics", "--image", p(&dir.path().join("a.png")), "--reference", p(&dir.path().join("a.png"))]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["psnr"], Value::Null);
    assert_eq!(report["identical"], true);
    assert!((report["ssim"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(report["l_synthesis"], Value::Null);

    let mut other = img.clone();
    other.data[0] = [0, 0, 0];
    save_color(&dir.path().join("b.png"), &other).unwrap();
    let mask = Grid::new(img.width, img.height, [255, 255, 255]);
    save_color(&dir.path().join("s.png"), &mask).unwrap();
    save_color(&dir.path().join("c.png"), &Grid::new(img.width, img.height, [0, 0, 0])).unwrap();
    let out = photo3d(&[
        "metrics", "--image", p(&dir.path().join("b.png")), "--reference", p(&dir.path().join("a.png")),
        "--synthesis", p(&dir.path().join("s.png")), "--context", p(&dir.path().join("c.png")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["psnr"].as_f64().unwrap() > 0.0);
    assert!(report["l_synthesis"].as_f64().unwrap() > 0.0);
    assert_eq!(report["l_context"], 0.0);
}
