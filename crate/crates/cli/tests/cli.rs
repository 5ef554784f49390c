use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const GENERATE: &str = r#"
seed = 3
output_dir = "seq"
[model]
procedural = "two_finger"
[generate]
frames = 3
[generate.trajectory]
kind = "sinusoid"
period_frames = 20
base = [0, 0, 0, 0, 0, 0, 0.4, 0, 0.5, 0.3, 0.4, 0, 0.5, 0.3]
amplitude = [5, 0, 0, 0, 0.1, 0, 0.3, 0.1, 0.4, 0.2, 0.3, 0.1, 0.4, 0.2]
[generate.noise]
depth_sigma_mm = 1.0
[sweep]
gamma_c = [0.0, 10.0]
"#;

fn handtrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_handtrack")).args(args).output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Generates the small sequence and returns the tracking manifest.
fn generated(dir: &Path) -> PathBuf {
    let m = dir.join("gen.toml");
    std::fs::write(&m, GENERATE).unwrap();
    let out = handtrack(&["generate", arg(&m)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("seq/sequence.toml")
}

#[test]
fn generate_track_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let seq = generated(dir.path());
    let track_dir = dir.path().join("seq/track");
    let out = handtrack(&["track", arg(&seq), "--overlays"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let poses = track_dir.join("poses.txt");
    assert_eq!(std::fs::read_to_string(&poses).unwrap().lines().filter(|l| !l.starts_with('#')).count(), 3);
    assert!(track_dir.join("report.txt").exists());
    assert!(track_dir.join("trace.txt").exists());
    let overlay = std::fs::read(track_dir.join("overlays/overlay_0000.ppm")).unwrap();
    assert!(overlay.starts_with(b"P6"));

    let eval_dir = dir.path().join("eval");
    let out = handtrack(&["eval", arg(&seq), "--poses", arg(&poses), "--out", arg(&eval_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read_to_string(eval_dir.join("report.txt")).unwrap(),
        std::fs::read_to_string(track_dir.join("report.txt")).unwrap()
    );
}

#[test]
fn sweep_preprocess_and_collision_dump() {
    let dir = tempfile::tempdir().unwrap();
    let seq = generated(dir.path());
    let sweep_dir = dir.path().join("sweep");
    let out = handtrack(&["sweep", arg(&seq), "--out", arg(&sweep_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(sweep_dir.join("sweep.txt")).unwrap();
    assert_eq!(table.lines().count(), 3, "{table}");

    let pre = dir.path().join("pre");
    let out = handtrack(&["preprocess", arg(&seq), "--out", arg(&pre)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);
    assert!(std::fs::read_dir(&pre).unwrap().count() > 0);

    let col = dir.path().join("col");
    let out = handtrack(&["collide-debug", arg(&seq), "--out", arg(&col), "--frame", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(col.join("collisions.txt")).unwrap().starts_with("# pairs"));
    assert!(std::fs::read(col.join("collisions.ppm")).unwrap().starts_with(b"P6"));
}

#[test]
fn bad_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[model]\nprocedural = \"two_finger\"\nunknown_key = 1\n").unwrap();
    assert_eq!(handtrack(&["track", arg(&bad)]).status.code(), Some(2));
    assert_eq!(handtrack(&["track", arg(&dir.path().join("missing.toml"))]).status.code(), Some(2));

    let seq = generated(dir.path());
    std::fs::remove_file(dir.path().join("seq/frames/depth_0001.htg")).unwrap();
    let out = handtrack(&["track", arg(&seq)]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn losing_the_hand_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let seq = generated(dir.path());
    let text = std::fs::read_to_string(&seq).unwrap();
    // Every depth sample falls outside the accepted range.
    let text: Vec<String> = text
        .lines()
        .map(|l| match l.split(" = ").next() {
            Some("near_mm") => "near_mm = 50.0".to_string(),
            Some("far_mm") => "far_mm = 100.0".to_string(),
            _ => l.to_string(),
        })
        .collect();
    let text = text.join("\n");
    assert!(text.contains("far_mm = 100.0"), "{text}");
    std::fs::write(&seq, text).unwrap();
    std::fs::write(dir.path().join("seq/detections.txt"), "").unwrap();
    let out = handtrack(&["track", arg(&seq)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
