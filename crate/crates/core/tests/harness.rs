mod common;

use std::path::Path;

use common::*;
use handtrack::harness::{
    evaluate_2d, generate_sequence, render_pose, run, run_tracking, sweep, tables, write_generated, DetectionSpec, EvalReport,
    FrameError, GenerateSpec, Keyframe, Manifest, NoiseSpec, Trajectory,
};
use handtrack::kinematics::KinematicModel;
use handtrack::skinned_model::Camera;
use proptest::prelude::*;

fn sinusoid(frames: usize) -> GenerateSpec {
    GenerateSpec {
        frames,
        trajectory: Trajectory::Sinusoid {
            base: vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.4, 0.0, 0.5, 0.3, 0.4, 0.0, 0.5, 0.3],
            amplitude: vec![5.0, 0.0, 0.0, 0.0, 0.1, 0.0, 0.3, 0.1, 0.4, 0.2, 0.3, 0.1, 0.4, 0.2],
            period_frames: 20.0,
            phase: vec![],
        },
        noise: NoiseSpec::default(),
        detections: DetectionSpec::default(),
    }
}

/// Writes the generated sequence for `text` under `dir` and loads its manifest.
fn generated(dir: &Path, text: &str) -> Manifest {
    let m = Manifest::from_toml_str(text, dir).unwrap();
    let g = write_generated(&m).unwrap();
    Manifest::load(&g.manifest_path).unwrap()
}

const NOISELESS: &str = r#"
seed = 4
output_dir = "seq"
[model]
procedural = "two_finger"
[generate]
frames = FRAMES
[generate.trajectory]
kind = "sinusoid"
period_frames = 20
base = [0, 0, 0, 0, 0, 0, 0.4, 0, 0.5, 0.3, 0.4, 0, 0.5, 0.3]
amplitude = [5, 0, 0, 0, 0.1, 0, 0.3, 0.1, 0.4, 0.2, 0.3, 0.1, 0.4, 0.2]
[generate.noise]
quantize_mm = 0
"#;

fn noiseless(frames: usize) -> String {
    NOISELESS.replace("FRAMES", &frames.to_string())
}

#[test]
fn generation_is_seeded() {
    let (_, hand) = two_finger();
    let cam = Camera::default();
    let mut spec = sinusoid(3);
    spec.noise.depth_sigma_mm = 1.0;
    let a = generate_sequence(&hand, &spec, &cam, 9).unwrap();
    assert_eq!(a, generate_sequence(&hand, &spec, &cam, 9).unwrap());
    assert_ne!(a, generate_sequence(&hand, &spec, &cam, 10).unwrap());
}

#[test]
fn depth_noise_has_the_requested_spread() {
    let (_, hand) = two_finger();
    let cam = Camera::default();
    let mut spec = sinusoid(2);
    spec.noise = NoiseSpec { depth_sigma_mm: 2.0, quantize_mm: 0.0 };
    let (mut sum, mut n) = (0.0, 0usize);
    for f in generate_sequence(&hand, &spec, &cam, 11).unwrap() {
        let (_, clean) = render_pose(&hand, &f.truth, &cam).unwrap();
        for y in 0..cam.height {
            for x in 0..cam.width {
                if !f.mask[(x, y)] {
                    continue;
                }
                let noisy = cam.backproject(x as f64, y as f64, f.depth[(x, y)]);
                let surface = cam.backproject(x as f64, y as f64, clean.depth[(x, y)]);
                sum += (noisy - surface).norm_squared();
                n += 1;
            }
        }
    }
    assert!(n > 1000);
    let rms = (sum / n as f64).sqrt();
    assert!((rms - 2.0).abs() <= 0.4, "rms {rms}");
}

#[test]
fn miss_rate_controls_detections() {
    let (_, hand) = two_finger();
    let cam = Camera::default();
    let mut spec = sinusoid(5);
    for f in generate_sequence(&hand, &spec, &cam, 1).unwrap() {
        assert_eq!(f.detections.len(), 2, "frame {}", f.index);
    }
    spec.detections.miss_rate = 1.0;
    assert!(generate_sequence(&hand, &spec, &cam, 1).unwrap().iter().all(|f| f.detections.is_empty()));
}

#[test]
fn static_noiseless_frames_are_identical() {
    let (_, hand) = two_finger();
    let cam = Camera::default();
    let spec = GenerateSpec {
        frames: 4,
        trajectory: Trajectory::Keyframes {
            keys: vec![Keyframe { frame: 0, pose: vec![0.0, 0.0, 0.0, 0.0, 0.2, 0.0, 0.3, 0.0, 0.4, 0.2, 0.5, 0.1, 0.3, 0.1] }],
        },
        noise: NoiseSpec { depth_sigma_mm: 0.0, quantize_mm: 1.0 },
        detections: DetectionSpec { position_sigma_mm: 0.0, confidence_min: 5.0, confidence_max: 5.0, ..DetectionSpec::default() },
    };
    let frames = generate_sequence(&hand, &spec, &cam, 2).unwrap();
    for f in &frames[1..] {
        assert_eq!(f.truth, frames[0].truth);
        assert_eq!(f.depth, frames[0].depth);
        assert_eq!(f.mask, frames[0].mask);
        assert_eq!(f.detections.len(), frames[0].detections.len());
        for (a, b) in f.detections.iter().zip(&frames[0].detections) {
            assert_eq!((&a.region, a.centroid, a.confidence), (&b.region, b.centroid, b.confidence));
        }
    }
}

#[test]
fn image_plane_shift_is_measured_in_pixels() {
    let (p, _) = two_finger();
    let cam = Camera::default();
    let names = handtrack::harness::all_point_names(&p.model);
    let truth = vec![p.model.zero_pose().to_vec()];
    let state = handtrack::kinematics::ChainState::new(&p.model, &truth[0]).unwrap();
    let pts = handtrack::harness::named_points(&p.model, &state, &names).unwrap();
    let z = pts.iter().map(|q| q.z).sum::<f64>() / pts.len() as f64;
    let mut shifted = truth[0].clone();
    shifted[0] += 5.0 * z / cam.fx;
    let r = evaluate_2d(&[shifted], &truth, &[], &p.model, &cam, &names).unwrap();
    assert!((r.mean_px - 5.0).abs() <= 0.1, "{}", r.mean_px);
}

const ARM: &str = r#"
[[joint]]
id = "base"
kind = "root"
point = [0.0, 0.0, 500.0]
dof_index = 0

[[joint]]
id = "end"
parent = "base"
kind = "revolute"
axis = [0.0, 0.0, 1.0]
point = [50.0, 0.0, 500.0]
dof_index = 6

[[marker]]
id = "tip"
bone = "end"
point = [100.0, 0.0, 500.0]
"#;

#[test]
fn hand_computed_two_joint_fixture() {
    let model = KinematicModel::from_toml_str(ARM).unwrap();
    let cam = Camera { width: 640, height: 480, fx: 500.0, fy: 500.0, cx: 320.0, cy: 240.0, depth_scale: 1.0 };
    let names: Vec<String> = ["base", "end", "tip"].map(String::from).to_vec();
    let zero = vec![0.0; 7];
    let mut bent = zero.clone();
    bent[6] = std::f64::consts::FRAC_PI_2;
    let mut behind = zero.clone();
    behind[2] = -1000.0;
    // Bending moves only the tip, from (420, 240) to (370, 290).
    let r = evaluate_2d(&[zero.clone(), bent, behind], &[zero.clone(), zero.clone(), zero], &[false, true, false], &model, &cam, &names).unwrap();
    let second = 50.0 * 2f64.sqrt() / 3.0;
    assert_eq!(r.frames[0].mean_px, Some(0.0));
    assert!((r.frames[1].mean_px.unwrap() - second).abs() < 1e-9);
    assert_eq!((r.frames[2].mean_px, r.frames[2].excluded), (None, 3));
    assert!((r.mean_px - second / 2.0).abs() < 1e-9);
    assert!((r.std_px - second / 2.0).abs() < 1e-9);
    assert!((r.max_px - second).abs() < 1e-9);
    assert_eq!((r.excluded, r.lost_frames), (3, 1));
    assert!(r.frames[1].lost);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn report_aggregates_its_rows(rows in prop::collection::vec((prop::option::of(0.0..50.0f64), 0usize..4, any::<bool>()), 1..30)) {
        let frames: Vec<FrameError> = rows
            .iter()
            .enumerate()
            .map(|(frame, &(mean_px, excluded, lost))| FrameError { frame, mean_px, excluded, lost })
            .collect();
        let r = EvalReport::from_frames(frames);
        let vals: Vec<f64> = rows.iter().filter_map(|r| r.0).collect();
        prop_assert_eq!(r.excluded, rows.iter().map(|r| r.1).sum::<usize>());
        prop_assert_eq!(r.lost_frames, rows.iter().filter(|r| r.2).count());
        if vals.is_empty() {
            prop_assert!(r.mean_px.is_nan());
        } else {
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            prop_assert!((r.mean_px - mean).abs() < 1e-9);
            prop_assert!((r.std_px - var.sqrt()).abs() < 1e-9);
            prop_assert_eq!(r.max_px, vals.iter().copied().fold(f64::MIN, f64::max));
            prop_assert!(r.max_px >= r.mean_px);
        }
    }
}

#[test]
fn single_frame_from_truth_stays_on_truth() {
    let dir = tempfile::tempdir().unwrap();
    let m = generated(dir.path(), &noiseless(1));
    let out = run_tracking(&m, &m.config).unwrap();
    let report = out.report.unwrap();
    assert!(report.mean_px < 1.0, "{}", report.mean_px);
    let rows = tables::load_poses(&m.output_path().join(run::POSES_FILE)).unwrap();
    assert_eq!(rows, out.rows);
    assert!(m.output_path().join(run::REPORT_FILE).exists());
}

#[test]
fn noiseless_tracking_is_self_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let m = generated(dir.path(), &noiseless(8));
    let report = run_tracking(&m, &m.config).unwrap().report.unwrap();
    for f in &report.frames {
        assert!(!f.lost);
        assert!(f.mean_px.unwrap() <= 2.0, "frame {}: {:?}", f.frame, f.mean_px);
    }
}

#[test]
fn lost_frames_reach_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{}\n[generate.detections]\nenabled = false\n[preprocess]\nnear_mm = 50\nfar_mm = 100\n", noiseless(2));
    let m = generated(dir.path(), &text);
    let out = run_tracking(&m, &m.config).unwrap();
    assert_eq!(out.lost_fraction(), 1.0);
    let report = out.report.unwrap();
    assert_eq!(report.lost_frames, 2);
    assert!(report.frames.iter().all(|f| f.lost));
    let rows = tables::load_poses(&m.output_path().join(run::POSES_FILE)).unwrap();
    assert!(rows.iter().all(|r| r.lost));
    // A lost frame keeps its initialization.
    assert_eq!(rows[0].pose, run::initial_pose(&m, &m.load_model().unwrap().hand, &run::open_sequence(&m).unwrap()).unwrap());
}

#[test]
fn sweep_of_one_cell_equals_a_single_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = generated(dir.path(), &noiseless(3));
    let single = run_tracking(&m, &m.config).unwrap();
    let single_text = std::fs::read(m.output_path().join(run::POSES_FILE)).unwrap();
    let gamma = m.config.gamma_c;
    m.sweep = Some(toml::from_str(&format!("gamma_c = [{gamma:?}]")).unwrap());
    let cells = sweep(&m).unwrap();
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0].outcome.as_ref().unwrap(), single.report.as_ref().unwrap());
    assert_eq!(std::fs::read(m.output_path().join("sweep/cell_000").join(run::POSES_FILE)).unwrap(), single_text);
}

#[test]
fn more_iterations_do_not_hurt() {
    let dir = tempfile::tempdir().unwrap();
    let text = noiseless(6).replace("quantize_mm = 0", "quantize_mm = 0\ndepth_sigma_mm = 1.0");
    let mut m = generated(dir.path(), &text);
    m.init_pose = Some({
        let mut p = run::open_sequence(&m).unwrap().truth.unwrap()[0].clone();
        p[6] += 0.2;
        p[10] -= 0.2;
        p
    });
    m.sweep = Some(toml::from_str("iterations = [5, 10]\nfirst_frame_iterations = [5]").unwrap());
    let cells = sweep(&m).unwrap();
    let mean = |c: usize| cells[c].outcome.as_ref().unwrap().mean_px;
    assert!(mean(1) <= mean(0) + 0.05, "{} vs {}", mean(1), mean(0));
}
