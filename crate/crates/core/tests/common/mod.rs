#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use handtrack::harness::{evaluate_2d, generate_sequence, DetectionSpec, EvalReport, GenerateSpec, Keyframe, NoiseSpec, SyntheticFrame, Trajectory};
use handtrack::kinematics::{JointKind, KinematicModel};
use handtrack::registration::{optimize_frame, FrameResult, HandModel, SolverConfig};
use handtrack::sensor::{preprocess, ObservedFrame, PreprocessParams, RawFrame};
use handtrack::skinned_model::procedural::{build_hand, HandSpec, ProceduralHand};
use handtrack::skinned_model::Camera;
use handtrack::Vec3;
use nalgebra::{Matrix4, Rotation3, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn two_finger() -> (ProceduralHand, HandModel) {
    let p = build_hand(&HandSpec::two_finger()).unwrap();
    let h = HandModel::new(p.model.clone(), p.mesh.clone()).unwrap();
    (p, h)
}

/// Root within ±20 mm / ±0.5 rad, revolute angles uniform inside their limits.
pub fn random_pose(model: &KinematicModel, rng: &mut impl Rng) -> Vec<f64> {
    let mut pose = vec![0.0; model.dof()];
    for j in model.joints() {
        match j.kind {
            JointKind::Root { .. } => {
                for k in 0..3 {
                    pose[j.dof_index + k] = rng.random_range(-20.0..20.0);
                    pose[j.dof_index + 3 + k] = rng.random_range(-0.5..0.5);
                }
            }
            JointKind::Revolute { min, max, .. } => pose[j.dof_index] = rng.random_range(min..=max),
        }
    }
    pose
}

pub fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

fn translation(t: &Vec3) -> Matrix4<f64> {
    Matrix4::new_translation(t)
}

/// Bone transforms as plain 4×4 products along each bone's chain, built from
/// axis-angle rotations about each joint's axis point.
pub fn naive_bone_transforms(model: &KinematicModel, pose: &[f64]) -> Vec<Matrix4<f64>> {
    (0..model.bone_count())
        .map(|b| {
            let mut m = Matrix4::identity();
            for &j in model.chain(b) {
                let joint = &model.joints()[j];
                let local = match &joint.kind {
                    JointKind::Root { pivot } => {
                        let d = joint.dof_index;
                        let t = Vec3::new(pose[d], pose[d + 1], pose[d + 2]);
                        let r = Rotation3::new(Vec3::new(pose[d + 3], pose[d + 4], pose[d + 5])).to_homogeneous();
                        translation(&(pivot + t)) * r * translation(&-pivot)
                    }
                    JointKind::Revolute { twist, .. } => {
                        let r = Rotation3::from_axis_angle(&Unit::new_normalize(twist.axis), pose[joint.dof_index]);
                        translation(&twist.point) * r.to_homogeneous() * translation(&-twist.point)
                    }
                };
                m *= local;
            }
            m
        })
        .collect()
}

pub fn apply4(m: &Matrix4<f64>, p: &Vec3) -> Vec3 {
    (m * p.push(1.0)).xyz()
}

/// Minimum assignment objective by enumerating every partial injective map
/// from detections to fingers.
pub fn enumerate_assignment(w_st: &[Vec<f64>], w_s: &[f64], t: usize, lambda: f64) -> f64 {
    fn rec(s: usize, used: &mut Vec<bool>, w_st: &[Vec<f64>], w_s: &[f64], lambda: f64, acc: f64, best: &mut f64) {
        if s == w_s.len() {
            let missing = used.iter().filter(|u| !**u).count() as f64;
            *best = best.min(acc + lambda * missing);
            return;
        }
        rec(s + 1, used, w_st, w_s, lambda, acc + lambda * w_s[s], best);
        for k in 0..used.len() {
            if !used[k] && w_st[s][k].is_finite() {
                used[k] = true;
                rec(s + 1, used, w_st, w_s, lambda, acc + w_st[s][k], best);
                used[k] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(0, &mut vec![false; t], w_st, w_s, lambda, 0.0, &mut best);
    best
}

/// Objective of explicit pairs, computed from scratch.
pub fn pairs_cost(pairs: &[(usize, usize)], w_st: &[Vec<f64>], w_s: &[f64], t: usize, lambda: f64) -> f64 {
    let rows: f64 = (0..w_s.len())
        .map(|s| match pairs.iter().find(|p| p.0 == s) {
            Some(&(_, k)) => w_st[s][k],
            None => lambda * w_s[s],
        })
        .sum();
    rows + lambda * (0..t).filter(|k| !pairs.iter().any(|p| p.1 == *k)).count() as f64
}

pub fn observe(frame: &SyntheticFrame, camera: &Camera) -> ObservedFrame {
    let raw = RawFrame::new(frame.depth.clone(), frame.mask.clone(), frame.index).unwrap();
    preprocess(&raw, camera, &PreprocessParams::default()).unwrap()
}

/// Sequential tracking of synthetic frames from `init`.
pub fn track_frames(
    hand: &HandModel,
    frames: &[SyntheticFrame],
    camera: &Camera,
    init: &[f64],
    config: &SolverConfig,
    first_iterations: usize,
) -> Vec<FrameResult> {
    let mut pose = init.to_vec();
    let mut out = Vec::with_capacity(frames.len());
    for (k, f) in frames.iter().enumerate() {
        let obs = observe(f, camera);
        let it = if k == 0 { first_iterations } else { config.iterations };
        let r = optimize_frame(&pose, hand, &obs, &f.detections, config, it).unwrap();
        pose = r.pose.0.clone();
        out.push(r);
    }
    out
}

pub fn report(p: &ProceduralHand, frames: &[SyntheticFrame], results: &[FrameResult], camera: &Camera) -> EvalReport {
    let poses: Vec<Vec<f64>> = results.iter().map(|r| r.pose.0.clone()).collect();
    let truth: Vec<Vec<f64>> = frames.iter().map(|f| f.truth.0.clone()).collect();
    let lost: Vec<bool> = results.iter().map(|r| r.lost).collect();
    evaluate_2d(&poses, &truth, &lost, &p.model, camera, &p.evaluation_points()).unwrap()
}

fn noisy(frames: usize, trajectory: Trajectory) -> GenerateSpec {
    GenerateSpec {
        frames,
        trajectory,
        noise: NoiseSpec { depth_sigma_mm: 1.0, quantize_mm: 1.0 },
        detections: DetectionSpec::default(),
    }
}

/// 60 frames of both fingers flexing and abducting plus a small global
/// motion, 1 mm depth noise.
pub fn convergence_sequence(p: &ProceduralHand, hand: &HandModel) -> Vec<SyntheticFrame> {
    let dof = hand.dof();
    let (mut base, mut amp, mut phase) = (vec![0.0; dof], vec![0.0; dof], vec![0.0; dof]);
    for (i, f) in p.finger_dofs.iter().enumerate() {
        base[f[0]] = 0.4;
        amp[f[0]] = 0.4;
        phase[f[0]] = i as f64;
        amp[f[1]] = 0.1;
        base[f[2]] = 0.5;
        amp[f[2]] = 0.45;
        phase[f[2]] = 0.5 + i as f64;
        base[f[3]] = 0.3;
        amp[f[3]] = 0.25;
    }
    amp[0] = 10.0;
    amp[3] = 0.1;
    amp[4] = 0.1;
    let spec = noisy(60, Trajectory::Sinusoid { base, amplitude: amp, period_frames: 60.0, phase });
    generate_sequence(hand, &spec, &Camera::default(), 7).unwrap()
}

/// Largest per-frame change of any revolute angle (radians).
pub fn max_joint_step(model: &KinematicModel, frames: &[SyntheticFrame]) -> f64 {
    let revolute: Vec<usize> = model
        .joints()
        .iter()
        .filter(|j| matches!(j.kind, JointKind::Revolute { .. }))
        .map(|j| j.dof_index)
        .collect();
    frames
        .windows(2)
        .flat_map(|w| revolute.iter().map(move |&d| (w[1].truth[d] - w[0].truth[d]).abs()))
        .fold(0.0, f64::max)
}

pub struct ConvergenceRun {
    pub report: EvalReport,
    pub lost: usize,
}

pub fn run_convergence(p: &ProceduralHand, hand: &HandModel, frames: &[SyntheticFrame], config: &SolverConfig) -> ConvergenceRun {
    let cam = Camera::default();
    let results = track_frames(hand, frames, &cam, &frames[0].truth, config, config.first_frame_iterations);
    ConvergenceRun {
        report: report(p, frames, &results, &cam),
        lost: results.iter().filter(|r| r.lost).count(),
    }
}

/// Static slightly flexed pose; tracking starts with the fingertips abducted
/// towards each other by `offset` radians each so that they interpenetrate.
pub struct CrossingScenario {
    pub frames: Vec<SyntheticFrame>,
    pub init: Vec<f64>,
}

pub fn crossing_fingers(p: &ProceduralHand, hand: &HandModel, offset: f64) -> CrossingScenario {
    let mut truth = vec![0.0; hand.dof()];
    for f in &p.finger_dofs {
        truth[f[0]] = 0.1;
        truth[f[2]] = 0.1;
    }
    let mut init = truth.clone();
    init[p.finger_dofs[0][1]] += offset;
    init[p.finger_dofs[1][1]] -= offset;
    let spec = noisy(20, Trajectory::Keyframes { keys: vec![Keyframe { frame: 0, pose: truth }] });
    CrossingScenario {
        frames: generate_sequence(hand, &spec, &Camera::default(), 3).unwrap(),
        init,
    }
}

pub struct CrossingOutcome {
    pub final_pairs: usize,
    pub initial_pairs: usize,
    pub error_px: f64,
}

pub fn run_crossing(p: &ProceduralHand, hand: &HandModel, s: &CrossingScenario, gamma_c: f64) -> CrossingOutcome {
    let cam = Camera::default();
    let config = SolverConfig { gamma_c, ..SolverConfig::default() };
    let results = track_frames(hand, &s.frames, &cam, &s.init, &config, config.iterations);
    let debug = handtrack::harness::collision_debug(hand, &s.init, &config).unwrap();
    CrossingOutcome {
        final_pairs: results.last().unwrap().collision_pairs,
        initial_pairs: debug.pairs.len(),
        error_px: report(p, &s.frames, &results, &cam).mean_px,
    }
}

/// Side view with the index finger partly hidden behind the more flexed
/// middle finger. Tracking starts with the index MCP flexed 30° too far, which
/// hides it completely.
pub struct HiddenFingerScenario {
    pub frames: Vec<SyntheticFrame>,
    pub init: Vec<f64>,
    pub joint: usize,
    pub truth_angle: f64,
}

pub fn hidden_finger(p: &ProceduralHand, hand: &HandModel, seed: u64) -> HiddenFingerScenario {
    let fd = &p.finger_dofs;
    let mut truth = vec![0.0; hand.dof()];
    for f in fd {
        truth[f[2]] = 0.2;
        truth[f[3]] = 0.1;
    }
    truth[fd[0][0]] = 0.1;
    truth[fd[1][0]] = 0.6;
    truth[4] = FRAC_PI_2;
    let joint = fd[0][0];
    let mut init = truth.clone();
    init[joint] += 30f64.to_radians();
    let spec = noisy(10, Trajectory::Keyframes { keys: vec![Keyframe { frame: 0, pose: truth.clone() }] });
    HiddenFingerScenario {
        frames: generate_sequence(hand, &spec, &Camera::default(), seed).unwrap(),
        init,
        joint,
        truth_angle: truth[joint],
    }
}

/// Per-frame absolute error (degrees) of the mis-initialized joint.
pub fn run_hidden_finger(hand: &HandModel, s: &HiddenFingerScenario, use_salient: bool) -> Vec<f64> {
    let config = SolverConfig { use_salient, ..SolverConfig::default() };
    track_frames(hand, &s.frames, &Camera::default(), &s.init, &config, config.iterations)
        .iter()
        .map(|r| (r.pose[s.joint] - s.truth_angle).abs().to_degrees())
        .collect()
}

/// Recovered: below `tol` at some frame and at every later frame.
pub fn recovered(errors: &[f64], tol: f64) -> bool {
    errors.iter().position(|&e| e < tol).is_some_and(|k| errors[k..].iter().all(|&e| e < tol))
}
