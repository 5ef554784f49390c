//! Batch commands over a manifest: writing synthetic sequences, preprocessing
//! dumps, sequential tracking, evaluation, parameter sweeps and collision
//! dumps.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::eval::{evaluate_2d, EvalReport};
use super::manifest::{FileList, LoadedModel, Manifest, SequenceSpec};
use super::overlay::{depth_to_gray, encode_pgm, encode_ppm, overlay, write_image};
use super::synth::{generate_sequence, render_pose};
use super::tables::{
    detections_to_text, group_detections, load_detections, load_poses, load_truth, poses_to_text, truth_to_text,
    write_text, PoseRow,
};
use crate::collision::{build_bvh, collision_samples, find_collisions, total_penetration};
use crate::registration::{optimize_frame, Detection, FrameResult, HandModel, SolverConfig};
use crate::sensor::image::{self, SampleFormat};
use crate::sensor::{preprocess, ObservedFrame, RawFrame};
use crate::skinned_model::{Camera, NO_TRIANGLE};
use crate::{Error, Grid, Result};

pub const POSES_FILE: &str = "poses.txt";
pub const REPORT_FILE: &str = "report.txt";
pub const TRACE_FILE: &str = "trace.txt";
pub const SEQUENCE_MANIFEST: &str = "sequence.toml";

pub struct GenerateOutput {
    pub frames: usize,
    pub manifest_path: PathBuf,
    /// Frames in which part of the model left the image.
    pub out_of_frustum: Vec<usize>,
}

/// Renders the `[generate]` section to depth/mask grids, a detection table
/// and a ground-truth table under the output directory, plus a manifest that
/// tracks them.
pub fn write_generated(manifest: &Manifest) -> Result<GenerateOutput> {
    let spec = manifest
        .generate
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("manifest has no [generate] section".into()))?;
    let model = manifest.load_model()?;
    let camera = manifest.camera.unwrap_or_default();
    let frames = generate_sequence(&model.hand, spec, &camera, manifest.seed)?;
    let out = manifest.output_path();
    let depth_pattern = "frames/depth_{frame:04}.htg";
    let mask_pattern = "frames/mask_{frame:04}.htg";
    std::fs::create_dir_all(out.join("frames")).map_err(|e| Error::io(out.join("frames"), e))?;
    let mut detections: Vec<Detection> = Vec::new();
    let mut truth = Vec::new();
    let mut out_of_frustum = Vec::new();
    for f in &frames {
        let stored = image::depth_from_mm(&f.depth, camera.depth_scale);
        let depth_path = out.join(super::manifest::expand_pattern(depth_pattern, f.index)?);
        image::write_file(&depth_path, &image::encode_u16(&stored, Some(&camera)))?;
        let mask = f.mask.map(|&m| m as u8);
        let mask_path = out.join(super::manifest::expand_pattern(mask_pattern, f.index)?);
        image::write_file(&mask_path, &image::encode_u8(&mask))?;
        detections.extend(f.detections.iter().cloned());
        truth.push(f.truth.0.clone());
        if f.out_of_frustum {
            out_of_frustum.push(f.index);
        }
    }
    write_text(&out.join("detections.txt"), &detections_to_text(&detections))?;
    write_text(&out.join("truth.txt"), &truth_to_text(&truth))?;

    let absolute = |p: &Option<PathBuf>| -> Result<Option<PathBuf>> {
        p.as_ref()
            .map(|p| {
                let r = manifest.resolve(p);
                std::fs::canonicalize(&r).map_err(|e| Error::io(r, e))
            })
            .transpose()
    };
    let mut model_src = manifest.model.clone();
    model_src.skeleton = absolute(&model_src.skeleton)?;
    model_src.mesh = absolute(&model_src.mesh)?;
    let tracked = Manifest {
        seed: manifest.seed,
        output_dir: PathBuf::from("track"),
        model: model_src,
        camera: Some(camera),
        sequence: Some(SequenceSpec {
            frames: Some(frames.len()),
            depth: FileList::Pattern(depth_pattern.into()),
            mask: Some(FileList::Pattern(mask_pattern.into())),
            detections: Some(PathBuf::from("detections.txt")),
            ground_truth: Some(PathBuf::from("truth.txt")),
        }),
        generate: None,
        config: manifest.config,
        preprocess: manifest.preprocess,
        init_pose: manifest.init_pose.clone(),
        eval_points: manifest.eval_points.clone(),
        overlays: manifest.overlays,
        sweep: manifest.sweep.clone(),
        base_dir: out.clone(),
    };
    let manifest_path = out.join(SEQUENCE_MANIFEST);
    write_text(&manifest_path, &tracked.to_toml_string())?;
    Ok(GenerateOutput {
        frames: frames.len(),
        manifest_path,
        out_of_frustum,
    })
}

/// Manifest camera, else the intrinsics stored with the first depth frame,
/// else the VGA default.
pub fn resolve_camera(manifest: &Manifest) -> Result<Camera> {
    let camera = match manifest.camera {
        Some(c) => c,
        None => {
            let path = manifest.depth_path(0)?;
            if !path.exists() {
                return Err(Error::MissingFrame { index: 0, path });
            }
            image::read_file(&path)?.camera.unwrap_or_default()
        }
    };
    camera.validate()?;
    Ok(camera)
}

/// Reads depth (and mask) for one frame; a missing file reports the index.
pub fn load_raw_frame(manifest: &Manifest, index: usize, camera: &Camera) -> Result<RawFrame> {
    let read = |path: PathBuf, format: SampleFormat| -> Result<Grid<u16>> {
        if !path.exists() {
            return Err(Error::MissingFrame { index, path });
        }
        let g = image::read_file(&path)?;
        if g.format != format {
            return Err(Error::parse(path.display().to_string(), format!("expected {format:?} samples")));
        }
        if g.grid.width != camera.width || g.grid.height != camera.height {
            return Err(Error::InvalidArgument(format!(
                "{} is {}x{}, camera is {}x{}",
                path.display(),
                g.grid.width,
                g.grid.height,
                camera.width,
                camera.height
            )));
        }
        Ok(g.grid)
    };
    let depth = image::depth_to_mm(&read(manifest.depth_path(index)?, SampleFormat::U16)?, camera.depth_scale);
    let mask = match manifest.mask_path(index)? {
        Some(p) => read(p, SampleFormat::U8)?.map(|&m| m != 0),
        None => depth.map(|&d| d > 0.0),
    };
    RawFrame::new(depth, mask, index)
}

/// Everything about a sequence except the frames themselves, which are
/// loaded one at a time.
pub struct SequenceInput {
    pub camera: Camera,
    pub frames: usize,
    pub detections: Vec<Vec<Detection>>,
    pub truth: Option<Vec<Vec<f64>>>,
}

pub fn open_sequence(manifest: &Manifest) -> Result<SequenceInput> {
    let spec = manifest.sequence()?;
    let frames = manifest.frame_count()?;
    let camera = resolve_camera(manifest)?;
    let detections = match &spec.detections {
        Some(p) => group_detections(load_detections(&manifest.resolve(p))?, frames)?,
        None => vec![Vec::new(); frames],
    };
    let truth = match &spec.ground_truth {
        Some(p) => {
            let t = load_truth(&manifest.resolve(p))?;
            if t.len() != frames {
                return Err(Error::InvalidArgument(format!(
                    "ground truth has {} frames, sequence has {frames}",
                    t.len()
                )));
            }
            Some(t)
        }
        None => None,
    };
    Ok(SequenceInput { camera, frames, detections, truth })
}

/// Pose for frame 0: explicit, else first ground truth, else zero.
pub fn initial_pose(manifest: &Manifest, hand: &HandModel, seq: &SequenceInput) -> Result<Vec<f64>> {
    let pose = manifest
        .init_pose
        .clone()
        .or_else(|| seq.truth.as_ref().and_then(|t| t.first().cloned()))
        .unwrap_or_else(|| hand.model.zero_pose().0);
    if pose.len() != hand.dof() {
        return Err(Error::InvalidArgument(format!(
            "initial pose has {} values, model has {} DoF",
            pose.len(),
            hand.dof()
        )));
    }
    Ok(pose)
}

pub struct TrackOutput {
    pub results: Vec<FrameResult>,
    pub rows: Vec<PoseRow>,
    pub report: Option<EvalReport>,
}

impl TrackOutput {
    pub fn lost_fraction(&self) -> f64 {
        if self.results.is_empty() {
            0.0
        } else {
            self.results.iter().filter(|r| r.lost).count() as f64 / self.results.len() as f64
        }
    }

    pub fn poses(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.pose.clone()).collect()
    }
}

/// Tracks frames in order, each initialized from the previous estimate.
/// Writes overlays into `overlay_dir` when given.
pub fn track(
    manifest: &Manifest,
    config: &SolverConfig,
    model: &LoadedModel,
    seq: &SequenceInput,
    overlay_dir: Option<&Path>,
) -> Result<TrackOutput> {
    config.validate()?;
    let hand = &model.hand;
    let mut pose = initial_pose(manifest, hand, seq)?;
    let mut results = Vec::with_capacity(seq.frames);
    for k in 0..seq.frames {
        let raw = load_raw_frame(manifest, k, &seq.camera)?;
        let observed = preprocess(&raw, &seq.camera, &manifest.preprocess)?;
        let iterations = if k == 0 { config.first_frame_iterations } else { config.iterations };
        let r = optimize_frame(&pose, hand, &observed, &seq.detections[k], config, iterations)?;
        log::info!(
            "frame {k}: lost {} energy {:.4} m2d {} d2m {} salient {} collisions {}",
            r.lost,
            r.total_energy,
            r.counts.m2d,
            r.counts.d2m,
            r.counts.salient,
            r.collision_pairs
        );
        if let Some(dir) = overlay_dir {
            write_overlay(dir, hand, &r.pose.0, &observed)?;
        }
        pose = r.pose.0.clone();
        results.push(r);
    }
    let rows: Vec<PoseRow> = results.iter().enumerate().map(|(k, r)| PoseRow::from_result(k, r)).collect();
    let report = match &seq.truth {
        Some(truth) => {
            let poses: Vec<Vec<f64>> = rows.iter().map(|r| r.pose.clone()).collect();
            let lost: Vec<bool> = rows.iter().map(|r| r.lost).collect();
            Some(evaluate_2d(&poses, truth, &lost, &hand.model, &seq.camera, &model.eval_points)?)
        }
        None => None,
    };
    Ok(TrackOutput { results, rows, report })
}

fn write_overlay(dir: &Path, hand: &HandModel, pose: &[f64], observed: &ObservedFrame) -> Result<()> {
    let (_, render) = render_pose(hand, pose, &observed.camera)?;
    let img = overlay(&observed.depth, &render);
    write_image(&dir.join(format!("overlay_{:04}.ppm", observed.frame_index)), &encode_ppm(&img))
}

/// Per-iteration energies of every frame.
pub fn trace_to_text(results: &[FrameResult]) -> String {
    let mut s = String::from(
        "# frame iteration total total_after accepted damping e_m2d e_d2m e_salient e_collision n_m2d n_d2m n_salient n_collision collision_pairs\n",
    );
    for (f, r) in results.iter().enumerate() {
        for (i, it) in r.iterations.iter().enumerate() {
            let e = &it.energies;
            let c = &it.counts;
            writeln!(
                s,
                "{f} {i} {} {} {} {} {} {} {} {} {} {} {} {} {}",
                it.total,
                it.total_after,
                it.accepted as u8,
                it.damping,
                e.m2d,
                e.d2m,
                e.salient,
                e.collision,
                c.m2d,
                c.d2m,
                c.salient,
                c.collision,
                it.collision_pairs
            )
            .unwrap();
        }
    }
    s
}

/// Tracks the manifest's sequence and writes the pose table, the iteration
/// trace, the evaluation report (with ground truth) and optional overlays.
pub fn run_tracking(manifest: &Manifest, config: &SolverConfig) -> Result<TrackOutput> {
    let model = manifest.load_model()?;
    let seq = open_sequence(manifest)?;
    let out = manifest.output_path();
    let overlay_dir = manifest.overlays.then(|| out.join("overlays"));
    let result = track(manifest, config, &model, &seq, overlay_dir.as_deref())?;
    write_text(&out.join(POSES_FILE), &poses_to_text(&result.rows))?;
    write_text(&out.join(TRACE_FILE), &trace_to_text(&result.results))?;
    if let Some(r) = &result.report {
        write_text(&out.join(REPORT_FILE), &r.to_text())?;
    }
    Ok(result)
}

/// Scores a pose table against the manifest's ground truth.
pub fn evaluate_pose_file(manifest: &Manifest, poses: &Path) -> Result<EvalReport> {
    let model = manifest.load_model()?;
    let seq = open_sequence(manifest)?;
    let truth = seq
        .truth
        .ok_or_else(|| Error::InvalidArgument("manifest names no ground truth".into()))?;
    let rows = load_poses(poses)?;
    if rows.iter().enumerate().any(|(k, r)| r.frame != k) {
        return Err(Error::InvalidArgument("pose table must list frames 0, 1, 2, ... in order".into()));
    }
    let est: Vec<Vec<f64>> = rows.iter().map(|r| r.pose.clone()).collect();
    let lost: Vec<bool> = rows.iter().map(|r| r.lost).collect();
    evaluate_2d(&est, &truth, &lost, &model.hand.model, &seq.camera, &model.eval_points)
}

/// Per-frame preprocessing statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct PreprocessSummary {
    pub frame: usize,
    pub points: usize,
    pub valid_normals: usize,
    pub edges: usize,
}

/// Preprocesses every frame, writing the smoothed depth and the edge map as
/// PGM images and a summary table.
pub fn preprocess_sequence(manifest: &Manifest) -> Result<Vec<PreprocessSummary>> {
    let frames = manifest.frame_count()?;
    let camera = resolve_camera(manifest)?;
    let out = manifest.output_path().join("preprocess");
    let mut rows = Vec::with_capacity(frames);
    let mut text = String::from("# frame points valid_normals edges\n");
    for k in 0..frames {
        let raw = load_raw_frame(manifest, k, &camera)?;
        let obs = preprocess(&raw, &camera, &manifest.preprocess)?;
        write_image(&out.join(format!("depth_{k:04}.pgm")), &encode_pgm(&depth_to_gray(&obs.depth)))?;
        let mut edges = Grid::filled(camera.width, camera.height, 0u8);
        for e in &obs.edges {
            edges[(e.x as usize, e.y as usize)] = 255;
        }
        write_image(&out.join(format!("edges_{k:04}.pgm")), &encode_pgm(&edges))?;
        let row = PreprocessSummary {
            frame: k,
            points: obs.cloud.len(),
            valid_normals: obs.normal_valid.iter().filter(|&&v| v).count(),
            edges: obs.edges.len(),
        };
        writeln!(text, "{} {} {} {}", row.frame, row.points, row.valid_normals, row.edges).unwrap();
        rows.push(row);
    }
    write_text(&out.join("summary.txt"), &text)?;
    Ok(rows)
}

/// One grid point of a sweep.
#[derive(Clone, Debug)]
pub struct SweepCell {
    pub settings: Vec<(String, toml::Value)>,
    /// Error text when this cell failed; other cells still run.
    pub outcome: std::result::Result<EvalReport, String>,
}

/// Runs tracking for every combination of the `[sweep]` axes (first axis
/// varies slowest). Each cell's pose table goes to `sweep/cell_NNN/`.
pub fn sweep(manifest: &Manifest) -> Result<Vec<SweepCell>> {
    let axes = manifest.sweep_grid()?;
    let model = manifest.load_model()?;
    let seq = open_sequence(manifest)?;
    if seq.truth.is_none() {
        return Err(Error::InvalidArgument("sweep needs ground truth".into()));
    }
    let total: usize = axes.iter().map(|(_, v)| v.len()).product();
    let out = manifest.output_path().join("sweep");
    let mut cells = Vec::with_capacity(total);
    for c in 0..total {
        let mut rem = c;
        let mut settings = vec![(String::new(), toml::Value::Boolean(false)); axes.len()];
        for (a, (key, values)) in axes.iter().enumerate().rev() {
            settings[a] = (key.clone(), values[rem % values.len()].clone());
            rem /= values.len();
        }
        let outcome = manifest
            .config_with(&settings)
            .and_then(|config| track(manifest, &config, &model, &seq, None))
            .and_then(|t| {
                write_text(&out.join(format!("cell_{c:03}")).join(POSES_FILE), &poses_to_text(&t.rows))?;
                Ok(t.report.expect("truth present"))
            })
            .map_err(|e| e.to_string());
        if let Err(e) = &outcome {
            log::warn!("sweep cell {c} failed: {e}");
        }
        cells.push(SweepCell { settings, outcome });
    }
    Ok(cells)
}

/// One row per cell: parameter values, then mean/std/max error and lost
/// frames.
pub fn sweep_table(cells: &[SweepCell]) -> String {
    let mut s = String::from("#");
    if let Some(c) = cells.first() {
        for (k, _) in &c.settings {
            write!(s, " {k}").unwrap();
        }
    }
    s.push_str(" mean_px std_px max_px lost_frames\n");
    for c in cells {
        let vals: Vec<String> = c.settings.iter().map(|(_, v)| v.to_string()).collect();
        s.push_str(&vals.join(" "));
        match &c.outcome {
            Ok(r) => writeln!(s, " {} {} {} {}", r.mean_px, r.std_px, r.max_px, r.lost_frames).unwrap(),
            Err(e) => writeln!(s, " error: {e}").unwrap(),
        }
    }
    s
}

/// Colliding triangle pairs of the model at one pose.
#[derive(Clone, Debug, PartialEq)]
pub struct CollisionDebug {
    pub pairs: Vec<(u32, u32)>,
    pub samples: usize,
    /// Sum of the penetration field over all intruding vertices.
    pub penetration: f64,
}

pub fn collision_debug(hand: &HandModel, pose: &[f64], config: &SolverConfig) -> Result<CollisionDebug> {
    let (_, deformed) = hand.deform(pose)?;
    let triangles = hand.mesh.triangles();
    let bvh = build_bvh(&deformed.vertices, triangles);
    let pairs = find_collisions(&bvh, &deformed.vertices, triangles, config.skip_adjacent);
    let samples = collision_samples(&pairs, &deformed.vertices, &deformed.normals, triangles).len();
    let penetration = total_penetration(&pairs, &deformed.vertices, triangles, config.sigma);
    Ok(CollisionDebug { pairs, samples, penetration })
}

pub fn collision_debug_text(d: &CollisionDebug) -> String {
    let mut s = format!(
        "# pairs {} samples {} penetration {}\n# triangle_a triangle_b\n",
        d.pairs.len(),
        d.samples,
        d.penetration
    );
    for (a, b) in &d.pairs {
        writeln!(s, "{a} {b}").unwrap();
    }
    s
}

/// Model render with colliding triangles in red.
pub fn collision_image(hand: &HandModel, pose: &[f64], camera: &Camera, d: &CollisionDebug) -> Result<Vec<u8>> {
    let (_, render) = render_pose(hand, pose, camera)?;
    let hit: HashSet<u32> = d.pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    let gray = depth_to_gray(&render.depth);
    let mut img = gray.map(|&g| [g, g, g]);
    for (i, px) in img.data.iter_mut().enumerate() {
        let t = render.triangle.data[i];
        if t != NO_TRIANGLE && hit.contains(&t) {
            *px = [255, 0, 0];
        }
    }
    Ok(encode_ppm(&img))
}
