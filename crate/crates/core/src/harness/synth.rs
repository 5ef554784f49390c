use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::kinematics::{clamp_to_limits, Pose};
use crate::registration::{Detection, HandModel};
use crate::skinned_model::{render_depth, visible_vertices, Camera, DeformedMesh, DepthRender, NO_TRIANGLE};
use crate::{Error, Grid, Result, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub frame: usize,
    pub pose: Vec<f64>,
}

/// Ground-truth pose over time. Missing per-DoF entries default to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trajectory {
    /// `θ_k(f) = base_k + amplitude_k sin(2π f / period_frames + phase_k)`.
    Sinusoid {
        #[serde(default)]
        base: Vec<f64>,
        #[serde(default)]
        amplitude: Vec<f64>,
        period_frames: f64,
        #[serde(default)]
        phase: Vec<f64>,
    },
    /// Piecewise-linear between keyframes, constant outside them.
    Keyframes { keys: Vec<Keyframe> },
}

fn entry(v: &[f64], k: usize) -> f64 {
    v.get(k).copied().unwrap_or(0.0)
}

impl Trajectory {
    pub fn pose_at(&self, frame: usize, dof: usize) -> Result<Vec<f64>> {
        match self {
            Trajectory::Sinusoid {
                base,
                amplitude,
                period_frames,
                phase,
            } => {
                if !(*period_frames > 0.0) {
                    return Err(Error::InvalidArgument("period_frames must be positive".into()));
                }
                let w = 2.0 * std::f64::consts::PI * frame as f64 / period_frames;
                Ok((0..dof)
                    .map(|k| entry(base, k) + entry(amplitude, k) * (w + entry(phase, k)).sin())
                    .collect())
            }
            Trajectory::Keyframes { keys } => {
                if keys.is_empty() || keys.windows(2).any(|w| w[0].frame >= w[1].frame) {
                    return Err(Error::InvalidArgument("keyframes must be non-empty and strictly increasing".into()));
                }
                let full = |k: &Keyframe| (0..dof).map(|i| entry(&k.pose, i)).collect::<Vec<f64>>();
                if frame <= keys[0].frame {
                    return Ok(full(&keys[0]));
                }
                for w in keys.windows(2) {
                    if frame <= w[1].frame {
                        let t = (frame - w[0].frame) as f64 / (w[1].frame - w[0].frame) as f64;
                        let (a, b) = (full(&w[0]), full(&w[1]));
                        return Ok(a.iter().zip(&b).map(|(x, y)| x + t * (y - x)).collect());
                    }
                }
                Ok(full(keys.last().unwrap()))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Gaussian depth noise on covered pixels (mm).
    pub depth_sigma_mm: f64,
    /// Depth is rounded to multiples of this (mm); zero keeps full precision.
    pub quantize_mm: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            depth_sigma_mm: 0.0,
            quantize_mm: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionSpec {
    pub enabled: bool,
    /// Gaussian perturbation of each detected fingertip centroid (mm).
    pub position_sigma_mm: f64,
    pub confidence_min: f64,
    pub confidence_max: f64,
    pub miss_rate: f64,
    /// Probability of one spurious detection per frame.
    pub false_positive_rate: f64,
    pub false_positive_radius_px: f64,
}

impl Default for DetectionSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            position_sigma_mm: 2.0,
            confidence_min: 3.5,
            confidence_max: 6.0,
            miss_rate: 0.0,
            false_positive_rate: 0.0,
            false_positive_radius_px: 6.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    pub frames: usize,
    pub trajectory: Trajectory,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub detections: DetectionSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticFrame {
    pub index: usize,
    pub truth: Pose,
    /// Depth in mm, 0 where nothing was rendered.
    pub depth: Grid<f64>,
    pub mask: Grid<bool>,
    pub detections: Vec<Detection>,
    /// Some vertex projects outside the image or behind the camera.
    pub out_of_frustum: bool,
}

/// Noise-free depth render of the hand at `pose`.
pub fn render_pose(hand: &HandModel, pose: &[f64], camera: &Camera) -> Result<(DeformedMesh, DepthRender)> {
    let (_, deformed) = hand.deform(pose)?;
    let render = render_depth(&deformed.vertices, hand.mesh.triangles(), camera);
    Ok((deformed, render))
}

fn in_frustum(vertices: &[Vec3], camera: &Camera) -> bool {
    vertices.iter().all(|p| {
        camera
            .project(p)
            .is_ok_and(|q| q.u >= 0.0 && q.v >= 0.0 && q.u <= (camera.width - 1) as f64 && q.v <= (camera.height - 1) as f64)
    })
}

/// Renders every frame of the trajectory with noise and simulated fingertip
/// detections. All randomness comes from `seed`.
pub fn generate_sequence(hand: &HandModel, spec: &GenerateSpec, camera: &Camera, seed: u64) -> Result<Vec<SyntheticFrame>> {
    camera.validate()?;
    let d = &spec.detections;
    if !(d.confidence_min <= d.confidence_max) || !(0.0..=1.0).contains(&d.miss_rate) || !(0.0..=1.0).contains(&d.false_positive_rate) {
        return Err(Error::InvalidArgument("invalid detection simulation parameters".into()));
    }
    if !(spec.noise.depth_sigma_mm >= 0.0) || !(spec.noise.quantize_mm >= 0.0) || !(d.position_sigma_mm >= 0.0) {
        return Err(Error::InvalidArgument("noise levels must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth_noise = Normal::new(0.0, spec.noise.depth_sigma_mm).expect("valid sigma");
    let pos_noise = Normal::new(0.0, d.position_sigma_mm).expect("valid sigma");
    let part_triangles = part_triangle_flags(hand);
    let mut frames = Vec::with_capacity(spec.frames);
    for f in 0..spec.frames {
        let raw = spec.trajectory.pose_at(f, hand.dof())?;
        let truth = clamp_to_limits(&raw, &hand.model);
        let (deformed, render) = render_pose(hand, &truth, camera)?;
        let mask = render.triangle.map(|&t| t != NO_TRIANGLE);
        let mut depth = render.depth.clone();
        for (z, &m) in depth.data.iter_mut().zip(&mask.data) {
            if !m {
                continue;
            }
            if spec.noise.depth_sigma_mm > 0.0 {
                *z += depth_noise.sample(&mut rng);
            }
            if spec.noise.quantize_mm > 0.0 {
                *z = (*z / spec.noise.quantize_mm).round() * spec.noise.quantize_mm;
            }
            *z = z.max(0.0);
        }
        let mut detections = Vec::new();
        if d.enabled {
            let visible = visible_vertices(&deformed.vertices, camera, &render, crate::skinned_model::VISIBILITY_EPS_MM);
            for (t, ids) in hand.parts.iter().enumerate() {
                let vis: Vec<usize> = ids.iter().copied().filter(|&i| visible[i]).collect();
                let region: Vec<(u32, u32)> = pixels_where(&render.triangle, |tri| tri != NO_TRIANGLE && part_triangles[tri as usize] == Some(t));
                let missed = rng.random_bool(d.miss_rate);
                let offset = Vec3::new(pos_noise.sample(&mut rng), pos_noise.sample(&mut rng), pos_noise.sample(&mut rng));
                let confidence = rng.random_range(d.confidence_min..=d.confidence_max);
                if missed || vis.is_empty() || region.is_empty() {
                    continue;
                }
                let centroid = vis.iter().fold(Vec3::zeros(), |a, &i| a + deformed.vertices[i]) / vis.len() as f64;
                detections.push(Detection {
                    frame_index: f,
                    region,
                    centroid: centroid + offset,
                    confidence,
                });
            }
            if rng.random_bool(d.false_positive_rate) {
                let covered = pixels_where(&mask, |m| m);
                if !covered.is_empty() {
                    let (cx, cy) = covered[rng.random_range(0..covered.len())];
                    let confidence = rng.random_range(d.confidence_min..=d.confidence_max);
                    let r2 = d.false_positive_radius_px * d.false_positive_radius_px;
                    let region: Vec<(u32, u32)> = covered
                        .iter()
                        .copied()
                        .filter(|&(x, y)| (x as f64 - cx as f64).powi(2) + (y as f64 - cy as f64).powi(2) <= r2)
                        .collect();
                    let centroid = camera.backproject(cx as f64, cy as f64, render.depth[(cx as usize, cy as usize)]);
                    detections.push(Detection {
                        frame_index: f,
                        region,
                        centroid,
                        confidence,
                    });
                }
            }
        }
        frames.push(SyntheticFrame {
            index: f,
            truth,
            depth,
            mask,
            detections,
            out_of_frustum: !in_frustum(&deformed.vertices, camera),
        });
    }
    Ok(frames)
}

/// Part of each triangle when all three corners carry the same label.
fn part_triangle_flags(hand: &HandModel) -> Vec<Option<usize>> {
    let labels = hand.mesh.labels();
    hand.mesh
        .triangles()
        .iter()
        .map(|t| {
            let l = labels[t[0] as usize];
            (l.is_some() && t.iter().all(|&i| labels[i as usize] == l)).then_some(l).flatten()
        })
        .collect()
}

fn pixels_where<T: Copy>(grid: &Grid<T>, pred: impl Fn(T) -> bool) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for y in 0..grid.height {
        for x in 0..grid.width {
            if pred(grid[(x, y)]) {
                out.push((x as u32, y as u32));
            }
        }
    }
    out
}
