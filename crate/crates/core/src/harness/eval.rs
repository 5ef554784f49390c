use serde::{Deserialize, Serialize};

use crate::kinematics::{joint_positions, marker_positions, ChainState, KinematicModel};
use crate::skinned_model::Camera;
use crate::{Error, Result, Vec3};

/// World positions of named joints or markers.
pub fn named_points(model: &KinematicModel, state: &ChainState, names: &[String]) -> Result<Vec<Vec3>> {
    let joints = joint_positions(model, state);
    let markers = marker_positions(model, state);
    names
        .iter()
        .map(|n| {
            if let Some(j) = model.joint_index(n) {
                Ok(joints[j])
            } else if let Some(m) = model.marker_index(n) {
                Ok(markers[m])
            } else {
                Err(Error::InvalidArgument(format!("unknown joint or marker '{n}'")))
            }
        })
        .collect()
}

/// Every joint followed by every marker.
pub fn all_point_names(model: &KinematicModel) -> Vec<String> {
    model
        .joints()
        .iter()
        .map(|j| j.id.clone())
        .chain(model.markers().iter().map(|m| m.id.clone()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameError {
    pub frame: usize,
    /// Mean pixel distance over the evaluated points, `None` if every point
    /// was behind the camera.
    pub mean_px: Option<f64>,
    pub excluded: usize,
    pub lost: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub frames: Vec<FrameError>,
    pub mean_px: f64,
    pub std_px: f64,
    pub max_px: f64,
    pub excluded: usize,
    pub lost_frames: usize,
}

impl EvalReport {
    /// Aggregates from per-frame rows: mean, population standard deviation
    /// and maximum over frames with a value.
    pub fn from_frames(frames: Vec<FrameError>) -> Self {
        let values: Vec<f64> = frames.iter().filter_map(|f| f.mean_px).collect();
        let n = values.len() as f64;
        let (mean, std, max) = if values.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            (mean, var.sqrt(), values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        };
        Self {
            excluded: frames.iter().map(|f| f.excluded).sum(),
            lost_frames: frames.iter().filter(|f| f.lost).count(),
            frames,
            mean_px: mean,
            std_px: std,
            max_px: max,
        }
    }

    pub fn lost_fraction(&self) -> f64 {
        if self.frames.is_empty() {
            0.0
        } else {
            self.lost_frames as f64 / self.frames.len() as f64
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# frame mean_px excluded lost\n");
        for f in &self.frames {
            let v = f.mean_px.map_or("nan".to_string(), |v| format!("{v}"));
            s.push_str(&format!("{} {} {} {}\n", f.frame, v, f.excluded, f.lost as u8));
        }
        s.push_str(&format!(
            "# mean {} std {} max {} excluded {} lost {}\n",
            self.mean_px, self.std_px, self.max_px, self.excluded, self.lost_frames
        ));
        s
    }
}

/// Mean 2D distance between projected estimated and true points, per frame.
/// Points behind the camera in either pose are excluded and counted.
pub fn evaluate_2d(
    poses: &[Vec<f64>],
    truth: &[Vec<f64>],
    lost: &[bool],
    model: &KinematicModel,
    camera: &Camera,
    points: &[String],
) -> Result<EvalReport> {
    if poses.len() != truth.len() {
        return Err(Error::InvalidArgument(format!("{} estimated poses but {} ground-truth poses", poses.len(), truth.len())));
    }
    let mut frames = Vec::with_capacity(poses.len());
    for (f, (est, gt)) in poses.iter().zip(truth).enumerate() {
        let pe = named_points(model, &ChainState::new(model, est)?, points)?;
        let pt = named_points(model, &ChainState::new(model, gt)?, points)?;
        let mut sum = 0.0;
        let mut n = 0usize;
        let mut excluded = 0;
        for (a, b) in pe.iter().zip(&pt) {
            match (camera.project(a), camera.project(b)) {
                (Ok(a), Ok(b)) => {
                    sum += ((a.u - b.u).powi(2) + (a.v - b.v).powi(2)).sqrt();
                    n += 1;
                }
                _ => excluded += 1,
            }
        }
        frames.push(FrameError {
            frame: f,
            mean_px: (n > 0).then(|| sum / n as f64),
            excluded,
            lost: lost.get(f).copied().unwrap_or(false),
        });
    }
    Ok(EvalReport::from_frames(frames))
}
