use std::collections::HashSet;

use super::assignment::AssignmentSolution;
use super::config::{DetectionWeight, Gates};
use super::correspond::PointMatch;
use crate::sensor::{ObservedFrame, NO_POINT};
use crate::skinned_model::{Camera, DeformedMesh};
use crate::Vec3;

/// A fingertip detection: image region, 3D centroid (mm) and confidence.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub frame_index: usize,
    pub region: Vec<(u32, u32)>,
    pub centroid: Vec3,
    pub confidence: f64,
}

/// Centroid of the visible vertices of each part, `None` if none is visible.
pub fn visible_part_centroids(vertices: &[Vec3], visible: &[bool], parts: &[Vec<usize>]) -> Vec<Option<Vec3>> {
    parts
        .iter()
        .map(|ids| {
            let vis: Vec<&Vec3> = ids.iter().filter(|&&i| visible[i]).map(|&i| &vertices[i]).collect();
            (!vis.is_empty()).then(|| vis.iter().fold(Vec3::zeros(), |a, p| a + *p) / vis.len() as f64)
        })
        .collect()
}

/// Assignment weights: `w_st` is the distance between detection and visible
/// finger centroids divided by `scale_mm` (infinite for fingers with nothing
/// visible); `w_s` follows `mode`.
pub fn build_assignment_weights(
    detections: &[Detection],
    centroids: &[Option<Vec3>],
    mode: DetectionWeight,
    confidence_threshold: f64,
    scale_mm: f64,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let w_st = detections
        .iter()
        .map(|d| {
            centroids
                .iter()
                .map(|c| c.map_or(f64::INFINITY, |c| (c - d.centroid).norm() / scale_mm))
                .collect()
        })
        .collect();
    let w_s = detections
        .iter()
        .map(|d| match mode {
            DetectionWeight::Constant => 1.0,
            DetectionWeight::Confidence => d.confidence / confidence_threshold,
        })
        .collect();
    (w_st, w_s)
}

/// Targets for the visible vertices of every assigned finger. Fingers already
/// within the skip distance of their detection get none. When at least the
/// overlap fraction of the finger projects into the detection region, each
/// vertex goes to its closest detection point; otherwise all vertices go to
/// the detection centroid.
#[allow(clippy::too_many_arguments)]
pub fn match_salient(
    assignment: &AssignmentSolution,
    detections: &[Detection],
    deformed: &DeformedMesh,
    visible: &[bool],
    parts: &[Vec<usize>],
    observed: &ObservedFrame,
    camera: &Camera,
    gates: &Gates,
) -> Vec<PointMatch> {
    let mut out = Vec::new();
    for &(s, t) in &assignment.pairs {
        let det = &detections[s];
        let vis: Vec<usize> = parts[t].iter().copied().filter(|&i| visible[i]).collect();
        if vis.is_empty() {
            continue;
        }
        let centroid = vis.iter().fold(Vec3::zeros(), |a, &i| a + deformed.vertices[i]) / vis.len() as f64;
        if (centroid - det.centroid).norm() < gates.salient_skip_mm {
            continue;
        }
        let region: HashSet<(u32, u32)> = det.region.iter().copied().collect();
        let inside = vis
            .iter()
            .filter(|&&i| {
                camera
                    .project(&deformed.vertices[i])
                    .ok()
                    .and_then(|p| p.pixel(camera.width, camera.height))
                    .is_some_and(|(x, y)| region.contains(&(x as u32, y as u32)))
            })
            .count();
        let overlap = inside as f64 / vis.len() as f64;
        let points: Vec<Vec3> = if overlap >= gates.salient_overlap {
            det.region
                .iter()
                .filter(|&&(x, y)| (x as usize) < observed.cloud.index.width && (y as usize) < observed.cloud.index.height)
                .map(|&(x, y)| observed.cloud.index[(x as usize, y as usize)])
                .filter(|&k| k != NO_POINT)
                .map(|k| observed.cloud.points[k as usize])
                .collect()
        } else {
            Vec::new()
        };
        for &i in &vis {
            let v = deformed.vertices[i];
            let target = closest(&points, &v).unwrap_or(det.centroid);
            out.push(PointMatch {
                vertex: i as u32,
                target,
                normal: deformed.normals[i],
                distance2: (v - target).norm_squared(),
            });
        }
    }
    out
}

fn closest(points: &[Vec3], q: &Vec3) -> Option<Vec3> {
    points
        .iter()
        .map(|p| (p, (p - q).norm_squared()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, _)| *p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(c: Vec3, conf: f64) -> Detection {
        Detection { frame_index: 0, region: vec![(0, 0)], centroid: c, confidence: conf }
    }

    #[test]
    fn weights() {
        let dets = [det(Vec3::new(0.0, 0.0, 500.0), 4.5)];
        let centroids = [Some(Vec3::new(0.0, 0.0, 500.0)), Some(Vec3::new(30.0, 40.0, 500.0)), None];
        let (w, ws) = build_assignment_weights(&dets, &centroids, DetectionWeight::Confidence, 3.0, 100.0);
        assert_eq!(w[0][0], 0.0);
        assert!((w[0][1] - 0.5).abs() < 1e-15);
        assert!(w[0][2].is_infinite());
        assert_eq!(ws, vec![1.5]);
        let (_, ws) = build_assignment_weights(&dets, &centroids, DetectionWeight::Constant, 3.0, 100.0);
        assert_eq!(ws, vec![1.0]);
    }
}
