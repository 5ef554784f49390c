use super::config::Gates;
use super::correspond::{PointMatch, RayMatch};
use super::nn::PointGrid;
use crate::sensor::{depth_edges, edge_distance_transform, ObservedFrame, NO_EDGE};
use crate::skinned_model::{Camera, DeformedMesh, DepthRender, NO_TRIANGLE};
use crate::{par, Vec3};

/// For every visible vertex, the nearest cloud point, kept when it is within
/// the distance gate and the two normals differ by at most the angle gate.
pub fn match_model_to_data(
    deformed: &DeformedMesh,
    visible: &[bool],
    observed: &ObservedFrame,
    grid: &PointGrid,
    gates: &Gates,
) -> Vec<PointMatch> {
    if observed.cloud.is_empty() {
        return Vec::new();
    }
    let cos_gate = gates.normal_angle_deg.to_radians().cos();
    let ids: Vec<u32> = (0..deformed.vertices.len() as u32)
        .filter(|&i| visible[i as usize] && deformed.normal_valid[i as usize])
        .collect();
    let found = par::map(&ids, |&i| {
        let v = &deformed.vertices[i as usize];
        let (p, d2) = grid.nearest_within(&observed.cloud.points, v, gates.m2d_distance_mm)?;
        let p = p as usize;
        if !observed.normal_valid[p] {
            return None;
        }
        let n = deformed.normals[i as usize];
        if n.dot(&observed.normals[p]) < cos_gate {
            return None;
        }
        Some(PointMatch {
            vertex: i,
            target: observed.cloud.points[p],
            normal: n,
            distance2: d2,
        })
    });
    found.into_iter().flatten().collect()
}

/// Matches observed depth-discontinuity pixels to the nearest discontinuity
/// of the rendered model. Each observed edge is lifted with its averaged depth
/// and becomes a camera ray; pairs farther apart than the gate in 3D are
/// dropped. Returns no matches when the model has no edges in view.
pub fn match_data_to_model(
    deformed: &DeformedMesh,
    triangles: &[[u32; 3]],
    render: &DepthRender,
    observed: &ObservedFrame,
    camera: &Camera,
    model_edge_threshold_mm: f64,
    gates: &Gates,
) -> Vec<RayMatch> {
    let model_edges = depth_edges(&render.depth, model_edge_threshold_mm);
    if model_edges.is_empty() || observed.edges.is_empty() {
        return Vec::new();
    }
    let coords: Vec<(u32, u32)> = model_edges.iter().map(|e| (e.x, e.y)).collect();
    let dt = edge_distance_transform(&coords, render.depth.width, render.depth.height);
    let gate2 = gates.d2m_distance_mm * gates.d2m_distance_mm;
    let found = par::map(&observed.edges, |e| {
        let (x, y) = (e.x as usize, e.y as usize);
        if x >= dt.nearest.width || y >= dt.nearest.height {
            return None;
        }
        let k = dt.nearest[(x, y)];
        if k == NO_EDGE {
            return None;
        }
        let (mx, my) = coords[k as usize];
        let tri = render.triangle[(mx as usize, my as usize)];
        if tri == NO_TRIANGLE {
            return None;
        }
        let vertex = nearest_projected_vertex(&deformed.vertices, &triangles[tri as usize], camera, mx as f64, my as f64)?;
        let point = camera.backproject(e.x as f64, e.y as f64, e.depth_mm);
        let d2 = (deformed.vertices[vertex as usize] - point).norm_squared();
        (d2 <= gate2).then(|| RayMatch::through(vertex, point, d2))
    });
    found.into_iter().flatten().collect()
}

fn nearest_projected_vertex(vertices: &[Vec3], tri: &[u32; 3], camera: &Camera, u: f64, v: f64) -> Option<u32> {
    let mut best: Option<(u32, f64)> = None;
    for &i in tri {
        let Ok(p) = camera.project(&vertices[i as usize]) else { continue };
        let d = (p.u - u).powi(2) + (p.v - v).powi(2);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|b| b.0)
}
