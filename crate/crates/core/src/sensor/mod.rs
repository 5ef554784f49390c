//! Depth frame preprocessing: masking, smoothing, back-projection, normals,
//! depth discontinuities and their distance transform.

mod cloud;
mod distance;
mod edges;
mod filter;
pub mod image;

pub use cloud::{backproject_cloud, estimate_cloud_normals, PointCloud, NO_POINT};
pub use distance::{edge_distance_transform, DistanceMap, NO_EDGE};
pub use edges::{depth_edges, EdgePixel};
pub use filter::{bilateral_smooth, threshold_mask};

use serde::{Deserialize, Serialize};

use crate::skinned_model::Camera;
use crate::{Error, Grid, Result, Vec3};

/// Depth frame as captured: millimetres (0 = invalid) and a foreground mask.
#[derive(Clone, Debug, PartialEq)]
pub struct RawFrame {
    pub depth: Grid<f64>,
    pub mask: Grid<bool>,
    pub frame_index: usize,
}

impl RawFrame {
    pub fn new(depth: Grid<f64>, mask: Grid<bool>, frame_index: usize) -> Result<Self> {
        if !depth.same_shape(&mask) {
            return Err(Error::InvalidArgument(format!(
                "mask {}x{} does not match depth {}x{}",
                mask.width, mask.height, depth.width, depth.height
            )));
        }
        if depth.data.iter().any(|&d| !(d >= 0.0)) {
            return Err(Error::InvalidArgument("depth must be non-negative".into()));
        }
        Ok(Self {
            depth,
            mask,
            frame_index,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessParams {
    pub near_mm: f64,
    pub far_mm: f64,
    /// Zero disables the bilateral filter.
    pub spatial_sigma_px: f64,
    pub range_sigma_mm: f64,
    pub normal_window: usize,
    pub edge_threshold_mm: f64,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        Self {
            near_mm: 200.0,
            far_mm: 1500.0,
            spatial_sigma_px: 3.0,
            range_sigma_mm: 20.0,
            normal_window: 5,
            edge_threshold_mm: 25.0,
        }
    }
}

/// A preprocessed depth frame ready for registration.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedFrame {
    pub frame_index: usize,
    pub camera: Camera,
    /// Masked, thresholded, smoothed depth in millimetres.
    pub depth: Grid<f64>,
    pub cloud: PointCloud,
    pub normals: Vec<Vec3>,
    pub normal_valid: Vec<bool>,
    pub edges: Vec<EdgePixel>,
    pub edge_distance: DistanceMap,
}

pub fn preprocess(raw: &RawFrame, camera: &Camera, params: &PreprocessParams) -> Result<ObservedFrame> {
    if raw.depth.width != camera.width || raw.depth.height != camera.height {
        return Err(Error::InvalidArgument(format!(
            "frame is {}x{}, camera expects {}x{}",
            raw.depth.width, raw.depth.height, camera.width, camera.height
        )));
    }
    if !(params.near_mm < params.far_mm) {
        return Err(Error::InvalidArgument("near threshold must be below far".into()));
    }
    let masked = threshold_mask(&raw.depth, &raw.mask, params.near_mm, params.far_mm);
    let depth = bilateral_smooth(&masked, params.spatial_sigma_px, params.range_sigma_mm);
    let cloud = backproject_cloud(&depth, None, camera);
    let (normals, normal_valid) = estimate_cloud_normals(&cloud, params.normal_window);
    let edges = depth_edges(&depth, params.edge_threshold_mm);
    let coords: Vec<(u32, u32)> = edges.iter().map(|e| (e.x, e.y)).collect();
    let edge_distance = edge_distance_transform(&coords, depth.width, depth.height);
    Ok(ObservedFrame {
        frame_index: raw.frame_index,
        camera: *camera,
        depth,
        cloud,
        normals,
        normal_valid,
        edges,
        edge_distance,
    })
}
