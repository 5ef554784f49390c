use nalgebra::SymmetricEigen;

use crate::skinned_model::Camera;
use crate::{par, Grid, Mat3, Vec3};

pub const NO_POINT: u32 = u32::MAX;

/// Organized point cloud: every point remembers its source pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub pixels: Vec<(u32, u32)>,
    /// Pixel to point index, [`NO_POINT`] where the pixel has no point.
    pub index: Grid<u32>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Back-projects every valid masked pixel: `x = (u − cx) z / fx`, `y = (v − cy) z / fy`.
pub fn backproject_cloud(depth: &Grid<f64>, mask: Option<&Grid<bool>>, camera: &Camera) -> PointCloud {
    let mut points = Vec::new();
    let mut pixels = Vec::new();
    let mut index = Grid::filled(depth.width, depth.height, NO_POINT);
    for y in 0..depth.height {
        for x in 0..depth.width {
            let z = depth[(x, y)];
            if z <= 0.0 || mask.is_some_and(|m| !m[(x, y)]) {
                continue;
            }
            index[(x, y)] = points.len() as u32;
            points.push(camera.backproject(x as f64, y as f64, z));
            pixels.push((x as u32, y as u32));
        }
    }
    PointCloud {
        points,
        pixels,
        index,
    }
}

/// Normals by plane fit over valid points in a `window × window` pixel
/// neighbourhood, oriented so that `n · p < 0` (towards the camera at the
/// origin). Points with fewer than three neighbours or a degenerate spread get
/// `valid = false`.
pub fn estimate_cloud_normals(cloud: &PointCloud, window: usize) -> (Vec<Vec3>, Vec<bool>) {
    let r = (window / 2) as i64;
    let fits = par::map_range(cloud.len(), |i| {
        let (px, py) = cloud.pixels[i];
        let mut nb = Vec::with_capacity(window * window);
        for dy in -r..=r {
            for dx in -r..=r {
                if let Some(&j) = cloud.index.get(px as i64 + dx, py as i64 + dy) {
                    if j != NO_POINT {
                        nb.push(cloud.points[j as usize]);
                    }
                }
            }
        }
        if nb.len() < 3 {
            return None;
        }
        let c = nb.iter().sum::<Vec3>() / nb.len() as f64;
        let mut cov = Mat3::zeros();
        for p in &nb {
            let d = p - c;
            cov += d * d.transpose();
        }
        let eig = SymmetricEigen::new(cov);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        // Collinear neighbourhoods have two vanishing eigenvalues.
        if eig.eigenvalues[order[1]] <= 1e-9 * eig.eigenvalues[order[2]].max(1e-300) {
            return None;
        }
        let mut n: Vec3 = eig.eigenvectors.column(order[0]).into();
        n.normalize_mut();
        if n.dot(&cloud.points[i]) > 0.0 {
            n = -n;
        }
        Some(n)
    });
    let valid = fits.iter().map(Option::is_some).collect();
    let normals = fits.into_iter().map(|n| n.unwrap_or_else(Vec3::zeros)).collect();
    (normals, valid)
}
