//! Portable anymap (PGM/PPM) images for visual inspection.

use std::path::Path;

use crate::skinned_model::{DepthRender, NO_TRIANGLE};
use crate::{Error, Grid, Result};

/// Binary PGM (`P5`).
pub fn encode_pgm(gray: &Grid<u8>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", gray.width, gray.height).into_bytes();
    out.extend_from_slice(&gray.data);
    out
}

/// Binary PPM (`P6`).
pub fn encode_ppm(rgb: &Grid<[u8; 3]>) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", rgb.width, rgb.height).into_bytes();
    for p in &rgb.data {
        out.extend_from_slice(p);
    }
    out
}

pub fn write_image(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Valid depths mapped to gray levels, nearest brightest; invalid pixels black.
pub fn depth_to_gray(depth: &Grid<f64>) -> Grid<u8> {
    let valid = depth.data.iter().copied().filter(|&d| d > 0.0);
    let (lo, hi) = valid.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), d| (a.min(d), b.max(d)));
    let span = (hi - lo).max(1.0);
    depth.map(|&d| if d > 0.0 { (255.0 - 191.0 * (d - lo) / span).round() as u8 } else { 0 })
}

/// Observed depth in gray with the rendered model tinted red on top; where the
/// model lies behind the observed surface the tint is blue.
pub fn overlay(observed: &Grid<f64>, model: &DepthRender) -> Grid<[u8; 3]> {
    let gray = depth_to_gray(observed);
    let mut out = gray.map(|&g| [g, g, g]);
    for (i, px) in out.data.iter_mut().enumerate() {
        if model.triangle.data[i] == NO_TRIANGLE {
            continue;
        }
        let g = gray.data[i] as u16;
        let z_obs = observed.data[i];
        let behind = z_obs > 0.0 && model.depth.data[i] > z_obs + 10.0;
        *px = if behind {
            [(g / 2) as u8, (g / 2) as u8, (g / 2 + 127) as u8]
        } else {
            [(g / 2 + 127) as u8, (g / 2) as u8, (g / 2) as u8]
        };
    }
    out
}
