use super::camera::Camera;
use crate::{par, Grid, Vec3};

/// Marks pixels not covered by any triangle.
pub const NO_TRIANGLE: u32 = u32::MAX;

/// Triangles with any vertex closer than this are not drawn.
const NEAR_PLANE_MM: f64 = 1.0;
const BAND_ROWS: usize = 16;

/// Z-buffered depth image of a mesh. Background depth is 0.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthRender {
    pub depth: Grid<f64>,
    pub triangle: Grid<u32>,
}

struct RasterTriangle {
    id: u32,
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
    screen: [(f64, f64); 3],
    inv_z: [f64; 3],
    area: f64,
}

#[inline]
fn edge(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

impl RasterTriangle {
    fn setup(id: u32, tri: &[u32; 3], proj: &[Option<(f64, f64, f64)>], cam: &Camera) -> Option<Self> {
        let p = [proj[tri[0] as usize]?, proj[tri[1] as usize]?, proj[tri[2] as usize]?];
        let screen = p.map(|(u, v, _)| (u, v));
        let area = edge(screen[0], screen[1], screen[2]);
        if area == 0.0 || !area.is_finite() {
            return None;
        }
        let min_u = p.iter().map(|q| q.0).fold(f64::INFINITY, f64::min).ceil().max(0.0);
        let max_u = p.iter().map(|q| q.0).fold(f64::NEG_INFINITY, f64::max).floor();
        let min_v = p.iter().map(|q| q.1).fold(f64::INFINITY, f64::min).ceil().max(0.0);
        let max_v = p.iter().map(|q| q.1).fold(f64::NEG_INFINITY, f64::max).floor();
        let max_u = max_u.min(cam.width as f64 - 1.0);
        let max_v = max_v.min(cam.height as f64 - 1.0);
        if min_u > max_u || min_v > max_v {
            return None;
        }
        Some(Self {
            id,
            x0: min_u as usize,
            x1: max_u as usize,
            y0: min_v as usize,
            y1: max_v as usize,
            screen,
            inv_z: p.map(|q| 1.0 / q.2),
            area,
        })
    }

    /// Perspective-correct depth at pixel centre `(x, y)`, if covered.
    #[inline]
    fn depth_at(&self, x: f64, y: f64) -> Option<f64> {
        let c = (x, y);
        let s = &self.screen;
        let w0 = edge(s[1], s[2], c);
        let w1 = edge(s[2], s[0], c);
        let w2 = edge(s[0], s[1], c);
        let inside = if self.area > 0.0 {
            w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0
        } else {
            w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0
        };
        if !inside {
            return None;
        }
        let inv = (w0 * self.inv_z[0] + w1 * self.inv_z[1] + w2 * self.inv_z[2]) / self.area;
        Some(1.0 / inv)
    }
}

/// Rasterizes `triangles` into a depth map with per-pixel triangle ids.
///
/// Pixels are sampled at their centres; depth is interpolated in `1/z`, which
/// is exact for planar triangles. Equal depths keep the lower triangle id.
pub fn render_depth(vertices: &[Vec3], triangles: &[[u32; 3]], camera: &Camera) -> DepthRender {
    let (w, h) = (camera.width, camera.height);
    let proj = par::map(vertices, |p| {
        (p.z > NEAR_PLANE_MM).then(|| {
            (
                camera.fx * p.x / p.z + camera.cx,
                camera.fy * p.y / p.z + camera.cy,
                p.z,
            )
        })
    });
    let setups: Vec<Option<RasterTriangle>> =
        par::map_range(triangles.len(), |t| RasterTriangle::setup(t as u32, &triangles[t], &proj, camera));

    let band_count = h.div_ceil(BAND_ROWS);
    let mut bands: Vec<Vec<&RasterTriangle>> = vec![Vec::new(); band_count];
    for s in setups.iter().flatten() {
        for band in bands.iter_mut().take(s.y1 / BAND_ROWS + 1).skip(s.y0 / BAND_ROWS) {
            band.push(s);
        }
    }

    let mut buf = vec![(0.0f64, NO_TRIANGLE); w * h];
    if w > 0 {
        par::for_each_chunk_mut(&mut buf, BAND_ROWS * w, |band, chunk| {
            let row0 = band * BAND_ROWS;
            let rows = chunk.len() / w;
            for tri in &bands[band] {
                let ya = tri.y0.max(row0);
                let yb = tri.y1.min(row0 + rows - 1);
                for y in ya..=yb {
                    let row = &mut chunk[(y - row0) * w..(y - row0 + 1) * w];
                    for x in tri.x0..=tri.x1 {
                        if let Some(z) = tri.depth_at(x as f64, y as f64) {
                            let cell = &mut row[x];
                            if cell.1 == NO_TRIANGLE || z < cell.0 {
                                *cell = (z, tri.id);
                            }
                        }
                    }
                }
            }
        });
    }
    let (depth, triangle): (Vec<f64>, Vec<u32>) = buf.into_iter().unzip();
    DepthRender {
        depth: Grid::from_vec(w, h, depth),
        triangle: Grid::from_vec(w, h, triangle),
    }
}

/// A vertex is visible when it projects inside the image onto a covered pixel
/// whose rendered depth is at most `eps_mm` in front of the vertex.
pub fn visible_vertices(
    vertices: &[Vec3],
    camera: &Camera,
    render: &DepthRender,
    eps_mm: f64,
) -> Vec<bool> {
    par::map(vertices, |p| {
        let Ok(proj) = camera.project(p) else {
            return false;
        };
        let Some((x, y)) = proj.pixel(render.depth.width, render.depth.height) else {
            return false;
        };
        render.triangle[(x, y)] != NO_TRIANGLE && p.z <= render.depth[(x, y)] + eps_mm
    })
}
