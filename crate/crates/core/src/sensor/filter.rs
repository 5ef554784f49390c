use crate::{par, Grid};

/// Zeroes depth outside `[near_mm, far_mm]` or outside the foreground mask.
pub fn threshold_mask(depth: &Grid<f64>, mask: &Grid<bool>, near_mm: f64, far_mm: f64) -> Grid<f64> {
    assert!(depth.same_shape(mask), "mask and depth differ in size");
    let data = depth
        .data
        .iter()
        .zip(&mask.data)
        .map(|(&d, &m)| if m && d > 0.0 && d >= near_mm && d <= far_mm { d } else { 0.0 })
        .collect();
    Grid::from_vec(depth.width, depth.height, data)
}

/// Edge-preserving bilateral filter over valid (non-zero) pixels.
///
/// The window radius is `ceil(2σ_s)`. Invalid pixels neither contribute nor
/// receive values.
pub fn bilateral_smooth(depth: &Grid<f64>, spatial_sigma_px: f64, range_sigma_mm: f64) -> Grid<f64> {
    let (w, h) = (depth.width, depth.height);
    if spatial_sigma_px <= 0.0 || range_sigma_mm <= 0.0 || w == 0 {
        return depth.clone();
    }
    let radius = (2.0 * spatial_sigma_px).ceil() as i64;
    let spatial: Vec<f64> = (-radius..=radius)
        .flat_map(|dy| {
            (-radius..=radius).map(move |dx| {
                (-((dx * dx + dy * dy) as f64) / (2.0 * spatial_sigma_px * spatial_sigma_px)).exp()
            })
        })
        .collect();
    let side = (2 * radius + 1) as usize;
    let inv_range = 1.0 / (2.0 * range_sigma_mm * range_sigma_mm);
    let mut out = vec![0.0; w * h];
    par::for_each_chunk_mut(&mut out, w, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            let center = depth[(x, y)];
            if center <= 0.0 {
                continue;
            }
            let (mut num, mut den) = (0.0, 0.0);
            for dy in -radius..=radius {
                for dx in -radius..=radius {
                    let Some(&d) = depth.get(x as i64 + dx, y as i64 + dy) else {
                        continue;
                    };
                    if d <= 0.0 {
                        continue;
                    }
                    let diff = d - center;
                    let k = spatial[(dy + radius) as usize * side + (dx + radius) as usize]
                        * (-diff * diff * inv_range).exp();
                    num += k * d;
                    den += k;
                }
            }
            *o = num / den;
        }
    });
    Grid::from_vec(w, h, out)
}
