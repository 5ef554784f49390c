use crate::Grid;

/// A depth-discontinuity pixel with its 3×3-averaged depth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgePixel {
    pub x: u32,
    pub y: u32,
    pub depth_mm: f64,
}

/// Depth discontinuities on the near side of each jump.
///
/// A valid pixel is an edge when one of its 4-neighbours inside the image is
/// invalid (background) or lies more than `grad_threshold_mm` farther away.
/// Only the nearer side of a jump is marked, which yields one-pixel chains.
/// Each edge stores the mean of the valid depths in its 3×3 window. Output is
/// in row-major order.
pub fn depth_edges(depth: &Grid<f64>, grad_threshold_mm: f64) -> Vec<EdgePixel> {
    let mut out = Vec::new();
    for y in 0..depth.height {
        for x in 0..depth.width {
            let d = depth[(x, y)];
            if d <= 0.0 {
                continue;
            }
            let (xi, yi) = (x as i64, y as i64);
            let is_edge = [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(dx, dy)| {
                match depth.get(xi + dx, yi + dy) {
                    Some(&q) => q <= 0.0 || q - d > grad_threshold_mm,
                    None => false,
                }
            });
            if !is_edge {
                continue;
            }
            let (mut sum, mut n) = (0.0, 0usize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(&q) = depth.get(xi + dx, yi + dy) {
                        if q > 0.0 {
                            sum += q;
                            n += 1;
                        }
                    }
                }
            }
            out.push(EdgePixel {
                x: x as u32,
                y: y as u32,
                depth_mm: sum / n as f64,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skinned_model::{procedural::icosphere, render_depth, Camera};
    use crate::Vec3;

    #[test]
    fn constant_depth_has_no_edges() {
        assert!(depth_edges(&Grid::filled(10, 10, 500.0), 25.0).is_empty());
    }

    #[test]
    fn step_gives_single_near_side_column() {
        let d = Grid::from_vec(
            20,
            8,
            (0..160).map(|i| if i % 20 < 10 { 450.0 } else { 600.0 }).collect(),
        );
        let e = depth_edges(&d, 25.0);
        assert_eq!(e.len(), 8);
        assert!(e.iter().all(|p| p.x == 9));
        // 3×3 mean mixes two near and one far column.
        assert!((e[3].depth_mm - (2.0 * 450.0 + 600.0) / 3.0).abs() < 1e-9);
    }

    #[test]
    fn small_steps_are_not_edges() {
        let d = Grid::from_vec(4, 1, vec![500.0, 510.0, 520.0, 530.0]);
        assert!(depth_edges(&d, 25.0).is_empty());
    }

    #[test]
    fn sphere_silhouette_matches_analytic_circle() {
        let cam = Camera { width: 160, height: 120, cx: 80.0, cy: 60.0, fx: 200.0, fy: 200.0, depth_scale: 1.0 };
        let (radius, dist) = (40.0, 400.0);
        let (v, t) = icosphere(Vec3::new(0.0, 0.0, dist), radius, 4);
        let r = render_depth(&v, &t, &cam);
        let edges = depth_edges(&r.depth, 25.0);
        let alpha = (radius / dist as f64).asin();
        let rho = cam.fx * alpha.tan();
        assert!(edges.len() > 100);
        for e in &edges {
            let d = ((e.x as f64 - cam.cx).powi(2) + (e.y as f64 - cam.cy).powi(2)).sqrt();
            assert!((d - rho).abs() <= 1.0, "edge at ({}, {}) is {d} px from centre, circle {rho}", e.x, e.y);
        }
    }
}
