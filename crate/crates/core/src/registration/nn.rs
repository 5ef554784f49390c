use std::collections::HashMap;

use crate::Vec3;

/// Uniform 3D grid over a point set. With cell size equal to the search
/// radius, a radius query only needs the 27 cells around the query point.
#[derive(Clone, Debug)]
pub struct PointGrid {
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<u32>>,
}

impl PointGrid {
    pub fn new(points: &[Vec3], cell: f64) -> Self {
        assert!(cell > 0.0, "cell size must be positive");
        let mut cells: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(key(p, cell)).or_default().push(i as u32);
        }
        Self { cell, cells }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    /// Closest point within `radius` (≤ cell size) and its squared distance.
    /// Ties go to the smaller index.
    pub fn nearest_within(&self, points: &[Vec3], q: &Vec3, radius: f64) -> Option<(u32, f64)> {
        debug_assert!(radius <= self.cell);
        let (cx, cy, cz) = key(q, self.cell);
        let r2 = radius * radius;
        let mut best: Option<(u32, f64)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(ids) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) else {
                        continue;
                    };
                    for &i in ids {
                        let d2 = (points[i as usize] - q).norm_squared();
                        if d2 > r2 {
                            continue;
                        }
                        let better = match best {
                            None => true,
                            Some((bi, bd)) => d2 < bd || (d2 == bd && i < bi),
                        };
                        if better {
                            best = Some((i, d2));
                        }
                    }
                }
            }
        }
        best
    }
}

fn key(p: &Vec3, cell: f64) -> (i64, i64, i64) {
    (
        (p.x / cell).floor() as i64,
        (p.y / cell).floor() as i64,
        (p.z / cell).floor() as i64,
    )
}
