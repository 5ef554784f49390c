use crate::Grid;

pub const NO_EDGE: u32 = u32::MAX;

/// Exact Euclidean distance (pixels) to the nearest edge pixel and that
/// edge's index, for every pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMap {
    pub distance: Grid<f64>,
    pub nearest: Grid<u32>,
}

impl DistanceMap {
    pub fn squared(&self, x: usize, y: usize) -> f64 {
        let d = self.distance[(x, y)];
        d * d
    }
}

/// Two-pass lower-envelope distance transform that also tracks the arg-min.
///
/// `edges` are `(x, y)` pixels; repeated pixels resolve to their first index.
/// With no edges every distance is `+∞` and every index is [`NO_EDGE`].
pub fn edge_distance_transform(edges: &[(u32, u32)], width: usize, height: usize) -> DistanceMap {
    let mut ids = Grid::filled(width, height, NO_EDGE);
    for (i, &(x, y)) in edges.iter().enumerate() {
        let cell = &mut ids[(x as usize, y as usize)];
        if *cell == NO_EDGE {
            *cell = i as u32;
        }
    }

    // Column pass: nearest edge row in the same column.
    let mut column_src = Grid::filled(width, height, u32::MAX);
    for x in 0..width {
        let mut last = None;
        for y in 0..height {
            if ids[(x, y)] != NO_EDGE {
                last = Some(y);
            }
            if let Some(l) = last {
                column_src[(x, y)] = l as u32;
            }
        }
        let mut next = None;
        for y in (0..height).rev() {
            if ids[(x, y)] != NO_EDGE {
                next = Some(y);
            }
            if let Some(n) = next {
                let cur = column_src[(x, y)];
                if cur == u32::MAX || n - y < y - cur as usize {
                    column_src[(x, y)] = n as u32;
                }
            }
        }
    }

    let mut distance = Grid::filled(width, height, f64::INFINITY);
    let mut nearest = Grid::filled(width, height, NO_EDGE);
    let mut f = vec![0.0; width];
    let mut v = vec![0usize; width];
    let mut z = vec![0.0; width + 1];
    for y in 0..height {
        for x in 0..width {
            let s = column_src[(x, y)];
            f[x] = if s == u32::MAX {
                f64::INFINITY
            } else {
                let d = y as f64 - s as f64;
                d * d
            };
        }
        // Lower envelope of parabolas (x - q)² + f(q) over finite f.
        let mut k: isize = -1;
        for q in 0..width {
            if !f[q].is_finite() {
                continue;
            }
            let qf = q as f64;
            loop {
                if k < 0 {
                    k = 0;
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                let p = v[k as usize];
                let pf = p as f64;
                let s = ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf);
                if s <= z[k as usize] {
                    k -= 1;
                    continue;
                }
                k += 1;
                v[k as usize] = q;
                z[k as usize] = s;
                z[k as usize + 1] = f64::INFINITY;
                break;
            }
        }
        if k < 0 {
            continue;
        }
        let mut j = 0usize;
        for x in 0..width {
            while z[j + 1] < x as f64 {
                j += 1;
            }
            let q = v[j];
            let dx = x as f64 - q as f64;
            distance[(x, y)] = (dx * dx + f[q]).sqrt();
            nearest[(x, y)] = ids[(q, column_src[(q, y)] as usize)];
        }
    }
    DistanceMap { distance, nearest }
}
