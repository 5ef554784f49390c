use crate::Vec3;

/// Triangles with area below this are skipped by collision detection (mm²).
pub const DEGENERATE_AREA: f64 = 1e-12;

pub fn triangle_area(t: &[Vec3; 3]) -> f64 {
    0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm()
}

/// Signed plane distances below this fraction of `|n| · extent` are rounded
/// to zero, so that rounding noise in coplanar input cannot fake a crossing.
pub const PLANE_TOLERANCE: f64 = 1e-9;

fn max_edge(t: &[Vec3; 3]) -> f64 {
    (t[1] - t[0]).norm().max((t[2] - t[1]).norm()).max((t[0] - t[2]).norm())
}

fn plane_distances(n: &Vec3, origin: &Vec3, pts: &[Vec3; 3], extent: f64) -> [f64; 3] {
    let tol = PLANE_TOLERANCE * n.norm() * extent;
    pts.map(|p| {
        let d = n.dot(&(p - origin));
        if d.abs() <= tol {
            0.0
        } else {
            d
        }
    })
}

/// Interval-overlap test for two triangles. Touching counts as intersecting.
/// Degenerate triangles never intersect anything.
pub fn triangles_intersect(a: &[Vec3; 3], b: &[Vec3; 3]) -> bool {
    if triangle_area(a) < DEGENERATE_AREA || triangle_area(b) < DEGENERATE_AREA {
        return false;
    }
    let extent = max_edge(a).max(max_edge(b));
    let na = (a[1] - a[0]).cross(&(a[2] - a[0]));
    let db = plane_distances(&na, &a[0], b, extent);
    if same_strict_side(&db) {
        return false;
    }
    let nb = (b[1] - b[0]).cross(&(b[2] - b[0]));
    let da = plane_distances(&nb, &b[0], a, extent);
    if same_strict_side(&da) {
        return false;
    }
    if db.iter().all(|&d| d == 0.0) || da.iter().all(|&d| d == 0.0) {
        return coplanar_intersect(a, b, &na);
    }
    let dir = na.cross(&nb);
    let axis = dir.abs().imax();
    let pa = a.map(|p| p[axis]);
    let pb = b.map(|p| p[axis]);
    let (Some(ia), Some(ib)) = (plane_interval(&pa, &da), plane_interval(&pb, &db)) else {
        return false;
    };
    ia.0 <= ib.1 && ib.0 <= ia.1
}

fn same_strict_side(d: &[f64; 3]) -> bool {
    (d[0] > 0.0 && d[1] > 0.0 && d[2] > 0.0) || (d[0] < 0.0 && d[1] < 0.0 && d[2] < 0.0)
}

/// Extent along the intersection line of the part of a triangle lying on the
/// other triangle's plane.
fn plane_interval(p: &[f64; 3], d: &[f64; 3]) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut add = |x: f64| {
        lo = lo.min(x);
        hi = hi.max(x);
    };
    for i in 0..3 {
        if d[i] == 0.0 {
            add(p[i]);
        }
        let j = (i + 1) % 3;
        if (d[i] > 0.0 && d[j] < 0.0) || (d[i] < 0.0 && d[j] > 0.0) {
            add(p[i] + (p[j] - p[i]) * d[i] / (d[i] - d[j]));
        }
    }
    (lo <= hi).then_some((lo, hi))
}

fn coplanar_intersect(a: &[Vec3; 3], b: &[Vec3; 3], n: &Vec3) -> bool {
    let drop = n.abs().imax();
    let (i0, i1) = match drop {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let a2 = a.map(|p| [p[i0], p[i1]]);
    let b2 = b.map(|p| [p[i0], p[i1]]);
    for i in 0..3 {
        for j in 0..3 {
            if segments_intersect_2d(a2[i], a2[(i + 1) % 3], b2[j], b2[(j + 1) % 3]) {
                return true;
            }
        }
    }
    point_in_triangle_2d(a2[0], &b2) || point_in_triangle_2d(b2[0], &a2)
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect_2d(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn point_in_triangle_2d(p: [f64; 2], t: &[[f64; 2]; 3]) -> bool {
    let d0 = orient(t[0], t[1], p);
    let d1 = orient(t[1], t[2], p);
    let d2 = orient(t[2], t[0], p);
    let neg = d0 < 0.0 || d1 < 0.0 || d2 < 0.0;
    let pos = d0 > 0.0 || d1 > 0.0 || d2 > 0.0;
    !(neg && pos)
}
