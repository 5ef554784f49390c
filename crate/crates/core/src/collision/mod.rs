//! Self-intersection detection on the deformed mesh and the penetration
//! penalty built from intersecting triangle pairs.

mod bvh;
mod field;
mod tri_tri;

pub use bvh::{build_bvh, triangle_box, Aabb, Bvh, MAX_LEAF};
pub use field::{
    penetration, penetration_gradient, phi, psi, upsilon, upsilon_derivative, CollisionEnergy, TriangleFrame,
};
pub use tri_tri::{triangle_area, triangles_intersect, DEGENERATE_AREA};

use crate::residual::{Metric, ResidualBlock, Term};
use crate::skinned_model::SkinJacobian;
use crate::{par, Vec3};

fn corners(vertices: &[Vec3], t: &[u32; 3]) -> [Vec3; 3] {
    t.map(|i| vertices[i as usize])
}

fn share_vertex(a: &[u32; 3], b: &[u32; 3]) -> bool {
    a.iter().any(|i| b.contains(i))
}

/// Intersecting triangle pairs `(i, j)` with `i < j`, sorted. Pairs sharing a
/// vertex are skipped when `skip_adjacent` is set.
pub fn find_collisions(bvh: &Bvh, vertices: &[Vec3], triangles: &[[u32; 3]], skip_adjacent: bool) -> Vec<(u32, u32)> {
    let per_triangle = par::map_range(triangles.len(), |i| {
        let ti = &triangles[i];
        let a = corners(vertices, ti);
        bvh.query(bvh.triangle_bounds(i as u32))
            .into_iter()
            .filter(|&j| j as usize > i)
            .filter(|&j| !(skip_adjacent && share_vertex(ti, &triangles[j as usize])))
            .filter(|&j| triangles_intersect(&a, &corners(vertices, &triangles[j as usize])))
            .map(|j| (i as u32, j))
            .collect::<Vec<_>>()
    });
    per_triangle.into_iter().flatten().collect()
}

/// One intruding vertex and the triangle it penetrates, with the receiver
/// frame and the vertex normal frozen at linearization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionSample {
    pub vertex: u32,
    pub receiver: TriangleFrame,
    pub normal: Vec3,
}

/// Both orderings of every pair: vertices of the first triangle against the
/// second, then the reverse. Degenerate receivers are dropped.
pub fn collision_samples(
    pairs: &[(u32, u32)],
    vertices: &[Vec3],
    normals: &[Vec3],
    triangles: &[[u32; 3]],
) -> Vec<CollisionSample> {
    let mut out = Vec::new();
    for &(s, t) in pairs {
        for (intruder, receiver) in [(s, t), (t, s)] {
            let rt = &triangles[receiver as usize];
            let Some(frame) = TriangleFrame::new(&vertices[rt[0] as usize], &vertices[rt[1] as usize], &vertices[rt[2] as usize])
            else {
                continue;
            };
            let mut ids = triangles[intruder as usize];
            ids.sort_unstable();
            for v in ids {
                out.push(CollisionSample {
                    vertex: v,
                    receiver: frame,
                    normal: normals[v as usize],
                });
            }
        }
    }
    out
}

/// Collision residuals for frozen samples at the current vertex positions.
/// Point-to-point gives three rows `-Ψ n_v` per sample, point-to-plane one row `-Ψ`.
pub fn collision_block(
    samples: &[CollisionSample],
    vertices: &[Vec3],
    sigma: f64,
    metric: Metric,
    energy: CollisionEnergy,
    dof: usize,
    jacobian: Option<&SkinJacobian>,
) -> ResidualBlock {
    let mut block = ResidualBlock::new(Term::Collision, dof);
    for s in samples {
        let v = &vertices[s.vertex as usize];
        let (value, grad) = energy.residual_gradient(v, &s.receiver, sigma);
        let jv = jacobian.map(|j| j.vertex_jacobian(s.vertex as usize));
        match metric {
            Metric::PointToPlane => {
                let row = jv.map(|j| -(grad.transpose() * j));
                block.push_scalar(-value, row);
            }
            Metric::PointToPoint => {
                let rows = jv.map(|j| -(s.normal * (grad.transpose() * j)));
                block.push_vec3(-s.normal * value, rows.as_ref());
            }
        }
    }
    block
}

/// Sum of Ψ over both orderings of every pair, evaluated directly.
pub fn total_penetration(pairs: &[(u32, u32)], vertices: &[Vec3], triangles: &[[u32; 3]], sigma: f64) -> f64 {
    let normals = vec![Vec3::zeros(); vertices.len()];
    collision_samples(pairs, vertices, &normals, triangles)
        .iter()
        .map(|s| psi(&vertices[s.vertex as usize], &s.receiver, sigma))
        .fold(0.0, |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skinned_model::procedural::icosphere;
    use nalgebra::{Rotation3, Vector3};

    fn two_spheres(offset: f64) -> (Vec<Vec3>, Vec<[u32; 3]>) {
        let (mut v, mut t) = icosphere(Vec3::zeros(), 10.0, 2);
        let (v2, t2) = icosphere(Vec3::new(offset, 0.0, 0.0), 10.0, 2);
        let base = v.len() as u32;
        v.extend(v2);
        t.extend(t2.into_iter().map(|f| f.map(|i| i + base)));
        (v, t)
    }

    fn brute_force(vertices: &[Vec3], triangles: &[[u32; 3]]) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for i in 0..triangles.len() {
            for j in i + 1..triangles.len() {
                if share_vertex(&triangles[i], &triangles[j]) {
                    continue;
                }
                if triangles_intersect(&corners(vertices, &triangles[i]), &corners(vertices, &triangles[j])) {
                    out.push((i as u32, j as u32));
                }
            }
        }
        out
    }

    #[test]
    fn separate_spheres_do_not_collide() {
        let (v, t) = two_spheres(25.0);
        let bvh = build_bvh(&v, &t);
        assert!(find_collisions(&bvh, &v, &t, true).is_empty());
    }

    #[test]
    fn overlapping_spheres_match_brute_force() {
        let (v, t) = two_spheres(15.0);
        let bvh = build_bvh(&v, &t);
        let found = find_collisions(&bvh, &v, &t, true);
        assert!(!found.is_empty());
        assert_eq!(found, brute_force(&v, &t));
    }

    #[test]
    fn adjacent_pairs_are_reported_without_skip() {
        let (v, t) = icosphere(Vec3::zeros(), 10.0, 1);
        let bvh = build_bvh(&v, &t);
        assert!(find_collisions(&bvh, &v, &t, true).is_empty());
        assert!(!find_collisions(&bvh, &v, &t, false).is_empty());
    }

    #[test]
    fn penetration_is_rigid_invariant() {
        let (v, t) = two_spheres(16.0);
        let pairs = brute_force(&v, &t);
        let e0 = total_penetration(&pairs, &v, &t, 0.5);
        assert!(e0 > 0.0);
        let rot = Rotation3::from_axis_angle(&Vector3::y_axis(), 0.7) * Rotation3::from_axis_angle(&Vector3::x_axis(), -0.3);
        let moved: Vec<Vec3> = v.iter().map(|p| rot * p + Vec3::new(4.0, -9.0, 300.0)).collect();
        let e1 = total_penetration(&pairs, &moved, &t, 0.5);
        assert!((e0 - e1).abs() < 1e-9 * e0.max(1.0));
    }

    #[test]
    fn block_rows_follow_metric() {
        let tri = [[0u32, 1, 2], [3, 4, 5]];
        let v = vec![
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, -0.3),
            Vec3::new(5.0, 0.0, 2.0),
            Vec3::new(0.0, 5.0, 2.0),
        ];
        let normals = vec![Vec3::z(); 6];
        let samples = collision_samples(&[(0, 1)], &v, &normals, &tri);
        assert_eq!(samples.len(), 6);
        let plane = collision_block(&samples, &v, 0.5, Metric::PointToPlane, CollisionEnergy::Squared, 3, None);
        let point = collision_block(&samples, &v, 0.5, Metric::PointToPoint, CollisionEnergy::Squared, 3, None);
        assert_eq!(plane.len(), 6);
        assert_eq!(point.len(), 18);
        assert!((plane.energy() - point.energy()).abs() < 1e-12);
        // the vertex at (0,0,-0.3) sits inside the first triangle's cone
        let idx = samples.iter().position(|s| s.vertex == 3).unwrap();
        let expected = psi(&v[3], &samples[idx].receiver, 0.5);
        assert!(expected > 0.0);
        assert_eq!(plane.residuals[idx], -expected);
    }
}
