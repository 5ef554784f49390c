mod common;

use common::*;
use handtrack::collision::{
    build_bvh, collision_block, collision_samples, find_collisions, phi, psi, triangle_box, triangles_intersect, upsilon,
    upsilon_derivative, Aabb, CollisionEnergy, TriangleFrame,
};
use handtrack::residual::Metric;
use handtrack::skinned_model::compute_vertex_normals;
use handtrack::skinned_model::procedural::{capsule, icosphere};
use handtrack::{Mat3, Vec3};
use nalgebra::Rotation3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn frame() -> impl Strategy<Value = TriangleFrame> {
    (vec3(5.0), vec3(5.0), vec3(5.0)).prop_filter_map("degenerate", |(a, b, c)| {
        if (b - a).cross(&(c - a)).norm() < 1e-2 {
            return None;
        }
        TriangleFrame::new(&a, &b, &c)
    })
}

fn all_pairs(v: &[Vec3], tris: &[[u32; 3]], skip_adjacent: bool) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for i in 0..tris.len() {
        for j in i + 1..tris.len() {
            if skip_adjacent && tris[i].iter().any(|x| tris[j].contains(x)) {
                continue;
            }
            if triangles_intersect(&tris[i].map(|k| v[k as usize]), &tris[j].map(|k| v[k as usize])) {
                out.push((i as u32, j as u32));
            }
        }
    }
    out
}

fn merge(a: (Vec<Vec3>, Vec<[u32; 3]>), b: (Vec<Vec3>, Vec<[u32; 3]>)) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let (mut v, mut t) = a;
    let off = v.len() as u32;
    v.extend(b.0);
    t.extend(b.1.iter().map(|f| f.map(|i| i + off)));
    (v, t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn upsilon_shape(sigma in 0.05..0.95f64, x in -5.0..5.0f64, dx in 0.0..1.0f64) {
        prop_assert!(upsilon(x + dx, sigma) <= upsilon(x, sigma) + 1e-15);
        if x >= sigma {
            prop_assert_eq!(upsilon(x, sigma), 0.0);
        } else {
            prop_assert!(upsilon(x, sigma) > 0.0);
        }
    }

    #[test]
    fn upsilon_knots(sigma in 0.05..0.95f64) {
        let h = 1e-6;
        for k in [-sigma, sigma] {
            prop_assert!((upsilon(k - h, sigma) - upsilon(k + h, sigma)).abs() < 1e-4);
        }
        prop_assert!((upsilon_derivative(-sigma - 1e-9, sigma) - upsilon_derivative(-sigma + 1e-9, sigma)).abs() < 1e-6);
    }

    #[test]
    fn phi_matches_direct_formula(f in frame(), v in vec3(8.0), sigma in 0.1..0.9f64) {
        let u = v - f.o;
        let along = f.n.dot(&u);
        let radial = u.cross(&f.n).norm();
        let denom = -(f.r / sigma) * along + f.r;
        let got = phi(&v, &f, sigma);
        if denom > 1e-9 {
            let expect = radial / denom;
            prop_assert!((got - expect).abs() <= 1e-9 * expect.max(1.0), "{} vs {}", got, expect);
        } else if denom <= 0.0 {
            prop_assert!(got >= 1.0);
        }
    }

    #[test]
    fn psi_is_nonnegative_and_vanishes_outside_the_cone(f in frame(), v in vec3(8.0), sigma in 0.1..0.9f64) {
        let p = psi(&v, &f, sigma);
        prop_assert!(p >= 0.0);
        if phi(&v, &f, sigma) >= 1.0 {
            prop_assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn psi_is_continuous_across_the_cone_wall(f in frame(), depth in -0.4..0.4f64, angle in 0.0..6.28f64) {
        let sigma = 0.5;
        let t = f.n.cross(&Vec3::x()).try_normalize(1e-6).unwrap_or_else(|| f.n.cross(&Vec3::y()).normalize());
        let t = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(f.n), angle) * t;
        let wall = f.r * (1.0 - depth / sigma);
        let on = f.o + f.n * depth + t * wall;
        let inside = f.o + f.n * depth + t * (wall * (1.0 - 1e-7));
        prop_assert!(psi(&on, &f, sigma) < 1e-12);
        prop_assert!(psi(&inside, &f, sigma) < 1e-6);
    }

    #[test]
    fn bvh_queries_match_linear_scan(seed in any::<u64>(), lo in vec3(60.0), ext in vec3(30.0)) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = r.random_range(1..200);
        let v: Vec<Vec3> = (0..3 * n).map(|_| Vec3::new(r.random_range(-50.0..50.0), r.random_range(-50.0..50.0), r.random_range(-50.0..50.0))).collect();
        let tris: Vec<[u32; 3]> = (0..n as u32).map(|i| [3 * i, 3 * i + 1, 3 * i + 2]).collect();
        let bvh = build_bvh(&v, &tris);
        prop_assert!(bvh.is_valid());
        let q = Aabb::of_points([&lo, &(lo + ext.abs())]);
        let expect: Vec<u32> = (0..n as u32).filter(|&i| triangle_box(&v, &tris[i as usize]).overlaps(&q)).collect();
        prop_assert_eq!(bvh.query(&q), expect);
    }

    #[test]
    fn collision_energy_is_rigidly_invariant(rot in vec3(3.0), shift in vec3(200.0), offset in 5.0..20.0f64) {
        let (v, t) = merge(icosphere(Vec3::zeros(), 10.0, 1), icosphere(Vec3::new(offset, 1.0, 0.5), 8.0, 1));
        let g = Mat3::from(Rotation3::new(rot));
        let moved: Vec<Vec3> = v.iter().map(|p| g * p + shift).collect();
        let energy = |v: &[Vec3]| {
            let pairs = find_collisions(&build_bvh(v, &t), v, &t, true);
            let normals = compute_vertex_normals(v, &t).normals;
            let samples = collision_samples(&pairs, v, &normals, &t);
            (pairs.len(), collision_block(&samples, v, 0.5, Metric::PointToPoint, CollisionEnergy::Squared, 1, None).energy())
        };
        let (pa, ea) = energy(&v);
        let (pb, eb) = energy(&moved);
        prop_assert_eq!(pa, pb);
        prop_assert!((ea - eb).abs() <= 1e-6 * ea.max(1e-12));
    }
}

#[test]
fn upsilon_is_smooth_at_the_lower_knot() {
    let (s, h) = (0.5, 1e-6);
    let left = (upsilon(-s, s) - upsilon(-s - h, s)) / h;
    let right = (upsilon(-s + h, s) - upsilon(-s, s)) / h;
    assert!((left - right).abs() < 1e-4, "{left} vs {right}");
}

#[test]
fn interpenetrating_capsules_match_all_pairs() {
    let mut r = rng(8);
    for _ in 0..5 {
        let a = capsule(Vec3::zeros(), random_unit(&mut r), 8.0, 40.0, 12);
        let b = capsule(Vec3::new(r.random_range(-5.0..5.0), 5.0, 0.0), random_unit(&mut r), 7.0, 35.0, 12);
        let (v, t) = merge(
            (a.rest_vertices().to_vec(), a.triangles().to_vec()),
            (b.rest_vertices().to_vec(), b.triangles().to_vec()),
        );
        assert!(t.len() <= 1000);
        for skip in [true, false] {
            let got = find_collisions(&build_bvh(&v, &t), &v, &t, skip);
            assert_eq!(got, all_pairs(&v, &t, skip));
            if skip {
                assert!(!got.is_empty());
            }
        }
    }
}

#[test]
fn separated_spheres_do_not_collide() {
    let (v, t) = merge(icosphere(Vec3::zeros(), 10.0, 2), icosphere(Vec3::new(25.0, 0.0, 0.0), 10.0, 2));
    assert!(find_collisions(&build_bvh(&v, &t), &v, &t, true).is_empty());
}

#[test]
fn collision_energy_equals_direct_sum() {
    let (v, t) = merge(icosphere(Vec3::zeros(), 10.0, 2), icosphere(Vec3::new(12.0, 1.0, 0.5), 8.0, 2));
    let pairs = find_collisions(&build_bvh(&v, &t), &v, &t, true);
    assert!(!pairs.is_empty());
    let normals = compute_vertex_normals(&v, &t).normals;
    let samples = collision_samples(&pairs, &v, &normals, &t);
    let mut direct = 0.0;
    let mut direct_linear = 0.0;
    for &(a, b) in &pairs {
        for (s, rcv) in [(a, b), (b, a)] {
            let rt = t[rcv as usize].map(|i| v[i as usize]);
            let Some(f) = TriangleFrame::new(&rt[0], &rt[1], &rt[2]) else { continue };
            for &i in &t[s as usize] {
                let ps = psi(&v[i as usize], &f, 0.5);
                direct += (normals[i as usize] * -ps).norm_squared();
                direct_linear += ps;
            }
        }
    }
    for (metric, energy, expect) in [
        (Metric::PointToPoint, CollisionEnergy::Squared, direct),
        (Metric::PointToPlane, CollisionEnergy::Squared, direct),
        (Metric::PointToPlane, CollisionEnergy::Linear, direct_linear),
    ] {
        let e = collision_block(&samples, &v, 0.5, metric, energy, 1, None).energy();
        assert!((e - expect).abs() <= 1e-9 * expect, "{metric:?} {energy:?}: {e} vs {expect}");
    }
    assert!(direct > 0.0);
}

#[test]
fn hand_is_collision_free_at_rest() {
    let (p, hand) = two_finger();
    let (_, d) = hand.deform(&p.model.zero_pose()).unwrap();
    let t = p.mesh.triangles();
    assert!(find_collisions(&build_bvh(&d.vertices, t), &d.vertices, t, true).is_empty());
}
