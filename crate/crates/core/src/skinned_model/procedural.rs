//! Procedural articulated test hand and simple primitive meshes.

use std::f64::consts::PI;

use super::mesh::SkinnedMesh;
use crate::kinematics::{Joint, JointKind, KinematicModel, Marker, Twist};
use crate::{Result, Vec3};

/// Geometry of one finger, distances in millimetres.
#[derive(Clone, Debug)]
pub struct FingerSpec {
    pub name: String,
    pub radius: f64,
    /// Proximal, middle and distal segment lengths.
    pub segments: [f64; 3],
}

#[derive(Clone, Debug)]
pub struct HandSpec {
    pub fingers: Vec<FingerSpec>,
    /// Centre-to-centre distance between neighbouring fingers.
    pub finger_spacing: f64,
    /// Palm half-length along the finger direction and half-thickness.
    pub palm_half_length: f64,
    pub palm_half_thickness: f64,
    /// Clearance between a finger's base sphere and the palm surface.
    pub palm_gap: f64,
    /// World position of the palm centre (the root pivot) at rest.
    pub palm_center: Vec3,
    /// Vertices around each finger ring.
    pub ring_segments: usize,
    /// Spacing of cylinder rings along a finger.
    pub ring_step: f64,
}

impl HandSpec {
    /// Two fingers, about 1.5k vertices.
    pub fn two_finger() -> Self {
        Self {
            fingers: vec![
                FingerSpec {
                    name: "index".into(),
                    radius: 8.0,
                    segments: [40.0, 25.0, 20.0],
                },
                FingerSpec {
                    name: "middle".into(),
                    radius: 8.0,
                    segments: [42.0, 27.0, 21.0],
                },
            ],
            finger_spacing: 20.0,
            palm_half_length: 38.0,
            palm_half_thickness: 12.0,
            palm_gap: 3.0,
            palm_center: Vec3::new(0.0, 45.0, 450.0),
            ring_segments: 16,
            ring_step: 2.5,
        }
    }

    pub fn five_finger() -> Self {
        let f = |name: &str, r: f64, s: [f64; 3]| FingerSpec {
            name: name.into(),
            radius: r,
            segments: s,
        };
        Self {
            fingers: vec![
                f("thumb", 9.0, [32.0, 24.0, 20.0]),
                f("index", 8.0, [40.0, 25.0, 20.0]),
                f("middle", 8.0, [42.0, 27.0, 21.0]),
                f("ring", 7.5, [40.0, 25.0, 20.0]),
                f("little", 7.0, [32.0, 20.0, 18.0]),
            ],
            finger_spacing: 19.0,
            ..Self::two_finger()
        }
    }
}

/// A procedurally built hand: skeleton, skinned mesh and naming metadata.
#[derive(Clone, Debug)]
pub struct ProceduralHand {
    pub model: KinematicModel,
    pub mesh: SkinnedMesh,
    /// Per finger, the pose indices of (MCP flexion, MCP abduction, PIP, DIP).
    pub finger_dofs: Vec<[usize; 4]>,
    /// Fingertip marker ids, in finger order.
    pub tip_markers: Vec<String>,
}

impl ProceduralHand {
    /// Joint centres and fingertips, the default evaluation set.
    pub fn evaluation_points(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .model
            .joints()
            .iter()
            .filter(|j| !j.id.ends_with("_abd"))
            .map(|j| j.id.clone())
            .collect();
        ids.extend(self.tip_markers.iter().cloned());
        ids
    }
}

const FLEX_LIMITS: (f64, f64) = (-0.35, 1.6);
const ABD_LIMITS: (f64, f64) = (-0.45, 0.45);
const PIP_LIMITS: (f64, f64) = (0.0, 1.9);
const DIP_LIMITS: (f64, f64) = (0.0, 1.4);

/// Axial falloff (mm) of skinning weights past a segment end.
const WEIGHT_FALLOFF: f64 = 4.0;

pub fn build_hand(spec: &HandSpec) -> Result<ProceduralHand> {
    let n = spec.fingers.len();
    let palm_half_width = (n as f64) * spec.finger_spacing * 0.5 + 4.0;
    let center = spec.palm_center;
    let down = Vec3::new(0.0, -1.0, 0.0);

    let mut joints = vec![Joint {
        id: "palm".into(),
        parent: None,
        kind: JointKind::Root { pivot: center },
        dof_index: 0,
    }];
    let mut markers = Vec::new();
    let mut finger_dofs = Vec::new();
    let mut tip_markers = Vec::new();

    let mut builder = MeshBuilder::default();
    // Palm ellipsoid, rigidly attached to the root.
    builder.ellipsoid(
        center,
        Vec3::new(palm_half_width, spec.palm_half_length, spec.palm_half_thickness),
        24,
        14,
        &[(0, 1.0)],
        None,
    );

    let mut dof = 6;
    for (fi, finger) in spec.fingers.iter().enumerate() {
        let x = (fi as f64 - (n as f64 - 1.0) * 0.5) * spec.finger_spacing;
        // Base sphere clears the palm ellipsoid along the finger axis.
        let edge_y = spec.palm_half_length
            * (1.0 - (x / palm_half_width).powi(2)).max(0.0).sqrt();
        let mcp = center + Vec3::new(x, -(edge_y + finger.radius + spec.palm_gap), 0.0);
        let [l1, l2, l3] = finger.segments;
        let pip = mcp + down * l1;
        let dip = pip + down * l2;
        let tip = dip + down * l3;

        let base = joints.len();
        let rev = |id: String, parent: usize, axis: Vec3, point: Vec3, lim: (f64, f64), dof: usize| {
            Ok::<_, crate::Error>(Joint {
                id,
                parent: Some(parent),
                kind: JointKind::Revolute {
                    twist: Twist::revolute(axis, point)?,
                    min: lim.0,
                    max: lim.1,
                },
                dof_index: dof,
            })
        };
        let name = &finger.name;
        joints.push(rev(format!("{name}_mcp"), 0, Vec3::x(), mcp, FLEX_LIMITS, dof)?);
        joints.push(rev(format!("{name}_mcp_abd"), base, Vec3::z(), mcp, ABD_LIMITS, dof + 1)?);
        joints.push(rev(format!("{name}_pip"), base + 1, Vec3::x(), pip, PIP_LIMITS, dof + 2)?);
        joints.push(rev(format!("{name}_dip"), base + 2, Vec3::x(), dip, DIP_LIMITS, dof + 3)?);
        finger_dofs.push([dof, dof + 1, dof + 2, dof + 3]);
        dof += 4;
        markers.push(Marker {
            id: format!("{name}_tip"),
            bone: base + 3,
            point: tip,
        });
        tip_markers.push(format!("{name}_tip"));

        // Segment bones along the finger axis: proximal, middle, distal.
        let bones = [(base + 1, 0.0, l1), (base + 2, l1, l1 + l2), (base + 3, l1 + l2, l1 + l2 + l3)];
        let label_from = l1 + l2;
        builder.capsule(mcp, down, finger.radius, l1 + l2 + l3, spec.ring_segments, spec.ring_step, |s| {
            let mut w: Vec<(usize, f64)> = bones
                .iter()
                .map(|&(b, s0, s1)| {
                    let d = if s < s0 { s0 - s } else if s > s1 { s - s1 } else { 0.0 };
                    (b, (-(d / WEIGHT_FALLOFF).powi(2)).exp())
                })
                .filter(|&(_, w)| w > 1e-3)
                .collect();
            let sum: f64 = w.iter().map(|p| p.1).sum();
            w.iter_mut().for_each(|p| p.1 /= sum);
            let label = (s >= label_from).then_some(fi);
            (w, label)
        });
    }

    let model = KinematicModel::new(joints, markers)?;
    let mesh = builder.finish(model.bone_count())?;
    Ok(ProceduralHand {
        model,
        mesh,
        finger_dofs,
        tip_markers,
    })
}

#[derive(Default)]
struct MeshBuilder {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    weights: Vec<Vec<(usize, f64)>>,
    labels: Vec<Option<usize>>,
}

impl MeshBuilder {
    fn push(&mut self, p: Vec3, w: Vec<(usize, f64)>, label: Option<usize>) -> u32 {
        self.vertices.push(p);
        self.weights.push(w);
        self.labels.push(label);
        (self.vertices.len() - 1) as u32
    }

    /// Connects consecutive rings (and optional poles), orienting every face
    /// away from `inside(face centroid)`.
    fn stitch<F: Fn(&Vec3) -> Vec3>(
        &mut self,
        rings: &[Vec<u32>],
        south: u32,
        north: u32,
        inside: F,
    ) {
        let mut faces = Vec::new();
        let k = rings[0].len();
        for i in 0..k {
            let j = (i + 1) % k;
            faces.push([south, rings[0][j], rings[0][i]]);
            let last = &rings[rings.len() - 1];
            faces.push([north, last[i], last[j]]);
        }
        for pair in rings.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            for i in 0..k {
                let j = (i + 1) % k;
                faces.push([a[i], a[j], b[j]]);
                faces.push([a[i], b[j], b[i]]);
            }
        }
        for mut f in faces {
            let [p, q, r] = f.map(|i| self.vertices[i as usize]);
            let c = (p + q + r) / 3.0;
            if (q - p).cross(&(r - p)).dot(&(c - inside(&c))) < 0.0 {
                f.swap(1, 2);
            }
            self.triangles.push(f);
        }
    }

    fn ellipsoid(
        &mut self,
        center: Vec3,
        radii: Vec3,
        slices: usize,
        stacks: usize,
        weights: &[(usize, f64)],
        label: Option<usize>,
    ) {
        let south = self.push(center - Vec3::new(0.0, 0.0, radii.z), weights.to_vec(), label);
        let mut rings = Vec::new();
        for s in 1..stacks {
            let phi = PI * s as f64 / stacks as f64 - PI * 0.5;
            let ring = (0..slices)
                .map(|i| {
                    let a = 2.0 * PI * i as f64 / slices as f64;
                    let p = center
                        + Vec3::new(
                            radii.x * phi.cos() * a.cos(),
                            radii.y * phi.cos() * a.sin(),
                            radii.z * phi.sin(),
                        );
                    self.push(p, weights.to_vec(), label)
                })
                .collect();
            rings.push(ring);
        }
        let north = self.push(center + Vec3::new(0.0, 0.0, radii.z), weights.to_vec(), label);
        self.stitch(&rings, south, north, |_| center);
    }

    /// Capsule of `radius` from `start` along unit `dir` with total length
    /// `length` (base cap centred at `start`, tip at `start + length·dir`).
    /// `skin(s)` gives weights and label for axial coordinate `s`.
    #[allow(clippy::too_many_arguments)]
    fn capsule<F>(
        &mut self,
        start: Vec3,
        dir: Vec3,
        radius: f64,
        length: f64,
        segments: usize,
        step: f64,
        skin: F,
    ) where
        F: Fn(f64) -> (Vec<(usize, f64)>, Option<usize>),
    {
        let e1 = Vec3::x();
        let e2 = dir.cross(&e1).normalize();
        let top = length - radius;
        // (axial coordinate, ring radius) per ring.
        let cap_rings = 4;
        let mut profile = Vec::new();
        for i in 1..=cap_rings {
            let a = PI * 0.5 * i as f64 / cap_rings as f64;
            profile.push((-radius * a.cos(), radius * a.sin()));
        }
        let cyl_rings = (top / step).ceil().max(1.0) as usize;
        for i in 1..cyl_rings {
            profile.push((top * i as f64 / cyl_rings as f64, radius));
        }
        for i in 0..cap_rings {
            let a = PI * 0.5 * i as f64 / cap_rings as f64;
            profile.push((top + radius * a.sin(), radius * a.cos()));
        }
        let at = |s: f64| start + dir * s;
        let (w, l) = skin(-radius);
        let south = self.push(at(-radius), w, l);
        let mut rings = Vec::new();
        for &(s, rho) in &profile {
            let ring = (0..segments)
                .map(|i| {
                    let a = 2.0 * PI * i as f64 / segments as f64;
                    let (w, l) = skin(s);
                    self.push(at(s) + (e1 * a.cos() + e2 * a.sin()) * rho, w, l)
                })
                .collect();
            rings.push(ring);
        }
        let (w, l) = skin(length);
        let north = self.push(at(length), w, l);
        self.stitch(&rings, south, north, |c| {
            let s = (c - start).dot(&dir).clamp(0.0, top);
            at(s)
        });
    }

    fn finish(self, bones: usize) -> Result<SkinnedMesh> {
        SkinnedMesh::new(self.vertices, self.triangles, self.weights, Some(self.labels), bones)
    }
}

/// Closed UV sphere rigidly skinned to bone 0.
pub fn uv_sphere(center: Vec3, radius: f64, slices: usize, stacks: usize) -> SkinnedMesh {
    let mut b = MeshBuilder::default();
    b.ellipsoid(center, Vec3::repeat(radius), slices, stacks, &[(0, 1.0)], None);
    b.finish(1).expect("sphere mesh is valid")
}

/// Closed capsule rigidly skinned to bone 0.
pub fn capsule(start: Vec3, dir: Vec3, radius: f64, length: f64, segments: usize) -> SkinnedMesh {
    let mut b = MeshBuilder::default();
    b.capsule(start, dir.normalize(), radius, length, segments, radius * 0.5, |_| {
        (vec![(0, 1.0)], None)
    });
    b.finish(1).expect("capsule mesh is valid")
}

/// Icosphere after `subdivisions` rounds of midpoint subdivision.
pub fn icosphere(center: Vec3, radius: f64, subdivisions: usize) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    use std::collections::HashMap;
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut f: Vec<[u32; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, v: &mut Vec<Vec3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push(((v[a as usize] + v[b as usize]) * 0.5).normalize());
                (v.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(f.len() * 4);
        for [a, b, c] in f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = next;
    }
    (v.into_iter().map(|p| center + p * radius).collect(), f)
}
