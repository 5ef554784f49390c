use crate::{par, Vec3};

/// Area-weighted vertex normals. `valid[v]` is false when every triangle
/// around `v` is degenerate (or `v` is unreferenced); such normals are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexNormals {
    pub normals: Vec<Vec3>,
    pub valid: Vec<bool>,
}

const DEGENERATE: f64 = 1e-18;

pub fn compute_vertex_normals(vertices: &[Vec3], triangles: &[[u32; 3]]) -> VertexNormals {
    let face: Vec<Vec3> = par::map(triangles, |t| {
        let [a, b, c] = t.map(|i| vertices[i as usize]);
        (b - a).cross(&(c - a))
    });
    let mut sum = vec![Vec3::zeros(); vertices.len()];
    let mut fallback: Vec<Option<Vec3>> = vec![None; vertices.len()];
    for (t, n) in triangles.iter().zip(&face) {
        let nonzero = n.norm_squared() > DEGENERATE;
        for &i in t {
            sum[i as usize] += n;
            if nonzero && fallback[i as usize].is_none() {
                fallback[i as usize] = Some(*n);
            }
        }
    }
    let mut normals = Vec::with_capacity(vertices.len());
    let mut valid = Vec::with_capacity(vertices.len());
    for (s, f) in sum.iter().zip(&fallback) {
        let n = if s.norm_squared() > DEGENERATE {
            Some(*s)
        } else {
            *f
        };
        match n {
            Some(n) => {
                normals.push(n.normalize());
                valid.push(true);
            }
            None => {
                normals.push(Vec3::zeros());
                valid.push(false);
            }
        }
    }
    VertexNormals { normals, valid }
}
