//! Skinned triangle meshes: deformation, normals, projection and rendering.

mod camera;
mod lbs;
mod mesh;
mod normals;
pub mod procedural;
mod render;

pub use camera::{Camera, Projection};
pub use lbs::{identity_rig, lbs_deform, SkinJacobian};
pub use mesh::SkinnedMesh;
pub use normals::{compute_vertex_normals, VertexNormals};
pub use render::{render_depth, visible_vertices, DepthRender, NO_TRIANGLE};

use crate::kinematics::ChainState;
use crate::{Result, Vec3};

/// Default depth tolerance for vertex visibility.
pub const VISIBILITY_EPS_MM: f64 = 5.0;

/// Posed mesh: deformed vertices with their normals.
#[derive(Clone, Debug)]
pub struct DeformedMesh {
    pub vertices: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub normal_valid: Vec<bool>,
}

impl DeformedMesh {
    pub fn from_vertices(vertices: Vec<Vec3>, triangles: &[[u32; 3]]) -> Self {
        let n = compute_vertex_normals(&vertices, triangles);
        Self {
            vertices,
            normals: n.normals,
            normal_valid: n.valid,
        }
    }

    /// Deforms `mesh` to the evaluated chain, assuming the rig pose is the zero pose.
    pub fn at_pose(mesh: &SkinnedMesh, state: &ChainState) -> Result<Self> {
        let vertices = lbs_deform(mesh, state.bones(), &identity_rig(mesh.bone_count()))?;
        Ok(Self::from_vertices(vertices, mesh.triangles()))
    }
}
