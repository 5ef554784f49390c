use nalgebra::Matrix3xX;

use super::mesh::SkinnedMesh;
use crate::kinematics::{ChainState, KinematicModel, RigidTransform};
use crate::{par, Error, Result, Vec3};

fn skinning_matrices(
    mesh: &SkinnedMesh,
    now: &[RigidTransform],
    rig: &[RigidTransform],
) -> Result<Vec<RigidTransform>> {
    if now.len() != mesh.bone_count() || rig.len() != mesh.bone_count() {
        return Err(Error::InvalidArgument(format!(
            "mesh skinned to {} bones, got {} current and {} rig transforms",
            mesh.bone_count(),
            now.len(),
            rig.len()
        )));
    }
    Ok(now.iter().zip(rig).map(|(n, r)| n * &r.inverse()).collect())
}

/// Linear blend skinning: `v(θ) = Σ_j α_vj T_j(θ) T_j(0)⁻¹ v(0)`.
pub fn lbs_deform(
    mesh: &SkinnedMesh,
    now: &[RigidTransform],
    rig: &[RigidTransform],
) -> Result<Vec<Vec3>> {
    let m = skinning_matrices(mesh, now, rig)?;
    let rest = mesh.rest_vertices();
    Ok(par::map_range(rest.len(), |v| {
        mesh.weights()[v]
            .iter()
            .fold(Vec3::zeros(), |acc, &(b, w)| acc + m[b].apply(&rest[v]) * w)
    }))
}

/// Derivatives of skinned vertex positions with respect to the pose.
///
/// `∂v/∂θ = Σ_j α_vj ∂(T_j(θ) T_j(0)⁻¹ v(0))/∂θ`, each term being the
/// Jacobian of a point rigidly attached to bone `j`.
pub struct SkinJacobian<'a> {
    model: &'a KinematicModel,
    mesh: &'a SkinnedMesh,
    state: &'a ChainState,
    skinning: Vec<RigidTransform>,
}

impl<'a> SkinJacobian<'a> {
    pub fn new(
        model: &'a KinematicModel,
        mesh: &'a SkinnedMesh,
        state: &'a ChainState,
        rig: &[RigidTransform],
    ) -> Result<Self> {
        let skinning = skinning_matrices(mesh, state.bones(), rig)?;
        Ok(Self {
            model,
            mesh,
            state,
            skinning,
        })
    }

    pub fn dof(&self) -> usize {
        self.model.dof()
    }

    pub fn vertex_jacobian(&self, v: usize) -> Matrix3xX<f64> {
        let mut out = Matrix3xX::zeros(self.model.dof());
        let rest = &self.mesh.rest_vertices()[v];
        for &(b, w) in &self.mesh.weights()[v] {
            let p = self.skinning[b].apply(rest);
            self.state
                .accumulate_point_jacobian(self.model, b, &p, w, &mut out);
        }
        out
    }
}

/// Identity rig transforms, for models whose rig pose is the zero pose.
pub fn identity_rig(bones: usize) -> Vec<RigidTransform> {
    vec![RigidTransform::identity(); bones]
}
