use std::ops::{Deref, DerefMut};

use nalgebra::Matrix3xX;

use super::model::{JointKind, KinematicModel, ROOT_DOF};
use super::transform::{exp_so3, left_jacobian_so3, RigidTransform};
use super::twist::twist_exp;
use crate::{Error, Mat3, Result, Vec3};

/// Pose parameters θ. Each root owns 6 entries (translation in mm, then a
/// rotation vector about the root pivot); each revolute joint owns one angle.
#[derive(Clone, Debug, PartialEq)]
pub struct Pose(pub Vec<f64>);

impl Deref for Pose {
    type Target = Vec<f64>;

    fn deref(&self) -> &Vec<f64> {
        &self.0
    }
}

impl DerefMut for Pose {
    fn deref_mut(&mut self) -> &mut Vec<f64> {
        &mut self.0
    }
}

impl From<Vec<f64>> for Pose {
    fn from(v: Vec<f64>) -> Self {
        Pose(v)
    }
}

fn check_len(model: &KinematicModel, pose: &[f64]) -> Result<()> {
    if pose.len() != model.dof() {
        return Err(Error::InvalidArgument(format!(
            "pose has {} entries, model has {} dof",
            pose.len(),
            model.dof()
        )));
    }
    Ok(())
}

fn root_transform(pivot: &Vec3, params: &[f64]) -> RigidTransform {
    let t = Vec3::new(params[0], params[1], params[2]);
    let r = exp_so3(&Vec3::new(params[3], params[4], params[5]));
    RigidTransform::new(r, pivot + t - r * pivot)
}

/// World transform of every bone relative to the rig pose, parents first.
pub fn chain_transforms(model: &KinematicModel, pose: &[f64]) -> Result<Vec<RigidTransform>> {
    check_len(model, pose)?;
    let mut bones = vec![RigidTransform::identity(); model.bone_count()];
    for &j in model.order() {
        let joint = &model.joints()[j];
        bones[j] = match &joint.kind {
            JointKind::Root { pivot } => {
                root_transform(pivot, &pose[joint.dof_index..joint.dof_index + ROOT_DOF])
            }
            JointKind::Revolute { twist, .. } => {
                let parent = bones[joint.parent.expect("revolute joints have parents")];
                parent * twist_exp(twist, pose[joint.dof_index])?
            }
        };
    }
    Ok(bones)
}

/// Current-pose frame of one joint, as needed for Jacobian columns.
#[derive(Clone, Copy, Debug)]
enum JointFrame {
    Root { pivot: Vec3, rot_jacobian: Mat3 },
    Revolute { axis: Vec3, point: Vec3 },
}

/// A kinematic chain evaluated at one pose: bone transforms plus the world
/// frames needed to differentiate points attached to any bone.
#[derive(Clone, Debug)]
pub struct ChainState {
    bones: Vec<RigidTransform>,
    frames: Vec<JointFrame>,
}

impl ChainState {
    pub fn new(model: &KinematicModel, pose: &[f64]) -> Result<Self> {
        let bones = chain_transforms(model, pose)?;
        let frames = model
            .joints()
            .iter()
            .map(|joint| match &joint.kind {
                JointKind::Root { pivot } => {
                    let p = &pose[joint.dof_index..joint.dof_index + ROOT_DOF];
                    JointFrame::Root {
                        pivot: pivot + Vec3::new(p[0], p[1], p[2]),
                        rot_jacobian: left_jacobian_so3(&Vec3::new(p[3], p[4], p[5])),
                    }
                }
                JointKind::Revolute { twist, .. } => {
                    let parent = &bones[joint.parent.expect("revolute joints have parents")];
                    JointFrame::Revolute {
                        axis: parent.apply_vector(&twist.axis),
                        point: parent.apply(&twist.point),
                    }
                }
            })
            .collect();
        Ok(Self { bones, frames })
    }

    pub fn bones(&self) -> &[RigidTransform] {
        &self.bones
    }

    /// Adds `weight · ∂p/∂θ` into `out` (3 × dof) for a world point `p` rigidly
    /// attached to `bone`.
    pub fn accumulate_point_jacobian(
        &self,
        model: &KinematicModel,
        bone: usize,
        p: &Vec3,
        weight: f64,
        out: &mut Matrix3xX<f64>,
    ) {
        for &j in model.chain(bone) {
            let dof = model.joints()[j].dof_index;
            match &self.frames[j] {
                JointFrame::Root {
                    pivot,
                    rot_jacobian,
                } => {
                    for k in 0..3 {
                        out[(k, dof + k)] += weight;
                    }
                    let arm = p - pivot;
                    for k in 0..3 {
                        let col = rot_jacobian.column(k).cross(&arm) * weight;
                        let mut c = out.column_mut(dof + 3 + k);
                        c += col;
                    }
                }
                JointFrame::Revolute { axis, point } => {
                    let col = axis.cross(&(p - point)) * weight;
                    let mut c = out.column_mut(dof);
                    c += col;
                }
            }
        }
    }

    pub fn point_jacobian(&self, model: &KinematicModel, bone: usize, p: &Vec3) -> Matrix3xX<f64> {
        let mut out = Matrix3xX::zeros(model.dof());
        self.accumulate_point_jacobian(model, bone, p, 1.0, &mut out);
        out
    }
}

/// `∂p/∂θ` (3 × dof) for a world-space point `p` rigidly attached to `bone` at `pose`.
///
/// Revolute columns are `ω × (p − q)` with the joint axis taken in the current
/// world frame. Root columns are the identity for translation and
/// `(J_l(r) e_k) × (p − c)` for the rotation vector `r` about the moved pivot `c`.
/// Joints off the bone's chain contribute zero columns.
pub fn point_jacobian(
    model: &KinematicModel,
    pose: &[f64],
    bone: usize,
    p: &Vec3,
) -> Result<Matrix3xX<f64>> {
    if bone >= model.bone_count() {
        return Err(Error::InvalidArgument(format!("unknown bone {bone}")));
    }
    Ok(ChainState::new(model, pose)?.point_jacobian(model, bone, p))
}

/// Projects every revolute angle into its limits; root entries are untouched.
pub fn clamp_to_limits(pose: &[f64], model: &KinematicModel) -> Pose {
    let mut out = pose.to_vec();
    for joint in model.joints() {
        if let JointKind::Revolute { min, max, .. } = joint.kind {
            if let Some(v) = out.get_mut(joint.dof_index) {
                *v = v.clamp(min, max);
            }
        }
    }
    Pose(out)
}

/// World positions of joint centres at the given chain state. A joint centre
/// lies on its own rotation axis, so it moves with its own bone.
pub fn joint_positions(model: &KinematicModel, state: &ChainState) -> Vec<Vec3> {
    model
        .joints()
        .iter()
        .zip(&state.bones)
        .map(|(joint, bone)| bone.apply(&joint.rest_center()))
        .collect()
}

/// World positions of markers at the given chain state.
pub fn marker_positions(model: &KinematicModel, state: &ChainState) -> Vec<Vec3> {
    model
        .markers()
        .iter()
        .map(|m| state.bones[m.bone].apply(&m.point))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::model::{Joint, Marker};
    use crate::kinematics::twist::Twist;

    fn arm() -> KinematicModel {
        let rev = |id: &str, parent, axis: Vec3, point: Vec3, dof| Joint {
            id: id.into(),
            parent: Some(parent),
            kind: JointKind::Revolute {
                twist: Twist::revolute(axis, point).unwrap(),
                min: -1.0,
                max: 1.2,
            },
            dof_index: dof,
        };
        let joints = vec![
            Joint {
                id: "root".into(),
                parent: None,
                kind: JointKind::Root { pivot: Vec3::new(0.0, 0.0, 400.0) },
                dof_index: 0,
            },
            rev("a", 0, Vec3::x(), Vec3::new(0.0, 10.0, 400.0), 6),
            rev("b", 1, Vec3::z(), Vec3::new(0.0, 30.0, 400.0), 7),
            rev("c", 0, Vec3::y(), Vec3::new(20.0, 0.0, 400.0), 8),
        ];
        let markers = vec![Marker { id: "tip".into(), bone: 2, point: Vec3::new(0.0, 50.0, 400.0) }];
        KinematicModel::new(joints, markers).unwrap()
    }

    #[test]
    fn zero_pose_gives_identity_bones() {
        let m = arm();
        for b in chain_transforms(&m, &m.zero_pose()).unwrap() {
            assert_eq!(b, RigidTransform::identity());
        }
    }

    #[test]
    fn wrong_length_pose_is_rejected() {
        assert!(chain_transforms(&arm(), &[0.0; 3]).is_err());
    }

    #[test]
    fn child_follows_parent_rotation() {
        let m = arm();
        let mut pose = m.zero_pose();
        pose[6] = 0.5;
        let bones = chain_transforms(&m, &pose).unwrap();
        assert_eq!(bones[2], bones[1]);
        assert_eq!(bones[3], RigidTransform::identity());
    }

    #[test]
    fn root_translation_moves_joint_centres() {
        let m = arm();
        let mut pose = m.zero_pose();
        pose[0] = 5.0;
        let state = ChainState::new(&m, &pose).unwrap();
        let moved = joint_positions(&m, &state);
        for (j, p) in m.joints().iter().zip(&moved) {
            assert!((p - j.rest_center() - Vec3::new(5.0, 0.0, 0.0)).norm() < 1e-12);
        }
        let tip = marker_positions(&m, &state)[0];
        assert!((tip - Vec3::new(5.0, 50.0, 400.0)).norm() < 1e-12);
    }

    #[test]
    fn jacobian_columns_of_non_ancestors_vanish() {
        let m = arm();
        let pose = Pose(vec![1.0, 2.0, 3.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let j = point_jacobian(&m, &pose, 3, &Vec3::new(1.0, 2.0, 400.0)).unwrap();
        assert_eq!(j.column(6).norm(), 0.0);
        assert_eq!(j.column(7).norm(), 0.0);
        assert!(j.column(8).norm() > 0.0);
        let t = j.columns(0, 3);
        assert_eq!(t.into_owned(), Mat3::identity());
    }

    #[test]
    fn unknown_bone_is_rejected() {
        let m = arm();
        assert!(point_jacobian(&m, &m.zero_pose(), 9, &Vec3::zeros()).is_err());
    }

    #[test]
    fn clamp_is_idempotent_and_skips_root() {
        let m = arm();
        let pose = vec![100.0, -3.0, 2.0, 3.0, 0.0, 0.0, 2.0, -5.0, 0.3];
        let c = clamp_to_limits(&pose, &m);
        assert_eq!(&c[..6], &pose[..6]);
        assert_eq!(c[6], 1.2);
        assert_eq!(c[7], -1.0);
        assert_eq!(c[8], 0.3);
        assert_eq!(clamp_to_limits(&c, &m), c);
    }
}
