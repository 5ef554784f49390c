//! Twist kinematics for articulated skeletons.

mod chain;
mod model;
mod transform;
mod twist;

pub use chain::{
    chain_transforms, clamp_to_limits, joint_positions, marker_positions, point_jacobian,
    ChainState, Pose,
};
pub use model::{
    Joint, JointEntry, JointEntryKind, JointKind, KinematicModel, Marker, MarkerEntry,
    SkeletonFile, ROOT_DOF,
};
pub use transform::{exp_so3, left_jacobian_so3, log_so3, skew, RigidTransform};
pub use twist::{twist_exp, Twist};
