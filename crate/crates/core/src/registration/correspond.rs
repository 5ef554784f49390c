use crate::residual::{Metric, ResidualBlock, Term};
use crate::skinned_model::SkinJacobian;
use crate::kinematics::skew;
use crate::Vec3;

/// A model vertex paired with a 3D target point. `normal` is the model normal
/// at the time of matching, used by the point-to-plane metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointMatch {
    pub vertex: u32,
    pub target: Vec3,
    pub normal: Vec3,
    pub distance2: f64,
}

/// A model vertex paired with a camera ray in Plücker form (unit direction
/// `d`, moment `m`). `point` is the lifted observation on the ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayMatch {
    pub vertex: u32,
    pub direction: Vec3,
    pub moment: Vec3,
    pub point: Vec3,
    pub distance2: f64,
}

impl RayMatch {
    pub fn through(vertex: u32, point: Vec3, distance2: f64) -> Self {
        let direction = point.normalize();
        Self {
            vertex,
            direction,
            moment: point.cross(&direction),
            point,
            distance2,
        }
    }
}

/// `v − X` (three rows) or `nᵀ(v − X)` (one row).
pub fn point_block(
    term: Term,
    matches: &[PointMatch],
    vertices: &[Vec3],
    metric: Metric,
    dof: usize,
    jacobian: Option<&SkinJacobian>,
) -> ResidualBlock {
    let mut block = ResidualBlock::new(term, dof);
    for m in matches {
        let diff = vertices[m.vertex as usize] - m.target;
        let jv = jacobian.map(|j| j.vertex_jacobian(m.vertex as usize));
        match metric {
            Metric::PointToPoint => block.push_vec3(diff, jv.as_ref()),
            Metric::PointToPlane => block.push_scalar(m.normal.dot(&diff), jv.map(|j| m.normal.transpose() * j)),
        }
    }
    block
}

/// `v × d − m` per ray; its norm is the distance from `v` to the ray's line.
pub fn ray_block(matches: &[RayMatch], vertices: &[Vec3], dof: usize, jacobian: Option<&SkinJacobian>) -> ResidualBlock {
    let mut block = ResidualBlock::new(Term::DataToModel, dof);
    for m in matches {
        let v = vertices[m.vertex as usize];
        let r = v.cross(&m.direction) - m.moment;
        let j = jacobian.map(|j| -skew(&m.direction) * j.vertex_jacobian(m.vertex as usize));
        block.push_vec3(r, j.as_ref());
    }
    block
}
