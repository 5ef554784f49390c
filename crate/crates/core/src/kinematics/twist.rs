use nalgebra::Vector6;

use super::transform::{skew, RigidTransform};
use crate::{Error, Mat3, Result, Vec3};

const UNIT_TOLERANCE: f64 = 1e-9;

/// Revolute twist: rotation about the line through `point` with direction `axis`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Twist {
    pub axis: Vec3,
    pub point: Vec3,
}

impl Twist {
    /// Builds a revolute twist, normalizing `axis`.
    pub fn revolute(axis: Vec3, point: Vec3) -> Result<Self> {
        let n = axis.norm();
        if !(n.is_finite() && n > 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "twist axis {axis:?} has no direction"
            )));
        }
        Ok(Self {
            axis: axis / n,
            point,
        })
    }

    /// The 6-vector `(−ω×q, ω)`.
    pub fn xi(&self) -> Vector6<f64> {
        let v = -self.axis.cross(&self.point);
        Vector6::new(v.x, v.y, v.z, self.axis.x, self.axis.y, self.axis.z)
    }

    fn check_unit(&self) -> Result<()> {
        let n = self.axis.norm();
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "revolute twist axis must be unit length, got norm {n}"
            )));
        }
        Ok(())
    }
}

/// `exp(angle · ξ̂)` for a revolute twist, by Rodrigues' formula.
pub fn twist_exp(twist: &Twist, angle: f64) -> Result<RigidTransform> {
    twist.check_unit()?;
    let k = skew(&twist.axis);
    let rotation = Mat3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos());
    let translation = (Mat3::identity() - rotation) * twist.point;
    Ok(RigidTransform::new(rotation, translation))
}
