use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Pinhole depth camera. Pixel `(i, j)` is centred at `u = i`, `v = j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// Millimetres per stored depth unit.
    #[serde(default = "unit_scale")]
    pub depth_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl Default for Camera {
    /// VGA structured-light sensor.
    fn default() -> Self {
        Self {
            fx: 525.0,
            fy: 525.0,
            cx: 320.0,
            cy: 240.0,
            width: 640,
            height: 480,
            depth_scale: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub z: f64,
}

impl Projection {
    /// Nearest pixel, if it lies inside a `width × height` image.
    pub fn pixel(&self, width: usize, height: usize) -> Option<(usize, usize)> {
        let (i, j) = (self.u.round(), self.v.round());
        if i >= 0.0 && j >= 0.0 && (i as usize) < width && (j as usize) < height {
            Some((i as usize, j as usize))
        } else {
            None
        }
    }
}

impl Camera {
    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidArgument("focal lengths must be positive".into()));
        }
        if !(self.cx >= 0.0
            && self.cy >= 0.0
            && self.cx < self.width as f64
            && self.cy < self.height as f64)
        {
            return Err(Error::InvalidArgument("principal point outside the image".into()));
        }
        if !(self.depth_scale > 0.0) {
            return Err(Error::InvalidArgument("depth scale must be positive".into()));
        }
        Ok(())
    }

    pub fn project(&self, p: &Vec3) -> Result<Projection> {
        if !(p.z > 0.0) {
            return Err(Error::BehindCamera(p.z));
        }
        Ok(Projection {
            u: self.fx * p.x / p.z + self.cx,
            v: self.fy * p.y / p.z + self.cy,
            z: p.z,
        })
    }

    pub fn backproject(&self, u: f64, v: f64, z: f64) -> Vec3 {
        Vec3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}
