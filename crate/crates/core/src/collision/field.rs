use serde::{Deserialize, Serialize};

use crate::Vec3;

/// Circumcircle frame of a triangle: center `o`, unit normal `n`, radius `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleFrame {
    pub o: Vec3,
    pub n: Vec3,
    pub r: f64,
}

impl TriangleFrame {
    /// `None` for degenerate (collinear) triangles.
    pub fn new(a: &Vec3, b: &Vec3, c: &Vec3) -> Option<Self> {
        let ab = b - a;
        let ac = c - a;
        let n = ab.cross(&ac);
        let nn = n.norm_squared();
        if nn <= 0.0 || !nn.is_finite() {
            return None;
        }
        let offset = (n.cross(&ab) * ac.norm_squared() + ac.cross(&n) * ab.norm_squared()) / (2.0 * nn);
        Some(Self {
            o: a + offset,
            n: n / nn.sqrt(),
            r: offset.norm(),
        })
    }
}

/// Penetration profile along the normal, with signed distance `x` in mm.
pub fn upsilon(x: f64, sigma: f64) -> f64 {
    if x <= -sigma {
        -x + 1.0 - sigma
    } else if x <= sigma {
        -(1.0 - 2.0 * sigma) / (4.0 * sigma * sigma) * x * x - x / (2.0 * sigma) + 0.25 * (3.0 - 2.0 * sigma)
    } else {
        0.0
    }
}

pub fn upsilon_derivative(x: f64, sigma: f64) -> f64 {
    if x <= -sigma {
        -1.0
    } else if x <= sigma {
        -(1.0 - 2.0 * sigma) / (2.0 * sigma * sigma) * x - 1.0 / (2.0 * sigma)
    } else {
        0.0
    }
}

/// Normalized radial distance inside the cone over the circumcircle. Values of
/// at least one mean the point is outside the cone, including the region past
/// its apex.
pub fn phi(v: &Vec3, f: &TriangleFrame, sigma: f64) -> f64 {
    let u = v - f.o;
    let x = f.n.dot(&u);
    let radial = (u - f.n * x).norm();
    let denom = f.r * (1.0 - x / sigma);
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    radial / denom
}

/// Penetration field of a vertex against a receiver triangle.
pub fn psi(v: &Vec3, f: &TriangleFrame, sigma: f64) -> f64 {
    let g = penetration(v, f, sigma);
    g * g
}

/// Square root of [`psi`]: `(1 - Φ) Υ` inside the cone, zero outside.
pub fn penetration(v: &Vec3, f: &TriangleFrame, sigma: f64) -> f64 {
    let p = phi(v, f, sigma);
    if p >= 1.0 {
        return 0.0;
    }
    (1.0 - p) * upsilon(f.n.dot(&(v - f.o)), sigma)
}

/// Value and gradient with respect to `v` of [`penetration`], receiver frozen.
pub fn penetration_gradient(v: &Vec3, f: &TriangleFrame, sigma: f64) -> (f64, Vec3) {
    let u = v - f.o;
    let x = f.n.dot(&u);
    let w = u - f.n * x;
    let rho = w.norm();
    let denom = f.r * (1.0 - x / sigma);
    if denom <= 0.0 || rho >= denom {
        return (0.0, Vec3::zeros());
    }
    let p = rho / denom;
    let ups = upsilon(x, sigma);
    let mut dphi = f.n * (rho * f.r / (sigma * denom * denom));
    if rho > 0.0 {
        dphi += w / (rho * denom);
    }
    let g = (1.0 - p) * ups;
    let dg = -dphi * ups + f.n * ((1.0 - p) * upsilon_derivative(x, sigma));
    (g, dg)
}

/// How the collision residual relates to the penetration field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionEnergy {
    /// Residual is Ψ itself, so the energy is Ψ².
    #[default]
    Squared,
    /// Residual is √Ψ, so the energy is Ψ.
    Linear,
}

impl CollisionEnergy {
    /// Residual magnitude and its gradient in `v`.
    pub fn residual_gradient(self, v: &Vec3, f: &TriangleFrame, sigma: f64) -> (f64, Vec3) {
        let (g, dg) = penetration_gradient(v, f, sigma);
        match self {
            CollisionEnergy::Squared => (g * g, dg * (2.0 * g)),
            CollisionEnergy::Linear => (g, dg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn unit_frame() -> TriangleFrame {
        TriangleFrame { o: Vec3::zeros(), n: Vec3::z(), r: 1.0 }
    }

    #[test]
    fn circumcircle() {
        let a = Vec3::new(1.0, 0.0, 2.0);
        let b = Vec3::new(-1.0, 0.0, 2.0);
        let c = Vec3::new(0.0, 1.0, 2.0);
        let f = TriangleFrame::new(&a, &b, &c).unwrap();
        assert!((f.o - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-12);
        assert!((f.r - 1.0).abs() < 1e-12);
        assert!((f.n + Vec3::z()).norm() < 1e-12);
        assert!(TriangleFrame::new(&a, &b, &(a * 2.0 - b)).is_none());
    }

    #[test]
    fn circumcenter_is_equidistant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let mut r = || Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let (a, b, c) = (r(), r(), r());
            let Some(f) = TriangleFrame::new(&a, &b, &c) else { continue };
            for p in [a, b, c] {
                assert!(((p - f.o).norm() - f.r).abs() < 1e-8 * (1.0 + f.r));
                assert!(f.n.dot(&(p - f.o)).abs() < 1e-8 * (1.0 + f.r));
            }
        }
    }

    #[test]
    fn upsilon_values() {
        let s = 0.5;
        assert_eq!(upsilon(-2.0, s), 2.5);
        assert_eq!(upsilon(0.0, s), 0.5);
        assert_eq!(upsilon(1.0, s), 0.0);
        assert_eq!(upsilon(-0.5, s), 1.0);
        assert_eq!(upsilon(0.5, s), 0.0);
        let s = 0.25;
        assert!((upsilon(0.0, s) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn upsilon_smooth_at_negative_knee_continuous_at_positive() {
        for s in [0.1, 0.25, 0.4, 0.5] {
            let h = 1e-7;
            let left = upsilon(-s - h, s);
            let right = upsilon(-s + h, s);
            assert!((left - right).abs() < 1e-6);
            assert!((upsilon_derivative(-s - h, s) - upsilon_derivative(-s + h, s)).abs() < 1e-5);
            assert!(upsilon(s - h, s).abs() < 1e-6);
            // the slope jumps from -(1 - s)/s to zero at the positive knee
            assert!((upsilon_derivative(s - h, s) + (1.0 - s) / s).abs() < 1e-5);
            assert_eq!(upsilon_derivative(s + h, s), 0.0);
        }
    }

    #[test]
    fn upsilon_derivative_matches_differences() {
        for s in [0.25, 0.5] {
            for i in -40..40 {
                let x = i as f64 * 0.05 + 0.013;
                let h = 1e-6;
                let fd = (upsilon(x + h, s) - upsilon(x - h, s)) / (2.0 * h);
                assert!((fd - upsilon_derivative(x, s)).abs() < 1e-6, "x={x}");
            }
        }
    }

    #[test]
    fn phi_cone() {
        let f = unit_frame();
        assert_eq!(phi(&Vec3::zeros(), &f, 0.5), 0.0);
        assert!((phi(&Vec3::new(1.0, 0.0, 0.0), &f, 0.5) - 1.0).abs() < 1e-15);
        // past the apex of the cone
        assert!(phi(&Vec3::new(0.0, 0.0, 0.6), &f, 0.5) >= 1.0);
        assert_eq!(psi(&Vec3::new(0.0, 0.0, 0.6), &f, 0.5), 0.0);
        assert_eq!(psi(&Vec3::new(2.0, 0.0, -0.2), &f, 0.5), 0.0);
    }

    #[test]
    fn gradient_matches_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let f = TriangleFrame { o: Vec3::new(0.3, -0.1, 0.2), n: Vec3::new(1.0, 2.0, 2.0) / 3.0, r: 2.0 };
        let mut tested = 0;
        for _ in 0..2000 {
            let v = f.o + Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            for sigma in [0.25, 0.5] {
                let x = f.n.dot(&(v - f.o));
                if (x.abs() - sigma).abs() < 1e-3 || phi(&v, &f, sigma) > 0.99 {
                    continue;
                }
                for mode in [CollisionEnergy::Squared, CollisionEnergy::Linear] {
                    let (val, grad) = mode.residual_gradient(&v, &f, sigma);
                    let h = 1e-6;
                    for k in 0..3 {
                        let mut e = Vec3::zeros();
                        e[k] = h;
                        let fp = mode.residual_gradient(&(v + e), &f, sigma).0;
                        let fm = mode.residual_gradient(&(v - e), &f, sigma).0;
                        let fd = (fp - fm) / (2.0 * h);
                        assert!((fd - grad[k]).abs() < 1e-5 * (1.0 + fd.abs()), "{fd} vs {}", grad[k]);
                    }
                    let expect = match mode {
                        CollisionEnergy::Squared => psi(&v, &f, sigma),
                        CollisionEnergy::Linear => psi(&v, &f, sigma).sqrt(),
                    };
                    assert!((val - expect).abs() < 1e-12);
                    tested += 1;
                }
            }
        }
        assert!(tested > 500);
    }
}
