use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::collision::CollisionEnergy;
use crate::residual::Metric;
use crate::{Error, Result};

/// How a detection's false-positive cost scales with its confidence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionWeight {
    /// `w_s = 1`.
    Constant,
    /// `w_s = c_s / c_thr`.
    #[default]
    Confidence,
}

/// Correspondence gates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Gates {
    pub normal_angle_deg: f64,
    pub m2d_distance_mm: f64,
    pub d2m_distance_mm: f64,
    /// A finger this close to its detection gets no salient residuals.
    pub salient_skip_mm: f64,
    /// Projected overlap at or above which salient targets are closest
    /// detection points instead of the detection centroid.
    pub salient_overlap: f64,
}

impl Default for Gates {
    fn default() -> Self {
        Self {
            normal_angle_deg: 45.0,
            m2d_distance_mm: 10.0,
            d2m_distance_mm: 30.0,
            salient_skip_mm: 10.0,
            salient_overlap: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Collision weight `γ_c`.
    pub gamma_c: f64,
    /// Assignment penalty `λ`; zero disables the salient term.
    pub lambda: f64,
    pub detection_weight: DetectionWeight,
    /// Detections below this confidence are ignored.
    pub confidence_threshold: f64,
    /// Assignment distances are divided by this (mm).
    pub assignment_scale_mm: f64,
    pub iterations: usize,
    pub first_frame_iterations: usize,
    pub metric: Metric,
    pub damping: f64,
    pub gates: Gates,
    pub sigma: f64,
    pub collision_energy: CollisionEnergy,
    pub skip_adjacent: bool,
    pub visibility_eps_mm: f64,
    /// Depth jump (mm) that makes a model-render pixel an edge.
    pub model_edge_threshold_mm: f64,
    pub use_model_to_data: bool,
    pub use_data_to_model: bool,
    pub use_salient: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma_c: 10.0,
            lambda: 1.2,
            detection_weight: DetectionWeight::Confidence,
            confidence_threshold: 3.0,
            assignment_scale_mm: 100.0,
            iterations: 10,
            first_frame_iterations: 50,
            metric: Metric::PointToPlane,
            damping: 1e-3,
            gates: Gates::default(),
            sigma: 0.5,
            collision_energy: CollisionEnergy::Squared,
            skip_adjacent: true,
            visibility_eps_mm: crate::skinned_model::VISIBILITY_EPS_MM,
            model_edge_threshold_mm: 25.0,
            use_model_to_data: true,
            use_data_to_model: true,
            use_salient: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("gamma_c", self.gamma_c),
            ("lambda", self.lambda),
            ("confidence_threshold", self.confidence_threshold),
            ("damping", self.damping),
            ("visibility_eps_mm", self.visibility_eps_mm),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be a finite non-negative number, got {v}")));
            }
        }
        if self.iterations == 0 || self.first_frame_iterations == 0 {
            return Err(Error::InvalidArgument("iteration counts must be at least 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::InvalidArgument(format!("sigma must be in (0, 1), got {}", self.sigma)));
        }
        if !(self.assignment_scale_mm > 0.0) {
            return Err(Error::InvalidArgument("assignment_scale_mm must be positive".into()));
        }
        let g = &self.gates;
        if !(g.normal_angle_deg >= 0.0 && g.m2d_distance_mm > 0.0 && g.d2m_distance_mm > 0.0 && g.salient_skip_mm >= 0.0)
        {
            return Err(Error::InvalidArgument("gates must be positive".into()));
        }
        if !(0.0..=1.0).contains(&g.salient_overlap) {
            return Err(Error::InvalidArgument("salient_overlap must be in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::parse("solver config", e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn salient_enabled(&self) -> bool {
        self.use_salient && self.lambda > 0.0
    }
}
