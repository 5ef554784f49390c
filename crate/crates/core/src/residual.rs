//! Stacked residuals with dense Jacobian rows, tagged by energy term.

use nalgebra::{Matrix3xX, RowDVector};
use serde::{Deserialize, Serialize};

use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    ModelToData,
    DataToModel,
    Salient,
    Collision,
}

impl Term {
    pub const ALL: [Term; 4] = [Term::ModelToData, Term::DataToModel, Term::Salient, Term::Collision];

    pub fn short_name(self) -> &'static str {
        match self {
            Term::ModelToData => "m2d",
            Term::DataToModel => "d2m",
            Term::Salient => "salient",
            Term::Collision => "collision",
        }
    }
}

/// Distance metric for surface residuals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "p2p")]
    PointToPoint,
    #[default]
    #[serde(rename = "p2plane")]
    PointToPlane,
}

/// Residual rows of one energy term. `jacobian` is row-major `rows × dof`,
/// or empty when the block was assembled without derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualBlock {
    pub term: Term,
    pub dof: usize,
    pub residuals: Vec<f64>,
    pub jacobian: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ResidualBlock {
    pub fn new(term: Term, dof: usize) -> Self {
        Self {
            term,
            dof,
            residuals: Vec::new(),
            jacobian: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.len() == self.residuals.len() * self.dof && !self.residuals.is_empty()
    }

    /// Unweighted by the term weight: `Σ_i w_i r_i²`.
    pub fn energy(&self) -> f64 {
        self.residuals
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| w * r * r)
            .sum()
    }

    pub fn jacobian_row(&self, i: usize) -> &[f64] {
        &self.jacobian[i * self.dof..(i + 1) * self.dof]
    }

    pub fn push_scalar(&mut self, r: f64, jac: Option<RowDVector<f64>>) {
        self.residuals.push(r);
        self.weights.push(1.0);
        if let Some(j) = jac {
            debug_assert_eq!(j.len(), self.dof);
            self.jacobian.extend(j.iter());
        }
    }

    pub fn push_vec3(&mut self, r: Vec3, jac: Option<&Matrix3xX<f64>>) {
        for k in 0..3 {
            self.residuals.push(r[k]);
            self.weights.push(1.0);
            if let Some(j) = jac {
                self.jacobian.extend(j.row(k).iter());
            }
        }
    }

    /// Appends another block of the same term and width.
    pub fn extend(&mut self, other: ResidualBlock) {
        debug_assert_eq!(self.dof, other.dof);
        self.residuals.extend(other.residuals);
        self.jacobian.extend(other.jacobian);
        self.weights.extend(other.weights);
    }
}
