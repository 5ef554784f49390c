//! Per-frame pose estimation: correspondences for the data terms, salient
//! point assignment, and damped Gauss-Newton minimization.

mod assignment;
mod config;
mod correspond;
mod frame;
mod matching;
mod nn;
mod salient;
mod solver;

pub use assignment::{assignment_objective, hungarian, solve_assignment, AssignmentSolution};
pub use config::{DetectionWeight, Gates, SolverConfig};
pub use correspond::{point_block, ray_block, PointMatch, RayMatch};
pub use frame::{
    linearize, optimize_frame, term_energies, FrameContext, FrameResult, HandModel,
    IterationReport, Linearization, PerTerm,
};
pub use matching::{match_data_to_model, match_model_to_data};
pub use nn::PointGrid;
pub use salient::{build_assignment_weights, match_salient, visible_part_centroids, Detection};
pub use solver::{
    gauss_newton_step, normal_equations, solve_damped, term_weight, total_energy, Step, MAX_DAMPING_RETRIES,
};
