//! Synthetic sequences, evaluation, file formats and batch runs.

mod eval;
pub mod manifest;
pub mod overlay;
pub mod run;
mod synth;
pub mod tables;

pub use eval::{all_point_names, evaluate_2d, named_points, EvalReport, FrameError};
pub use manifest::{LoadedModel, Manifest};
pub use run::{
    collision_debug, evaluate_pose_file, open_sequence, preprocess_sequence, run_tracking, sweep, sweep_table, track,
    write_generated, CollisionDebug, SequenceInput, SweepCell, TrackOutput,
};
pub use synth::{
    generate_sequence, render_pose, DetectionSpec, GenerateSpec, Keyframe, NoiseSpec, SyntheticFrame, Trajectory,
};
pub use tables::PoseRow;
