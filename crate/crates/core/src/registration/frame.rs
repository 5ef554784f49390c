use serde::{Deserialize, Serialize};

use super::assignment::{solve_assignment, AssignmentSolution};
use super::config::SolverConfig;
use super::correspond::{point_block, ray_block, PointMatch, RayMatch};
use super::matching::{match_data_to_model, match_model_to_data};
use super::nn::PointGrid;
use super::salient::{build_assignment_weights, match_salient, visible_part_centroids, Detection};
use super::solver::{normal_equations, solve_damped, total_energy, MAX_DAMPING_RETRIES};
use crate::collision::{build_bvh, collision_block, collision_samples, find_collisions, CollisionSample};
use crate::kinematics::{clamp_to_limits, ChainState, KinematicModel, Pose, RigidTransform};
use crate::residual::{ResidualBlock, Term};
use crate::sensor::ObservedFrame;
use crate::skinned_model::{
    identity_rig, lbs_deform, render_depth, visible_vertices, DeformedMesh, SkinJacobian, SkinnedMesh,
};
use crate::{Error, Result, Vec3};

const MIN_DAMPING: f64 = 1e-9;

/// Skeleton plus skinned mesh, with the labelled parts (fingertips) used by
/// the salient term.
#[derive(Clone, Debug)]
pub struct HandModel {
    pub model: KinematicModel,
    pub mesh: SkinnedMesh,
    pub parts: Vec<Vec<usize>>,
    rig: Vec<RigidTransform>,
}

impl HandModel {
    /// The rig pose is the zero pose of `model`.
    pub fn new(model: KinematicModel, mesh: SkinnedMesh) -> Result<Self> {
        if mesh.bone_count() != model.bone_count() {
            return Err(Error::InvalidModel(format!(
                "mesh is skinned to {} bones but the skeleton has {}",
                mesh.bone_count(),
                model.bone_count()
            )));
        }
        let parts = mesh.part_vertices();
        let rig = identity_rig(model.bone_count());
        Ok(Self { model, mesh, parts, rig })
    }

    pub fn dof(&self) -> usize {
        self.model.dof()
    }

    pub fn vertices(&self, state: &ChainState) -> Result<Vec<Vec3>> {
        lbs_deform(&self.mesh, state.bones(), &self.rig)
    }

    pub fn deform(&self, pose: &[f64]) -> Result<(ChainState, DeformedMesh)> {
        let state = ChainState::new(&self.model, pose)?;
        let vertices = self.vertices(&state)?;
        Ok((state, DeformedMesh::from_vertices(vertices, self.mesh.triangles())))
    }

    pub fn jacobian<'a>(&'a self, state: &'a ChainState) -> Result<SkinJacobian<'a>> {
        SkinJacobian::new(&self.model, &self.mesh, state, &self.rig)
    }
}

/// One value per energy term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerTerm<T> {
    pub m2d: T,
    pub d2m: T,
    pub salient: T,
    pub collision: T,
}

impl<T: Copy> PerTerm<T> {
    pub fn get(&self, term: Term) -> T {
        match term {
            Term::ModelToData => self.m2d,
            Term::DataToModel => self.d2m,
            Term::Salient => self.salient,
            Term::Collision => self.collision,
        }
    }

    pub fn set(&mut self, term: Term, value: T) {
        match term {
            Term::ModelToData => self.m2d = value,
            Term::DataToModel => self.d2m = value,
            Term::Salient => self.salient = value,
            Term::Collision => self.collision = value,
        }
    }
}

/// Correspondences, collision samples and assignment fixed for one solver
/// iteration.
#[derive(Clone, Debug, Default)]
pub struct Linearization {
    pub m2d: Vec<PointMatch>,
    pub d2m: Vec<RayMatch>,
    pub salient: Vec<PointMatch>,
    pub assignment: Option<AssignmentSolution>,
    pub collision_pairs: Vec<(u32, u32)>,
    pub collision: Vec<CollisionSample>,
}

impl Linearization {
    /// No data term produced a correspondence.
    pub fn is_lost(&self) -> bool {
        self.m2d.is_empty() && self.d2m.is_empty() && self.salient.is_empty()
    }

    pub fn counts(&self) -> PerTerm<usize> {
        PerTerm {
            m2d: self.m2d.len(),
            d2m: self.d2m.len(),
            salient: self.salient.len(),
            collision: self.collision.len(),
        }
    }

    /// Residual blocks at `vertices`, with derivatives when `jacobian` is given.
    pub fn blocks(
        &self,
        vertices: &[Vec3],
        config: &SolverConfig,
        dof: usize,
        jacobian: Option<&SkinJacobian>,
    ) -> Vec<ResidualBlock> {
        vec![
            point_block(Term::ModelToData, &self.m2d, vertices, config.metric, dof, jacobian),
            ray_block(&self.d2m, vertices, dof, jacobian),
            point_block(Term::Salient, &self.salient, vertices, config.metric, dof, jacobian),
            collision_block(
                &self.collision,
                vertices,
                config.sigma,
                config.metric,
                config.collision_energy,
                dof,
                jacobian,
            ),
        ]
    }
}

/// Unweighted energy of every block, by term.
pub fn term_energies(blocks: &[ResidualBlock]) -> PerTerm<f64> {
    let mut out = PerTerm::default();
    for b in blocks {
        out.set(b.term, out.get(b.term) + b.energy());
    }
    out
}

/// Observation-side data reused across iterations of one frame.
pub struct FrameContext<'a> {
    pub observed: &'a ObservedFrame,
    pub detections: Vec<Detection>,
    grid: PointGrid,
}

impl<'a> FrameContext<'a> {
    /// Keeps only detections at or above the confidence threshold.
    pub fn new(observed: &'a ObservedFrame, detections: &[Detection], config: &SolverConfig) -> Self {
        let detections = detections
            .iter()
            .filter(|d| d.confidence >= config.confidence_threshold)
            .cloned()
            .collect();
        Self {
            observed,
            detections,
            grid: PointGrid::new(&observed.cloud.points, config.gates.m2d_distance_mm),
        }
    }
}

/// Builds every correspondence for the mesh deformed to the current pose.
pub fn linearize(hand: &HandModel, deformed: &DeformedMesh, ctx: &FrameContext, config: &SolverConfig) -> Linearization {
    let camera = &ctx.observed.camera;
    let triangles = hand.mesh.triangles();
    let render = render_depth(&deformed.vertices, triangles, camera);
    let visible = visible_vertices(&deformed.vertices, camera, &render, config.visibility_eps_mm);
    let mut lin = Linearization::default();
    if config.use_model_to_data {
        lin.m2d = match_model_to_data(deformed, &visible, ctx.observed, &ctx.grid, &config.gates);
    }
    if config.use_data_to_model {
        lin.d2m = match_data_to_model(
            deformed,
            triangles,
            &render,
            ctx.observed,
            camera,
            config.model_edge_threshold_mm,
            &config.gates,
        );
    }
    if config.salient_enabled() && !hand.parts.is_empty() {
        let centroids = visible_part_centroids(&deformed.vertices, &visible, &hand.parts);
        let (w_st, w_s) = build_assignment_weights(
            &ctx.detections,
            &centroids,
            config.detection_weight,
            config.confidence_threshold,
            config.assignment_scale_mm,
        );
        let solution = solve_assignment(&w_st, &w_s, hand.parts.len(), config.lambda);
        lin.salient = match_salient(
            &solution,
            &ctx.detections,
            deformed,
            &visible,
            &hand.parts,
            ctx.observed,
            camera,
            &config.gates,
        );
        lin.assignment = Some(solution);
    }
    let bvh = build_bvh(&deformed.vertices, triangles);
    lin.collision_pairs = find_collisions(&bvh, &deformed.vertices, triangles, config.skip_adjacent);
    if config.gamma_c > 0.0 {
        lin.collision = collision_samples(&lin.collision_pairs, &deformed.vertices, &deformed.normals, triangles);
    }
    lin
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    /// Unweighted term energies at the start of the iteration.
    pub energies: PerTerm<f64>,
    /// Weighted total at the start of the iteration.
    pub total: f64,
    /// Weighted total after the iteration (equal to `total` if rejected).
    pub total_after: f64,
    pub counts: PerTerm<usize>,
    pub collision_pairs: usize,
    pub accepted: bool,
    pub damping: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameResult {
    pub pose: Pose,
    pub lost: bool,
    pub iterations: Vec<IterationReport>,
    /// Energies and correspondence counts re-evaluated at the final pose.
    pub energies: PerTerm<f64>,
    pub total_energy: f64,
    pub counts: PerTerm<usize>,
    pub collision_pairs: usize,
    pub solver_failures: usize,
}

/// Damped Gauss-Newton over the pose for one frame. Each iteration rebuilds
/// the correspondences at the current pose, then tries steps with growing
/// damping until the frozen-correspondence energy decreases. The result
/// always respects joint limits.
pub fn optimize_frame(
    theta_init: &[f64],
    hand: &HandModel,
    observed: &ObservedFrame,
    detections: &[Detection],
    config: &SolverConfig,
    iterations: usize,
) -> Result<FrameResult> {
    config.validate()?;
    let dof = hand.dof();
    if theta_init.len() != dof {
        return Err(Error::InvalidArgument(format!("pose has {} values, model has {dof} DoF", theta_init.len())));
    }
    let ctx = FrameContext::new(observed, detections, config);
    let mut pose = clamp_to_limits(theta_init, &hand.model);
    let mut damping = config.damping;
    let mut reports = Vec::with_capacity(iterations);
    let mut failures = 0;
    let lost = |reports: Vec<IterationReport>, failures| FrameResult {
        pose: clamp_to_limits(theta_init, &hand.model),
        lost: true,
        iterations: reports,
        energies: PerTerm::default(),
        total_energy: 0.0,
        counts: PerTerm::default(),
        collision_pairs: 0,
        solver_failures: failures,
    };

    for _ in 0..iterations {
        let (state, deformed) = hand.deform(&pose)?;
        let lin = linearize(hand, &deformed, &ctx, config);
        if lin.is_lost() {
            return Ok(lost(reports, failures));
        }
        let jac = hand.jacobian(&state)?;
        let blocks = lin.blocks(&deformed.vertices, config, dof, Some(&jac));
        let e0 = total_energy(&blocks, config.gamma_c);
        let mut report = IterationReport {
            energies: term_energies(&blocks),
            total: e0,
            total_after: e0,
            counts: lin.counts(),
            collision_pairs: lin.collision_pairs.len(),
            accepted: false,
            damping,
        };
        if e0 == 0.0 {
            reports.push(report);
            break;
        }
        let (jtj, jtr) = normal_equations(&blocks, config.gamma_c, dof);
        for _ in 0..=MAX_DAMPING_RETRIES {
            let step = solve_damped(&jtj, &jtr, damping);
            if step.failed {
                failures += 1;
                damping = step.damping;
                break;
            }
            damping = step.damping;
            let candidate: Vec<f64> = pose.iter().zip(step.delta.iter()).map(|(p, d)| p + d).collect();
            let candidate = clamp_to_limits(&candidate, &hand.model);
            let cstate = ChainState::new(&hand.model, &candidate)?;
            let verts = hand.vertices(&cstate)?;
            let e1 = total_energy(&lin.blocks(&verts, config, dof, None), config.gamma_c);
            if e1 < e0 {
                pose = candidate;
                report.accepted = true;
                report.total_after = e1;
                damping = (damping / 10.0).max(MIN_DAMPING);
                break;
            }
            damping *= 10.0;
        }
        report.damping = damping;
        reports.push(report);
    }

    let (_, deformed) = hand.deform(&pose)?;
    let lin = linearize(hand, &deformed, &ctx, config);
    if lin.is_lost() {
        return Ok(lost(reports, failures));
    }
    let blocks = lin.blocks(&deformed.vertices, config, dof, None);
    Ok(FrameResult {
        pose,
        lost: false,
        iterations: reports,
        energies: term_energies(&blocks),
        total_energy: total_energy(&blocks, config.gamma_c),
        counts: lin.counts(),
        collision_pairs: lin.collision_pairs.len(),
        solver_failures: failures,
    })
}
