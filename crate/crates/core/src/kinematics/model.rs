use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::twist::Twist;
use crate::{Error, Result, Vec3};

/// Number of pose parameters owned by a root joint: 3 translation (mm) then a
/// 3-parameter rotation vector (radians) about the root pivot.
pub const ROOT_DOF: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub enum JointKind {
    /// Free-floating base of an articulated body, rotating about `pivot`.
    Root { pivot: Vec3 },
    /// One revolute degree of freedom with closed angle limits in radians.
    Revolute { twist: Twist, min: f64, max: f64 },
}

/// A joint together with the bone it drives. Bone `j` is the rigid part that
/// moves with joint `j`, so bone and joint indices coincide.
#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub id: String,
    pub parent: Option<usize>,
    pub kind: JointKind,
    pub dof_index: usize,
}

impl Joint {
    pub fn dof_count(&self) -> usize {
        match self.kind {
            JointKind::Root { .. } => ROOT_DOF,
            JointKind::Revolute { .. } => 1,
        }
    }

    /// Rest-pose position of the joint centre.
    pub fn rest_center(&self) -> Vec3 {
        match &self.kind {
            JointKind::Root { pivot } => *pivot,
            JointKind::Revolute { twist, .. } => twist.point,
        }
    }
}

/// A named point rigidly attached to a bone (fingertips, evaluation landmarks).
#[derive(Clone, Debug, PartialEq)]
pub struct Marker {
    pub id: String,
    pub bone: usize,
    pub point: Vec3,
}

/// Skeleton forest of twist-parameterized joints.
#[derive(Clone, Debug)]
pub struct KinematicModel {
    joints: Vec<Joint>,
    markers: Vec<Marker>,
    /// Parents before children.
    order: Vec<usize>,
    /// Per bone, the joints from its root down to itself.
    chains: Vec<Vec<usize>>,
    dof: usize,
}

impl KinematicModel {
    pub fn new(joints: Vec<Joint>, markers: Vec<Marker>) -> Result<Self> {
        let n = joints.len();
        if n == 0 {
            return Err(Error::InvalidModel("skeleton has no joints".into()));
        }
        let mut ids = HashMap::new();
        for (i, j) in joints.iter().enumerate() {
            if ids.insert(j.id.as_str(), i).is_some() {
                return Err(Error::InvalidModel(format!("duplicate joint id {:?}", j.id)));
            }
            match (&j.kind, j.parent) {
                (JointKind::Root { .. }, Some(_)) => {
                    return Err(Error::InvalidModel(format!("root joint {:?} has a parent", j.id)))
                }
                (JointKind::Revolute { .. }, None) => {
                    return Err(Error::InvalidModel(format!(
                        "revolute joint {:?} has no parent",
                        j.id
                    )))
                }
                (JointKind::Revolute { twist, min, max }, _) => {
                    if !(min <= max) {
                        return Err(Error::InvalidModel(format!(
                            "joint {:?} has limits [{min}, {max}]",
                            j.id
                        )));
                    }
                    if ((twist.axis.norm()) - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidModel(format!("joint {:?} axis is not unit", j.id)));
                    }
                }
                _ => {}
            }
            if let Some(p) = j.parent {
                if p >= n {
                    return Err(Error::InvalidModel(format!("joint {:?} parent out of range", j.id)));
                }
            }
        }

        // Every dof index is owned exactly once and the indices are dense.
        let dof: usize = joints.iter().map(Joint::dof_count).sum();
        let mut owner = vec![usize::MAX; dof];
        for (i, j) in joints.iter().enumerate() {
            for d in j.dof_index..j.dof_index + j.dof_count() {
                if d >= dof {
                    return Err(Error::InvalidModel(format!(
                        "joint {:?} dof index {d} outside 0..{dof}",
                        j.id
                    )));
                }
                if owner[d] != usize::MAX {
                    return Err(Error::InvalidModel(format!(
                        "dof index {d} claimed by both {:?} and {:?}",
                        joints[owner[d]].id, j.id
                    )));
                }
                owner[d] = i;
            }
        }

        let order = topological_order(&joints)?;
        let mut chains: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &j in &order {
            let mut chain = joints[j].parent.map(|p| chains[p].clone()).unwrap_or_default();
            chain.push(j);
            chains[j] = chain;
        }

        for m in &markers {
            if m.bone >= n {
                return Err(Error::InvalidModel(format!("marker {:?} bone out of range", m.id)));
            }
        }

        Ok(Self {
            joints,
            markers,
            order,
            chains,
            dof,
        })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn markers(&self) -> &[Marker] {
        &self.markers
    }

    pub fn bone_count(&self) -> usize {
        self.joints.len()
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    /// Joint indices with every parent listed before its children.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Joints from the root down to `bone`, inclusive.
    pub fn chain(&self, bone: usize) -> &[usize] {
        &self.chains[bone]
    }

    pub fn joint_index(&self, id: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.id == id)
    }

    pub fn marker_index(&self, id: &str) -> Option<usize> {
        self.markers.iter().position(|m| m.id == id)
    }

    /// Whether `ancestor` lies on the chain of `bone` (a bone is its own ancestor).
    pub fn is_ancestor(&self, ancestor: usize, bone: usize) -> bool {
        self.chains[bone].contains(&ancestor)
    }

    /// Bones whose transform depends on pose entry `dof`.
    pub fn subtree_of_dof(&self, dof: usize) -> Vec<usize> {
        let Some(owner) = self
            .joints
            .iter()
            .position(|j| (j.dof_index..j.dof_index + j.dof_count()).contains(&dof))
        else {
            return Vec::new();
        };
        (0..self.bone_count()).filter(|&b| self.is_ancestor(owner, b)).collect()
    }

    /// All-zero pose: rest articulation, identity global transforms.
    pub fn zero_pose(&self) -> super::Pose {
        super::Pose(vec![0.0; self.dof])
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SkeletonFile =
            toml::from_str(text).map_err(|e| Error::parse("skeleton", e.to_string()))?;
        file.into_model()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        let file = SkeletonFile::from_model(self);
        toml::to_string(&file).expect("skeleton serializes")
    }
}

fn topological_order(joints: &[Joint]) -> Result<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let n = joints.len();
    let mut mark = vec![Mark::New; n];
    let mut order = Vec::with_capacity(n);
    for start in 0..n {
        // Walk up to the first finished ancestor, then emit the path top-down.
        let mut path = Vec::new();
        let mut cur = Some(start);
        while let Some(j) = cur {
            match mark[j] {
                Mark::Done => break,
                Mark::Active => {
                    return Err(Error::InvalidModel(format!(
                        "joint graph has a cycle through {:?}",
                        joints[j].id
                    )))
                }
                Mark::New => {
                    mark[j] = Mark::Active;
                    path.push(j);
                    cur = joints[j].parent;
                }
            }
        }
        for &j in path.iter().rev() {
            mark[j] = Mark::Done;
            order.push(j);
        }
    }
    Ok(order)
}

/// On-disk skeleton description (TOML).
///
/// ```toml
/// [[joint]]
/// id = "palm"
/// kind = "root"
/// point = [0.0, 0.0, 0.0]
/// dof_index = 0
///
/// [[joint]]
/// id = "index_mcp_flex"
/// parent = "palm"
/// kind = "revolute"
/// axis = [1.0, 0.0, 0.0]
/// point = [0.0, -40.0, 0.0]
/// limits = [-0.3, 1.6]
/// dof_index = 6
///
/// [[marker]]
/// id = "index_tip"
/// bone = "index_dip"
/// point = [0.0, -120.0, 0.0]
/// ```
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkeletonFile {
    #[serde(default, rename = "joint")]
    pub joints: Vec<JointEntry>,
    #[serde(default, rename = "marker")]
    pub markers: Vec<MarkerEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    pub kind: JointEntryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<[f64; 3]>,
    pub point: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<[f64; 2]>,
    pub dof_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointEntryKind {
    Root,
    Revolute,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkerEntry {
    pub id: String,
    pub bone: String,
    pub point: [f64; 3],
}

impl SkeletonFile {
    pub fn into_model(self) -> Result<KinematicModel> {
        let index: BTreeMap<&str, usize> = self
            .joints
            .iter()
            .enumerate()
            .map(|(i, j)| (j.id.as_str(), i))
            .collect();
        let mut seen_dofs = BTreeMap::new();
        let mut joints = Vec::with_capacity(self.joints.len());
        for e in &self.joints {
            if let Some(prev) = seen_dofs.insert(e.dof_index, e.id.clone()) {
                return Err(Error::parse(
                    "skeleton",
                    format!("duplicate dof_index {} on {prev:?} and {:?}", e.dof_index, e.id),
                ));
            }
            let parent = match &e.parent {
                None => None,
                Some(p) => Some(*index.get(p.as_str()).ok_or_else(|| {
                    Error::parse("skeleton", format!("joint {:?} has unknown parent {p:?}", e.id))
                })?),
            };
            let point = Vec3::from(e.point);
            let kind = match e.kind {
                JointEntryKind::Root => JointKind::Root { pivot: point },
                JointEntryKind::Revolute => {
                    let axis = e.axis.ok_or_else(|| {
                        Error::parse("skeleton", format!("revolute joint {:?} needs an axis", e.id))
                    })?;
                    let [min, max] = e.limits.unwrap_or([-std::f64::consts::PI, std::f64::consts::PI]);
                    JointKind::Revolute {
                        twist: Twist::revolute(Vec3::from(axis), point)?,
                        min,
                        max,
                    }
                }
            };
            joints.push(Joint {
                id: e.id.clone(),
                parent,
                kind,
                dof_index: e.dof_index,
            });
        }
        let markers = self
            .markers
            .iter()
            .map(|m| {
                let bone = *index.get(m.bone.as_str()).ok_or_else(|| {
                    Error::parse("skeleton", format!("marker {:?} on unknown bone {:?}", m.id, m.bone))
                })?;
                Ok(Marker {
                    id: m.id.clone(),
                    bone,
                    point: Vec3::from(m.point),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        KinematicModel::new(joints, markers)
    }

    pub fn from_model(model: &KinematicModel) -> Self {
        let joints = model
            .joints()
            .iter()
            .map(|j| {
                let parent = j.parent.map(|p| model.joints()[p].id.clone());
                match &j.kind {
                    JointKind::Root { pivot } => JointEntry {
                        id: j.id.clone(),
                        parent,
                        kind: JointEntryKind::Root,
                        axis: None,
                        point: (*pivot).into(),
                        limits: None,
                        dof_index: j.dof_index,
                    },
                    JointKind::Revolute { twist, min, max } => JointEntry {
                        id: j.id.clone(),
                        parent,
                        kind: JointEntryKind::Revolute,
                        axis: Some(twist.axis.into()),
                        point: twist.point.into(),
                        limits: Some([*min, *max]),
                        dof_index: j.dof_index,
                    },
                }
            })
            .collect();
        let markers = model
            .markers()
            .iter()
            .map(|m| MarkerEntry {
                id: m.id.clone(),
                bone: model.joints()[m.bone].id.clone(),
                point: m.point.into(),
            })
            .collect();
        Self { joints, markers }
    }
}
