//! Run manifests: which model, camera, frames, detections and settings a
//! batch command works on. Relative paths are resolved against the
//! manifest's own directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synth::GenerateSpec;
use crate::kinematics::KinematicModel;
use crate::registration::{HandModel, SolverConfig};
use crate::sensor::PreprocessParams;
use crate::skinned_model::procedural::{build_hand, HandSpec};
use crate::skinned_model::{Camera, SkinnedMesh};
use crate::{Error, Result};

/// Either a built-in procedural hand or a skeleton and mesh file pair.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSource {
    /// `two_finger` or `five_finger`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub procedural: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skeleton: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
}

/// Frame files. `depth` and `mask` are either explicit lists or a single
/// pattern in which `{frame}` or `{frame:0N}` is replaced by the frame index
/// (zero-padded to N digits); patterns need `frames`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<usize>,
    pub depth: FileList,
    /// Without masks every valid depth pixel is foreground.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<FileList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detections: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FileList {
    Pattern(String),
    List(Vec<PathBuf>),
}

impl Default for FileList {
    fn default() -> Self {
        FileList::List(Vec::new())
    }
}

impl FileList {
    fn len(&self, frames: Option<usize>) -> Result<usize> {
        match (self, frames) {
            (FileList::List(l), None) => Ok(l.len()),
            (FileList::List(l), Some(n)) if l.len() == n => Ok(n),
            (FileList::List(l), Some(n)) => Err(Error::InvalidArgument(format!(
                "sequence lists {} files but frames = {n}",
                l.len()
            ))),
            (FileList::Pattern(_), Some(n)) => Ok(n),
            (FileList::Pattern(_), None) => Err(Error::InvalidArgument("a file pattern needs `frames`".into())),
        }
    }

    fn path(&self, index: usize) -> Result<PathBuf> {
        match self {
            FileList::List(l) => Ok(l[index].clone()),
            FileList::Pattern(p) => expand_pattern(p, index).map(PathBuf::from),
        }
    }
}

/// Replaces `{frame}` or `{frame:0N}` in `pattern`.
pub fn expand_pattern(pattern: &str, index: usize) -> Result<String> {
    let start = pattern
        .find("{frame")
        .ok_or_else(|| Error::InvalidArgument(format!("pattern {pattern:?} has no {{frame}} placeholder")))?;
    let end = start
        + pattern[start..]
            .find('}')
            .ok_or_else(|| Error::InvalidArgument(format!("unclosed placeholder in {pattern:?}")))?;
    let spec = &pattern[start + 6..end];
    let text = match spec {
        "" => index.to_string(),
        s => {
            let width: usize = s
                .strip_prefix(":0")
                .and_then(|w| w.parse().ok())
                .ok_or_else(|| Error::InvalidArgument(format!("bad placeholder format {s:?} in {pattern:?}")))?;
            format!("{index:0width$}")
        }
    };
    Ok(format!("{}{}{}", &pattern[..start], text, &pattern[end + 1..]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub model: ModelSource,
    /// Falls back to the intrinsics in the first depth file, then to a VGA
    /// default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<Camera>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<GenerateSpec>,
    #[serde(default)]
    pub config: SolverConfig,
    #[serde(default)]
    pub preprocess: PreprocessParams,
    /// Initial pose for the first frame; defaults to the first ground-truth
    /// pose, then to the zero pose.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_pose: Option<Vec<f64>>,
    /// Joints and markers scored by `eval`; defaults depend on the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_points: Option<Vec<String>>,
    #[serde(default)]
    pub overlays: bool,
    /// Parameter grid for `sweep`: config key (dotted for nested tables) to
    /// the list of values to try.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<toml::Table>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A hand model plus its default evaluation points.
pub struct LoadedModel {
    pub hand: HandModel,
    pub eval_points: Vec<String>,
}

impl Manifest {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut m: Manifest = toml::from_str(text).map_err(|e| Error::parse("manifest", e.to_string()))?;
        m.base_dir = base_dir.to_path_buf();
        m.config.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        Self::from_toml_str(&text, &base).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
            e => e,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn load_model(&self) -> Result<LoadedModel> {
        let src = &self.model;
        let (hand, defaults) = match (&src.procedural, &src.skeleton, &src.mesh) {
            (Some(name), None, None) => {
                let spec = match name.as_str() {
                    "two_finger" => HandSpec::two_finger(),
                    "five_finger" => HandSpec::five_finger(),
                    other => return Err(Error::InvalidArgument(format!("unknown procedural model {other:?}"))),
                };
                let p = build_hand(&spec)?;
                let points = p.evaluation_points();
                (HandModel::new(p.model, p.mesh)?, points)
            }
            (None, Some(skel), Some(mesh)) => {
                let model = KinematicModel::load(&self.resolve(skel))?;
                let mesh = SkinnedMesh::load(&self.resolve(mesh))?;
                let points = super::all_point_names(&model);
                (HandModel::new(model, mesh)?, points)
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "[model] needs either `procedural` or both `skeleton` and `mesh`".into(),
                ))
            }
        };
        Ok(LoadedModel {
            eval_points: self.eval_points.clone().unwrap_or(defaults),
            hand,
        })
    }

    pub fn sequence(&self) -> Result<&SequenceSpec> {
        self.sequence
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("manifest has no [sequence] section".into()))
    }

    pub fn frame_count(&self) -> Result<usize> {
        let s = self.sequence()?;
        let n = s.depth.len(s.frames)?;
        if let Some(m) = &s.mask {
            m.len(Some(n))?;
        }
        Ok(n)
    }

    pub fn depth_path(&self, index: usize) -> Result<PathBuf> {
        Ok(self.resolve(&self.sequence()?.depth.path(index)?))
    }

    pub fn mask_path(&self, index: usize) -> Result<Option<PathBuf>> {
        match &self.sequence()?.mask {
            Some(m) => Ok(Some(self.resolve(&m.path(index)?))),
            None => Ok(None),
        }
    }

    /// Config after applying `key = value` overrides (dotted keys reach into
    /// nested tables such as `gates`).
    pub fn config_with(&self, overrides: &[(String, toml::Value)]) -> Result<SolverConfig> {
        let mut table = toml::Table::try_from(self.config)
            .map_err(|e| Error::InvalidArgument(format!("config does not serialize: {e}")))?;
        for (key, value) in overrides {
            let parts: Vec<&str> = key.split('.').collect();
            let (last, path) = parts.split_last().expect("split yields at least one part");
            let mut t = &mut table;
            for p in path {
                t = t
                    .get_mut(*p)
                    .and_then(|v| v.as_table_mut())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown config table {p:?} in {key:?}")))?;
            }
            if !t.contains_key(*last) {
                return Err(Error::InvalidArgument(format!("unknown config key {key:?}")));
            }
            // Allow integers where floats are expected.
            let value = match (&t[*last], value) {
                (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(*i as f64),
                _ => value.clone(),
            };
            t.insert(last.to_string(), value);
        }
        let config: SolverConfig = table
            .try_into()
            .map_err(|e| Error::InvalidArgument(format!("invalid config override: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Sweep axes in key order.
    pub fn sweep_grid(&self) -> Result<Vec<(String, Vec<toml::Value>)>> {
        let table = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("manifest has no [sweep] section".into()))?;
        let mut axes = Vec::new();
        flatten_grid("", table, &mut axes)?;
        if axes.is_empty() {
            return Err(Error::InvalidArgument("[sweep] is empty".into()));
        }
        Ok(axes)
    }
}

fn flatten_grid(prefix: &str, table: &toml::Table, out: &mut Vec<(String, Vec<toml::Value>)>) -> Result<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Array(a) if !a.is_empty() => out.push((key, a.clone())),
            toml::Value::Table(t) => flatten_grid(&key, t, out)?,
            _ => return Err(Error::InvalidArgument(format!("sweep axis {key:?} must be a non-empty array"))),
        }
    }
    Ok(())
}
