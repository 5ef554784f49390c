use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result, Vec3};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

/// Triangle mesh with sparse per-vertex skinning weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SkinnedMesh {
    rest: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    /// Per vertex, `(bone, weight)` pairs with positive weights summing to one.
    weights: Vec<Vec<(usize, f64)>>,
    /// Optional part label per vertex; labelled vertices form the salient parts.
    labels: Vec<Option<usize>>,
    bone_count: usize,
}

impl SkinnedMesh {
    pub fn new(
        rest: Vec<Vec3>,
        triangles: Vec<[u32; 3]>,
        weights: Vec<Vec<(usize, f64)>>,
        labels: Option<Vec<Option<usize>>>,
        bone_count: usize,
    ) -> Result<Self> {
        let n = rest.len();
        if weights.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} weight rows for {n} vertices",
                weights.len()
            )));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i as usize >= n) {
                return Err(Error::InvalidArgument(format!("triangle {t} index out of range")));
            }
        }
        for (v, row) in weights.iter().enumerate() {
            let mut sum = 0.0;
            for &(bone, w) in row {
                if bone >= bone_count {
                    return Err(Error::InvalidArgument(format!(
                        "vertex {v} weight references bone {bone} of {bone_count}"
                    )));
                }
                if !(w >= 0.0) {
                    return Err(Error::InvalidArgument(format!("vertex {v} has weight {w}")));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return Err(Error::InvalidArgument(format!(
                    "vertex {v} weights sum to {sum}, expected 1"
                )));
            }
        }
        let labels = labels.unwrap_or_else(|| vec![None; n]);
        if labels.len() != n {
            return Err(Error::InvalidArgument("label count differs from vertex count".into()));
        }
        let mesh = Self {
            rest,
            triangles,
            weights,
            labels,
            bone_count,
        };
        if !mesh.is_edge_manifold() {
            log::warn!("mesh is not edge-manifold");
        }
        Ok(mesh)
    }

    pub fn rest_vertices(&self) -> &[Vec3] {
        &self.rest
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn weights(&self) -> &[Vec<(usize, f64)>] {
        &self.weights
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn bone_count(&self) -> usize {
        self.bone_count
    }

    pub fn vertex_count(&self) -> usize {
        self.rest.len()
    }

    /// Number of distinct labelled parts (max label + 1).
    pub fn part_count(&self) -> usize {
        self.labels.iter().flatten().map(|&l| l + 1).max().unwrap_or(0)
    }

    /// Vertex ids per labelled part.
    pub fn part_vertices(&self) -> Vec<Vec<usize>> {
        let mut parts = vec![Vec::new(); self.part_count()];
        for (v, l) in self.labels.iter().enumerate() {
            if let Some(l) = l {
                parts[*l].push(v);
            }
        }
        parts
    }

    /// Every undirected edge is shared by at most two triangles.
    pub fn is_edge_manifold(&self) -> bool {
        let mut uses: HashMap<(u32, u32), u8> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let e = uses.entry((a.min(b), a.max(b))).or_default();
                *e += 1;
                if *e > 2 {
                    return false;
                }
            }
        }
        true
    }

    /// Text serialization: `v x y z`, `f a b c`, `w vertex bone:weight ...` and
    /// `l vertex label` rows, `#` comments, zero-based indices.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# handtrack mesh");
        let _ = writeln!(s, "bones {}", self.bone_count);
        for v in &self.rest {
            let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0], t[1], t[2]);
        }
        for (i, row) in self.weights.iter().enumerate() {
            let _ = write!(s, "w {i}");
            for (b, w) in row {
                let _ = write!(s, " {b}:{w}");
            }
            s.push('\n');
        }
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(l) = l {
                let _ = writeln!(s, "l {i} {l}");
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::parse(format!("mesh line {}", line + 1), msg);
        let mut rest = Vec::new();
        let mut triangles = Vec::new();
        let mut weight_rows: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
        let mut label_rows = Vec::new();
        let mut bones = None;
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let tag = it.next().unwrap();
            let rest_fields: Vec<&str> = it.collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(ln, &format!("bad number {s:?}")));
            let idx = |s: &str| s.parse::<usize>().map_err(|_| err(ln, &format!("bad index {s:?}")));
            match tag {
                "bones" if rest_fields.len() == 1 => bones = Some(idx(rest_fields[0])?),
                "v" if rest_fields.len() == 3 => rest.push(Vec3::new(
                    num(rest_fields[0])?,
                    num(rest_fields[1])?,
                    num(rest_fields[2])?,
                )),
                "f" if rest_fields.len() == 3 => {
                    let mut t = [0u32; 3];
                    for k in 0..3 {
                        t[k] = u32::try_from(idx(rest_fields[k])?)
                            .map_err(|_| err(ln, "index too large"))?;
                    }
                    triangles.push(t);
                }
                "w" if !rest_fields.is_empty() => {
                    let v = idx(rest_fields[0])?;
                    let mut row = Vec::new();
                    for pair in &rest_fields[1..] {
                        let (b, w) = pair
                            .split_once(':')
                            .ok_or_else(|| err(ln, "weight must be bone:weight"))?;
                        row.push((idx(b)?, num(w)?));
                    }
                    weight_rows.push((v, row));
                }
                "l" if rest_fields.len() == 2 => {
                    label_rows.push((idx(rest_fields[0])?, idx(rest_fields[1])?))
                }
                _ => return Err(err(ln, &format!("unrecognized row {line:?}"))),
            }
        }
        let n = rest.len();
        let mut weights = vec![None; n];
        for (v, row) in weight_rows {
            let slot = weights
                .get_mut(v)
                .ok_or_else(|| Error::parse("mesh", format!("weights for missing vertex {v}")))?;
            if slot.replace(row).is_some() {
                return Err(Error::parse("mesh", format!("duplicate weights for vertex {v}")));
            }
        }
        let weights = weights
            .into_iter()
            .enumerate()
            .map(|(v, w)| w.ok_or_else(|| Error::parse("mesh", format!("vertex {v} has no weights"))))
            .collect::<Result<Vec<_>>>()?;
        let mut labels = vec![None; n];
        for (v, l) in label_rows {
            *labels
                .get_mut(v)
                .ok_or_else(|| Error::parse("mesh", format!("label for missing vertex {v}")))? = Some(l);
        }
        let bone_count = match bones {
            Some(b) => b,
            None => weights.iter().flatten().map(|&(b, _)| b + 1).max().unwrap_or(0),
        };
        Self::new(rest, triangles, weights, Some(labels), bone_count)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}
