//! Line-oriented text tables: detections, tracked poses and ground truth.
//!
//! Blank lines and lines starting with `#` are ignored. Floats are written in
//! the shortest form that parses back to the same value.

use std::fmt::Write as _;
use std::path::Path;

use crate::registration::{Detection, FrameResult, PerTerm};
use crate::{Error, Result, Vec3};

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_num<T: std::str::FromStr>(tok: &str, context: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(context, format!("line {line}: bad {what} {tok:?}")))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `frame x y z confidence region`, where region is `bbox:x0,y0,x1,y1`
/// (inclusive) or `pixels:x,y;x,y;...`.
pub fn detections_to_text(detections: &[Detection]) -> String {
    let mut s = String::from("# frame x y z confidence region\n");
    for d in detections {
        let px: Vec<String> = d.region.iter().map(|(x, y)| format!("{x},{y}")).collect();
        writeln!(
            s,
            "{} {} {} {} {} pixels:{}",
            d.frame_index,
            d.centroid.x,
            d.centroid.y,
            d.centroid.z,
            d.confidence,
            px.join(";")
        )
        .unwrap();
    }
    s
}

fn parse_region(tok: &str, context: &str, line: usize) -> Result<Vec<(u32, u32)>> {
    let bad = || Error::parse(context, format!("line {line}: bad region {tok:?}"));
    if let Some(b) = tok.strip_prefix("bbox:") {
        let v: Vec<u32> = b.split(',').map(|t| t.parse().map_err(|_| bad())).collect::<Result<_>>()?;
        if v.len() != 4 || v[0] > v[2] || v[1] > v[3] {
            return Err(bad());
        }
        Ok((v[1]..=v[3]).flat_map(|y| (v[0]..=v[2]).map(move |x| (x, y))).collect())
    } else if let Some(p) = tok.strip_prefix("pixels:") {
        if p.is_empty() {
            return Ok(Vec::new());
        }
        p.split(';')
            .map(|xy| {
                let (x, y) = xy.split_once(',').ok_or_else(bad)?;
                Ok((x.parse().map_err(|_| bad())?, y.parse().map_err(|_| bad())?))
            })
            .collect()
    } else {
        Err(bad())
    }
}

pub fn detections_from_text(text: &str, context: &str) -> Result<Vec<Detection>> {
    data_lines(text)
        .map(|(n, l)| {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 6 {
                return Err(Error::parse(context, format!("line {n}: expected 6 fields, got {}", t.len())));
            }
            let confidence: f64 = parse_num(t[4], context, n, "confidence")?;
            if !confidence.is_finite() {
                return Err(Error::parse(context, format!("line {n}: confidence must be finite")));
            }
            Ok(Detection {
                frame_index: parse_num(t[0], context, n, "frame")?,
                centroid: Vec3::new(
                    parse_num(t[1], context, n, "x")?,
                    parse_num(t[2], context, n, "y")?,
                    parse_num(t[3], context, n, "z")?,
                ),
                confidence,
                region: parse_region(t[5], context, n)?,
            })
        })
        .collect()
}

pub fn load_detections(path: &Path) -> Result<Vec<Detection>> {
    detections_from_text(&read_text(path)?, &path.display().to_string())
}

/// Detections grouped by frame index for `frames` frames; later frames are
/// rejected.
pub fn group_detections(detections: Vec<Detection>, frames: usize) -> Result<Vec<Vec<Detection>>> {
    let mut out = vec![Vec::new(); frames];
    for d in detections {
        let f = d.frame_index;
        out.get_mut(f)
            .ok_or_else(|| Error::InvalidArgument(format!("detection for frame {f} but the sequence has {frames} frames")))?
            .push(d);
    }
    Ok(out)
}

/// One tracked frame as written to the pose table.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseRow {
    pub frame: usize,
    pub lost: bool,
    pub energies: PerTerm<f64>,
    pub counts: PerTerm<usize>,
    pub collision_pairs: usize,
    pub pose: Vec<f64>,
}

impl PoseRow {
    pub fn from_result(frame: usize, r: &FrameResult) -> Self {
        Self {
            frame,
            lost: r.lost,
            energies: r.energies,
            counts: r.counts,
            collision_pairs: r.collision_pairs,
            pose: r.pose.0.clone(),
        }
    }
}

const POSE_FIXED: usize = 11;

pub fn poses_to_text(rows: &[PoseRow]) -> String {
    let dof = rows.first().map_or(0, |r| r.pose.len());
    let mut s = String::from(
        "# frame lost e_m2d e_d2m e_salient e_collision n_m2d n_d2m n_salient n_collision collision_pairs",
    );
    for k in 0..dof {
        write!(s, " theta_{k}").unwrap();
    }
    s.push('\n');
    for r in rows {
        let e = &r.energies;
        let c = &r.counts;
        write!(
            s,
            "{} {} {} {} {} {} {} {} {} {} {}",
            r.frame,
            r.lost as u8,
            e.m2d,
            e.d2m,
            e.salient,
            e.collision,
            c.m2d,
            c.d2m,
            c.salient,
            c.collision,
            r.collision_pairs
        )
        .unwrap();
        for v in &r.pose {
            write!(s, " {v}").unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn poses_from_text(text: &str, context: &str) -> Result<Vec<PoseRow>> {
    data_lines(text)
        .map(|(n, l)| {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() < POSE_FIXED {
                return Err(Error::parse(context, format!("line {n}: expected at least {POSE_FIXED} fields")));
            }
            let f = |i: usize| parse_num::<f64>(t[i], context, n, "energy");
            let c = |i: usize| parse_num::<usize>(t[i], context, n, "count");
            Ok(PoseRow {
                frame: parse_num(t[0], context, n, "frame")?,
                lost: match t[1] {
                    "0" => false,
                    "1" => true,
                    _ => return Err(Error::parse(context, format!("line {n}: lost flag must be 0 or 1"))),
                },
                energies: PerTerm { m2d: f(2)?, d2m: f(3)?, salient: f(4)?, collision: f(5)? },
                counts: PerTerm { m2d: c(6)?, d2m: c(7)?, salient: c(8)?, collision: c(9)? },
                collision_pairs: c(10)?,
                pose: t[POSE_FIXED..]
                    .iter()
                    .map(|v| parse_num(v, context, n, "pose value"))
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}

pub fn load_poses(path: &Path) -> Result<Vec<PoseRow>> {
    poses_from_text(&read_text(path)?, &path.display().to_string())
}

/// Ground truth: `frame theta_0 ... theta_{n-1}` per line.
pub fn truth_to_text(poses: &[Vec<f64>]) -> String {
    let mut s = String::from("# frame theta...\n");
    for (f, p) in poses.iter().enumerate() {
        write!(s, "{f}").unwrap();
        for v in p {
            write!(s, " {v}").unwrap();
        }
        s.push('\n');
    }
    s
}

/// Rows must list frames 0, 1, 2, ... in order.
pub fn truth_from_text(text: &str, context: &str) -> Result<Vec<Vec<f64>>> {
    data_lines(text)
        .enumerate()
        .map(|(k, (n, l))| {
            let mut t = l.split_whitespace();
            let f: usize = parse_num(t.next().unwrap(), context, n, "frame")?;
            if f != k {
                return Err(Error::parse(context, format!("line {n}: expected frame {k}, found {f}")));
            }
            t.map(|v| parse_num(v, context, n, "pose value")).collect()
        })
        .collect()
}

pub fn load_truth(path: &Path) -> Result<Vec<Vec<f64>>> {
    truth_from_text(&read_text(path)?, &path.display().to_string())
}
