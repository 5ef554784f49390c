//! Binary depth and mask grids with a short text header.
//!
//! Layout: ASCII header lines `key value`, the first being `HTGRID 1`, ended by
//! a line `data`; then `width × height` little-endian samples in row-major
//! order (`format u16` for depth in stored units, `format u8` for masks).
//! Depth headers may carry camera intrinsics (`fx fy cx cy depth_scale`).

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::skinned_model::Camera;
use crate::{Error, Grid, Result};

const MAGIC: &str = "HTGRID 1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleFormat {
    U8,
    U16,
}

impl SampleFormat {
    fn name(self) -> &'static str {
        match self {
            SampleFormat::U8 => "u8",
            SampleFormat::U16 => "u16",
        }
    }
}

fn write_header(
    out: &mut impl Write,
    width: usize,
    height: usize,
    format: SampleFormat,
    camera: Option<&Camera>,
) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "width {width}")?;
    writeln!(out, "height {height}")?;
    writeln!(out, "format {}", format.name())?;
    if let Some(c) = camera {
        writeln!(out, "fx {}", c.fx)?;
        writeln!(out, "fy {}", c.fy)?;
        writeln!(out, "cx {}", c.cx)?;
        writeln!(out, "cy {}", c.cy)?;
        writeln!(out, "depth_scale {}", c.depth_scale)?;
    }
    writeln!(out, "data")
}

pub fn encode_u16(grid: &Grid<u16>, camera: Option<&Camera>) -> Vec<u8> {
    let mut out = Vec::with_capacity(grid.data.len() * 2 + 128);
    write_header(&mut out, grid.width, grid.height, SampleFormat::U16, camera).unwrap();
    for v in &grid.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_u8(grid: &Grid<u8>) -> Vec<u8> {
    let mut out = Vec::with_capacity(grid.data.len() + 64);
    write_header(&mut out, grid.width, grid.height, SampleFormat::U8, None).unwrap();
    out.extend_from_slice(&grid.data);
    out
}

/// Decoded grid; samples widened to `u16`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodedGrid {
    pub format: SampleFormat,
    pub grid: Grid<u16>,
    pub camera: Option<Camera>,
}

pub fn decode(bytes: &[u8], context: &str) -> Result<DecodedGrid> {
    let err = |m: String| Error::parse(context, m);
    let mut reader = BufReader::new(bytes);
    let mut line = String::new();
    let mut width = None;
    let mut height = None;
    let mut format = None;
    let mut intr = [None::<f64>; 5];
    let mut first = true;
    loop {
        line.clear();
        if reader.read_line(&mut line).map_err(|e| err(e.to_string()))? == 0 {
            return Err(err("header ended before `data`".into()));
        }
        let l = line.trim_end();
        if first {
            if l != MAGIC {
                return Err(err(format!("bad magic {l:?}")));
            }
            first = false;
            continue;
        }
        if l == "data" {
            break;
        }
        let (k, v) = l.split_once(' ').ok_or_else(|| err(format!("bad header line {l:?}")))?;
        let num = || v.trim().parse::<f64>().map_err(|_| err(format!("bad value for {k}")));
        match k {
            "width" => width = Some(v.trim().parse::<usize>().map_err(|_| err("bad width".into()))?),
            "height" => height = Some(v.trim().parse::<usize>().map_err(|_| err("bad height".into()))?),
            "format" => {
                format = Some(match v.trim() {
                    "u8" => SampleFormat::U8,
                    "u16" => SampleFormat::U16,
                    f => return Err(err(format!("unknown format {f:?}"))),
                })
            }
            "fx" => intr[0] = Some(num()?),
            "fy" => intr[1] = Some(num()?),
            "cx" => intr[2] = Some(num()?),
            "cy" => intr[3] = Some(num()?),
            "depth_scale" => intr[4] = Some(num()?),
            _ => return Err(err(format!("unknown header key {k:?}"))),
        }
    }
    let (width, height, format) = match (width, height, format) {
        (Some(w), Some(h), Some(f)) => (w, h, f),
        _ => return Err(err("header needs width, height and format".into())),
    };
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload).map_err(|e| err(e.to_string()))?;
    let n = width * height;
    let data: Vec<u16> = match format {
        SampleFormat::U8 if payload.len() == n => payload.iter().map(|&b| b as u16).collect(),
        SampleFormat::U16 if payload.len() == 2 * n => payload
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect(),
        _ => {
            return Err(err(format!(
                "payload has {} bytes, expected {} samples of {}",
                payload.len(),
                n,
                format.name()
            )))
        }
    };
    let camera = match intr {
        [Some(fx), Some(fy), Some(cx), Some(cy), scale] => Some(Camera {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            depth_scale: scale.unwrap_or(1.0),
        }),
        [None, None, None, None, _] => None,
        _ => return Err(err("incomplete intrinsics".into())),
    };
    Ok(DecodedGrid {
        format,
        grid: Grid::from_vec(width, height, data),
        camera,
    })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<DecodedGrid> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, &path.display().to_string())
}

/// Depth in millimetres from stored units; 0 stays invalid.
pub fn depth_to_mm(grid: &Grid<u16>, depth_scale: f64) -> Grid<f64> {
    grid.map(|&d| d as f64 * depth_scale)
}

/// Rounds millimetres to stored units, saturating at `u16::MAX`.
pub fn depth_from_mm(grid: &Grid<f64>, depth_scale: f64) -> Grid<u16> {
    grid.map(|&d| {
        if d > 0.0 {
            (d / depth_scale).round().clamp(0.0, u16::MAX as f64) as u16
        } else {
            0
        }
    })
}
