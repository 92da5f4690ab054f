//! Point cloud files: `D×3` f64 tensors, ASCII XYZ and binary little-endian
//! PLY.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

use super::tensor::{DType, Tensor, TensorData};

pub fn cloud_to_tensor(cloud: &PointCloud) -> Tensor {
    let values = cloud
        .points()
        .iter()
        .flat_map(|p| [p.x, p.y, p.z])
        .collect();
    Tensor::new(vec![cloud.len(), 3], TensorData::F64(values)).expect("D×3 layout")
}

pub fn cloud_from_tensor(t: &Tensor, frame: &str) -> Result<PointCloud> {
    t.expect("point cloud", 2, DType::F64)?;
    if t.dims()[1] != 3 {
        return Err(Error::invalid(format!(
            "point cloud must be D×3, got {:?}",
            t.dims()
        )));
    }
    let TensorData::F64(v) = t.data() else {
        unreachable!()
    };
    PointCloud::new(
        v.chunks_exact(3)
            .map(|c| Point3::new(c[0], c[1], c[2]))
            .collect(),
        frame,
    )
}

/// Whitespace-separated `x y z` per line; extra columns are ignored and
/// `#` starts a comment.
pub fn parse_xyz(text: &str) -> Result<Vec<Point3>> {
    let mut points = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split_whitespace().map(str::parse::<f64>);
        let mut next = || -> Result<f64> {
            cols.next()
                .ok_or_else(|| Error::invalid(format!("line {}: expected 3 coordinates", n + 1)))?
                .map_err(|e| Error::invalid(format!("line {}: {e}", n + 1)))
        };
        points.push(Point3::new(next()?, next()?, next()?));
    }
    Ok(points)
}

fn ply_type_size(ty: &str) -> Option<usize> {
    Some(match ty {
        "char" | "uchar" | "int8" | "uint8" => 1,
        "short" | "ushort" | "int16" | "uint16" => 2,
        "int" | "uint" | "float" | "int32" | "uint32" | "float32" => 4,
        "double" | "float64" => 8,
        _ => return None,
    })
}

/// Reads the `x`, `y`, `z` float32 properties of the `vertex` element of a
/// `binary_little_endian` PLY file. Other vertex properties are skipped;
/// elements after `vertex` are ignored.
pub fn parse_ply(bytes: &[u8]) -> Result<Vec<Point3>> {
    let header_end = bytes
        .windows(11)
        .position(|w| w == b"end_header\n")
        .ok_or_else(|| Error::invalid("PLY header has no end_header line"))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| Error::invalid("PLY header is not UTF-8"))?;
    let body = &bytes[header_end + 11..];

    let mut lines = header.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(Error::invalid("missing `ply` magic line"));
    }
    let mut format_ok = false;
    let mut element: Option<String> = None;
    let mut vertex_count = None;
    let mut offset_before_vertex = 0usize; // bytes of elements preceding `vertex`
    let mut stride = 0usize;
    let mut xyz = [None; 3];
    let mut pending: Option<(usize, usize)> = None; // (count, stride) of the current non-vertex element
    for line in lines {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["format", "binary_little_endian", _] => format_ok = true,
            ["format", other, ..] => {
                return Err(Error::invalid(format!("unsupported PLY format `{other}`")));
            }
            ["element", name, count] => {
                if let Some((c, s)) = pending.take() {
                    if vertex_count.is_none() {
                        offset_before_vertex += c * s;
                    }
                }
                let count: usize = count
                    .parse()
                    .map_err(|_| Error::invalid("bad PLY element count"))?;
                if *name == "vertex" {
                    vertex_count = Some(count);
                } else {
                    pending = Some((count, 0));
                }
                element = Some(name.to_string());
            }
            ["property", "list", ..] => {
                if element.as_deref() == Some("vertex") || vertex_count.is_none() {
                    return Err(Error::invalid(
                        "list properties before or in `vertex` are not supported",
                    ));
                }
            }
            ["property", ty, name] => {
                let size = ply_type_size(ty)
                    .ok_or_else(|| Error::invalid(format!("unknown PLY type `{ty}`")))?;
                if element.as_deref() == Some("vertex") {
                    let axis = match *name {
                        "x" => Some(0),
                        "y" => Some(1),
                        "z" => Some(2),
                        _ => None,
                    };
                    if let Some(a) = axis {
                        if !matches!(*ty, "float" | "float32") {
                            return Err(Error::invalid(format!(
                                "vertex `{name}` must be float32, got `{ty}`"
                            )));
                        }
                        xyz[a] = Some(stride);
                    }
                    stride += size;
                } else if let Some((_, s)) = pending.as_mut() {
                    *s += size;
                }
            }
            _ => {}
        }
    }
    if !format_ok {
        return Err(Error::invalid("PLY file must be binary_little_endian"));
    }
    let count = vertex_count.ok_or_else(|| Error::invalid("PLY file has no vertex element"))?;
    let [Some(ox), Some(oy), Some(oz)] = xyz else {
        return Err(Error::invalid("PLY vertex element lacks x, y or z"));
    };
    let needed = offset_before_vertex + count * stride;
    if body.len() < needed {
        return Err(Error::invalid(format!(
            "PLY body has {} bytes, vertex data needs {needed}",
            body.len()
        )));
    }
    let read = |at: usize| f32::from_le_bytes(body[at..at + 4].try_into().unwrap()) as f64;
    Ok((0..count)
        .map(|i| {
            let base = offset_before_vertex + i * stride;
            Point3::new(read(base + ox), read(base + oy), read(base + oz))
        })
        .collect())
}

/// Binary little-endian PLY with float32 `x y z` vertices.
pub fn encode_ply(points: &[Point3]) -> Vec<u8> {
    let mut out = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        points.len()
    )
    .into_bytes();
    for p in points {
        for v in [p.x, p.y, p.z] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

/// Loads a cloud by extension: `.xyz`/`.txt` ASCII, `.ply`, otherwise a tensor.
pub fn read_cloud(path: &Path, frame: &str) -> Result<PointCloud> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let wrap = |e: Error| Error::malformed(path, "points", e.to_string());
    match ext.as_str() {
        "xyz" | "txt" => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            PointCloud::new(parse_xyz(&text).map_err(wrap)?, frame).map_err(wrap)
        }
        "ply" => {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            PointCloud::new(parse_ply(&bytes).map_err(wrap)?, frame).map_err(wrap)
        }
        _ => cloud_from_tensor(&Tensor::read(path)?, frame).map_err(wrap),
    }
}
