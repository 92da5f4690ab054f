//! File formats: the shared tensor container, JSON sidecars, calibration,
//! scenes, run manifests and PNG renders.

pub mod calib;
pub mod cloud;
pub mod manifest;
pub mod render;
pub mod tensor;

use std::io::Write;
use std::path::{Path, PathBuf};

use image::RgbImage;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bev::{BevGrid, FeatureMap};
use crate::depth::{DepthImage, LowResDepth};
use crate::error::{Error, Result};
use crate::grid::GridConfig;
use crate::groundtruth::SemanticGrid;

pub use calib::{Calibration, CameraCalibration};
pub use cloud::read_cloud;
pub use manifest::RunManifest;
pub use tensor::{DType, Tensor, TensorData};

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so a partial file never appears under the final name.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::malformed(path, "json", e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// JSON written next to a grid tensor, describing its layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_f: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_f: Option<usize>,
}

/// `grid.lapt` → `grid.json`.
pub fn sidecar_path(tensor_path: &Path) -> PathBuf {
    tensor_path.with_extension("json")
}

pub fn depth_to_tensor(d: &DepthImage) -> Tensor {
    Tensor::new(
        vec![d.height(), d.width()],
        TensorData::F64(d.values().to_vec()),
    )
    .expect("H×W layout")
}

pub fn depth_from_tensor(t: &Tensor) -> Result<DepthImage> {
    t.expect("depth image", 2, DType::F64)?;
    let TensorData::F64(v) = t.data() else {
        unreachable!()
    };
    DepthImage::from_values(t.dims()[1], t.dims()[0], v.clone())
}

pub fn low_res_from_tensor(t: &Tensor, d_f: usize) -> Result<LowResDepth> {
    LowResDepth::new(depth_from_tensor(t)?, d_f)
}

pub fn features_to_tensor(fm: &FeatureMap) -> Tensor {
    Tensor::new(
        vec![fm.n_f(), fm.height(), fm.width()],
        TensorData::F32(fm.values().to_vec()),
    )
    .expect("C×H×W layout")
}

pub fn features_from_tensor(t: &Tensor, d_f: usize) -> Result<FeatureMap> {
    t.expect("feature map", 3, DType::F32)?;
    let TensorData::F32(v) = t.data() else {
        unreachable!()
    };
    let d = t.dims();
    FeatureMap::new(d[0], d[2], d[1], d_f, v.clone())
}

pub fn bev_to_tensor(b: &BevGrid) -> Tensor {
    let c = b.config();
    Tensor::new(
        vec![b.n_f(), c.x_cells(), c.y_cells()],
        TensorData::F32(b.values().to_vec()),
    )
    .expect("C×X×Y layout")
}

pub fn bev_from_tensor(t: &Tensor, config: GridConfig) -> Result<BevGrid> {
    t.expect("BEV grid", 3, DType::F32)?;
    let TensorData::F32(v) = t.data() else {
        unreachable!()
    };
    if t.dims()[1..] != [config.x_cells(), config.y_cells()] {
        return Err(Error::invalid(format!(
            "BEV tensor is {:?} but the grid config gives {}×{}",
            t.dims(),
            config.x_cells(),
            config.y_cells()
        )));
    }
    BevGrid::from_values(t.dims()[0], config, v.clone())
}

/// Binary grids are written as `u8`, probability grids as `f32`.
pub fn semantic_to_tensor(s: &SemanticGrid) -> Tensor {
    let c = s.config();
    let dims = vec![s.classes().len(), c.x_cells(), c.y_cells()];
    let data = if s.is_binary() {
        TensorData::U8(s.values().iter().map(|&v| v as u8).collect())
    } else {
        TensorData::F32(s.values().to_vec())
    };
    Tensor::new(dims, data).expect("C×X×Y layout")
}

/// Accepts `C×X×Y` or single-class `X×Y` tensors of `u8` (0/1) or `f32`.
pub fn semantic_from_tensor(
    t: &Tensor,
    classes: Vec<String>,
    config: GridConfig,
) -> Result<SemanticGrid> {
    let dims = t.dims();
    let (c, x, y) = match dims {
        [c, x, y] => (*c, *x, *y),
        [x, y] => (1, *x, *y),
        _ => {
            return Err(Error::invalid(format!(
                "semantic grid must be C×X×Y or X×Y, got {dims:?}"
            )))
        }
    };
    if (x, y) != (config.x_cells(), config.y_cells()) || c != classes.len() {
        return Err(Error::invalid(format!(
            "semantic tensor {dims:?} does not match {} classes on a {}×{} grid",
            classes.len(),
            config.x_cells(),
            config.y_cells()
        )));
    }
    let values = match t.data() {
        TensorData::U8(v) => {
            if let Some(bad) = v.iter().find(|&&b| b > 1) {
                return Err(Error::invalid(format!("binary grid contains value {bad}")));
            }
            v.iter().map(|&b| b as f32).collect()
        }
        TensorData::F32(v) => v.clone(),
        TensorData::F64(_) => return Err(Error::invalid("semantic grids must be u8 or f32")),
    };
    SemanticGrid::new(classes, config, values)
}

/// `H×W×3` u8.
pub fn image_to_tensor(img: &RgbImage) -> Tensor {
    Tensor::new(
        vec![img.height() as usize, img.width() as usize, 3],
        TensorData::U8(img.as_raw().clone()),
    )
    .expect("H×W×3 layout")
}

pub fn image_from_tensor(t: &Tensor) -> Result<RgbImage> {
    t.expect("image", 3, DType::U8)?;
    if t.dims()[2] != 3 {
        return Err(Error::invalid(format!(
            "image tensor must be H×W×3, got {:?}",
            t.dims()
        )));
    }
    let TensorData::U8(v) = t.data() else {
        unreachable!()
    };
    RgbImage::from_raw(t.dims()[1] as u32, t.dims()[0] as u32, v.clone())
        .ok_or_else(|| Error::invalid("image buffer size mismatch"))
}

/// Loads an RGB image from PNG/JPEG or an `H×W×3` tensor.
pub fn read_image(path: &Path) -> Result<RgbImage> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    if ext == "png" {
        let img = image::open(path).map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::malformed(path, "image", other.to_string()),
        })?;
        return Ok(img.to_rgb8());
    }
    image_from_tensor(&Tensor::read(path)?)
        .map_err(|e| Error::malformed(path, "image", e.to_string()))
}
