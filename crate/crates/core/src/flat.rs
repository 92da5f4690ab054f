//! The core operations on plain slices and shapes, for callers that hold
//! their data in foreign arrays. Errors carry the same messages as the typed
//! API and the CLI.

use crate::bev::{self, CameraView, FeatureMap};
use crate::depth::{self, DepthImage};
use crate::error::{Error, Result};
use crate::eval;
use crate::geometry::{
    project_points, CameraIntrinsics, PointCloud, RigidTransform, VEHICLE_FRAME,
};
use crate::grid::{BinaryGrid, GridConfig};
use crate::groundtruth::{rasterize_semantic, Annotations, ClassGrouping};

fn points_from_flat(points: &[f64], frame: &str) -> Result<PointCloud> {
    if !points.len().is_multiple_of(3) {
        return Err(Error::invalid(format!(
            "point buffer length {} is not a multiple of 3",
            points.len()
        )));
    }
    PointCloud::new(
        points
            .chunks_exact(3)
            .map(|p| crate::Point3::new(p[0], p[1], p[2]))
            .collect(),
        frame,
    )
}

/// Nearest-depth image (`height × width`, row-major) of camera-frame points
/// given as a flat `N × 3` buffer. Pixels without a return hold `+∞`.
pub fn depth_raster(
    points: &[f64],
    intrinsics: &[f64],
    width: usize,
    height: usize,
) -> Result<Vec<f64>> {
    let intr = CameraIntrinsics::from_row_major(intrinsics, width, height)?;
    let cloud = points_from_flat(points, "camera")?;
    Ok(
        depth::rasterize_depth(&project_points(&cloud, &intr), width, height)
            .values()
            .to_vec(),
    )
}

/// Min-pools a `height × width` depth buffer by `d_f`, giving
/// `(height / d_f) × (width / d_f)`.
pub fn minpool(depth: &[f64], width: usize, height: usize, d_f: usize) -> Result<Vec<f64>> {
    let d = DepthImage::from_values(width, height, depth.to_vec())?;
    Ok(depth::minpool(&d, d_f)?.values().to_vec())
}

/// One camera for [`build_bev`]: features are `n_f × (height/d_f) × (width/d_f)`,
/// depth is the pooled `(height/d_f) × (width/d_f)` buffer, intrinsics are the
/// full-resolution 3×3 and extrinsics the 4×4 vehicle → camera matrix, both
/// row-major.
#[derive(Debug, Clone, Copy)]
pub struct FlatCamera<'a> {
    pub name: &'a str,
    pub features: &'a [f32],
    pub n_f: usize,
    pub depth: &'a [f64],
    pub intrinsics: &'a [f64],
    pub extrinsics: &'a [f64],
    pub width: usize,
    pub height: usize,
}

/// BEV grid as a flat `n_f × X × Y` buffer.
pub fn build_bev(cameras: &[FlatCamera<'_>], d_f: usize, config: &GridConfig) -> Result<Vec<f32>> {
    let mut parts = Vec::with_capacity(cameras.len());
    for cam in cameras {
        let ctx = |e: Error| Error::invalid(format!("camera {}: {e}", cam.name));
        if d_f == 0 || !cam.width.is_multiple_of(d_f) || !cam.height.is_multiple_of(d_f) {
            return Err(Error::invalid(format!(
                "camera {}: image {}×{} is not divisible by d_f = {d_f}",
                cam.name, cam.width, cam.height
            )));
        }
        let (lw, lh) = (cam.width / d_f, cam.height / d_f);
        let intr =
            CameraIntrinsics::from_row_major(cam.intrinsics, cam.width, cam.height).map_err(ctx)?;
        let ext =
            RigidTransform::from_row_major(cam.extrinsics, VEHICLE_FRAME, cam.name).map_err(ctx)?;
        let fm = FeatureMap::new(cam.n_f, lw, lh, d_f, cam.features.to_vec()).map_err(ctx)?;
        let low = depth::LowResDepth::new(
            DepthImage::from_values(lw, lh, cam.depth.to_vec()).map_err(ctx)?,
            d_f,
        )
        .map_err(ctx)?;
        parts.push((intr, ext, fm, low));
    }
    let views: Vec<CameraView<'_>> = cameras
        .iter()
        .zip(&parts)
        .map(|(cam, (intr, ext, fm, low))| CameraView {
            name: cam.name,
            features: fm,
            depth: low,
            intrinsics: intr,
            extrinsics: ext,
        })
        .collect();
    Ok(bev::build_bev(&views, config)?.values().to_vec())
}

/// Ground-truth grids from annotation JSON. Returns the class names and a
/// `classes × X × Y` buffer of 0/1.
pub fn rasterize_gt(
    annotations_json: &str,
    classes_json: Option<&str>,
    config: &GridConfig,
) -> Result<(Vec<String>, Vec<u8>)> {
    let ann: Annotations = serde_json::from_str(annotations_json)
        .map_err(|e| Error::invalid(format!("annotations: {e}")))?;
    let grouping = match classes_json {
        Some(text) => ClassGrouping::from_json(text)?,
        None => ClassGrouping::identity(&ann.labels())?,
    };
    let sem = rasterize_semantic(&ann, &grouping, config)?;
    Ok((
        sem.classes().to_vec(),
        sem.values().iter().map(|&v| v as u8).collect(),
    ))
}

fn binary(values: &[u8], what: &str) -> Result<BinaryGrid> {
    if let Some(bad) = values.iter().find(|&&b| b > 1) {
        return Err(Error::invalid(format!(
            "{what} contains value {bad}, expected 0 or 1"
        )));
    }
    BinaryGrid::from_cells(values.len(), 1, values.iter().map(|&b| b == 1).collect())
}

/// IoU of two same-length 0/1 buffers; `None` when both are empty.
pub fn iou(pred: &[u8], gt: &[u8]) -> Result<Option<f64>> {
    if pred.len() != gt.len() {
        return Err(Error::invalid(format!(
            "prediction has {} cells, ground truth {}",
            pred.len(),
            gt.len()
        )));
    }
    eval::iou(&binary(pred, "prediction")?, &binary(gt, "ground truth")?)
}

/// Mean weighted cross-entropy of logits against a 0/1 buffer.
pub fn bce_loss(logits: &[f64], gt: &[u8], pos_weight: Option<f64>) -> Result<f64> {
    eval::bce_loss(
        logits,
        &binary(gt, "ground truth")?,
        pos_weight.unwrap_or(eval::DEFAULT_POS_WEIGHT),
    )
}
