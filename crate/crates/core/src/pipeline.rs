//! The full per-sample flow: LiDAR → per-camera depth → lifted features →
//! BEV grid. The CLI is a thin wrapper over these functions.

use image::RgbImage;
use rayon::prelude::*;

use crate::bev::{build_bev, standin_encoder, BevGrid, CameraView, FeatureMap};
use crate::depth::{minpool, rasterize_depth, DepthImage, LowResDepth};
use crate::error::{Error, Result};
use crate::geometry::{compose, project_points, transform_points, PointCloud};
use crate::grid::GridConfig;
use crate::io::{Calibration, CameraCalibration};

/// LiDAR-frame points expressed in the camera frame via `E_k · E_P⁻¹`.
pub fn lidar_to_camera(
    cloud: &PointCloud,
    lidar: &crate::geometry::RigidTransform,
    camera: &CameraCalibration,
) -> Result<PointCloud> {
    let chain = compose(&camera.extrinsics, &lidar.inverse())?;
    transform_points(cloud, &chain)
}

/// Full-resolution z-buffered depth and its min-pooled form for one camera.
pub fn camera_depth(
    cloud: &PointCloud,
    calib: &Calibration,
    camera: &CameraCalibration,
    d_f: usize,
) -> Result<(DepthImage, LowResDepth)> {
    let in_cam = lidar_to_camera(cloud, &calib.lidar, camera)?;
    let projections = project_points(&in_cam, &camera.intrinsics);
    let full = rasterize_depth(
        &projections,
        camera.intrinsics.width,
        camera.intrinsics.height,
    );
    let low =
        minpool(&full, d_f).map_err(|e| Error::invalid(format!("camera {}: {e}", camera.name)))?;
    Ok((full, low))
}

/// Depth for every camera of the rig, in calibration order.
pub fn rig_depth(
    cloud: &PointCloud,
    calib: &Calibration,
    d_f: usize,
) -> Result<Vec<(DepthImage, LowResDepth)>> {
    calib
        .cameras
        .par_iter()
        .map(|cam| camera_depth(cloud, calib, cam, d_f))
        .collect()
}

/// Feature input for one camera.
#[derive(Debug, Clone)]
pub enum CameraInput {
    Features(FeatureMap),
    Image(RgbImage),
}

impl CameraInput {
    pub fn into_features(self, camera: &str, d_f: usize) -> Result<FeatureMap> {
        match self {
            CameraInput::Features(fm) => Ok(fm),
            CameraInput::Image(img) => standin_encoder(&img, d_f)
                .map_err(|e| Error::invalid(format!("camera {camera}: {e}"))),
        }
    }
}

/// Runs depth and BEV construction for a whole rig. `inputs` are in
/// calibration camera order.
pub fn rig_bev(
    cloud: &PointCloud,
    calib: &Calibration,
    inputs: Vec<CameraInput>,
    d_f: usize,
    config: &GridConfig,
) -> Result<BevGrid> {
    if inputs.len() != calib.cameras.len() {
        return Err(Error::invalid(format!(
            "{} camera inputs for {} calibrated cameras",
            inputs.len(),
            calib.cameras.len()
        )));
    }
    for cam in &calib.cameras {
        let (w, h) = (cam.intrinsics.width, cam.intrinsics.height);
        if d_f == 0 || w % d_f != 0 || h % d_f != 0 {
            return Err(Error::invalid(format!(
                "camera {}: image {w}×{h} is not divisible by d_f = {d_f}",
                cam.name
            )));
        }
    }
    let features = inputs
        .into_iter()
        .zip(&calib.cameras)
        .map(|(input, cam)| input.into_features(&cam.name, d_f))
        .collect::<Result<Vec<_>>>()?;
    for (fm, cam) in features.iter().zip(&calib.cameras) {
        let expected = (cam.intrinsics.width / d_f, cam.intrinsics.height / d_f);
        if (fm.width(), fm.height(), fm.d_f()) != (expected.0, expected.1, d_f) {
            return Err(Error::invalid(format!(
                "camera {}: features are {}×{} at d_f = {}, expected {}×{} at d_f = {d_f}",
                cam.name,
                fm.width(),
                fm.height(),
                fm.d_f(),
                expected.0,
                expected.1
            )));
        }
    }
    let depths = rig_depth(cloud, calib, d_f)?;
    let views: Vec<CameraView<'_>> = calib
        .cameras
        .iter()
        .zip(&features)
        .zip(&depths)
        .map(|((cam, fm), (_, low))| CameraView {
            name: &cam.name,
            features: fm,
            depth: low,
            intrinsics: &cam.intrinsics,
            extrinsics: &cam.extrinsics,
        })
        .collect();
    build_bev(&views, config)
}
