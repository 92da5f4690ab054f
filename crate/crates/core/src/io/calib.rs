//! Calibration and scene description JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, RigidTransform, LIDAR_FRAME, VEHICLE_FRAME};
use crate::groundtruth::Box3D;
use crate::simulate::{LidarSpec, Scene, SimCamera};

use super::read_json;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawCamera {
    name: String,
    intrinsics: Vec<f64>,
    extrinsics: Vec<f64>,
    width: usize,
    height: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawLidar {
    extrinsics: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawCalibration {
    cameras: Vec<RawCamera>,
    lidar: RawLidar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraCalibration {
    pub name: String,
    pub intrinsics: CameraIntrinsics,
    /// Vehicle → camera.
    pub extrinsics: RigidTransform,
}

/// Sensor rig: every camera plus the LiDAR, all referenced to the vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub cameras: Vec<CameraCalibration>,
    /// Vehicle → LiDAR.
    pub lidar: RigidTransform,
}

fn row_major(t: &RigidTransform) -> Vec<f64> {
    t.to_homogeneous().transpose().as_slice().to_vec()
}

fn intrinsics_row_major(i: &CameraIntrinsics) -> Vec<f64> {
    i.matrix().transpose().as_slice().to_vec()
}

impl Calibration {
    pub fn camera(&self, name: &str) -> Option<&CameraCalibration> {
        self.cameras.iter().find(|c| c.name == name)
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let raw: RawCalibration = serde_json::from_str(text)
            .map_err(|e| Error::malformed(path, "calibration", e.to_string()))?;
        let field = |f: String| move |e: Error| Error::malformed(path, f, e.to_string());
        let mut cameras = Vec::with_capacity(raw.cameras.len());
        for (k, c) in raw.cameras.into_iter().enumerate() {
            if c.name.is_empty() || c.name == VEHICLE_FRAME || c.name == LIDAR_FRAME {
                return Err(Error::malformed(
                    path,
                    format!("cameras[{k}].name"),
                    "reserved or empty name",
                ));
            }
            if cameras.iter().any(|x: &CameraCalibration| x.name == c.name) {
                return Err(Error::malformed(
                    path,
                    format!("cameras[{k}].name"),
                    format!("duplicate camera `{}`", c.name),
                ));
            }
            let intrinsics = CameraIntrinsics::from_row_major(&c.intrinsics, c.width, c.height)
                .map_err(field(format!("cameras[{k}].intrinsics")))?;
            let extrinsics =
                RigidTransform::from_row_major(&c.extrinsics, VEHICLE_FRAME, c.name.as_str())
                    .map_err(field(format!("cameras[{k}].extrinsics")))?;
            cameras.push(CameraCalibration {
                name: c.name,
                intrinsics,
                extrinsics,
            });
        }
        let lidar =
            RigidTransform::from_row_major(&raw.lidar.extrinsics, VEHICLE_FRAME, LIDAR_FRAME)
                .map_err(field("lidar.extrinsics".into()))?;
        Ok(Self { cameras, lidar })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> String {
        let raw = RawCalibration {
            cameras: self
                .cameras
                .iter()
                .map(|c| RawCamera {
                    name: c.name.clone(),
                    intrinsics: intrinsics_row_major(&c.intrinsics),
                    extrinsics: row_major(&c.extrinsics),
                    width: c.intrinsics.width,
                    height: c.intrinsics.height,
                })
                .collect(),
            lidar: RawLidar {
                extrinsics: row_major(&self.lidar),
            },
        };
        serde_json::to_string_pretty(&raw).expect("calibration serializes")
    }
}

impl From<&Scene> for Calibration {
    fn from(scene: &Scene) -> Self {
        Self {
            cameras: scene
                .cameras
                .iter()
                .map(|c| CameraCalibration {
                    name: c.name.clone(),
                    intrinsics: c.intrinsics,
                    extrinsics: c.pose.clone(),
                })
                .collect(),
            lidar: scene.lidar_pose.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawLidarSpec {
    n_azimuth: usize,
    /// Radians.
    elevations: Vec<f64>,
    max_range: f64,
    #[serde(default)]
    dropout: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSceneLidar {
    pose: Vec<f64>,
    spec: RawLidarSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSceneCamera {
    name: String,
    pose: Vec<f64>,
    intrinsics: Vec<f64>,
    width: usize,
    height: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawScene {
    ground_height: f64,
    #[serde(default)]
    boxes: Vec<Box3D>,
    lidar: RawSceneLidar,
    #[serde(default)]
    cameras: Vec<RawSceneCamera>,
}

pub fn scene_from_json(text: &str, path: &Path) -> Result<Scene> {
    let raw: RawScene =
        serde_json::from_str(text).map_err(|e| Error::malformed(path, "scene", e.to_string()))?;
    let field = |f: String| move |e: Error| Error::malformed(path, f, e.to_string());
    let boxes = raw
        .boxes
        .into_iter()
        .enumerate()
        .map(|(k, b)| {
            Box3D::new(b.center, b.size, b.yaw, b.class_label).map_err(field(format!("boxes[{k}]")))
        })
        .collect::<Result<Vec<_>>>()?;
    let lidar_pose = RigidTransform::from_row_major(&raw.lidar.pose, VEHICLE_FRAME, LIDAR_FRAME)
        .map_err(field("lidar.pose".into()))?;
    let mut lidar = LidarSpec::new(
        raw.lidar.spec.n_azimuth,
        raw.lidar.spec.elevations,
        raw.lidar.spec.max_range,
    )
    .map_err(field("lidar.spec".into()))?;
    lidar.dropout = raw.lidar.spec.dropout;
    lidar
        .validate()
        .map_err(field("lidar.spec.dropout".into()))?;
    let cameras = raw
        .cameras
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            Ok(SimCamera {
                intrinsics: CameraIntrinsics::from_row_major(&c.intrinsics, c.width, c.height)
                    .map_err(field(format!("cameras[{k}].intrinsics")))?,
                pose: RigidTransform::from_row_major(&c.pose, VEHICLE_FRAME, c.name.as_str())
                    .map_err(field(format!("cameras[{k}].pose")))?,
                name: c.name,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let scene = Scene {
        ground_height: raw.ground_height,
        boxes,
        lidar_pose,
        lidar,
        cameras,
    };
    scene.validate().map_err(field("scene".into()))?;
    Ok(scene)
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    scene_from_json(&text, path)
}

pub fn scene_to_json(scene: &Scene) -> String {
    let raw = RawScene {
        ground_height: scene.ground_height,
        boxes: scene.boxes.clone(),
        lidar: RawSceneLidar {
            pose: row_major(&scene.lidar_pose),
            spec: RawLidarSpec {
                n_azimuth: scene.lidar.n_azimuth,
                elevations: scene.lidar.elevations.clone(),
                max_range: scene.lidar.max_range,
                dropout: scene.lidar.dropout,
            },
        },
        cameras: scene
            .cameras
            .iter()
            .map(|c| RawSceneCamera {
                name: c.name.clone(),
                pose: row_major(&c.pose),
                intrinsics: intrinsics_row_major(&c.intrinsics),
                width: c.intrinsics.width,
                height: c.intrinsics.height,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("scene serializes")
}

/// Reads annotation JSON (`{boxes, polygons}`), validating every shape.
pub fn load_annotations(path: &Path) -> Result<crate::groundtruth::Annotations> {
    let ann: crate::groundtruth::Annotations = read_json(path)?;
    for (k, b) in ann.boxes.iter().enumerate() {
        b.validate()
            .map_err(|e| Error::malformed(path, format!("boxes[{k}]"), e.to_string()))?;
    }
    for (k, p) in ann.polygons.iter().enumerate() {
        p.validate()
            .map_err(|e| Error::malformed(path, format!("polygons[{k}]"), e.to_string()))?;
    }
    Ok(ann)
}
