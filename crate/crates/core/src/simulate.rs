//! Synthetic scenes with exactly known geometry: a ground plane plus
//! oriented boxes, a spinning LiDAR and pinhole cameras.
//!
//! Every sensor ray is intersected analytically (ray/plane and the slab
//! method in each box's local frame), so simulated clouds and depth images
//! are reproducible bit for bit.

use image::{Rgb, RgbImage};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::depth::{DepthImage, NO_RETURN};
use crate::error::{Error, Result};
use crate::geometry::{
    CameraIntrinsics, Point3, PointCloud, RigidTransform, LIDAR_FRAME, VEHICLE_FRAME,
};
use crate::groundtruth::Box3D;

/// Rays must travel at least this far (meters) before a hit counts.
const MIN_HIT: f64 = 1e-9;

/// Scan pattern of a spinning LiDAR.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarSpec {
    pub n_azimuth: usize,
    /// Beam elevations in radians, positive upwards.
    pub elevations: Vec<f64>,
    pub max_range: f64,
    /// Probability of independently dropping each return.
    pub dropout: f64,
}

impl LidarSpec {
    pub fn new(n_azimuth: usize, elevations: Vec<f64>, max_range: f64) -> Result<Self> {
        let spec = Self {
            n_azimuth,
            elevations,
            max_range,
            dropout: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `n` beams evenly spaced between `low` and `high` degrees.
    pub fn uniform(
        n_azimuth: usize,
        n_beams: usize,
        low_deg: f64,
        high_deg: f64,
        max_range: f64,
    ) -> Result<Self> {
        let elevations = (0..n_beams)
            .map(|k| {
                let f = if n_beams > 1 {
                    k as f64 / (n_beams - 1) as f64
                } else {
                    0.0
                };
                (low_deg + f * (high_deg - low_deg)).to_radians()
            })
            .collect();
        Self::new(n_azimuth, elevations, max_range)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_azimuth == 0 {
            return Err(Error::invalid("LiDAR needs at least one azimuth step"));
        }
        if !(self.max_range.is_finite() && self.max_range > 0.0) {
            return Err(Error::invalid(format!(
                "max_range must be positive, got {}",
                self.max_range
            )));
        }
        if self.elevations.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("elevations must be finite"));
        }
        if !(0.0..=1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!(
                "dropout must be in [0, 1], got {}",
                self.dropout
            )));
        }
        Ok(())
    }

    /// Unit ray directions in the sensor frame, elevation-major.
    pub fn directions(&self) -> Vec<Vector3<f64>> {
        let mut dirs = Vec::with_capacity(self.elevations.len() * self.n_azimuth);
        for &el in &self.elevations {
            let (se, ce) = el.sin_cos();
            for k in 0..self.n_azimuth {
                let az = 2.0 * std::f64::consts::PI * k as f64 / self.n_azimuth as f64;
                let (sa, ca) = az.sin_cos();
                dirs.push(Vector3::new(ce * ca, ce * sa, se));
            }
        }
        dirs
    }
}

/// A pinhole camera placed in the scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SimCamera {
    pub name: String,
    /// Vehicle → camera.
    pub pose: RigidTransform,
    pub intrinsics: CameraIntrinsics,
}

/// What a ray hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Ground,
    Box(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// Height of the ground plane `z = ground_height` in the vehicle frame.
    pub ground_height: f64,
    pub boxes: Vec<Box3D>,
    /// Vehicle → LiDAR.
    pub lidar_pose: RigidTransform,
    pub lidar: LidarSpec,
    pub cameras: Vec<SimCamera>,
}

/// Vehicle → camera pose for a camera at `position` looking along heading
/// `yaw` (radians, counter-clockwise from +x), tilted down by `pitch`.
pub fn camera_pose(name: &str, position: Point3, yaw: f64, pitch: f64) -> RigidTransform {
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let forward = Vector3::new(cy * cp, sy * cp, -sp);
    let right = Vector3::new(sy, -cy, 0.0);
    let down = forward.cross(&right);
    let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
    RigidTransform::new(rotation, -(rotation * position), VEHICLE_FRAME, name)
        .expect("camera basis is orthonormal")
}

fn ray_box(origin: &Point3, dir: &Vector3<f64>, b: &Box3D) -> Option<f64> {
    let (s, c) = b.yaw.sin_cos();
    let rel = origin - Vector3::from(b.center);
    let o = [c * rel.x + s * rel.y, -s * rel.x + c * rel.y, rel.z];
    let d = [c * dir.x + s * dir.y, -s * dir.x + c * dir.y, dir.z];
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for k in 0..3 {
        let half = b.size[k] / 2.0;
        if d[k] == 0.0 {
            if o[k].abs() > half {
                return None;
            }
            continue;
        }
        let t1 = (-half - o[k]) / d[k];
        let t2 = (half - o[k]) / d[k];
        t_near = t_near.max(t1.min(t2));
        t_far = t_far.min(t1.max(t2));
    }
    (t_near <= t_far && t_near > MIN_HIT).then_some(t_near)
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        if !self.ground_height.is_finite() {
            return Err(Error::invalid("ground height must be finite"));
        }
        for b in &self.boxes {
            b.validate()?;
        }
        self.lidar.validate()?;
        if self.lidar_pose.frame_from() != VEHICLE_FRAME {
            return Err(Error::invalid("LiDAR pose must map from the vehicle frame"));
        }
        for cam in &self.cameras {
            cam.intrinsics.validate()?;
            if cam.pose.frame_from() != VEHICLE_FRAME || cam.pose.frame_to() != cam.name {
                return Err(Error::invalid(format!(
                    "camera {}: pose must map `{VEHICLE_FRAME}` → `{}`",
                    cam.name, cam.name
                )));
            }
        }
        Ok(())
    }

    /// Nearest intersection of the ray `origin + t·dir` (vehicle frame) with
    /// the ground or a box, as `(t, surface)`.
    pub fn intersect(&self, origin: &Point3, dir: &Vector3<f64>) -> Option<(f64, Surface)> {
        let mut best: Option<(f64, Surface)> = None;
        if dir.z < 0.0 && origin.z > self.ground_height {
            let t = (self.ground_height - origin.z) / dir.z;
            if t > MIN_HIT {
                best = Some((t, Surface::Ground));
            }
        }
        for (i, b) in self.boxes.iter().enumerate() {
            if let Some(t) = ray_box(origin, dir, b) {
                if best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, Surface::Box(i)));
                }
            }
        }
        best
    }

    /// Distance from a vehicle-frame point to the nearest scene surface.
    pub fn distance_to_surface(&self, p: &Point3) -> f64 {
        let mut best = (p.z - self.ground_height).abs();
        for b in &self.boxes {
            let (s, c) = b.yaw.sin_cos();
            let rel = p - Vector3::from(b.center);
            let q = [c * rel.x + s * rel.y, -s * rel.x + c * rel.y, rel.z];
            let excess: Vec<f64> = (0..3).map(|k| q[k].abs() - b.size[k] / 2.0).collect();
            let outside = excess
                .iter()
                .map(|e| e.max(0.0).powi(2))
                .sum::<f64>()
                .sqrt();
            let inside = excess
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
                .min(0.0);
            best = best.min(outside + inside.abs());
        }
        best
    }

    pub fn camera(&self, name: &str) -> Option<&SimCamera> {
        self.cameras.iter().find(|c| c.name == name)
    }

    /// Boxes whose every corner is above the ground plane, for sanity checks.
    pub fn boxes_above_ground(&self) -> bool {
        self.boxes
            .iter()
            .all(|b| b.center[2] - b.size[2] / 2.0 >= self.ground_height)
    }
}

/// Casts every LiDAR ray (elevation-major, azimuth-minor) and returns the
/// hits in the LiDAR frame. `seed` drives dropout only.
pub fn raycast(scene: &Scene, seed: u64) -> Result<PointCloud> {
    scene.validate()?;
    let spec = &scene.lidar;
    let to_vehicle = scene.lidar_pose.inverse();
    let origin = *to_vehicle.translation();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    for d in spec.directions() {
        let keep = rng.random::<f64>() >= spec.dropout;
        let dir_v = to_vehicle.apply_vector(&d);
        if let Some((t, _)) = scene.intersect(&origin, &dir_v) {
            if t <= spec.max_range && keep {
                points.push(d * t);
            }
        }
    }
    PointCloud::new(points, LIDAR_FRAME)
}

fn pixel_ray(camera: &SimCamera, u: f64, v: f64) -> (Point3, Vector3<f64>) {
    let to_vehicle = camera.pose.inverse();
    let intr = &camera.intrinsics;
    let d_cam = Vector3::new((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
    (*to_vehicle.translation(), to_vehicle.apply_vector(&d_cam))
}

/// Camera-frame depth (`z`) of the nearest surface seen through continuous
/// image coordinate `(u, v)`.
pub fn ideal_depth_at(scene: &Scene, camera: &SimCamera, u: f64, v: f64) -> Option<f64> {
    let (origin, dir) = pixel_ray(camera, u, v);
    // the ray direction has unit z in the camera frame, so t is the depth
    scene.intersect(&origin, &dir).map(|(t, _)| t)
}

/// Dense depth image sampled at every pixel center.
pub fn render_ideal_depth(scene: &Scene, camera: &SimCamera) -> DepthImage {
    let intr = &camera.intrinsics;
    let values: Vec<f64> = (0..intr.height)
        .into_par_iter()
        .flat_map_iter(|row| {
            (0..intr.width).map(move |col| {
                ideal_depth_at(scene, camera, col as f64, row as f64).unwrap_or(NO_RETURN)
            })
        })
        .collect();
    DepthImage::from_values(intr.width, intr.height, values).expect("ray depths are positive")
}

const SKY: Rgb<u8> = Rgb([150, 190, 235]);

/// A flat-shaded RGB rendering: checkered ground, one color per box.
pub fn render_image(scene: &Scene, camera: &SimCamera) -> RgbImage {
    let intr = &camera.intrinsics;
    let rows: Vec<Vec<Rgb<u8>>> = (0..intr.height)
        .into_par_iter()
        .map(|row| {
            (0..intr.width)
                .map(|col| {
                    let (origin, dir) = pixel_ray(camera, col as f64, row as f64);
                    match scene.intersect(&origin, &dir) {
                        None => SKY,
                        Some((t, Surface::Ground)) => {
                            let hit = origin + dir * t;
                            let parity =
                                (hit.x.floor() as i64 + hit.y.floor() as i64).rem_euclid(2);
                            if parity == 0 {
                                Rgb([90, 90, 90])
                            } else {
                                Rgb([120, 120, 110])
                            }
                        }
                        Some((_, Surface::Box(i))) => {
                            let h = (i as u32).wrapping_mul(2_654_435_761);
                            Rgb([
                                60 + (h % 190) as u8,
                                60 + ((h >> 8) % 190) as u8,
                                60 + ((h >> 16) % 190) as u8,
                            ])
                        }
                    }
                })
                .collect()
        })
        .collect();
    RgbImage::from_fn(intr.width as u32, intr.height as u32, |x, y| {
        rows[y as usize][x as usize]
    })
}

/// A small urban-like scene: flat ground, a handful of vehicles and
/// pedestrians, a roof LiDAR and six cameras covering 360°.
///
/// Cameras are `width × height` (both must be multiples of the decimation
/// factor you intend to use) with a 90° horizontal field of view.
pub fn demo_scene(width: usize, height: usize) -> Result<Scene> {
    let boxes = vec![
        Box3D::new([8.0, 0.5, 0.75], [4.5, 1.9, 1.5], 0.1, "car")?,
        Box3D::new([-10.0, -3.0, 0.75], [4.2, 1.8, 1.5], 3.0, "car")?,
        Box3D::new([3.0, 7.0, 1.5], [8.0, 2.5, 3.0], 1.4, "truck")?,
        Box3D::new([4.0, -4.0, 0.9], [0.6, 0.6, 1.8], 0.0, "pedestrian")?,
        Box3D::new([-5.0, 6.0, 0.9], [0.6, 0.6, 1.8], 0.5, "pedestrian")?,
        Box3D::new([-3.0, -8.0, 0.4], [0.4, 0.4, 0.8], 0.0, "barrier")?,
        Box3D::new([15.0, -6.0, 1.0], [4.0, 2.0, 2.0], -0.7, "car")?,
    ];
    let f = width as f64 / 2.0;
    let intr = CameraIntrinsics::new(
        f,
        f,
        (width as f64 - 1.0) / 2.0,
        (height as f64 - 1.0) / 2.0,
        width,
        height,
    )?;
    let mounts = [
        ("cam_front", 1.5, 0.0, 0.0),
        ("cam_front_left", 1.2, 0.8, 60f64.to_radians()),
        ("cam_back_left", -1.0, 0.8, 120f64.to_radians()),
        ("cam_back", -1.5, 0.0, 180f64.to_radians()),
        ("cam_back_right", -1.0, -0.8, -120f64.to_radians()),
        ("cam_front_right", 1.2, -0.8, -60f64.to_radians()),
    ];
    let cameras = mounts
        .iter()
        .map(|&(name, x, y, yaw)| SimCamera {
            name: name.to_string(),
            pose: camera_pose(name, Point3::new(x, y, 1.6), yaw, 5f64.to_radians()),
            intrinsics: intr,
        })
        .collect();
    let scene = Scene {
        ground_height: 0.0,
        boxes,
        lidar_pose: RigidTransform::from_translation(
            Vector3::new(0.0, 0.0, -1.9),
            VEHICLE_FRAME,
            LIDAR_FRAME,
        ),
        lidar: LidarSpec::uniform(1024, 32, -30.0, 10.0, 80.0)?,
        cameras,
    };
    scene.validate()?;
    Ok(scene)
}
