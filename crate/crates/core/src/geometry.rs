//! Frames, rigid transforms and the pinhole camera model.
//!
//! Conventions used throughout the crate:
//!
//! * camera frames are right-handed with `z` forward, `x` right, `y` down;
//! * pixel `(0, 0)` is the *center* of the top-left pixel, and a continuous
//!   image coordinate `u` belongs to column `floor(u + 0.5)`;
//! * every transform carries the frame it maps from and the frame it maps to,
//!   and every operation that consumes one checks those labels.

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = Vector3<f64>;

/// Name of the vehicle reference frame.
pub const VEHICLE_FRAME: &str = "vehicle";
/// Name of the LiDAR reference frame.
pub const LIDAR_FRAME: &str = "lidar";

/// Points closer than this to the camera plane (in meters) are never projected.
pub const Z_MIN: f64 = 1e-3;

const ORTHONORMAL_TOL: f64 = 1e-9;

/// A rigid SE(3) transform `p -> R p + t` between two labelled frames.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    frame_from: String,
    frame_to: String,
}

impl RigidTransform {
    /// Builds a transform, rejecting rotations that are not proper orthonormal
    /// matrices (to within 1e-9 elementwise).
    pub fn new(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        frame_from: impl Into<String>,
        frame_to: impl Into<String>,
    ) -> Result<Self> {
        if rotation
            .iter()
            .chain(translation.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("transform contains non-finite values"));
        }
        let gram = rotation.transpose() * rotation - Matrix3::identity();
        if gram.amax() > ORTHONORMAL_TOL {
            return Err(Error::invalid(format!(
                "rotation is not orthonormal (max |RᵀR - I| = {:e})",
                gram.amax()
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::invalid(format!(
                "rotation determinant is {det}, expected +1"
            )));
        }
        Ok(Self {
            rotation,
            translation,
            frame_from: frame_from.into(),
            frame_to: frame_to.into(),
        })
    }

    pub fn identity(frame: impl Into<String>) -> Self {
        let frame = frame.into();
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            frame_from: frame.clone(),
            frame_to: frame,
        }
    }

    pub fn from_translation(
        translation: Vector3<f64>,
        frame_from: impl Into<String>,
        frame_to: impl Into<String>,
    ) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
            frame_from: frame_from.into(),
            frame_to: frame_to.into(),
        }
    }

    /// Rotation by `angle` radians about the `z` axis.
    pub fn rotation_z(
        angle: f64,
        frame_from: impl Into<String>,
        frame_to: impl Into<String>,
    ) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation: Vector3::zeros(),
            frame_from: frame_from.into(),
            frame_to: frame_to.into(),
        }
    }

    /// Parses a 4×4 homogeneous matrix given in row-major order.
    pub fn from_row_major(
        values: &[f64],
        frame_from: impl Into<String>,
        frame_to: impl Into<String>,
    ) -> Result<Self> {
        if values.len() != 16 {
            return Err(Error::invalid(format!(
                "expected 16 matrix entries, got {}",
                values.len()
            )));
        }
        let m = Matrix4::from_row_slice(values);
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::invalid(format!(
                "bottom row of a rigid transform must be (0, 0, 0, 1), got {bottom:?}"
            )));
        }
        Self::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
            frame_from,
            frame_to,
        )
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn frame_from(&self) -> &str {
        &self.frame_from
    }

    pub fn frame_to(&self) -> &str {
        &self.frame_to
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        self.rotation * p + self.translation
    }

    /// Applies only the rotation (for directions).
    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            translation: -(rt * self.translation),
            rotation: rt,
            frame_from: self.frame_to.clone(),
            frame_to: self.frame_from.clone(),
        }
    }
}

/// Returns the transform equivalent to applying `b` and then `a`.
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> Result<RigidTransform> {
    if a.frame_from != b.frame_to {
        return Err(Error::FrameMismatch {
            expected: a.frame_from.clone(),
            found: b.frame_to.clone(),
        });
    }
    Ok(RigidTransform {
        rotation: a.rotation * b.rotation,
        translation: a.rotation * b.translation + a.translation,
        frame_from: b.frame_from.clone(),
        frame_to: a.frame_to.clone(),
    })
}

/// Pinhole intrinsics without skew or distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let intr = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    /// Parses a row-major 3×3 matrix `[fx 0 cx; 0 fy cy; 0 0 1]`.
    pub fn from_row_major(values: &[f64], width: usize, height: usize) -> Result<Self> {
        if values.len() != 9 {
            return Err(Error::invalid(format!(
                "expected 9 intrinsic matrix entries, got {}",
                values.len()
            )));
        }
        if values[1] != 0.0 || values[3] != 0.0 {
            return Err(Error::invalid("intrinsics with skew are not supported"));
        }
        if values[6..] != [0.0, 0.0, 1.0] {
            return Err(Error::invalid(
                "intrinsic matrix bottom row must be (0, 0, 1)",
            ));
        }
        Self::new(values[0], values[4], values[2], values[5], width, height)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::invalid(format!(
                "focal lengths must be finite and positive (fx = {}, fy = {})",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("image dimensions must be at least 1×1"));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Column and row of the pixel containing continuous coordinate `(u, v)`,
    /// or `None` when it falls outside the image.
    pub fn pixel_of(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        let col = (u + 0.5).floor();
        let row = (v + 0.5).floor();
        if col >= 0.0 && row >= 0.0 && col < self.width as f64 && row < self.height as f64 {
            Some((col as usize, row as usize))
        } else {
            None
        }
    }
}

/// A 3D point cloud expressed in a single frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    frame: String,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>, frame: impl Into<String>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::invalid(format!(
                "point {i} has non-finite coordinates"
            )));
        }
        Ok(Self {
            points,
            frame: frame.into(),
        })
    }

    pub fn empty(frame: impl Into<String>) -> Self {
        Self {
            points: Vec::new(),
            frame: frame.into(),
        }
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn frame(&self) -> &str {
        &self.frame
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }
}

/// A point projected onto the image plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelProjection {
    pub u: f64,
    pub v: f64,
    /// `z` in the camera frame, always `> Z_MIN`.
    pub depth: f64,
    pub source_index: usize,
}

pub fn transform_points(cloud: &PointCloud, t: &RigidTransform) -> Result<PointCloud> {
    if cloud.frame != t.frame_from {
        return Err(Error::FrameMismatch {
            expected: t.frame_from.clone(),
            found: cloud.frame.clone(),
        });
    }
    Ok(PointCloud {
        points: cloud.points.iter().map(|p| t.apply(p)).collect(),
        frame: t.frame_to.clone(),
    })
}

/// Perspective projection of a camera-frame cloud.
///
/// Points at or behind `Z_MIN`, or landing outside the image, are omitted.
pub fn project_points(cloud: &PointCloud, intr: &CameraIntrinsics) -> Vec<PixelProjection> {
    cloud
        .points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            if p.z <= Z_MIN {
                return None;
            }
            let u = intr.fx * p.x / p.z + intr.cx;
            let v = intr.fy * p.y / p.z + intr.cy;
            intr.pixel_of(u, v)?;
            Some(PixelProjection {
                u,
                v,
                depth: p.z,
                source_index: i,
            })
        })
        .collect()
}

/// Back-projects image coordinate `(u, v)` at camera depth `depth`.
pub fn unproject_pixel(u: f64, v: f64, depth: f64, intr: &CameraIntrinsics) -> Result<Point3> {
    if !(depth.is_finite() && depth > 0.0) {
        return Err(Error::invalid(format!(
            "depth must be finite and positive, got {depth}"
        )));
    }
    if !(u.is_finite() && v.is_finite()) {
        return Err(Error::invalid("pixel coordinates must be finite"));
    }
    Ok(Point3::new(
        depth * (u - intr.cx) / intr.fx,
        depth * (v - intr.cy) / intr.fy,
        depth,
    ))
}

/// Intrinsics of an image decimated by `d_f`, preserving pixel centers: the
/// center of low-resolution pixel `i` sees the same ray as the center of its
/// `d_f × d_f` full-resolution window.
pub fn scale_intrinsics(intr: &CameraIntrinsics, d_f: usize) -> Result<CameraIntrinsics> {
    if d_f == 0 {
        return Err(Error::invalid("decimation factor must be positive"));
    }
    if !intr.width.is_multiple_of(d_f) || !intr.height.is_multiple_of(d_f) {
        return Err(Error::invalid(format!(
            "image size {}×{} is not divisible by d_f = {d_f}",
            intr.width, intr.height
        )));
    }
    let s = d_f as f64;
    Ok(CameraIntrinsics {
        fx: intr.fx / s,
        fy: intr.fy / s,
        cx: (intr.cx + 0.5) / s - 0.5,
        cy: (intr.cy + 0.5) / s - 0.5,
        width: intr.width / d_f,
        height: intr.height / d_f,
    })
}
