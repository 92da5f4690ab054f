//! Depth-guided lifting of camera feature maps into the vehicle frame and
//! pillar sum-pooling into the BEV feature grid.

use image::RgbImage;
use rayon::prelude::*;

use crate::depth::LowResDepth;
use crate::error::{Error, Result};
use crate::geometry::{
    scale_intrinsics, unproject_pixel, CameraIntrinsics, Point3, RigidTransform, VEHICLE_FRAME,
};
use crate::grid::{BinaryGrid, GridConfig};

/// Decimation factor used when none is given.
pub const DEFAULT_DF: usize = 16;

/// A `n_f × height × width` feature map produced at `1/d_f` of the image
/// resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    n_f: usize,
    width: usize,
    height: usize,
    d_f: usize,
    values: Vec<f32>,
}

impl FeatureMap {
    pub fn new(
        n_f: usize,
        width: usize,
        height: usize,
        d_f: usize,
        values: Vec<f32>,
    ) -> Result<Self> {
        if n_f == 0 || d_f == 0 {
            return Err(Error::invalid(
                "feature maps need at least one channel and d_f ≥ 1",
            ));
        }
        if values.len() != n_f * width * height {
            return Err(Error::invalid(format!(
                "feature buffer has {} values, expected {n_f}×{height}×{width}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "feature value at index {i} is not finite"
            )));
        }
        Ok(Self {
            n_f,
            width,
            height,
            d_f,
            values,
        })
    }

    pub fn n_f(&self) -> usize {
        self.n_f
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn d_f(&self) -> usize {
        self.d_f
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.values[(channel * self.height + row) * self.width + col]
    }

    /// Feature map with its channels reordered: output channel `c` is input
    /// channel `order[c]`.
    pub fn permute_channels(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n_f];
        if order.len() != self.n_f
            || order
                .iter()
                .any(|&c| c >= self.n_f || std::mem::replace(&mut seen[c], true))
        {
            return Err(Error::invalid("channel order must be a permutation"));
        }
        let plane = self.width * self.height;
        let values = order
            .iter()
            .flat_map(|&c| self.values[c * plane..(c + 1) * plane].iter().copied())
            .collect();
        Ok(Self { values, ..*self })
    }
}

/// 3D points each carrying an `n_f`-vector of features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePointCloud {
    n_f: usize,
    points: Vec<Point3>,
    features: Vec<f32>,
    frame: String,
}

impl FeaturePointCloud {
    pub fn new(
        n_f: usize,
        points: Vec<Point3>,
        features: Vec<f32>,
        frame: impl Into<String>,
    ) -> Result<Self> {
        if features.len() != points.len() * n_f {
            return Err(Error::invalid(format!(
                "{} points need {} feature values, got {}",
                points.len(),
                points.len() * n_f,
                features.len()
            )));
        }
        if points.iter().any(|p| !p.iter().all(|v| v.is_finite()))
            || features.iter().any(|v| !v.is_finite())
        {
            return Err(Error::invalid(
                "feature point cloud contains non-finite values",
            ));
        }
        Ok(Self {
            n_f,
            points,
            features,
            frame: frame.into(),
        })
    }

    pub fn empty(n_f: usize, frame: impl Into<String>) -> Self {
        Self {
            n_f,
            points: Vec::new(),
            features: Vec::new(),
            frame: frame.into(),
        }
    }

    pub fn n_f(&self) -> usize {
        self.n_f
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn feature(&self, index: usize) -> &[f32] {
        &self.features[index * self.n_f..(index + 1) * self.n_f]
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

    pub fn transform(&self, t: &RigidTransform) -> Result<Self> {
        if self.frame != t.frame_from() {
            return Err(Error::FrameMismatch {
                expected: t.frame_from().to_string(),
                found: self.frame.clone(),
            });
        }
        Ok(Self {
            n_f: self.n_f,
            points: self.points.iter().map(|p| t.apply(p)).collect(),
            features: self.features.clone(),
            frame: t.frame_to().to_string(),
        })
    }

    /// Appends `other`, which must share this cloud's frame and channel count.
    pub fn extend(&mut self, other: &FeaturePointCloud) -> Result<()> {
        if other.frame != self.frame {
            return Err(Error::FrameMismatch {
                expected: self.frame.clone(),
                found: other.frame.clone(),
            });
        }
        if other.n_f != self.n_f {
            return Err(Error::invalid(format!(
                "channel counts differ: {} vs {}",
                self.n_f, other.n_f
            )));
        }
        self.points.extend_from_slice(&other.points);
        self.features.extend_from_slice(&other.features);
        Ok(())
    }
}

/// The `n_f × X × Y` BEV feature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BevGrid {
    n_f: usize,
    config: GridConfig,
    values: Vec<f32>,
}

impl BevGrid {
    pub fn zeros(n_f: usize, config: GridConfig) -> Self {
        Self {
            n_f,
            values: vec![0.0; n_f * config.num_cells()],
            config,
        }
    }

    pub fn from_values(n_f: usize, config: GridConfig, values: Vec<f32>) -> Result<Self> {
        config.validate()?;
        if values.len() != n_f * config.num_cells() {
            return Err(Error::invalid(format!(
                "BEV buffer has {} values, expected {n_f}×{}×{}",
                values.len(),
                config.x_cells(),
                config.y_cells()
            )));
        }
        Ok(Self {
            n_f,
            config,
            values,
        })
    }

    pub fn n_f(&self) -> usize {
        self.n_f
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, channel: usize, i: usize, j: usize) -> f32 {
        self.values[channel * self.config.num_cells() + self.config.index(i, j)]
    }

    /// Channel vector of cell `(i, j)`.
    pub fn cell(&self, i: usize, j: usize) -> Vec<f32> {
        (0..self.n_f).map(|c| self.get(c, i, j)).collect()
    }

    /// Elementwise sum of two grids with identical layout.
    pub fn add(&self, other: &BevGrid) -> Result<BevGrid> {
        if self.n_f != other.n_f || self.config != other.config {
            return Err(Error::invalid("BEV grids have different layouts"));
        }
        Ok(BevGrid {
            n_f: self.n_f,
            config: self.config,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }
}

/// Lifts every low-resolution pixel that has a depth into 3D (camera frame),
/// carrying its feature vector. `intr` are the full-resolution intrinsics.
pub fn unproject_features(
    fm: &FeatureMap,
    depth: &LowResDepth,
    intr: &CameraIntrinsics,
    camera_frame: &str,
) -> Result<FeaturePointCloud> {
    if (fm.width, fm.height, fm.d_f) != (depth.width(), depth.height(), depth.d_f()) {
        return Err(Error::invalid(format!(
            "feature map is {}×{} at d_f = {} but depth is {}×{} at d_f = {}",
            fm.width,
            fm.height,
            fm.d_f,
            depth.width(),
            depth.height(),
            depth.d_f()
        )));
    }
    let low = scale_intrinsics(intr, fm.d_f)?;
    if (low.width, low.height) != (fm.width, fm.height) {
        return Err(Error::invalid(format!(
            "feature map is {}×{} but the camera at d_f = {} gives {}×{}",
            fm.width, fm.height, fm.d_f, low.width, low.height
        )));
    }

    let plane = fm.width * fm.height;
    let mut points = Vec::new();
    let mut features = Vec::new();
    for (idx, &delta) in depth.values().iter().enumerate() {
        if !delta.is_finite() {
            continue;
        }
        let (row, col) = (idx / fm.width, idx % fm.width);
        points.push(unproject_pixel(col as f64, row as f64, delta, &low)?);
        features.extend((0..fm.n_f).map(|c| fm.values[c * plane + idx]));
    }
    Ok(FeaturePointCloud {
        n_f: fm.n_f,
        points,
        features,
        frame: camera_frame.to_string(),
    })
}

fn accumulate(acc: &mut [f64], cloud: &FeaturePointCloud, config: &GridConfig) {
    let cells = config.num_cells();
    for (k, p) in cloud.points.iter().enumerate() {
        let Some((i, j)) = config.cell_of(p.x, p.y) else {
            continue;
        };
        let idx = config.index(i, j);
        for (c, &f) in cloud.feature(k).iter().enumerate() {
            acc[c * cells + idx] += f as f64;
        }
    }
}

fn check_vehicle_frame(cloud: &FeaturePointCloud) -> Result<()> {
    if cloud.frame != VEHICLE_FRAME {
        return Err(Error::FrameMismatch {
            expected: VEHICLE_FRAME.to_string(),
            found: cloud.frame.clone(),
        });
    }
    Ok(())
}

/// Sums the features of all points falling in each infinite-height pillar.
///
/// Cells accumulate in `f64` in input order and are rounded to `f32` once.
pub fn pillar_sum_pool(cloud: &FeaturePointCloud, config: &GridConfig) -> Result<BevGrid> {
    config.validate()?;
    check_vehicle_frame(cloud)?;
    let mut acc = vec![0.0f64; cloud.n_f * config.num_cells()];
    accumulate(&mut acc, cloud, config);
    Ok(BevGrid {
        n_f: cloud.n_f,
        config: *config,
        values: acc.into_iter().map(|v| v as f32).collect(),
    })
}

/// Everything [`build_bev`] needs from one camera.
#[derive(Debug, Clone, Copy)]
pub struct CameraView<'a> {
    pub name: &'a str,
    pub features: &'a FeatureMap,
    pub depth: &'a LowResDepth,
    pub intrinsics: &'a CameraIntrinsics,
    /// Vehicle → camera transform.
    pub extrinsics: &'a RigidTransform,
}

impl CameraView<'_> {
    /// The camera's lifted features, expressed in the vehicle frame.
    pub fn vehicle_cloud(&self) -> Result<FeaturePointCloud> {
        if self.extrinsics.frame_from() != VEHICLE_FRAME {
            return Err(Error::invalid(format!(
                "camera {}: extrinsics must map from `{VEHICLE_FRAME}`, not `{}`",
                self.name,
                self.extrinsics.frame_from()
            )));
        }
        let cam = unproject_features(
            self.features,
            self.depth,
            self.intrinsics,
            self.extrinsics.frame_to(),
        )
        .map_err(|e| Error::invalid(format!("camera {}: {e}", self.name)))?;
        cam.transform(&self.extrinsics.inverse())
    }
}

/// Lifts every camera's features, moves them to the vehicle frame and pools
/// them into one grid.
///
/// Cameras are unprojected in parallel; accumulation runs in camera order and
/// then pixel order, so the output is identical to pooling the concatenated
/// clouds.
pub fn build_bev(cameras: &[CameraView<'_>], config: &GridConfig) -> Result<BevGrid> {
    config.validate()?;
    let Some(first) = cameras.first() else {
        return Err(Error::invalid("at least one camera is required"));
    };
    let n_f = first.features.n_f;
    if let Some(cam) = cameras.iter().find(|c| c.features.n_f != n_f) {
        return Err(Error::invalid(format!(
            "camera {} has {} channels, expected {n_f}",
            cam.name, cam.features.n_f
        )));
    }
    let clouds = cameras
        .par_iter()
        .map(CameraView::vehicle_cloud)
        .collect::<Result<Vec<_>>>()?;

    let mut acc = vec![0.0f64; n_f * config.num_cells()];
    for cloud in &clouds {
        accumulate(&mut acc, cloud, config);
    }
    Ok(BevGrid {
        n_f,
        config: *config,
        values: acc.into_iter().map(|v| v as f32).collect(),
    })
}

/// Deterministic placeholder for a learned image encoder: the mean RGB of
/// each `d_f × d_f` window, scaled to `[0, 1]`.
pub fn standin_encoder(image: &RgbImage, d_f: usize) -> Result<FeatureMap> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    if d_f == 0 || w % d_f != 0 || h % d_f != 0 {
        return Err(Error::invalid(format!(
            "image {w}×{h} is not divisible by d_f = {d_f}"
        )));
    }
    let (lw, lh) = (w / d_f, h / d_f);
    let mut sums = vec![0u64; 3 * lw * lh];
    for (x, y, px) in image.enumerate_pixels() {
        let idx = (y as usize / d_f) * lw + x as usize / d_f;
        for c in 0..3 {
            sums[c * lw * lh + idx] += px.0[c] as u64;
        }
    }
    let denom = (d_f * d_f) as f64 * 255.0;
    let values = sums
        .into_iter()
        .map(|s| (s as f64 / denom) as f32)
        .collect();
    FeatureMap::new(3, lw, lh, d_f, values)
}

/// Marks cells whose channel vector has an L1 norm above `threshold`.
pub fn occupancy_readout(grid: &BevGrid, threshold: f64) -> Result<BinaryGrid> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::invalid(format!(
            "threshold must be ≥ 0, got {threshold}"
        )));
    }
    let cells = grid.config.num_cells();
    let mut norms = vec![0.0f64; cells];
    for chan in grid.values.chunks_exact(cells) {
        for (n, v) in norms.iter_mut().zip(chan) {
            *n += (*v as f64).abs();
        }
    }
    BinaryGrid::from_cells(
        grid.config.x_cells(),
        grid.config.y_cells(),
        norms.into_iter().map(|n| n > threshold).collect(),
    )
}

#[cfg(test)]
mod tests {
    use image::Rgb;
    use nalgebra::Vector3;

    use super::*;
    use crate::depth::{DepthImage, NO_RETURN};

    fn vehicle_cloud(points: &[[f64; 3]], features: &[f32], n_f: usize) -> FeaturePointCloud {
        FeaturePointCloud::new(
            n_f,
            points.iter().map(|p| Point3::from(*p)).collect(),
            features.to_vec(),
            VEHICLE_FRAME,
        )
        .unwrap()
    }

    #[test]
    fn single_point_lands_in_one_cell() {
        let config = GridConfig::symmetric(2.0, 0.5).unwrap();
        let grid = pillar_sum_pool(
            &vehicle_cloud(&[[0.1, -0.7, 9.0]], &[1.0, 2.0, 3.0], 3),
            &config,
        )
        .unwrap();
        assert_eq!(grid.cell(4, 2), vec![1.0, 2.0, 3.0]);
        let nonzero = grid.values().iter().filter(|v| **v != 0.0).count();
        assert_eq!(nonzero, 3);
    }

    #[test]
    fn same_pillar_sums() {
        let config = GridConfig::symmetric(2.0, 0.5).unwrap();
        let cloud = vehicle_cloud(
            &[[0.1, 0.1, -3.0], [0.4, 0.2, 50.0]],
            &[1.0, 0.5, 2.0, 0.25],
            2,
        );
        let grid = pillar_sum_pool(&cloud, &config).unwrap();
        assert_eq!(grid.cell(4, 4), vec![3.0, 0.75]);
    }

    #[test]
    fn out_of_extent_and_boundary_points_dropped() {
        let config = GridConfig::symmetric(1.0, 0.5).unwrap();
        let cloud = vehicle_cloud(
            &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.01, 0.0, 0.0]],
            &[1.0, 1.0, 1.0],
            1,
        );
        let grid = pillar_sum_pool(&cloud, &config).unwrap();
        assert!(grid.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn pooling_requires_vehicle_frame() {
        let cloud = FeaturePointCloud::empty(1, "cam_front");
        assert!(pillar_sum_pool(&cloud, &GridConfig::default()).is_err());
    }

    fn camera() -> CameraIntrinsics {
        CameraIntrinsics::new(40.0, 40.0, 15.5, 11.5, 32, 24).unwrap()
    }

    #[test]
    fn principal_point_pixel_unprojects_on_axis() {
        // d_f = 4 → low-res 8×6 with principal point (3.5, 2.5); use cx so it lands on a pixel.
        let intr = CameraIntrinsics::new(40.0, 40.0, 13.5, 9.5, 32, 24).unwrap();
        let low = scale_intrinsics(&intr, 4).unwrap();
        assert_eq!((low.cx, low.cy), (3.0, 2.0));
        let mut values = vec![NO_RETURN; 48];
        values[2 * 8 + 3] = 10.0;
        let depth = LowResDepth::new(DepthImage::from_values(8, 6, values).unwrap(), 4).unwrap();
        let feats: Vec<f32> = (0..96).map(|i| i as f32).collect();
        let fm = FeatureMap::new(2, 8, 6, 4, feats).unwrap();
        let cloud = unproject_features(&fm, &depth, &intr, "cam").unwrap();
        assert_eq!(cloud.len(), 1);
        assert_eq!(cloud.points()[0], Vector3::new(0.0, 0.0, 10.0));
        assert_eq!(cloud.feature(0), &[19.0, 67.0]);
    }

    #[test]
    fn all_sentinel_depth_gives_empty_cloud() {
        let depth = LowResDepth::new(DepthImage::empty(8, 6), 4).unwrap();
        let fm = FeatureMap::new(1, 8, 6, 4, vec![1.0; 48]).unwrap();
        assert!(unproject_features(&fm, &depth, &camera(), "cam")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn unproject_rejects_mismatched_dims() {
        let depth = LowResDepth::new(DepthImage::empty(8, 6), 4).unwrap();
        let fm = FeatureMap::new(1, 4, 3, 8, vec![1.0; 12]).unwrap();
        assert!(unproject_features(&fm, &depth, &camera(), "cam").is_err());
        // consistent with each other but not with the camera
        let depth = LowResDepth::new(DepthImage::empty(4, 4), 4).unwrap();
        let fm = FeatureMap::new(1, 4, 4, 4, vec![1.0; 16]).unwrap();
        assert!(unproject_features(&fm, &depth, &camera(), "cam").is_err());
    }

    #[test]
    fn encoder_constant_gray() {
        let img = RgbImage::from_pixel(8, 4, Rgb([51, 51, 51]));
        let fm = standin_encoder(&img, 4).unwrap();
        assert_eq!((fm.width(), fm.height(), fm.n_f()), (2, 1, 3));
        assert!(fm.values().iter().all(|&v| v == 0.2));
    }

    #[test]
    fn encoder_identity_and_checkerboard() {
        let img = RgbImage::from_fn(4, 4, |x, y| {
            let v = if (x + y) % 2 == 0 { 255 } else { 0 };
            Rgb([v, v, v])
        });
        let same = standin_encoder(&img, 1).unwrap();
        assert_eq!(same.get(0, 0, 0), 1.0);
        assert_eq!(same.get(2, 0, 1), 0.0);
        let pooled = standin_encoder(&img, 2).unwrap();
        assert!(pooled.values().iter().all(|&v| v == 0.5));
        assert!(standin_encoder(&img, 3).is_err());
    }

    #[test]
    fn readout_cases() {
        let config = GridConfig::symmetric(1.0, 0.5).unwrap();
        let empty = BevGrid::zeros(2, config);
        assert_eq!(occupancy_readout(&empty, 0.0).unwrap().count(), 0);
        let one =
            pillar_sum_pool(&vehicle_cloud(&[[0.2, 0.2, 0.0]], &[0.5, -0.5], 2), &config).unwrap();
        let occ = occupancy_readout(&one, 0.0).unwrap();
        assert_eq!(occ.count(), 1);
        assert!(occ.get(2, 2));
        assert_eq!(occupancy_readout(&one, 1.0).unwrap().count(), 0);
        assert!(occupancy_readout(&one, -1.0).is_err());
    }

    #[test]
    fn permute_channels_reorders_planes() {
        let fm = FeatureMap::new(2, 1, 1, 1, vec![1.0, 2.0]).unwrap();
        assert_eq!(fm.permute_channels(&[1, 0]).unwrap().values(), &[2.0, 1.0]);
        assert!(fm.permute_channels(&[0, 0]).is_err());
    }
}
