//! LiDAR-aided perspective transform: sparse LiDAR depth decides where each
//! camera feature lands in a bird's-eye-view grid.
//!
//! The flow for one sample:
//!
//! 1. [`pipeline::lidar_to_camera`] and [`geometry::project_points`] put the
//!    LiDAR cloud into every camera image.
//! 2. [`depth::rasterize_depth`] keeps the nearest return per pixel and
//!    [`depth::minpool`] brings it down to feature resolution.
//! 3. [`bev::build_bev`] lifts each feature pixel to 3-D at its pooled depth
//!    and sum-pools the points into vertical pillars.
//! 4. [`groundtruth`] rasterizes annotations onto the same grid and [`eval`]
//!    scores predictions against it.
//!
//! [`simulate`] produces synthetic rigs with known geometry, [`io`] holds the
//! file formats and [`cli`] the `lapt` command. [`flat`] exposes the same
//! operations on plain buffers.

pub mod bev;
pub mod cli;
pub mod depth;
pub mod error;
pub mod eval;
pub mod flat;
pub mod geometry;
pub mod grid;
pub mod groundtruth;
pub mod io;
pub mod pipeline;
pub mod simulate;

pub use bev::{
    build_bev, pillar_sum_pool, unproject_features, BevGrid, CameraView, FeatureMap,
    FeaturePointCloud,
};
pub use depth::{minpool, rasterize_depth, DepthImage, LowResDepth, NO_RETURN};
pub use error::{Error, Result};
pub use eval::{bce_loss, iou, CellCounts, EvalReport};
pub use geometry::{
    compose, project_points, scale_intrinsics, transform_points, unproject_pixel, CameraIntrinsics,
    PixelProjection, Point3, PointCloud, RigidTransform,
};
pub use grid::{BinaryGrid, GridConfig};
pub use groundtruth::{
    rasterize_boxes, rasterize_polygons, rasterize_semantic, Annotations, Box3D, ClassGrouping,
    MapPolygon, SemanticGrid,
};
