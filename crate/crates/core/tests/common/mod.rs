//! Reference implementations and fixtures shared by the integration tests.
//! The oracles here are written independently of the library code paths.
#![allow(dead_code)]

use std::collections::HashMap;

use lapt::geometry::LIDAR_FRAME;
use lapt::io::Calibration;
use lapt::simulate::{demo_scene, raycast, Scene};
use lapt::{CameraIntrinsics, DepthImage, PixelProjection, PointCloud};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-pixel minimum by grouping projections into buckets first.
pub fn zbuffer_oracle(projs: &[PixelProjection], width: usize, height: usize) -> Vec<f64> {
    let mut buckets: HashMap<(i64, i64), Vec<f64>> = HashMap::new();
    for p in projs {
        let col = (p.u + 0.5).floor() as i64;
        let row = (p.v + 0.5).floor() as i64;
        buckets.entry((row, col)).or_default().push(p.depth);
    }
    let mut out = Vec::with_capacity(width * height);
    for row in 0..height as i64 {
        for col in 0..width as i64 {
            out.push(
                buckets
                    .get(&(row, col))
                    .map(|ds| ds.iter().copied().fold(f64::INFINITY, f64::min))
                    .unwrap_or(f64::INFINITY),
            );
        }
    }
    out
}

/// Sliding-window minimum with stride equal to the window size.
pub fn minpool_oracle(values: &[f64], width: usize, height: usize, k: usize) -> Vec<f64> {
    let (w, h) = (width / k, height / k);
    let mut out = vec![0.0; w * h];
    for i in 0..h {
        for j in 0..w {
            let mut m = f64::INFINITY;
            for di in 0..k {
                for dj in 0..k {
                    let v = values[(i * k + di) * width + j * k + dj];
                    if v < m {
                        m = v;
                    }
                }
            }
            out[i * w + j] = m;
        }
    }
    out
}

/// Depth image with roughly `fill` of its pixels finite.
pub fn random_depth(rng: &mut ChaCha8Rng, width: usize, height: usize, fill: f64) -> DepthImage {
    let values = (0..width * height)
        .map(|_| {
            if rng.random_bool(fill) {
                rng.random_range(0.5..80.0)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    DepthImage::from_values(width, height, values).unwrap()
}

/// Random projections, some of them landing outside the image.
pub fn random_projections(
    rng: &mut ChaCha8Rng,
    n: usize,
    width: usize,
    height: usize,
) -> Vec<PixelProjection> {
    (0..n)
        .map(|i| PixelProjection {
            u: rng.random_range(-0.5..width as f64 - 0.5),
            v: rng.random_range(-0.5..height as f64 - 0.5),
            depth: rng.random_range(0.01..100.0),
            source_index: i,
        })
        .collect()
}

pub fn camera_640() -> CameraIntrinsics {
    CameraIntrinsics::new(500.0, 480.0, 319.5, 239.5, 640, 480).unwrap()
}

/// `p` inside the convex polygon `poly` (either orientation), edges included.
pub fn convex_contains(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut sign = 0.0f64;
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let c = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        if c != 0.0 {
            if sign != 0.0 && c.signum() != sign {
                return false;
            }
            sign = c.signum();
        }
    }
    true
}

/// Winding-number test, used for simple (possibly concave) polygons.
pub fn winding_contains(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut wn = 0i32;
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let side = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        if side == 0.0
            && p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
        {
            return true;
        }
        if a[1] <= p[1] {
            if b[1] > p[1] && side > 0.0 {
                wn += 1;
            }
        } else if b[1] <= p[1] && side < 0.0 {
            wn -= 1;
        }
    }
    wn != 0
}

/// Corners of a yawed rectangle, computed by rotating the half-extents.
pub fn rect_corners(cx: f64, cy: f64, len: f64, wid: f64, yaw: f64) -> Vec<[f64; 2]> {
    let (s, c) = yaw.sin_cos();
    [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
        .iter()
        .map(|&(a, b)| {
            let (dx, dy) = (a * len / 2.0, b * wid / 2.0);
            [cx + c * dx - s * dy, cy + s * dx + c * dy]
        })
        .collect()
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// The demo rig, its LiDAR sweep and the matching calibration.
pub fn demo_rig(width: usize, height: usize) -> (Scene, PointCloud, Calibration) {
    let scene = demo_scene(width, height).unwrap();
    let cloud = raycast(&scene, 7).unwrap();
    assert_eq!(cloud.frame(), LIDAR_FRAME);
    let calib = Calibration::from(&scene);
    (scene, cloud, calib)
}
