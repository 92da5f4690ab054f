//! Moves a LiDAR sweep into one camera and projects it onto the image.
//!
//! cargo run --example project_lidar

use lapt::geometry::LIDAR_FRAME;
use lapt::simulate::{demo_scene, raycast};
use lapt::{compose, project_points, transform_points, unproject_pixel};

fn main() -> lapt::Result<()> {
    let scene = demo_scene(640, 320)?;
    let cloud = raycast(&scene, 0)?;
    assert_eq!(cloud.frame(), LIDAR_FRAME);

    let cam = &scene.cameras[0];
    // LiDAR → vehicle → camera as one transform
    let chain = compose(&cam.pose, &scene.lidar_pose.inverse())?;
    let in_cam = transform_points(&cloud, &chain)?;
    let projs = project_points(&in_cam, &cam.intrinsics);
    println!(
        "{} of {} points land in {}",
        projs.len(),
        cloud.len(),
        cam.name
    );

    let nearest = projs
        .iter()
        .min_by(|a, b| a.depth.total_cmp(&b.depth))
        .expect("some points are visible");
    let back = unproject_pixel(nearest.u, nearest.v, nearest.depth, &cam.intrinsics)?;
    println!(
        "nearest return at (u, v) = ({:.2}, {:.2}), depth {:.3} m; round trip error {:.1e} m",
        nearest.u,
        nearest.v,
        nearest.depth,
        (back - in_cam.points()[nearest.source_index]).norm()
    );
    Ok(())
}
