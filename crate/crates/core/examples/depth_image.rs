//! Sparse z-buffered depth for each camera and its min-pooled form.
//!
//! cargo run --example depth_image -- [out_dir]

use lapt::io::{render, Calibration};
use lapt::pipeline::rig_depth;
use lapt::simulate::{demo_scene, raycast};

fn main() -> lapt::Result<()> {
    let out = std::env::args().nth(1);
    let scene = demo_scene(512, 256)?;
    let cloud = raycast(&scene, 0)?;
    let calib = Calibration::from(&scene);

    for (cam, (full, low)) in calib.cameras.iter().zip(rig_depth(&cloud, &calib, 16)?) {
        let nearest = low.values().iter().copied().fold(f64::INFINITY, f64::min);
        println!(
            "{:<16} {:>6} pixels with depth  {:>4} of {} windows  nearest {:.2} m",
            cam.name,
            full.valid_count(),
            low.image().valid_count(),
            low.width() * low.height(),
            nearest
        );
        if let Some(dir) = &out {
            let path = std::path::Path::new(dir).join(format!("{}.depth.png", cam.name));
            render::write_png(&path, &render::depth_png(&full))?;
        }
    }
    Ok(())
}
