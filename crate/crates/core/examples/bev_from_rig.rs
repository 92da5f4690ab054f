//! Builds the BEV feature grid of a six-camera rig and prints a coarse
//! top-down occupancy map.
//!
//! cargo run --release --example bev_from_rig

use lapt::bev::occupancy_readout;
use lapt::io::Calibration;
use lapt::pipeline::{rig_bev, CameraInput};
use lapt::simulate::{demo_scene, raycast, render_image};
use lapt::GridConfig;

fn main() -> lapt::Result<()> {
    let scene = demo_scene(512, 256)?;
    let cloud = raycast(&scene, 0)?;
    let calib = Calibration::from(&scene);
    let inputs = scene
        .cameras
        .iter()
        .map(|c| CameraInput::Image(render_image(&scene, c)))
        .collect();

    let config = GridConfig::symmetric(20.0, 1.0)?;
    let grid = rig_bev(&cloud, &calib, inputs, 16, &config)?;
    let occ = occupancy_readout(&grid, 0.0)?;
    println!(
        "{} channels on a {}×{} grid, {} occupied cells",
        grid.n_f(),
        config.x_cells(),
        config.y_cells(),
        occ.count()
    );

    // +x up, +y left; the vehicle sits in the middle
    for i in (0..config.x_cells()).rev() {
        let row: String = (0..config.y_cells())
            .rev()
            .map(|j| match (occ.get(i, j), i == 20 && j == 20) {
                (_, true) => '@',
                (true, _) => '#',
                _ => '.',
            })
            .collect();
        println!("{row}");
    }
    Ok(())
}
