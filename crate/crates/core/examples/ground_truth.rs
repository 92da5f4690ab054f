//! Rasterizes boxes and map polygons into per-class grids.
//!
//! cargo run --example ground_truth

use lapt::groundtruth::{rasterize_semantic, Annotations, Box3D, ClassGrouping, MapPolygon};
use lapt::GridConfig;

fn main() -> lapt::Result<()> {
    let ann = Annotations {
        boxes: vec![
            Box3D::new([0.0, 0.0, 0.75], [2.0, 2.0, 1.5], 0.0, "car")?,
            Box3D::new([6.0, -3.0, 1.5], [8.0, 2.5, 3.0], 0.6, "truck")?,
            Box3D::new([-4.0, 5.0, 0.9], [0.8, 0.8, 1.8], 0.0, "pedestrian")?,
        ],
        polygons: vec![MapPolygon::new(
            vec![
                [-10.0, -4.0],
                [10.0, -4.0],
                [10.0, 4.0],
                [2.0, 4.0],
                [2.0, 9.0],
                [-2.0, 9.0],
                [-2.0, 4.0],
                [-10.0, 4.0],
            ],
            "drivable_area",
        )?],
    };
    let grouping = ClassGrouping::from_json(
        r#"{"vehicle": ["car", "truck", "bus"], "pedestrian": ["pedestrian"], "drivable_area": ["drivable_area"]}"#,
    )?;
    let config = GridConfig::symmetric(12.0, 0.5)?;
    let sem = rasterize_semantic(&ann, &grouping, &config)?;
    for (c, name) in sem.classes().iter().enumerate() {
        let mask = sem.class_mask(c, 0.5);
        println!(
            "{name:<14} {:>4} cells  {:>7.2} m²",
            mask.count(),
            mask.count() as f64 * config.cell * config.cell
        );
    }
    Ok(())
}
