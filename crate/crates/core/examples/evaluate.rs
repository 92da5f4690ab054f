//! Scores a prediction against ground truth: IoU per class, the weighted
//! cross-entropy and a table row.
//!
//! cargo run --example evaluate

use lapt::eval::{EvalReport, DEFAULT_POS_WEIGHT};
use lapt::groundtruth::{rasterize_boxes, Box3D};
use lapt::{bce_loss, iou, GridConfig};

fn main() -> lapt::Result<()> {
    let config = GridConfig::symmetric(10.0, 0.5)?;
    let gt = rasterize_boxes(
        &[Box3D::new([2.0, 1.0, 0.0], [4.5, 2.0, 1.6], 0.3, "car")?],
        &config,
    );
    // a prediction shifted half a meter forward
    let pred = rasterize_boxes(
        &[Box3D::new([2.5, 1.0, 0.0], [4.5, 2.0, 1.6], 0.3, "car")?],
        &config,
    );

    println!("IoU {:.4}", iou(&pred, &gt)?.unwrap_or(f64::NAN));

    let logits: Vec<f64> = pred
        .cells()
        .iter()
        .map(|&p| if p { 3.0 } else { -3.0 })
        .collect();
    println!(
        "BCE (positive weight {DEFAULT_POS_WEIGHT}) {:.5}",
        bce_loss(&logits, &gt, DEFAULT_POS_WEIGHT)?
    );

    let mut report = EvalReport::new(vec!["vehicle".into()]);
    report.add("vehicle", &pred, &gt)?;
    println!("{}\n{}", report.table_header(), report.table_row("shifted"));
    Ok(())
}
