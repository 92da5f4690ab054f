//! The tensor container and the cloud readers, round-tripped in memory.
//!
//! cargo run --example file_formats

use lapt::io::cloud::{encode_ply, parse_ply, parse_xyz};
use lapt::io::{depth_from_tensor, depth_to_tensor, Tensor};
use lapt::DepthImage;

fn main() -> lapt::Result<()> {
    let d = DepthImage::from_values(
        3,
        2,
        vec![1.5, f64::INFINITY, 2.0, 4.25, f64::INFINITY, 8.0],
    )?;
    let bytes = depth_to_tensor(&d).to_bytes();
    println!(
        "depth tensor: {} bytes, header {:?}",
        bytes.len(),
        &bytes[..8]
    );
    let back = depth_from_tensor(&Tensor::from_bytes(&bytes)?)?;
    assert_eq!(back, d);

    let pts = parse_xyz("# x y z intensity\n1 2 3 0.5\n-4 0.5 2\n")?;
    let ply = encode_ply(&pts);
    println!(
        "{} points → {} PLY bytes → {:?}",
        pts.len(),
        ply.len(),
        parse_ply(&ply)?
    );

    match Tensor::from_bytes(&bytes[..bytes.len() - 1]) {
        Err(e) => println!("truncated tensor rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
