//! PNG renders for inspection. Not read back by the pipeline.

use std::io::Cursor;
use std::path::Path;

use image::{GrayImage, ImageBuffer, ImageFormat, Luma};

use crate::depth::DepthImage;
use crate::error::{Error, Result};
use crate::grid::BinaryGrid;

use super::write_atomic;

/// 16-bit grayscale: pixels without a return are black, the farthest return
/// is white and depth scales linearly in between.
pub fn depth_png(d: &DepthImage) -> Vec<u8> {
    let max = d
        .values()
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_fn(d.width() as u32, d.height() as u32, |x, y| {
            let v = d.get(y as usize, x as usize);
            if v.is_finite() && max > 0.0 {
                Luma([(1.0 + v / max * 65534.0).round() as u16])
            } else {
                Luma([0])
            }
        });
    encode(img)
}

/// 8-bit mask with `+x` pointing up and `+y` pointing left (the usual
/// top-down view of a vehicle frame).
pub fn grid_png(g: &BinaryGrid) -> Vec<u8> {
    let (nx, ny) = (g.x_cells(), g.y_cells());
    let img = GrayImage::from_fn(ny as u32, nx as u32, |col, row| {
        let i = nx - 1 - row as usize;
        let j = ny - 1 - col as usize;
        Luma([if g.get(i, j) { 255 } else { 0 }])
    });
    encode(img)
}

fn encode<P, C>(img: ImageBuffer<P, C>) -> Vec<u8>
where
    P: image::Pixel + image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)
        .expect("PNG encoding to memory");
    buf.into_inner()
}

pub fn write_png(path: &Path, bytes: &[u8]) -> Result<()> {
    if !bytes.starts_with(b"\x89PNG") {
        return Err(Error::invalid("not PNG data"));
    }
    write_atomic(path, bytes)
}
