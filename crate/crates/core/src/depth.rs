//! Sparse z-buffered depth images and their min-pooled low-resolution form.
//!
//! Pixels without a LiDAR return hold `f64::INFINITY`, so pooling is a plain
//! minimum and "no data" can never be read as a near depth.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::PixelProjection;

/// Value stored in pixels that received no LiDAR return.
pub const NO_RETURN: f64 = f64::INFINITY;

/// Row-major depth image in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl DepthImage {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![NO_RETURN; width * height],
        }
    }

    /// Wraps row-major values, checking that every entry is either the
    /// sentinel or a finite positive depth.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::invalid(format!(
                "depth buffer has {} values, expected {width}×{height}",
                values.len()
            )));
        }
        if let Some(i) = values
            .iter()
            .position(|&d| d != NO_RETURN && !(d.is_finite() && d > 0.0))
        {
            return Err(Error::invalid(format!(
                "depth value {} at index {i} is neither positive nor the no-return sentinel",
                values[i]
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Number of pixels holding a depth.
    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|d| d.is_finite()).count()
    }

    fn keep_min(&mut self, p: &PixelProjection) {
        if let Some(idx) = pixel_index(p, self.width, self.height) {
            let slot = &mut self.values[idx];
            if p.depth < *slot {
                *slot = p.depth;
            }
        }
    }
}

/// Depth image decimated by `d_f` through min-pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct LowResDepth {
    image: DepthImage,
    d_f: usize,
}

impl LowResDepth {
    pub fn new(image: DepthImage, d_f: usize) -> Result<Self> {
        if d_f == 0 {
            return Err(Error::invalid("decimation factor must be positive"));
        }
        Ok(Self { image, d_f })
    }

    pub fn width(&self) -> usize {
        self.image.width
    }

    pub fn height(&self) -> usize {
        self.image.height
    }

    pub fn d_f(&self) -> usize {
        self.d_f
    }

    pub fn image(&self) -> &DepthImage {
        &self.image
    }

    pub fn values(&self) -> &[f64] {
        &self.image.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.image.get(row, col)
    }

    /// Pools further by `factor`; the result is decimated by `d_f · factor`.
    pub fn minpool(&self, factor: usize) -> Result<LowResDepth> {
        let pooled = minpool(&self.image, factor)?;
        LowResDepth::new(pooled.image, self.d_f * factor)
    }
}

fn pixel_index(p: &PixelProjection, width: usize, height: usize) -> Option<usize> {
    let col = (p.u + 0.5).floor();
    let row = (p.v + 0.5).floor();
    if col >= 0.0 && row >= 0.0 && col < width as f64 && row < height as f64 {
        Some(row as usize * width + col as usize)
    } else {
        None
    }
}

/// Z-buffers projections into a `width × height` image, keeping the closest
/// depth per pixel. Projections outside the image are ignored.
pub fn rasterize_depth(projections: &[PixelProjection], width: usize, height: usize) -> DepthImage {
    let mut image = DepthImage::empty(width, height);
    for p in projections {
        image.keep_min(p);
    }
    image
}

/// Parallel z-buffer; bit-identical to [`rasterize_depth`] since each chunk
/// is reduced with an exact per-pixel minimum.
pub fn rasterize_depth_par(
    projections: &[PixelProjection],
    width: usize,
    height: usize,
) -> DepthImage {
    projections
        .par_chunks(4096)
        .fold(
            || DepthImage::empty(width, height),
            |mut image, chunk| {
                for p in chunk {
                    image.keep_min(p);
                }
                image
            },
        )
        .reduce(
            || DepthImage::empty(width, height),
            |mut a, b| {
                for (x, y) in a.values.iter_mut().zip(&b.values) {
                    if *y < *x {
                        *x = *y;
                    }
                }
                a
            },
        )
}

/// Min-pools `d` with a `d_f × d_f` kernel and stride `d_f`.
pub fn minpool(d: &DepthImage, d_f: usize) -> Result<LowResDepth> {
    if d_f == 0 {
        return Err(Error::invalid("decimation factor must be positive"));
    }
    if !d.width.is_multiple_of(d_f) || !d.height.is_multiple_of(d_f) {
        return Err(Error::invalid(format!(
            "depth image {}×{} is not divisible by d_f = {d_f}",
            d.width, d.height
        )));
    }
    let (w, h) = (d.width / d_f, d.height / d_f);
    let mut out = vec![NO_RETURN; w * h];
    for (row, src) in d.values.chunks_exact(d.width).enumerate() {
        let dst = &mut out[(row / d_f) * w..(row / d_f + 1) * w];
        for (slot, window) in dst.iter_mut().zip(src.chunks_exact(d_f)) {
            for &v in window {
                if v < *slot {
                    *slot = v;
                }
            }
        }
    }
    LowResDepth::new(
        DepthImage {
            width: w,
            height: h,
            values: out,
        },
        d_f,
    )
}
