//! Metric bird's-eye-view grid layout shared by the feature grid, the
//! ground-truth rasterizers and the metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Extent and resolution of a BEV grid in the vehicle frame.
///
/// Cells are half-open: cell `(i, j)` covers
/// `[x_min + i·cell, x_min + (i+1)·cell) × [y_min + j·cell, y_min + (j+1)·cell)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub cell: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x_min: -50.0,
            x_max: 50.0,
            y_min: -50.0,
            y_max: 50.0,
            cell: 0.5,
        }
    }
}

fn cell_count(min: f64, max: f64, cell: f64, axis: &str) -> Result<usize> {
    let n = (max - min) / cell;
    let rounded = n.round();
    if !(n.is_finite() && rounded >= 1.0) || (n - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(Error::invalid(format!(
            "{axis} extent [{min}, {max}) is not a positive whole number of {cell} m cells"
        )));
    }
    Ok(rounded as usize)
}

impl GridConfig {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, cell: f64) -> Result<Self> {
        let config = Self {
            x_min,
            x_max,
            y_min,
            y_max,
            cell,
        };
        config.validate()?;
        Ok(config)
    }

    /// Square grid `[-half_extent, half_extent)²`.
    pub fn symmetric(half_extent: f64, cell: f64) -> Result<Self> {
        Self::new(-half_extent, half_extent, -half_extent, half_extent, cell)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell.is_finite() && self.cell > 0.0) {
            return Err(Error::invalid(format!(
                "cell size must be positive, got {}",
                self.cell
            )));
        }
        cell_count(self.x_min, self.x_max, self.cell, "x")?;
        cell_count(self.y_min, self.y_max, self.cell, "y")?;
        Ok(())
    }

    /// Number of cells along `x` (`X`).
    pub fn x_cells(&self) -> usize {
        ((self.x_max - self.x_min) / self.cell).round() as usize
    }

    /// Number of cells along `y` (`Y`).
    pub fn y_cells(&self) -> usize {
        ((self.y_max - self.y_min) / self.cell).round() as usize
    }

    pub fn num_cells(&self) -> usize {
        self.x_cells() * self.y_cells()
    }

    /// Cell containing `(x, y)`; points outside the half-open extent map to `None`.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if !(x >= self.x_min && x < self.x_max && y >= self.y_min && y < self.y_max) {
            return None;
        }
        let i = (((x - self.x_min) / self.cell).floor() as usize).min(self.x_cells() - 1);
        let j = (((y - self.y_min) / self.cell).floor() as usize).min(self.y_cells() - 1);
        Some((i, j))
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.x_min + (i as f64 + 0.5) * self.cell,
            self.y_min + (j as f64 + 0.5) * self.cell,
        )
    }

    /// Flat index of cell `(i, j)` in `X×Y` row-major order.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.y_cells() + j
    }
}

/// Binary `X×Y` grid, stored x-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryGrid {
    x_cells: usize,
    y_cells: usize,
    cells: Vec<bool>,
}

impl BinaryGrid {
    pub fn new(x_cells: usize, y_cells: usize) -> Self {
        Self {
            x_cells,
            y_cells,
            cells: vec![false; x_cells * y_cells],
        }
    }

    pub fn for_config(config: &GridConfig) -> Self {
        Self::new(config.x_cells(), config.y_cells())
    }

    pub fn from_cells(x_cells: usize, y_cells: usize, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != x_cells * y_cells {
            return Err(Error::invalid(format!(
                "grid has {} cells, expected {x_cells}×{y_cells}",
                cells.len()
            )));
        }
        Ok(Self {
            x_cells,
            y_cells,
            cells,
        })
    }

    pub fn x_cells(&self) -> usize {
        self.x_cells
    }

    pub fn y_cells(&self) -> usize {
        self.y_cells
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.y_cells + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.cells[i * self.y_cells + j] = value;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Cellwise OR; both grids must have the same shape.
    pub fn union_with(&mut self, other: &BinaryGrid) -> Result<()> {
        self.check_shape(other)?;
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            *a |= *b;
        }
        Ok(())
    }

    pub fn is_subset_of(&self, other: &BinaryGrid) -> bool {
        self.x_cells == other.x_cells
            && self.y_cells == other.y_cells
            && self.cells.iter().zip(&other.cells).all(|(a, b)| !*a || *b)
    }

    /// Grid grown by `radius` cells in the Chebyshev metric.
    pub fn dilate(&self, radius: usize) -> BinaryGrid {
        let mut out = BinaryGrid::new(self.x_cells, self.y_cells);
        for i in 0..self.x_cells {
            for j in 0..self.y_cells {
                if !self.get(i, j) {
                    continue;
                }
                for a in i.saturating_sub(radius)..(i + radius + 1).min(self.x_cells) {
                    for b in j.saturating_sub(radius)..(j + radius + 1).min(self.y_cells) {
                        out.set(a, b, true);
                    }
                }
            }
        }
        out
    }

    pub(crate) fn check_shape(&self, other: &BinaryGrid) -> Result<()> {
        if (self.x_cells, self.y_cells) != (other.x_cells, other.y_cells) {
            return Err(Error::invalid(format!(
                "grid shapes differ: {}×{} vs {}×{}",
                self.x_cells, self.y_cells, other.x_cells, other.y_cells
            )));
        }
        Ok(())
    }
}
