//! Binary ground-truth grids from box annotations and map polygons.
//!
//! A cell is set when its center lies inside a footprint. Containment is
//! closed: centers exactly on an edge count as inside.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, GridConfig};

/// An annotated 3D box in the vehicle frame. `size` is (length, width,
/// height); length runs along the heading given by `yaw`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub center: [f64; 3],
    pub size: [f64; 3],
    pub yaw: f64,
    #[serde(rename = "label")]
    pub class_label: String,
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let wrapped = angle.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

impl Box3D {
    pub fn new(
        center: [f64; 3],
        size: [f64; 3],
        yaw: f64,
        class_label: impl Into<String>,
    ) -> Result<Self> {
        let b = Self {
            center,
            size,
            yaw: wrap_angle(yaw),
            class_label: class_label.into(),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .center
            .iter()
            .chain([self.yaw].iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("box center and yaw must be finite"));
        }
        if self.size.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid(format!(
                "box size must be positive, got {:?}",
                self.size
            )));
        }
        Ok(())
    }

    /// Footprint corners, counter-clockwise.
    pub fn footprint(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.yaw.sin_cos();
        let (hl, hw) = (self.size[0] / 2.0, self.size[1] / 2.0);
        [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)].map(|(lx, ly)| {
            [
                self.center[0] + c * lx - s * ly,
                self.center[1] + s * lx + c * ly,
            ]
        })
    }

    /// Whether `(x, y)` lies in the closed footprint.
    pub fn footprint_contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.yaw.sin_cos();
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        let lx = c * dx + s * dy;
        let ly = -s * dx + c * dy;
        lx.abs() <= self.size[0] / 2.0 && ly.abs() <= self.size[1] / 2.0
    }
}

/// A closed map region, e.g. drivable area, in the vehicle frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPolygon {
    pub vertices: Vec<[f64; 2]>,
    #[serde(rename = "label")]
    pub class_label: String,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    cross(a, b, p) == 0.0
        && p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(a, c, d) || on_segment(b, c, d) || on_segment(c, a, b) || on_segment(d, a, b)
}

impl MapPolygon {
    pub fn new(vertices: Vec<[f64; 2]>, class_label: impl Into<String>) -> Result<Self> {
        let p = Self {
            vertices,
            class_label: class_label.into(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks vertex count, finiteness and that no two edges cross or touch
    /// except consecutive edges at their shared vertex.
    pub fn validate(&self) -> Result<()> {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return Err(Error::invalid(format!(
                "polygon `{}` has {n} vertices, need ≥ 3",
                self.class_label
            )));
        }
        if v.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::invalid(format!(
                "polygon `{}` has non-finite vertices",
                self.class_label
            )));
        }
        let edge = |i: usize| (v[i], v[(i + 1) % n]);
        for i in 0..n {
            let (a, b) = edge(i);
            if a == b {
                return Err(Error::invalid(format!(
                    "polygon `{}` has a repeated vertex at index {i}",
                    self.class_label
                )));
            }
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (c, d) = edge(j);
                let crosses = if adjacent {
                    // consecutive edges may only share their common vertex
                    let (shared, far_a, far_b) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                    cross(shared, far_a, far_b) == 0.0
                        && (far_a[0] - shared[0]) * (far_b[0] - shared[0])
                            + (far_a[1] - shared[1]) * (far_b[1] - shared[1])
                            > 0.0
                } else {
                    segments_intersect(a, b, c, d)
                };
                if crosses {
                    return Err(Error::invalid(format!(
                        "polygon `{}` is self-intersecting (edges {i} and {j})",
                        self.class_label
                    )));
                }
            }
        }
        Ok(())
    }

    /// Even-odd containment with a closed boundary.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let v = &self.vertices;
        let n = v.len();
        let mut inside = false;
        for i in 0..n {
            let a = v[i];
            let b = v[(i + 1) % n];
            if on_segment([x, y], a, b) {
                return true;
            }
            if (a[1] > y) != (b[1] > y) {
                let x_cross = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn bounds(&self) -> [f64; 4] {
        self.vertices.iter().fold(
            [
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
            ],
            |b, p| {
                [
                    b[0].min(p[0]),
                    b[1].max(p[0]),
                    b[2].min(p[1]),
                    b[3].max(p[1]),
                ]
            },
        )
    }
}

/// Index range of cells whose centers can fall in `[lo, hi]` along one axis.
fn center_range(lo: f64, hi: f64, min: f64, cell: f64, count: usize) -> std::ops::Range<usize> {
    let first = ((lo - min) / cell - 0.5).floor().max(0.0);
    let last = ((hi - min) / cell - 0.5).ceil() + 1.0;
    let last = last.clamp(0.0, count as f64);
    if first >= last {
        return 0..0;
    }
    first as usize..last as usize
}

fn paint(
    grid: &mut BinaryGrid,
    config: &GridConfig,
    bounds: [f64; 4],
    contains: impl Fn(f64, f64) -> bool,
) {
    for i in center_range(
        bounds[0],
        bounds[1],
        config.x_min,
        config.cell,
        config.x_cells(),
    ) {
        for j in center_range(
            bounds[2],
            bounds[3],
            config.y_min,
            config.cell,
            config.y_cells(),
        ) {
            let (x, y) = config.cell_center(i, j);
            if contains(x, y) {
                grid.set(i, j, true);
            }
        }
    }
}

/// Marks every cell whose center is inside the footprint of some box.
pub fn rasterize_boxes(boxes: &[Box3D], config: &GridConfig) -> BinaryGrid {
    let mut grid = BinaryGrid::for_config(config);
    for b in boxes {
        let fp = b.footprint();
        let bounds = fp.iter().fold(
            [
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
            ],
            |acc, p| {
                [
                    acc[0].min(p[0]),
                    acc[1].max(p[0]),
                    acc[2].min(p[1]),
                    acc[3].max(p[1]),
                ]
            },
        );
        paint(&mut grid, config, bounds, |x, y| b.footprint_contains(x, y));
    }
    grid
}

/// Marks every cell whose center is inside some polygon.
pub fn rasterize_polygons(polys: &[MapPolygon], config: &GridConfig) -> Result<BinaryGrid> {
    for p in polys {
        p.validate()?;
    }
    let mut grid = BinaryGrid::for_config(config);
    for p in polys {
        paint(&mut grid, config, p.bounds(), |x, y| p.contains(x, y));
    }
    Ok(grid)
}

/// Box and polygon annotations for one sample.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Annotations {
    #[serde(default)]
    pub boxes: Vec<Box3D>,
    #[serde(default)]
    pub polygons: Vec<MapPolygon>,
}

impl Annotations {
    /// Distinct labels in first-seen order.
    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let all = self
            .boxes
            .iter()
            .map(|b| &b.class_label)
            .chain(self.polygons.iter().map(|p| &p.class_label));
        for l in all {
            if !out.contains(l) {
                out.push(l.clone());
            }
        }
        out
    }
}

/// Maps target classes to the source labels grouped under them.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassGrouping {
    groups: Vec<(String, Vec<String>)>,
}

impl ClassGrouping {
    pub fn new(groups: Vec<(String, Vec<String>)>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::invalid("class grouping defines no classes"));
        }
        for (i, (name, _)) in groups.iter().enumerate() {
            if groups[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::invalid(format!("class `{name}` is defined twice")));
            }
        }
        Ok(Self { groups })
    }

    /// One class per distinct label, each grouping only itself.
    pub fn identity(labels: &[String]) -> Result<Self> {
        Self::new(
            labels
                .iter()
                .map(|l| (l.clone(), vec![l.clone()]))
                .collect(),
        )
    }

    /// Parses `{target_class: [source_labels]}`, keeping the file's class order.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("class grouping: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::invalid("class grouping must be a JSON object"))?;
        let groups = obj
            .iter()
            .map(|(k, v)| {
                let sources: Vec<String> = serde_json::from_value(v.clone())
                    .map_err(|e| Error::invalid(format!("class `{k}`: {e}")))?;
                Ok((k.clone(), sources))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(groups)
    }

    pub fn classes(&self) -> Vec<String> {
        self.groups.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn groups(&self) -> &[(String, Vec<String>)] {
        &self.groups
    }
}

/// A `C × X × Y` grid of class scores in `[0, 1]`; ground truth is binary.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticGrid {
    classes: Vec<String>,
    config: GridConfig,
    values: Vec<f32>,
}

impl SemanticGrid {
    pub fn new(classes: Vec<String>, config: GridConfig, values: Vec<f32>) -> Result<Self> {
        config.validate()?;
        if values.len() != classes.len() * config.num_cells() {
            return Err(Error::invalid(format!(
                "semantic grid has {} values, expected {}×{}×{}",
                values.len(),
                classes.len(),
                config.x_cells(),
                config.y_cells()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!(
                "semantic grid value {v} is outside [0, 1]"
            )));
        }
        Ok(Self {
            classes,
            config,
            values,
        })
    }

    pub fn from_binary(
        classes: Vec<String>,
        config: GridConfig,
        grids: &[BinaryGrid],
    ) -> Result<Self> {
        if grids.len() != classes.len() {
            return Err(Error::invalid("one binary grid per class is required"));
        }
        let values = grids
            .iter()
            .flat_map(|g| g.cells().iter().map(|&c| if c { 1.0 } else { 0.0 }))
            .collect();
        Self::new(classes, config, values)
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Class `c` thresholded: a cell is set when its score is `≥ threshold`.
    pub fn class_mask(&self, c: usize, threshold: f32) -> BinaryGrid {
        let n = self.config.num_cells();
        let cells = self.values[c * n..(c + 1) * n]
            .iter()
            .map(|&v| v >= threshold)
            .collect();
        BinaryGrid::from_cells(self.config.x_cells(), self.config.y_cells(), cells)
            .expect("layout checked at construction")
    }
}

/// Rasterizes annotations into one binary layer per grouped class.
pub fn rasterize_semantic(
    annotations: &Annotations,
    grouping: &ClassGrouping,
    config: &GridConfig,
) -> Result<SemanticGrid> {
    config.validate()?;
    let mut layers = Vec::with_capacity(grouping.groups.len());
    for (_, sources) in &grouping.groups {
        let boxes: Vec<Box3D> = annotations
            .boxes
            .iter()
            .filter(|b| sources.contains(&b.class_label))
            .cloned()
            .collect();
        let polys: Vec<MapPolygon> = annotations
            .polygons
            .iter()
            .filter(|p| sources.contains(&p.class_label))
            .cloned()
            .collect();
        let mut layer = rasterize_boxes(&boxes, config);
        layer.union_with(&rasterize_polygons(&polys, config)?)?;
        layers.push(layer);
    }
    SemanticGrid::from_binary(grouping.classes(), *config, &layers)
}
