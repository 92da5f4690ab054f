//! Intersection-over-union and the weighted binary cross-entropy.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::BinaryGrid;

/// Positive-class weight used by default for the cross-entropy.
pub const DEFAULT_POS_WEIGHT: f64 = 2.13;

/// Probability threshold applied to predictions before computing IoU.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Cell counts behind one IoU value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub intersection: u64,
    pub union: u64,
    pub pred_positive: u64,
    pub gt_positive: u64,
}

impl CellCounts {
    pub fn from_grids(pred: &BinaryGrid, gt: &BinaryGrid) -> Result<Self> {
        pred.check_shape(gt)?;
        let mut c = CellCounts::default();
        for (&p, &g) in pred.cells().iter().zip(gt.cells()) {
            c.intersection += (p && g) as u64;
            c.union += (p || g) as u64;
            c.pred_positive += p as u64;
            c.gt_positive += g as u64;
        }
        Ok(c)
    }

    /// `None` when the union is empty: there is nothing to score.
    pub fn iou(&self) -> Option<f64> {
        (self.union > 0).then(|| self.intersection as f64 / self.union as f64)
    }

    pub fn merge(&mut self, other: &CellCounts) {
        self.intersection += other.intersection;
        self.union += other.union;
        self.pred_positive += other.pred_positive;
        self.gt_positive += other.gt_positive;
    }
}

/// `|pred ∧ gt| / |pred ∨ gt|`, or `None` if both grids are empty.
pub fn iou(pred: &BinaryGrid, gt: &BinaryGrid) -> Result<Option<f64>> {
    Ok(CellCounts::from_grids(pred, gt)?.iou())
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Mean weighted binary cross-entropy over cells, evaluated from logits:
/// `pos_weight · y · softplus(-l) + (1 - y) · softplus(l)`, which equals
/// `-[pos_weight · y · ln σ(l) + (1 - y) · ln(1 - σ(l))]` without overflow.
pub fn bce_loss(logits: &[f64], gt: &BinaryGrid, pos_weight: f64) -> Result<f64> {
    if logits.len() != gt.cells().len() {
        return Err(Error::invalid(format!(
            "{} logits for a {}×{} grid",
            logits.len(),
            gt.x_cells(),
            gt.y_cells()
        )));
    }
    if !(pos_weight.is_finite() && pos_weight > 0.0) {
        return Err(Error::invalid(format!(
            "pos_weight must be positive, got {pos_weight}"
        )));
    }
    if let Some(i) = logits.iter().position(|l| !l.is_finite()) {
        return Err(Error::invalid(format!("logit at index {i} is not finite")));
    }
    if logits.is_empty() {
        return Err(Error::invalid("cannot average a loss over an empty grid"));
    }
    let total: f64 = logits
        .iter()
        .zip(gt.cells())
        .map(|(&l, &y)| {
            if y {
                pos_weight * softplus(-l)
            } else {
                softplus(l)
            }
        })
        .sum();
    Ok(total / logits.len() as f64)
}

/// Per-class IoU, aggregated from summed cell counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<String>,
    /// `null` marks a class with an empty union.
    pub per_class_iou: BTreeMap<String, Option<f64>>,
    pub cell_counts: BTreeMap<String, CellCounts>,
}

impl EvalReport {
    pub fn new(classes: Vec<String>) -> Self {
        let cell_counts = classes
            .iter()
            .map(|c| (c.clone(), CellCounts::default()))
            .collect();
        let per_class_iou = classes.iter().map(|c| (c.clone(), None)).collect();
        Self {
            classes,
            per_class_iou,
            cell_counts,
        }
    }

    /// Adds one sample's grids for `class`.
    pub fn add(&mut self, class: &str, pred: &BinaryGrid, gt: &BinaryGrid) -> Result<()> {
        let counts = CellCounts::from_grids(pred, gt)?;
        let entry = self
            .cell_counts
            .get_mut(class)
            .ok_or_else(|| Error::invalid(format!("unknown class `{class}`")))?;
        entry.merge(&counts);
        self.per_class_iou.insert(class.to_string(), entry.iou());
        Ok(())
    }

    /// A markdown-style table row: the label then each class IoU as a
    /// percentage, `-` where undefined.
    pub fn table_row(&self, label: &str) -> String {
        let mut row = format!("| {label} |");
        for c in &self.classes {
            match self.per_class_iou.get(c).copied().flatten() {
                Some(v) => write!(row, " {:.2}% |", 100.0 * v).unwrap(),
                None => row.push_str(" - |"),
            }
        }
        row
    }

    pub fn table_header(&self) -> String {
        let mut head = String::from("| |");
        let mut rule = String::from("|---|");
        for c in &self.classes {
            write!(head, " {c} |").unwrap();
            rule.push_str("---|");
        }
        format!("{head}\n{rule}")
    }
}
