//! Evaluation metrics: intersection-over-union and normalized RMSE.

use crate::geometry::Crs;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("grid headers differ: {0}")]
    GridMismatch(String),
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("series must contain at least one sample")]
    Empty,
    #[error("truth series has zero mean; NRMSE is undefined")]
    ZeroMeanNormalization,
}

/// A binary mask on a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskGrid {
    pub crs: Crs,
    pub origin: [f64; 2],
    pub pixel_size: [f64; 2],
    pub width: usize,
    pub height: usize,
    pub cells: Vec<u8>,
}

impl MaskGrid {
    fn header_matches(&self, other: &MaskGrid) -> bool {
        self.crs == other.crs
            && self.origin == other.origin
            && self.pixel_size == other.pixel_size
            && self.width == other.width
            && self.height == other.height
    }
}

/// Intersection over union of two grid masks. Two empty masks score 1.0
/// (a correct prediction of "nothing").
pub fn iou(pred: &MaskGrid, truth: &MaskGrid) -> Result<f64, MetricsError> {
    if !pred.header_matches(truth) {
        return Err(MetricsError::GridMismatch(format!(
            "{}x{} vs {}x{}",
            pred.width, pred.height, truth.width, truth.height
        )));
    }
    let mut intersection = 0usize;
    let mut union = 0usize;
    for (a, b) in pred.cells.iter().zip(&truth.cells) {
        let (a, b) = (*a != 0, *b != 0);
        if a && b {
            intersection += 1;
        }
        if a || b {
            union += 1;
        }
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(intersection as f64 / union as f64)
}

/// Intersection over union of two ordered sets; both empty scores 1.0.
pub fn set_iou<T: Ord>(pred: &std::collections::BTreeSet<T>, truth: &std::collections::BTreeSet<T>) -> f64 {
    let union = pred.union(truth).count();
    if union == 0 {
        return 1.0;
    }
    pred.intersection(truth).count() as f64 / union as f64
}

/// Normalized root mean square error: `sqrt(mean((pred − truth)²)) / mean(truth)`.
pub fn nrmse(predicted: &[f64], truth: &[f64]) -> Result<f64, MetricsError> {
    if predicted.len() != truth.len() {
        return Err(MetricsError::LengthMismatch(predicted.len(), truth.len()));
    }
    if truth.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    if mean == 0.0 {
        return Err(MetricsError::ZeroMeanNormalization);
    }
    let mse = predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / truth.len() as f64;
    Ok(mse.sqrt() / mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn grid(cells: Vec<u8>) -> MaskGrid {
        MaskGrid {
            crs: Crs::metric(0.0),
            origin: [0.0, 0.0],
            pixel_size: [10.0, 10.0],
            width: 3,
            height: 3,
            cells,
        }
    }

    #[test]
    fn iou_identical_and_disjoint() {
        let a = grid(vec![1, 1, 0, 1, 1, 0, 0, 0, 0]);
        assert_eq!(iou(&a, &a.clone()).unwrap(), 1.0);
        let b = grid(vec![0, 0, 0, 0, 0, 0, 0, 1, 1]);
        assert_eq!(iou(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn iou_worked_case_one_seventh() {
        // 2x2 block top-left vs 2x2 block bottom-right on a 3x3 grid:
        // they share the center cell; union is 7 cells.
        let top_left = grid(vec![0, 0, 0, 1, 1, 0, 1, 1, 0]);
        let bottom_right = grid(vec![0, 1, 1, 0, 1, 1, 0, 0, 0]);
        let v = iou(&top_left, &bottom_right).unwrap();
        assert!((v - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn iou_both_empty_is_one() {
        let empty = grid(vec![0; 9]);
        assert_eq!(iou(&empty, &empty.clone()).unwrap(), 1.0);
    }

    #[test]
    fn iou_header_mismatch() {
        let a = grid(vec![0; 9]);
        let mut b = grid(vec![0; 9]);
        b.pixel_size = [20.0, 20.0];
        assert!(matches!(iou(&a, &b), Err(MetricsError::GridMismatch(_))));
    }

    #[test]
    fn nrmse_hand_case() {
        // truth [2,4], predicted [3,5]: RMSE 1, mean 3.
        let v = nrmse(&[3.0, 5.0], &[2.0, 4.0]).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(nrmse(&[2.0, 4.0], &[2.0, 4.0]).unwrap(), 0.0);
        assert!(matches!(
            nrmse(&[1.0, -1.0], &[1.0, -1.0]),
            Err(MetricsError::ZeroMeanNormalization)
        ));
        assert!(matches!(nrmse(&[1.0], &[1.0, 2.0]), Err(MetricsError::LengthMismatch(1, 2))));
    }

    #[test]
    fn set_iou_cases() {
        let a: BTreeSet<i64> = [1, 2, 3].into();
        let b: BTreeSet<i64> = [2, 3, 4].into();
        assert_eq!(set_iou(&a, &b), 0.5);
        let empty: BTreeSet<i64> = BTreeSet::new();
        assert_eq!(set_iou(&empty, &empty), 1.0);
        assert_eq!(set_iou(&a, &empty), 0.0);
    }
}
