use crate::{Error, Result};

use super::Mask;

/// Pixelwise scores of a predicted binary map against ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutMetrics {
    pub iou: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl LayoutMetrics {
    pub const CSV_HEADER: &'static str = "IoU,Acc,P,R,F1";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.iou, self.accuracy, self.precision, self.recall, self.f1
        )
    }
}

/// IoU, accuracy, precision, recall and F1 of `pred` against `gt`.
///
/// Ratios with an empty denominator are 1 when both maps are empty and 0
/// otherwise.
pub fn layout_metrics(pred: &Mask, gt: &Mask) -> Result<LayoutMetrics> {
    if pred.grid != gt.grid {
        return Err(Error::domain(format!(
            "prediction is {}×{} but ground truth is {}×{}",
            pred.grid.width, pred.grid.height, gt.grid.width, gt.grid.height
        )));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for (&p, &g) in pred.data.iter().zip(&gt.data) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let both_empty = tp + fp + fn_ == 0;
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            if both_empty {
                1.0
            } else {
                0.0
            }
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(LayoutMetrics {
        iou: ratio(tp, tp + fp + fn_),
        accuracy: (tp + tn) as f64 / (tp + fp + fn_ + tn) as f64,
        precision,
        recall,
        f1,
    })
}
