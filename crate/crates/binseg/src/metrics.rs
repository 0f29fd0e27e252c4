//! Confusion-count evaluation of binary masks.
//!
//! `+1` is the positive class throughout. [`dice`] and [`js`] are the two
//! headline scores; [`js`] is the ratio of true positives to predicted
//! positives (precision). [`jaccard`] (intersection over union) is also
//! provided for comparison since the two are easy to mix up.

use crate::error::{Error, Result};
use crate::grid::{ensure_same_shape, LevelSetField};
use crate::scalar::Scalar;

/// Pixel tallies comparing a predicted mask against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionCounts {
    /// Predicted +1, truth +1.
    pub true_pos: u64,
    /// Predicted -1, truth -1.
    pub true_neg: u64,
    /// Predicted +1, truth -1.
    pub false_pos: u64,
    /// Predicted -1, truth +1.
    pub false_neg: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }
}

/// Tallies agreement between two binary masks of equal size.
pub fn confusion<T: Scalar>(
    pred: &LevelSetField<T>,
    truth: &LevelSetField<T>,
) -> Result<ConfusionCounts> {
    ensure_same_shape(pred.width(), pred.height(), truth.width(), truth.height())?;
    for mask in [pred, truth] {
        if let Some(value) = mask.first_non_binary() {
            return Err(Error::NonBinaryMask {
                value: value.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let mut counts = ConfusionCounts {
        true_pos: 0,
        true_neg: 0,
        false_pos: 0,
        false_neg: 0,
    };
    for (&p, &t) in pred.values().iter().zip(truth.values()) {
        match (p == T::one(), t == T::one()) {
            (true, true) => counts.true_pos += 1,
            (false, false) => counts.true_neg += 1,
            (true, false) => counts.false_pos += 1,
            (false, true) => counts.false_neg += 1,
        }
    }
    Ok(counts)
}

/// Dice coefficient: `2 TP / (TP + FP + TP + FN)`.
pub fn dice(c: &ConfusionCounts) -> Result<f64> {
    let denom = c.true_pos + c.false_pos + c.true_pos + c.false_neg;
    if denom == 0 {
        return Err(Error::UndefinedMetric {
            reason: "no positives anywhere (dice)",
        });
    }
    Ok(2.0 * c.true_pos as f64 / denom as f64)
}

/// Precision-style score: `TP / (TP + FP)`.
pub fn js(c: &ConfusionCounts) -> Result<f64> {
    let denom = c.true_pos + c.false_pos;
    if denom == 0 {
        return Err(Error::UndefinedMetric {
            reason: "no predicted positives (js)",
        });
    }
    Ok(c.true_pos as f64 / denom as f64)
}

/// Jaccard index (intersection over union): `TP / (TP + FP + FN)`.
pub fn jaccard(c: &ConfusionCounts) -> Result<f64> {
    let denom = c.true_pos + c.false_pos + c.false_neg;
    if denom == 0 {
        return Err(Error::UndefinedMetric {
            reason: "no positives anywhere (jaccard)",
        });
    }
    Ok(c.true_pos as f64 / denom as f64)
}
