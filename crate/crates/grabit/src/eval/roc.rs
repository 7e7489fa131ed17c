//! ROC curves and AUROC from a descending-threshold sweep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ROC curve from (0,0) to (1,1); tied scores are collapsed into single
/// steps so the trapezoidal area equals the Mann-Whitney statistic with
/// ties counted one half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// (false positive rate, true positive rate) pairs.
    pub points: Vec<(f64, f64)>,
    pub auroc: f64,
}

pub(crate) fn check_labels(labels: &[f64]) -> Result<(usize, usize)> {
    let mut pos = 0;
    let mut neg = 0;
    for &y in labels {
        if y == 1.0 {
            pos += 1;
        } else if y == 0.0 {
            neg += 1;
        } else {
            return Err(Error::NonBinaryResponse(y));
        }
    }
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

/// ROC curve and AUROC for scores against binary labels.
pub fn roc_auroc(scores: &[f64], labels: &[f64]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    for &s in scores {
        if s.is_nan() {
            return Err(Error::NonFinite("NaN score".into()));
        }
    }
    let (pos, neg) = check_labels(labels)?;

    // descending-threshold sweep
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = Vec::with_capacity(scores.len() + 2);
    points.push((0.0, 0.0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        // collapse the whole tie group into one step
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1.0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    debug_assert_eq!(points.last(), Some(&(1.0, 1.0)));

    // trapezoidal area
    let mut auroc = 0.0;
    for w in points.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        auroc += (x1 - x0) * 0.5 * (y0 + y1);
    }
    Ok(RocCurve { points, auroc })
}
