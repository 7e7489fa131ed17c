//! Aggregation of ROC curves across replications into pointwise
//! mean/quantile bands on a fixed FPR grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::roc::RocCurve;

pub const GRID_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocBand {
    /// 100 equally spaced FPR points spanning [0, 1].
    pub grid: Vec<f64>,
    pub mean_tpr: Vec<f64>,
    /// Pointwise 2.5% quantile.
    pub lower_tpr: Vec<f64>,
    /// Pointwise 97.5% quantile.
    pub upper_tpr: Vec<f64>,
    pub mean_auroc: f64,
    /// (2.5%, 97.5%) quantiles of the per-replication AUROCs.
    pub auroc_ci: (f64, f64),
}

/// Linear-interpolation quantile on a sorted sample (the convention used
/// by most statistical software for continuous data).
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[n - 1]
    }
}

/// TPR of a curve at a given FPR by linear interpolation; vertical jumps
/// evaluate to their upper end.
fn interp_tpr(points: &[(f64, f64)], g: f64) -> f64 {
    // last point with fpr <= g (points start at (0,0) so this exists)
    let i = points.partition_point(|p| p.0 <= g) - 1;
    if points[i].0 == g || i + 1 == points.len() {
        points[i].1
    } else {
        let (x0, y0) = points[i];
        let (x1, y1) = points[i + 1];
        y0 + (g - x0) / (x1 - x0) * (y1 - y0)
    }
}

/// Interpolate every curve onto the common grid and form pointwise means
/// and 2.5%/97.5% quantile bands, clipped to [0, 1].
pub fn aggregate_roc(curves: &[RocCurve]) -> Result<RocBand> {
    if curves.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let n = curves.len() as f64;
    let mut mean_tpr = Vec::with_capacity(GRID_POINTS);
    let mut lower_tpr = Vec::with_capacity(GRID_POINTS);
    let mut upper_tpr = Vec::with_capacity(GRID_POINTS);
    for &g in &grid {
        let mut vals: Vec<f64> = curves.iter().map(|c| interp_tpr(&c.points, g)).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        mean_tpr.push(vals.iter().sum::<f64>() / n);
        lower_tpr.push(quantile_sorted(&vals, 0.025).clamp(0.0, 1.0));
        upper_tpr.push(quantile_sorted(&vals, 0.975).clamp(0.0, 1.0));
    }
    let mut aurocs: Vec<f64> = curves.iter().map(|c| c.auroc).collect();
    aurocs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean_auroc = aurocs.iter().sum::<f64>() / n;
    let auroc_ci = (
        quantile_sorted(&aurocs, 0.025),
        quantile_sorted(&aurocs, 0.975),
    );
    Ok(RocBand {
        grid,
        mean_tpr,
        lower_tpr,
        upper_tpr,
        mean_auroc,
        auroc_ci,
    })
}
