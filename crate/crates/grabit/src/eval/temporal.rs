//! Temporal cross-validation: every row is scored by a model trained only
//! on rows whose outcome was already mature at that time.

use crate::data::{lower_median, Matrix};
use crate::error::{Error, Result};
use crate::eval::roc::{roc_auroc, RocCurve};

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalCvConfig {
    /// Minimum number of mature past rows required to score a row.
    pub min_train_size: usize,
    /// A past row is mature once its timestamp plus this lag is no later
    /// than the prediction row's timestamp.
    pub maturity_lag: f64,
}

impl Default for TemporalCvConfig {
    fn default() -> Self {
        Self {
            min_train_size: 100,
            maturity_lag: 61.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TemporalCvResult {
    /// Original row indices of the scored rows, in time order.
    pub row_indices: Vec<usize>,
    pub scores: Vec<f64>,
    pub labels: Vec<f64>,
    pub roc: RocCurve,
}

/// A fitted scorer produced by a model factory.
pub type Scorer = Box<dyn Fn(&[f64]) -> f64>;

/// Walk the rows in time order; for each row with at least
/// `min_train_size` mature past rows, fit the factory on those rows
/// (missing values imputed by the per-column lower median of the mature
/// data) and score the row. Rows sharing the same mature set share one
/// fit. Mature rows must be strictly earlier in time, so same-day rows
/// never train each other.
pub fn temporal_cv<F>(
    features: &Matrix,
    response: &[f64],
    labels: &[f64],
    timestamps: &[f64],
    factory: &mut F,
    config: &TemporalCvConfig,
) -> Result<TemporalCvResult>
where
    F: FnMut(&Matrix, &[f64]) -> Result<Scorer>,
{
    let n = features.n_rows();
    for (name, len) in [
        ("response", response.len()),
        ("labels", labels.len()),
        ("timestamps", timestamps.len()),
    ] {
        if len != n {
            return Err(Error::Data(format!(
                "{name} has length {len}, expected {n}"
            )));
        }
    }
    if config.min_train_size < 1 {
        return Err(Error::InvalidConfig("min_train_size must be >= 1".into()));
    }
    if !(config.maturity_lag >= 0.0) {
        return Err(Error::InvalidConfig(
            "maturity_lag must be nonnegative".into(),
        ));
    }

    // stable time order; the mature set of any row is then a prefix
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| timestamps[a].partial_cmp(&timestamps[b]).unwrap());
    let ts: Vec<f64> = order.iter().map(|&i| timestamps[i]).collect();

    // prefix length of the mature set for each sorted position
    let prefix_len = |s: usize| -> usize {
        let t_i = ts[s];
        let mature = ts.partition_point(|&t| t + config.maturity_lag <= t_i);
        let strictly_earlier = ts.partition_point(|&t| t < t_i);
        mature.min(strictly_earlier)
    };

    let mut row_indices = Vec::new();
    let mut scores = Vec::new();
    let mut out_labels = Vec::new();

    let mut s = 0;
    while s < n {
        let k = prefix_len(s);
        // group every row with the same mature prefix into one fit
        let mut group = vec![s];
        let mut e = s + 1;
        while e < n && prefix_len(e) == k {
            group.push(e);
            e += 1;
        }
        s = e;
        if k < config.min_train_size {
            continue;
        }

        // per-column lower medians of the mature data for imputation
        let medians: Vec<f64> = (0..features.n_cols())
            .map(|j| {
                let col: Vec<f64> = order[..k].iter().map(|&i| features.get(i, j)).collect();
                lower_median(&col).unwrap_or(0.0)
            })
            .collect();
        let impute = |row: &[f64]| -> Vec<f64> {
            row.iter()
                .enumerate()
                .map(|(j, &v)| if v.is_nan() { medians[j] } else { v })
                .collect()
        };

        let train_rows: Vec<Vec<f64>> = order[..k]
            .iter()
            .map(|&i| impute(features.row(i)))
            .collect();
        let train_features = Matrix::from_rows(&train_rows)?;
        let train_response: Vec<f64> = order[..k].iter().map(|&i| response[i]).collect();
        let scorer = factory(&train_features, &train_response)?;

        for &pos in &group {
            let i = order[pos];
            row_indices.push(i);
            scores.push(scorer(&impute(features.row(i))));
            out_labels.push(labels[i]);
        }
    }

    if scores.is_empty() {
        return Err(Error::EmptyTemporalResult);
    }
    let roc = roc_auroc(&scores, &out_labels)?;
    Ok(TemporalCvResult {
        row_indices,
        scores,
        labels: out_labels,
        roc,
    })
}
