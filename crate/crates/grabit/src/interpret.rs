//! Interpretation tools for boosted ensembles: split-gain variable
//! importance, one- and two-dimensional partial dependence, local partial
//! dependence around a single observation, and local importance scores.

use crate::boost::BoostedEnsemble;
use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::eval::band::quantile_sorted;

/// Per-variable importance scores, sorted descending (ties by variable
/// index ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    /// (variable index, score) pairs.
    pub scores: Vec<(usize, f64)>,
}

impl ImportanceReport {
    /// Scores re-ordered by variable index.
    pub fn by_variable(&self, p: usize) -> Vec<f64> {
        let mut out = vec![0.0; p];
        for &(i, s) in &self.scores {
            out[i] = s;
        }
        out
    }
}

/// Split-gain importance: per tree, sum the SSE reduction of every split
/// on each variable; average over the ensemble's trees.
pub fn variable_importance(model: &BoostedEnsemble, p: usize) -> ImportanceReport {
    let mut totals = vec![0.0; p];
    for tree in &model.trees {
        tree.for_each_split(|feature, gain| {
            totals[feature] += gain;
        });
    }
    let m = model.trees.len().max(1) as f64;
    let mut scores: Vec<(usize, f64)> = totals
        .into_iter()
        .map(|t| t / m)
        .enumerate()
        .collect();
    scores.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    ImportanceReport { scores }
}

/// Partial dependence over one or two variables on a rectangular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialDependence {
    pub vars: Vec<usize>,
    /// One evaluation grid per variable, spanning its training range.
    pub grids: Vec<Vec<f64>>,
    /// Averaged predictions; for two variables, row-major over
    /// (grid_0 x grid_1).
    pub values: Vec<f64>,
}

fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 || lo == hi {
        return vec![lo];
    }
    (0..k)
        .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
        .collect()
}

fn column_range(data: &Matrix, j: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..data.n_rows() {
        let v = data.get(i, j);
        if !v.is_nan() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

/// Average partial dependence: for each grid point of the chosen
/// variables, average the latent prediction over every data row with
/// those coordinates overridden.
pub fn partial_dependence(
    model: &BoostedEnsemble,
    data: &Matrix,
    vars: &[usize],
    grid_size: usize,
) -> Result<PartialDependence> {
    if data.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if vars.is_empty() || vars.len() > 2 {
        return Err(Error::InvalidConfig(
            "partial dependence takes one or two variables".into(),
        ));
    }
    if grid_size < 1 {
        return Err(Error::InvalidConfig("grid_size must be >= 1".into()));
    }
    for &v in vars {
        if v >= data.n_cols() {
            return Err(Error::DimensionMismatch {
                expected: data.n_cols(),
                got: v,
            });
        }
    }
    let grids: Vec<Vec<f64>> = vars
        .iter()
        .map(|&v| {
            let (lo, hi) = column_range(data, v);
            linspace(lo, hi, grid_size)
        })
        .collect();
    let n = data.n_rows() as f64;
    let mut values = Vec::new();
    let mut row_buf = vec![0.0; data.n_cols()];
    let cells: Vec<Vec<f64>> = if vars.len() == 1 {
        grids[0].iter().map(|&g| vec![g]).collect()
    } else {
        let mut out = Vec::with_capacity(grids[0].len() * grids[1].len());
        for &a in &grids[0] {
            for &b in &grids[1] {
                out.push(vec![a, b]);
            }
        }
        out
    };
    for cell in &cells {
        let mut acc = 0.0;
        for i in 0..data.n_rows() {
            row_buf.copy_from_slice(data.row(i));
            for (k, &v) in vars.iter().enumerate() {
                row_buf[v] = cell[k];
            }
            acc += model.predict_latent(&row_buf)?;
        }
        values.push(acc / n);
    }
    Ok(PartialDependence {
        vars: vars.to_vec(),
        grids,
        values,
    })
}

/// Interval choices for local interpretation sweeps.
#[derive(Debug, Clone, PartialEq)]
pub enum IntervalStrategy {
    /// (i) minimum and maximum of the data.
    DataRange,
    /// (ii) 2.5% and 97.5% quantiles of the data.
    WinsorizedRange,
    /// (iii) x'_s plus/minus one standard deviation of the data.
    LocalSd,
    /// (iv) x'_s plus/minus a fixed positive delta (discouraged: tree
    /// ensembles can be locally flat or very rough at small scales).
    LocalDelta(f64),
}

fn column_sorted_finite(data: &Matrix, j: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..data.n_rows())
        .map(|i| data.get(i, j))
        .filter(|x| !x.is_nan())
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn interval_for(
    strategy: &IntervalStrategy,
    data: &Matrix,
    var: usize,
    center: f64,
) -> Result<(f64, f64)> {
    Ok(match strategy {
        IntervalStrategy::DataRange => column_range(data, var),
        IntervalStrategy::WinsorizedRange => {
            let sorted = column_sorted_finite(data, var);
            if sorted.is_empty() {
                return Err(Error::EmptyDataset);
            }
            (
                quantile_sorted(&sorted, 0.025),
                quantile_sorted(&sorted, 0.975),
            )
        }
        IntervalStrategy::LocalSd => {
            let sorted = column_sorted_finite(data, var);
            if sorted.is_empty() {
                return Err(Error::EmptyDataset);
            }
            let n = sorted.len() as f64;
            let mean = sorted.iter().sum::<f64>() / n;
            let sd = (sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
            (center - sd, center + sd)
        }
        IntervalStrategy::LocalDelta(delta) => {
            if !(*delta > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "local delta must be positive, got {delta}"
                )));
            }
            (center - delta, center + delta)
        }
    })
}

/// Local partial dependence curve: the prediction as one variable sweeps
/// its interval while all other coordinates stay at x'.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPdCurve {
    pub var: usize,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// (x'_s, prediction at x') — always on the curve exactly.
    pub marker: (f64, f64),
}

pub fn local_partial_dependence(
    model: &BoostedEnsemble,
    data: &Matrix,
    x_prime: &[f64],
    var: usize,
    strategy: &IntervalStrategy,
    grid_size: usize,
) -> Result<LocalPdCurve> {
    if x_prime.len() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            got: x_prime.len(),
        });
    }
    if grid_size < 2 {
        return Err(Error::InvalidConfig("grid_size must be >= 2".into()));
    }
    let (lo, hi) = interval_for(strategy, data, var, x_prime[var])?;
    if !(hi > lo) {
        return Err(Error::DegenerateInterval(var));
    }
    // the sweep always includes x'_s itself so the curve passes exactly
    // through the prediction at x'
    let mut grid = linspace(lo, hi, grid_size);
    let xs = x_prime[var];
    if !grid.contains(&xs) {
        let pos = grid.partition_point(|&g| g < xs);
        grid.insert(pos, xs);
    }
    let mut row = x_prime.to_vec();
    let mut values = Vec::with_capacity(grid.len());
    for &g in &grid {
        row[var] = g;
        values.push(model.predict_latent(&row)?);
    }
    let marker = (xs, model.predict_latent(x_prime)?);
    Ok(LocalPdCurve {
        var,
        grid,
        values,
        marker,
    })
}

/// Local importance: per variable, the range (or winsorized range) of the
/// local partial dependence values over the strategy's interval.
/// Zero-width intervals score 0.
pub fn local_importance(
    model: &BoostedEnsemble,
    data: &Matrix,
    x_prime: &[f64],
    strategy: &IntervalStrategy,
    winsorize: bool,
    grid_size: usize,
) -> Result<Vec<f64>> {
    if x_prime.len() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            got: x_prime.len(),
        });
    }
    if grid_size < 2 {
        return Err(Error::InvalidConfig("grid_size must be >= 2".into()));
    }
    let mut scores = Vec::with_capacity(model.n_features());
    let mut row = x_prime.to_vec();
    for var in 0..model.n_features() {
        let (lo, hi) = interval_for(strategy, data, var, x_prime[var])?;
        if !(hi > lo) {
            scores.push(0.0);
            continue;
        }
        let mut grid = linspace(lo, hi, grid_size);
        let xs = x_prime[var];
        if xs >= lo && xs <= hi && !grid.contains(&xs) {
            let pos = grid.partition_point(|&g| g < xs);
            grid.insert(pos, xs);
        }
        let mut vals = Vec::with_capacity(grid.len());
        for &g in &grid {
            row[var] = g;
            vals.push(model.predict_latent(&row)?);
        }
        row[var] = x_prime[var];
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let score = if winsorize {
            quantile_sorted(&vals, 0.975) - quantile_sorted(&vals, 0.025)
        } else {
            vals[vals.len() - 1] - vals[0]
        };
        scores.push(score);
    }
    Ok(scores)
}
