//! Row-major feature matrix, dataset container, and CSV ingestion.

use std::path::Path;

use crate::error::{Error, Result};
use crate::loss::CensoringBounds;

/// Dense row-major matrix of f64 feature values. Missing values are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
}

impl Matrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n_cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for r in rows {
            if r.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            data,
            n_rows: rows.len(),
            n_cols,
        })
    }

    pub fn from_vec(data: Vec<f64>, n_rows: usize, n_cols: usize) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::LengthMismatch {
                expected: n_rows * n_cols,
                got: data.len(),
            });
        }
        Ok(Self {
            data,
            n_rows,
            n_cols,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            data: vec![0.0; n_rows * n_cols],
            n_rows,
            n_cols,
        }
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    /// Matrix restricted to the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            data,
            n_rows: rows.len(),
            n_cols: self.n_cols,
        }
    }
}

/// Features plus observed response, with optional timestamps for the
/// temporal cross-validation protocol.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Matrix,
    pub response: Vec<f64>,
    pub timestamps: Option<Vec<f64>>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(features: Matrix, response: Vec<f64>) -> Result<Self> {
        if features.n_rows() != response.len() {
            return Err(Error::LengthMismatch {
                expected: features.n_rows(),
                got: response.len(),
            });
        }
        let feature_names = (0..features.n_cols()).map(|j| format!("x{}", j + 1)).collect();
        Ok(Self {
            features,
            response,
            timestamps: None,
            feature_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    /// Snap responses onto censoring bounds; returns the snap count and
    /// fails on responses outside the bounds after snapping.
    pub fn snap_responses(&mut self, bounds: &CensoringBounds) -> Result<usize> {
        let mut snapped = 0;
        for y in &mut self.response {
            let s = bounds.snap(*y);
            if s != *y {
                snapped += 1;
                *y = s;
            }
            bounds.status(*y)?;
        }
        Ok(snapped)
    }

    /// Natural log transform of the named columns; errors on any value <= 0
    /// naming the offending column. Missing (NaN) cells pass through.
    pub fn log_transform(&mut self, columns: &[String]) -> Result<()> {
        for name in columns {
            let j = self
                .feature_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Data(format!("unknown column '{name}'")))?;
            for i in 0..self.features.n_rows() {
                let v = self.features.get(i, j);
                if v.is_nan() {
                    continue;
                }
                if v <= 0.0 {
                    return Err(Error::Data(format!(
                        "column '{name}' contains non-positive value {v}; log transform undefined"
                    )));
                }
                self.features.set(i, j, v.ln());
            }
        }
        Ok(())
    }
}

fn parse_cell(raw: &str, col: &str, line: usize) -> Result<f64> {
    let t = raw.trim();
    if t.is_empty() || t == "NA" {
        return Ok(f64::NAN);
    }
    t.parse::<f64>()
        .map_err(|_| Error::Data(format!("non-numeric value '{t}' in column '{col}' (record {line})")))
}

/// Read a CSV with a header row. The target column becomes the response,
/// the optional timestamp column the time axis, and every remaining
/// column a feature. Empty cells and "NA" are missing values.
pub fn read_csv(path: &Path, target: &str, time_col: Option<&str>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let target_idx = headers
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| Error::Data(format!("target column '{target}' not found")))?;
    let time_idx = match time_col {
        Some(tc) => Some(
            headers
                .iter()
                .position(|h| h == tc)
                .ok_or_else(|| Error::Data(format!("timestamp column '{tc}' not found")))?,
        ),
        None => None,
    };
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&j| j != target_idx && Some(j) != time_idx)
        .collect();
    let feature_names: Vec<String> = feature_idx.iter().map(|&j| headers[j].clone()).collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut response = Vec::new();
    let mut times = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != headers.len() {
            return Err(Error::Data(format!(
                "record {} has {} fields, expected {}",
                line + 1,
                rec.len(),
                headers.len()
            )));
        }
        let y = parse_cell(&rec[target_idx], target, line + 1)?;
        if y.is_nan() {
            return Err(Error::Data(format!(
                "missing target value in record {}",
                line + 1
            )));
        }
        response.push(y);
        if let Some(ti) = time_idx {
            let t = parse_cell(&rec[ti], time_col.unwrap(), line + 1)?;
            if t.is_nan() {
                return Err(Error::Data(format!(
                    "missing timestamp in record {}",
                    line + 1
                )));
            }
            times.push(t);
        }
        let row: Result<Vec<f64>> = feature_idx
            .iter()
            .map(|&j| parse_cell(&rec[j], &headers[j], line + 1))
            .collect();
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let features = Matrix::from_rows(&rows)?;
    let mut ds = Dataset::new(features, response)?;
    ds.feature_names = feature_names;
    if time_idx.is_some() {
        ds.timestamps = Some(times);
    }
    Ok(ds)
}

/// Read a feature-only CSV (every numeric column is a feature). May be
/// empty apart from the header.
pub fn read_feature_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != headers.len() {
            return Err(Error::Data(format!(
                "record {} has {} fields, expected {}",
                line + 1,
                rec.len(),
                headers.len()
            )));
        }
        let row: Result<Vec<f64>> = (0..headers.len())
            .map(|j| parse_cell(&rec[j], &headers[j], line + 1))
            .collect();
        rows.push(row?);
    }
    Ok((headers, rows))
}

/// Lower median: for even counts the smaller of the two central values.
/// Deterministic and independent of input order. NaNs are ignored;
/// returns None when no finite value exists.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(v[(v.len() - 1) / 2])
}
