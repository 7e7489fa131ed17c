//! Depth-limited least-squares regression trees: the boosting base learner.
//!
//! Split search is exact greedy over all midpoint thresholds. Sorted row
//! orders are computed once per fit and partitioned down the tree, so no
//! per-node sorting is needed.

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Maximum number of split levels below the root.
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl TreeConfig {
    pub fn new(max_depth: usize) -> Self {
        Self {
            max_depth,
            min_samples_leaf: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::InvalidConfig("max_depth must be >= 1".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidConfig("min_samples_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        /// SSE reduction achieved by this split on the fit targets.
        gain: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        /// Training row indices, retained until the Newton leaf update.
        #[serde(skip)]
        rows: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

struct Builder<'a> {
    features: &'a Matrix,
    targets: &'a [f64],
    config: TreeConfig,
    nodes: Vec<Node>,
}

impl<'a> Builder<'a> {
    /// Best split of a node given per-feature sorted row lists. Ties in
    /// gain break to the lowest feature index, then lowest threshold,
    /// enforced by strict improvement during the ordered scan.
    fn best_split(&self, sorted: &[Vec<u32>], sum: f64, gain_eps: f64) -> Option<(usize, f64, f64)> {
        let n = sorted[0].len();
        let msl = self.config.min_samples_leaf;
        let total = sum * sum / n as f64;
        let mut best: Option<(usize, f64, f64)> = None;
        let mut best_gain = gain_eps;
        for (j, order) in sorted.iter().enumerate() {
            let mut lsum = 0.0;
            let mut prev_val = self.features.get(order[0] as usize, j);
            lsum += self.targets[order[0] as usize];
            for i in 1..n {
                let row = order[i] as usize;
                let val = self.features.get(row, j);
                if val > prev_val && i >= msl && n - i >= msl {
                    let rn = (n - i) as f64;
                    let gain = lsum * lsum / i as f64 + (sum - lsum) * (sum - lsum) / rn - total;
                    if gain > best_gain {
                        // midpoint threshold; if rounding lands on the upper
                        // value, fall back to the lower one so the <= rule
                        // reproduces the scanned partition
                        let mut thr = 0.5 * (prev_val + val);
                        if thr >= val {
                            thr = prev_val;
                        }
                        best_gain = gain;
                        best = Some((j, thr, gain));
                    }
                }
                lsum += self.targets[row];
                prev_val = val;
            }
        }
        best
    }

    fn build(&mut self, sorted: Vec<Vec<u32>>, depth: usize) -> usize {
        let n = sorted[0].len();
        let sum: f64 = sorted[0].iter().map(|&i| self.targets[i as usize]).sum();
        let sq: f64 = sorted[0]
            .iter()
            .map(|&i| self.targets[i as usize] * self.targets[i as usize])
            .sum();

        let can_split = depth < self.config.max_depth && n >= 2 * self.config.min_samples_leaf;
        let split = if can_split {
            // a split must strictly reduce SSE; guard against rounding noise
            let gain_eps = 1e-12 * (1.0 + sq.abs());
            self.best_split(&sorted, sum, gain_eps)
        } else {
            None
        };

        match split {
            None => {
                let idx = self.nodes.len();
                self.nodes.push(Node::Leaf {
                    value: sum / n as f64,
                    rows: sorted.into_iter().next().unwrap(),
                });
                idx
            }
            Some((feature, threshold, gain)) => {
                let mut left_lists = Vec::with_capacity(sorted.len());
                let mut right_lists = Vec::with_capacity(sorted.len());
                for order in &sorted {
                    let mut l = Vec::new();
                    let mut r = Vec::new();
                    for &row in order {
                        if self.features.get(row as usize, feature) <= threshold {
                            l.push(row);
                        } else {
                            r.push(row);
                        }
                    }
                    left_lists.push(l);
                    right_lists.push(r);
                }
                drop(sorted);
                let idx = self.nodes.len();
                self.nodes.push(Node::Split {
                    feature,
                    threshold,
                    gain,
                    left: 0,
                    right: 0,
                });
                let left = self.build(left_lists, depth + 1);
                let right = self.build(right_lists, depth + 1);
                if let Node::Split {
                    left: l, right: r, ..
                } = &mut self.nodes[idx]
                {
                    *l = left;
                    *r = right;
                }
                idx
            }
        }
    }
}

/// Per-feature row orderings of a fixed feature matrix, computed once and
/// shared across the many trees of a boosted ensemble.
#[derive(Debug, Clone)]
pub struct Presorted {
    orders: Vec<Vec<u32>>,
    n_rows: usize,
}

impl Presorted {
    pub fn new(features: &Matrix) -> Result<Self> {
        let n = features.n_rows();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        for i in 0..n {
            if features.row(i).iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("feature value in row {i}")));
            }
        }
        let p = features.n_cols();
        let mut orders: Vec<Vec<u32>> = Vec::with_capacity(p);
        for j in 0..p {
            let mut order: Vec<u32> = (0..n as u32).collect();
            // stable by value; equal values keep row order for determinism
            order.sort_by(|&a, &b| {
                features
                    .get(a as usize, j)
                    .partial_cmp(&features.get(b as usize, j))
                    .unwrap()
            });
            orders.push(order);
        }
        Ok(Self { orders, n_rows: n })
    }
}

/// Greedy top-down CART-style least-squares fit.
pub fn fit_least_squares(
    features: &Matrix,
    targets: &[f64],
    config: TreeConfig,
) -> Result<RegressionTree> {
    let presorted = Presorted::new(features)?;
    fit_least_squares_presorted(features, targets, config, &presorted)
}

/// Least-squares fit reusing precomputed per-feature orderings; `presorted`
/// must come from `Presorted::new` on the same feature matrix.
pub fn fit_least_squares_presorted(
    features: &Matrix,
    targets: &[f64],
    config: TreeConfig,
    presorted: &Presorted,
) -> Result<RegressionTree> {
    config.validate()?;
    let n = features.n_rows();
    if n != presorted.n_rows {
        return Err(Error::LengthMismatch {
            expected: presorted.n_rows,
            got: n,
        });
    }
    if targets.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: targets.len(),
        });
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("tree fit targets".into()));
    }

    let mut builder = Builder {
        features,
        targets,
        config,
        nodes: Vec::new(),
    };
    builder.build(presorted.orders.clone(), 0);
    Ok(RegressionTree {
        nodes: builder.nodes,
        n_features: features.n_cols(),
    })
}

impl RegressionTree {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Single-leaf constant tree (used for empty-model edge cases).
    pub fn constant(value: f64, n_features: usize) -> Self {
        Self {
            nodes: vec![Node::Leaf {
                value,
                rows: Vec::new(),
            }],
            n_features,
        }
    }

    /// Replace each leaf value by the Newton step -sum(grad)/sum(hess)
    /// over the leaf's training rows. Structure is unchanged.
    pub fn newton_update_leaves(&mut self, grad: &[f64], hess: &[f64]) -> Result<()> {
        if grad.len() != hess.len() {
            return Err(Error::LengthMismatch {
                expected: grad.len(),
                got: hess.len(),
            });
        }
        for node in &mut self.nodes {
            if let Node::Leaf { value, rows } = node {
                let mut gs = 0.0;
                let mut hs = 0.0;
                for &r in rows.iter() {
                    let r = r as usize;
                    if r >= grad.len() {
                        return Err(Error::LengthMismatch {
                            expected: r + 1,
                            got: grad.len(),
                        });
                    }
                    gs += grad[r];
                    hs += hess[r];
                }
                *value = -gs / hs;
            }
        }
        Ok(())
    }

    /// Drop retained training-row indices once leaf values are final.
    pub fn clear_leaf_rows(&mut self) {
        for node in &mut self.nodes {
            if let Node::Leaf { rows, .. } = node {
                rows.clear();
                rows.shrink_to_fit();
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.predict_row(x))
    }

    /// Routing rule: go left iff feature value <= threshold.
    #[inline]
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    idx = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Visit every leaf with its value and retained training rows.
    pub fn for_each_leaf(&self, mut f: impl FnMut(f64, &[u32])) {
        for node in &self.nodes {
            if let Node::Leaf { value, rows } = node {
                f(*value, rows);
            }
        }
    }

    /// Visit every split with (feature, SSE reduction).
    pub fn for_each_split(&self, mut f: impl FnMut(usize, f64)) {
        for node in &self.nodes {
            if let Node::Split { feature, gain, .. } = node {
                f(*feature, *gain);
            }
        }
    }

    /// Thresholds of splits on `feature` along paths consistent with the
    /// fixed coordinates of `x` (the swept feature routes both ways).
    pub fn thresholds_along_paths(&self, feature: usize, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(idx) = stack.pop() {
            if let Node::Split {
                feature: f,
                threshold,
                left,
                right,
                ..
            } = &self.nodes[idx]
            {
                if *f == feature {
                    out.push(*threshold);
                    stack.push(*left);
                    stack.push(*right);
                } else if x[*f] <= *threshold {
                    stack.push(*left);
                } else {
                    stack.push(*right);
                }
            }
        }
        out
    }

    fn depth_from(&self, idx: usize) -> usize {
        match &self.nodes[idx] {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => {
                1 + self.depth_from(*left).max(self.depth_from(*right))
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.depth_from(0)
    }
}
