//! Functional gradient descent with Newton leaf updates, generic over the
//! loss family. Produces the boosted Tobit (Grabit), boosted-Logit, and
//! L2-boost models.

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::loss::{norm_cdf, Loss};
use crate::tree::{fit_least_squares_presorted, Presorted, RegressionTree, TreeConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub n_trees: usize,
    pub shrinkage: f64,
    pub tree: TreeConfig,
    #[serde(flatten)]
    pub loss: Loss,
}

impl BoostConfig {
    pub fn new(n_trees: usize, shrinkage: f64, max_depth: usize, loss: Loss) -> Self {
        Self {
            n_trees,
            shrinkage,
            tree: TreeConfig::new(max_depth),
            loss,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::InvalidConfig("n_trees must be >= 1".into()));
        }
        if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "shrinkage must lie in (0, 1], got {}",
                self.shrinkage
            )));
        }
        self.tree.validate()
    }
}

/// Additive tree ensemble F(x) = f0 + nu * sum_j tree_j(x). Trees carry
/// raw Newton leaf values; shrinkage is applied at evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub f0: f64,
    pub nu: f64,
    #[serde(flatten)]
    pub loss: Loss,
    pub trees: Vec<RegressionTree>,
}

/// Algorithm: initialize F to the loss-specific constant, then per stage
/// fit a least-squares tree to the pseudoresponses (negative gradients),
/// replace its leaf values by Newton steps, and advance F by nu times the
/// new tree.
pub fn fit_boosted(features: &Matrix, response: &[f64], config: &BoostConfig) -> Result<BoostedEnsemble> {
    config.validate()?;
    let n = features.n_rows();
    if n == 0 || response.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if response.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: response.len(),
        });
    }
    config.loss.validate_responses(response)?;
    let presorted = Presorted::new(features)?;

    let f0 = config.loss.init_value(response)?;
    let mut f = vec![f0; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut pseudo = vec![0.0; n];
    let mut trees = Vec::with_capacity(config.n_trees);

    for _ in 0..config.n_trees {
        for i in 0..n {
            grad[i] = config.loss.grad(response[i], f[i])?;
            hess[i] = config.loss.hess(response[i], f[i])?;
            pseudo[i] = -grad[i];
        }
        let mut tree = fit_least_squares_presorted(features, &pseudo, config.tree, &presorted)?;
        tree.newton_update_leaves(&grad, &hess)?;
        tree.for_each_leaf(|value, rows| {
            for &r in rows {
                f[r as usize] += config.shrinkage * value;
            }
        });
        tree.clear_leaf_rows();
        trees.push(tree);
    }

    Ok(BoostedEnsemble {
        f0,
        nu: config.shrinkage,
        loss: config.loss.clone(),
        trees,
    })
}

impl BoostedEnsemble {
    pub fn n_features(&self) -> usize {
        self.trees.first().map_or(0, |t| t.n_features())
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        let p = self.n_features();
        if p > 0 && x.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Latent prediction F(x).
    pub fn predict_latent(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.predict_row(x))
    }

    #[inline]
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(x)).sum();
        self.f0 + self.nu * sum
    }

    /// Default probability P(Y* >= y_u | x) = 1 - Phi((y_u - F(x))/sigma).
    pub fn predict_default_prob(&self, x: &[f64]) -> Result<f64> {
        let (upper, sigma) = self.tobit_upper()?;
        let f = self.predict_latent(x)?;
        Ok(norm_cdf((f - upper) / sigma))
    }

    pub fn tobit_upper(&self) -> Result<(f64, f64)> {
        match &self.loss {
            Loss::Tobit { bounds, sigma } if bounds.upper.is_finite() => Ok((bounds.upper, *sigma)),
            _ => Err(Error::NotTobitUpper),
        }
    }

    /// Predictions of every boosting stage 0..=M for all rows; stage m is
    /// bit-identical to a model truncated after m trees.
    pub fn staged_predictions(&self, features: &Matrix) -> Result<Vec<Vec<f64>>> {
        let stages: Vec<usize> = (0..=self.trees.len()).collect();
        self.predictions_at_stages(features, &stages)
    }

    /// Latent predictions at selected stages (tree counts), ascending.
    pub fn predictions_at_stages(&self, features: &Matrix, stages: &[usize]) -> Result<Vec<Vec<f64>>> {
        let n = features.n_rows();
        if n > 0 {
            self.check_dim(features.row(0))?;
        }
        for &s in stages {
            if s > self.trees.len() {
                return Err(Error::InvalidConfig(format!(
                    "stage {s} exceeds the {} trees in the ensemble",
                    self.trees.len()
                )));
            }
        }
        let mut sums = vec![0.0; n];
        let mut out = Vec::with_capacity(stages.len());
        let mut next = stages.iter().copied().peekable();
        for m in 0..=self.trees.len() {
            if m > 0 {
                let tree = &self.trees[m - 1];
                for i in 0..n {
                    sums[i] += tree.predict_row(features.row(i));
                }
            }
            while next.peek() == Some(&m) {
                next.next();
                out.push(sums.iter().map(|&s| self.f0 + self.nu * s).collect());
            }
        }
        Ok(out)
    }

    /// Model truncated to its first `m` trees.
    pub fn truncated(&self, m: usize) -> Result<BoostedEnsemble> {
        if m > self.trees.len() {
            return Err(Error::InvalidConfig(format!(
                "cannot truncate to {m} trees, ensemble has {}",
                self.trees.len()
            )));
        }
        Ok(BoostedEnsemble {
            f0: self.f0,
            nu: self.nu,
            loss: self.loss.clone(),
            trees: self.trees[..m].to_vec(),
        })
    }

    /// Total training loss of the ensemble on a dataset.
    pub fn empirical_loss(&self, features: &Matrix, response: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..features.n_rows() {
            total += self.loss.loss(response[i], self.predict_row(features.row(i)))?;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::CensoringBounds;
    use crate::tree::fit_least_squares;
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;

    fn random_data(seed: u64, n: usize, p: usize) -> (Matrix, Vec<f64>) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let m = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..n)
            .map(|i| m.get(i, 0) + 0.5 * m.get(i, 1).powi(2) + 0.1 * rng.gen::<f64>())
            .collect();
        (m, y)
    }

    #[test]
    fn unbounded_tobit_single_stage_is_residual_tree() {
        // interior branch gives grad -(y-F), hess 1: one full-step stage is
        // the least-squares tree on residuals y - mean, shifted by the mean
        let (m, y) = random_data(1, 60, 3);
        let loss = Loss::tobit(CensoringBounds::unbounded(), 1.0).unwrap();
        let model = fit_boosted(&m, &y, &BoostConfig::new(1, 1.0, 1, loss)).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let resid: Vec<f64> = y.iter().map(|v| v - mean).collect();
        let tree = fit_least_squares(&m, &resid, TreeConfig::new(1)).unwrap();
        for i in 0..m.n_rows() {
            let expect = mean + tree.predict_row(m.row(i));
            assert!((model.predict_row(m.row(i)) - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_trees_disallowed_and_shrinkage_definition() {
        let (m, y) = random_data(2, 20, 2);
        let loss = Loss::Squared;
        assert!(fit_boosted(&m, &y, &BoostConfig::new(0, 0.1, 1, loss.clone())).is_err());
        // one tree at nu = 0.1: F = f0 + 0.1 * gamma-tree
        let model = fit_boosted(&m, &y, &BoostConfig::new(1, 0.1, 1, loss.clone())).unwrap();
        let full = fit_boosted(&m, &y, &BoostConfig::new(1, 1.0, 1, loss)).unwrap();
        for i in 0..m.n_rows() {
            let g = (full.predict_row(m.row(i)) - full.f0) / 1.0;
            let expect = model.f0 + 0.1 * g;
            assert!((model.predict_row(m.row(i)) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn grabit_on_uncensored_data_matches_l2_boost_oracle() {
        // independent L2 boosting loop written directly against the tree
        // module, no shared code with fit_boosted
        let (m, y) = random_data(3, 80, 3);
        let loss = Loss::tobit(CensoringBounds::unbounded(), 1.0).unwrap();
        let cfg = BoostConfig::new(20, 0.1, 2, loss);
        let model = fit_boosted(&m, &y, &cfg).unwrap();

        let n = m.n_rows();
        let f0 = y.iter().sum::<f64>() / n as f64;
        let mut f = vec![f0; n];
        let mut oracle_trees = Vec::new();
        for _ in 0..20 {
            let resid: Vec<f64> = (0..n).map(|i| y[i] - f[i]).collect();
            let tree = fit_least_squares(&m, &resid, TreeConfig::new(2)).unwrap();
            for i in 0..n {
                f[i] += 0.1 * tree.predict_row(m.row(i));
            }
            oracle_trees.push(tree);
        }
        for i in 0..n {
            let oracle: f64 = f0 + 0.1 * oracle_trees.iter().map(|t| t.predict_row(m.row(i))).sum::<f64>();
            assert!(
                (model.predict_row(m.row(i)) - oracle).abs() < 1e-8,
                "row {i}: {} vs oracle {oracle}",
                model.predict_row(m.row(i))
            );
        }
    }

    #[test]
    fn predict_latent_edge_cases() {
        let loss = Loss::Squared;
        let empty = BoostedEnsemble {
            f0: 2.5,
            nu: 0.3,
            loss: loss.clone(),
            trees: vec![],
        };
        assert_eq!(empty.predict_latent(&[1.0, 2.0]).unwrap(), 2.5);

        let one = BoostedEnsemble {
            f0: 1.0,
            nu: 0.5,
            loss,
            trees: vec![RegressionTree::constant(4.0, 2)],
        };
        assert_eq!(one.predict_latent(&[0.0, 0.0]).unwrap(), 3.0);
        assert!(one.predict_latent(&[0.0]).is_err());
    }

    #[test]
    fn predict_latent_matches_summation_oracle() {
        let (m, y) = random_data(4, 50, 3);
        let loss = Loss::tobit(CensoringBounds::upper_only(2.0).unwrap(), 0.8).unwrap();
        let y: Vec<f64> = y.iter().map(|v| v.min(2.0)).collect();
        let model = fit_boosted(&m, &y, &BoostConfig::new(10, 0.2, 2, loss)).unwrap();
        for i in 0..m.n_rows() {
            let mut s = 0.0;
            for t in &model.trees {
                s += t.predict_row(m.row(i));
            }
            let oracle = model.f0 + model.nu * s;
            assert_eq!(model.predict_row(m.row(i)), oracle);
        }
    }

    #[test]
    fn default_prob_values() {
        let bounds = CensoringBounds::upper_only(2.0).unwrap();
        let loss = Loss::tobit(bounds, 0.5).unwrap();
        let model = BoostedEnsemble {
            f0: 2.0,
            nu: 1.0,
            loss,
            trees: vec![],
        };
        // F = y_u -> 0.5
        assert!((model.predict_default_prob(&[]).unwrap() - 0.5).abs() < 1e-15);
        // F = y_u - 1.6449*sigma -> ~0.05 (normal quantile Phi(1.6449) = 0.95)
        let model2 = BoostedEnsemble {
            f0: 2.0 - 1.6449 * 0.5,
            ..model.clone()
        };
        let p = model2.predict_default_prob(&[]).unwrap();
        assert!((p - 0.04999521746834632).abs() < 1e-10);
        // F -> -inf -> 0
        let model3 = BoostedEnsemble {
            f0: -1e6,
            ..model.clone()
        };
        assert_eq!(model3.predict_default_prob(&[]).unwrap(), 0.0);
        // non-Tobit model rejected
        let sq = BoostedEnsemble {
            loss: Loss::Squared,
            ..model
        };
        assert!(sq.predict_default_prob(&[]).is_err());
    }

    #[test]
    fn staged_predictions_match_truncation_oracle() {
        let (m, y) = random_data(5, 40, 2);
        let model = fit_boosted(&m, &y, &BoostConfig::new(8, 0.3, 2, Loss::Squared)).unwrap();
        let staged = model.staged_predictions(&m).unwrap();
        assert_eq!(staged.len(), 9);
        // stage 0 is the constant f0
        assert!(staged[0].iter().all(|&v| v == model.f0));
        for stage in 0..=8 {
            let trunc = model.truncated(stage).unwrap();
            for i in 0..m.n_rows() {
                assert_eq!(staged[stage][i], trunc.predict_row(m.row(i)));
            }
        }
        // stage M equals predict_latent on all rows
        for i in 0..m.n_rows() {
            assert_eq!(staged[8][i], model.predict_row(m.row(i)));
        }
    }

    #[test]
    fn training_loss_is_nonincreasing() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let (m, raw) = random_data(6, 100, 3);
        let bounds = CensoringBounds::upper_only(0.8).unwrap();
        let y: Vec<f64> = raw.iter().map(|v| v.min(0.8)).collect();
        let loss = Loss::tobit(bounds, 1.0).unwrap();
        let model = fit_boosted(&m, &y, &BoostConfig::new(40, 0.1, 2, loss.clone())).unwrap();
        let staged = model.staged_predictions(&m).unwrap();
        let mut prev = f64::INFINITY;
        for stage in &staged {
            let total: f64 = (0..y.len()).map(|i| loss.loss(y[i], stage[i]).unwrap()).sum();
            assert!(total <= prev + 1e-9, "loss increased: {prev} -> {total}");
            prev = total;
        }
        // binary loss too
        let c: Vec<f64> = (0..100).map(|_| if rng.gen::<f64>() < 0.3 { 1.0 } else { 0.0 }).collect();
        let model = fit_boosted(&m, &c, &BoostConfig::new(40, 0.1, 2, Loss::BernoulliLogit)).unwrap();
        let staged = model.staged_predictions(&m).unwrap();
        let mut prev = f64::INFINITY;
        for stage in &staged {
            let total: f64 = (0..c.len())
                .map(|i| Loss::BernoulliLogit.loss(c[i], stage[i]).unwrap())
                .sum();
            assert!(total <= prev + 1e-9);
            prev = total;
        }
    }

    #[test]
    fn refits_are_bit_identical() {
        let (m, y) = random_data(7, 50, 3);
        let loss = Loss::tobit(CensoringBounds::unbounded(), 1.0).unwrap();
        let cfg = BoostConfig::new(15, 0.1, 3, loss);
        let a = fit_boosted(&m, &y, &cfg).unwrap();
        let b = fit_boosted(&m, &y, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bounds_violations_rejected_at_fit() {
        let (m, _) = random_data(8, 10, 2);
        let loss = Loss::tobit(CensoringBounds::new(0.0, 1.0).unwrap(), 1.0).unwrap();
        let y = vec![0.5; 9].into_iter().chain([2.0]).collect::<Vec<_>>();
        assert!(fit_boosted(&m, &y, &BoostConfig::new(1, 0.1, 1, loss)).is_err());
    }
}
