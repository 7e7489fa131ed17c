//! DeLong's nonparametric test for comparing two correlated AUROCs
//! measured on the same labeled sample.

use crate::error::{Error, Result};
use crate::eval::roc::check_labels;
use crate::loss::norm_cdf;

/// Variance floor guarding against zero variance when both score vectors
/// rank the sample identically.
const VARIANCE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct DelongResult {
    pub auroc_a: f64,
    pub auroc_b: f64,
    pub diff: f64,
    pub variance: f64,
    pub p_value: f64,
}

/// Midranks (average rank for ties), 1-based.
fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// DeLong structural components: (auroc, V10 per positive, V01 per negative).
/// V10_i = P(score_i > score of a random negative) with ties half-counted,
/// and symmetrically for V01.
pub fn delong_components(scores: &[f64], labels: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    let (m, n) = check_labels(labels)?;
    let pos: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y == 1.0)
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y == 0.0)
        .map(|(&s, _)| s)
        .collect();
    let mut all = pos.clone();
    all.extend_from_slice(&neg);
    let r_all = midranks(&all);
    let r_pos = midranks(&pos);
    let r_neg = midranks(&neg);
    let v10: Vec<f64> = (0..m)
        .map(|i| (r_all[i] - r_pos[i]) / n as f64)
        .collect();
    let v01: Vec<f64> = (0..n)
        .map(|j| 1.0 - (r_all[m + j] - r_neg[j]) / m as f64)
        .collect();
    let auroc = (r_all[..m].iter().sum::<f64>() - m as f64 * (m as f64 + 1.0) / 2.0)
        / (m as f64 * n as f64);
    Ok((auroc, v10, v01))
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0)
}

/// Two-sided DeLong test on the AUROC difference of two paired score
/// vectors sharing the same labels.
pub fn delong_test(scores_a: &[f64], scores_b: &[f64], labels: &[f64]) -> Result<DelongResult> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::LengthMismatch {
            expected: scores_a.len(),
            got: scores_b.len(),
        });
    }
    let (auroc_a, v10_a, v01_a) = delong_components(scores_a, labels)?;
    let (auroc_b, v10_b, v01_b) = delong_components(scores_b, labels)?;
    let m = v10_a.len() as f64;
    let n = v01_a.len() as f64;
    let var = (covariance(&v10_a, &v10_a) + covariance(&v10_b, &v10_b)
        - 2.0 * covariance(&v10_a, &v10_b))
        / m
        + (covariance(&v01_a, &v01_a) + covariance(&v01_b, &v01_b)
            - 2.0 * covariance(&v01_a, &v01_b))
            / n;
    let diff = auroc_a - auroc_b;
    let z = diff / var.max(VARIANCE_FLOOR).sqrt();
    // two-sided normal p-value
    let p_value = 2.0 * norm_cdf(-z.abs());
    Ok(DelongResult {
        auroc_a,
        auroc_b,
        diff,
        variance: var.max(VARIANCE_FLOOR),
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::roc::roc_auroc;
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn identical_scores_give_p_one() {
        let labels = vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let s = vec![0.9, 0.2, 0.7, 0.4, 0.3, 0.8];
        let r = delong_test(&s, &s, &labels).unwrap();
        assert_eq!(r.diff, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn shifted_scores_give_p_one() {
        let labels = vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let s = vec![0.9, 0.2, 0.7, 0.4, 0.3, 0.8];
        let shifted: Vec<f64> = s.iter().map(|v| v + 2.5).collect();
        let r = delong_test(&s, &shifted, &labels).unwrap();
        assert_eq!(r.auroc_a, r.auroc_b);
        assert_eq!(r.diff, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    /// Direct O(n^2) structural components.
    fn components_quadratic(scores: &[f64], labels: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let pos: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|(_, &y)| y == 1.0)
            .map(|(&s, _)| s)
            .collect();
        let neg: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|(_, &y)| y == 0.0)
            .map(|(&s, _)| s)
            .collect();
        let psi = |x: f64, y: f64| {
            if x > y {
                1.0
            } else if x == y {
                0.5
            } else {
                0.0
            }
        };
        let v10: Vec<f64> = pos
            .iter()
            .map(|&x| neg.iter().map(|&y| psi(x, y)).sum::<f64>() / neg.len() as f64)
            .collect();
        let v01: Vec<f64> = neg
            .iter()
            .map(|&y| pos.iter().map(|&x| psi(x, y)).sum::<f64>() / pos.len() as f64)
            .collect();
        let auc = v10.iter().sum::<f64>() / pos.len() as f64;
        (auc, v10, v01)
    }

    #[test]
    fn components_match_quadratic_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        // 10 positives, 20 negatives, coarse scores to force ties
        let labels: Vec<f64> = (0..30).map(|i| f64::from(i < 10)).collect();
        let scores: Vec<f64> = (0..30).map(|_| rng.gen_range(0..10) as f64 / 9.0).collect();
        let (auc, v10, v01) = delong_components(&scores, &labels).unwrap();
        let (auc_q, v10_q, v01_q) = components_quadratic(&scores, &labels);
        assert!((auc - auc_q).abs() < 1e-12);
        for (a, b) in v10.iter().zip(&v10_q) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in v01.iter().zip(&v01_q) {
            assert!((a - b).abs() < 1e-12);
        }
        // AUROC agrees with the ROC sweep
        let curve = roc_auroc(&scores, &labels).unwrap();
        assert!((auc - curve.auroc).abs() < 1e-12);
    }

    #[test]
    fn swapping_models_preserves_p_and_flips_sign() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let labels: Vec<f64> = (0..40).map(|i| f64::from(i % 4 == 0)).collect();
        let a: Vec<f64> = (0..40).map(|_| rng.gen_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..40).map(|_| rng.gen_range(0.0..1.0)).collect();
        let ab = delong_test(&a, &b, &labels).unwrap();
        let ba = delong_test(&b, &a, &labels).unwrap();
        assert!((ab.diff + ba.diff).abs() < 1e-15);
        assert!((ab.p_value - ba.p_value).abs() < 1e-15);
        assert!(ab.p_value > 0.0 && ab.p_value <= 1.0);
    }

    #[test]
    fn rejects_single_class() {
        assert!(matches!(
            delong_test(&[0.1, 0.2], &[0.3, 0.4], &[1.0, 1.0]),
            Err(Error::SingleClass)
        ));
    }
}
